//! Incremental effective-resistance thresholding: report the first time the
//! s-t effective resistance drops below `theta`.

use alloc::vec;
use alloc::vec::Vec;

use crate::graph::VertexId;
use crate::numeric::sqrt;
use crate::objective::{EdgeAttrs, PNormInstance};
use crate::refine::{IncrementalPNorm, Observer, RefineConfig, Verdict};
use crate::{Error, Result};

/// The ratio `w / r` padding the quadratic energy with an l2 term of its own,
/// so `E(f) = (1 + GAMMA^2) sum res_e f_e^2`.
pub const GAMMA: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub enum EffResVerdict {
    /// The effective resistance is at least `theta / (1 + GAMMA^2)`.
    AboveThreshold,
    /// A unit s-t flow whose energy bounds the effective resistance by
    /// `estimate <= theta (1 + eps_rel)`.
    Below { flow: Vec<f64>, estimate: f64 },
}

#[derive(Debug)]
pub struct IncrementalEffRes {
    solver: IncrementalPNorm,
    theta: f64,
    eps_rel: f64,
    below: bool,
    started: bool,
}

impl IncrementalEffRes {
    pub fn new(
        vertex_count: usize,
        s: VertexId,
        t: VertexId,
        theta: f64,
        eps_rel: f64,
        m_hat: usize,
        config: RefineConfig,
    ) -> Result<Self> {
        if !(theta > 0.0) || !theta.is_finite() {
            return Err(Error::InvalidParameter(alloc::format!("theta must be positive, got {theta}")));
        }
        if !(eps_rel > 0.0) {
            return Err(Error::InvalidParameter(alloc::format!("eps must be positive, got {eps_rel}")));
        }
        if s >= vertex_count || t >= vertex_count {
            return Err(Error::VertexOutOfRange {
                vertex: s.max(t),
                count: vertex_count,
            });
        }
        if s == t {
            return Err(Error::InvalidParameter("source and sink coincide".into()));
        }
        let mut demand = vec![0.0; vertex_count];
        demand[s] = -1.0;
        demand[t] = 1.0;
        let inst = PNormInstance::new(demand, 2, theta, eps_rel * theta)?;
        Ok(Self {
            solver: IncrementalPNorm::new(inst, RefineConfig { m_hat, ..config })?,
            theta,
            eps_rel,
            below: false,
            started: false,
        })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn eps_rel(&self) -> f64 {
        self.eps_rel
    }

    pub fn solver(&self) -> &IncrementalPNorm {
        &self.solver
    }

    pub fn set_observer(&mut self, observer: alloc::boxed::Box<dyn Observer>) {
        self.solver.set_observer(observer);
    }

    fn attrs(resistance: f64) -> Result<EdgeAttrs> {
        if !(resistance > 0.0) || !resistance.is_finite() {
            return Err(Error::InvalidParameter(alloc::format!("resistance must be positive, got {resistance}")));
        }
        let r = sqrt(resistance);
        Ok(EdgeAttrs::new(0.0, r, GAMMA * r))
    }

    pub fn add_initial_edge(&mut self, u: VertexId, v: VertexId, resistance: f64) -> Result<()> {
        if self.started {
            return Err(Error::InvalidParameter("initial edges must precede start".into()));
        }
        self.solver.add_initial_edge(u, v, Self::attrs(resistance)?)?;
        Ok(())
    }

    fn translate(&mut self, v: Verdict) -> Result<EffResVerdict> {
        match v {
            Verdict::CertifiedAbove => {
                if self.below {
                    return Err(Error::InvariantViolation("verdict went back above the threshold".into()));
                }
                Ok(EffResVerdict::AboveThreshold)
            }
            Verdict::Flow { flow, energy } => {
                self.below = true;
                Ok(EffResVerdict::Below {
                    flow,
                    estimate: energy / (1.0 + GAMMA * GAMMA),
                })
            }
        }
    }

    pub fn start(&mut self) -> Result<EffResVerdict> {
        self.started = true;
        let v = self.solver.start()?;
        self.translate(v)
    }

    pub fn insert_edge(&mut self, u: VertexId, v: VertexId, resistance: f64) -> Result<EffResVerdict> {
        if !self.started {
            return Err(Error::InvalidParameter("insert before start".into()));
        }
        let verdict = self.solver.insert_edge(u, v, Self::attrs(resistance)?)?;
        self.translate(verdict)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_vertex(theta: f64) -> IncrementalEffRes {
        IncrementalEffRes::new(2, 0, 1, theta, 0.1, 2, RefineConfig::new(2)).unwrap()
    }

    #[test]
    fn unit_resistor_above_then_parallel_below() {
        let mut er = two_vertex(0.6);
        er.add_initial_edge(0, 1, 1.0).unwrap();
        assert_eq!(er.start().unwrap(), EffResVerdict::AboveThreshold);
        match er.insert_edge(0, 1, 1.0).unwrap() {
            EffResVerdict::Below { flow, estimate } => {
                assert!(estimate <= 0.6 * 1.1);
                assert!(estimate >= 0.5 * (1.0 - 1e-9));
                assert!((flow[0] + flow[1] - 1.0).abs() < 1e-9);
            }
            v => panic!("{v:?}"),
        }
    }

    #[test]
    fn generous_threshold_is_below_immediately() {
        let mut er = two_vertex(2.0);
        er.add_initial_edge(0, 1, 1.0).unwrap();
        let EffResVerdict::Below { estimate, .. } = er.start().unwrap() else {
            panic!()
        };
        assert!((estimate - 1.0).abs() < 1e-9);
    }

    #[test]
    fn disconnected_pair_is_above() {
        let mut er = IncrementalEffRes::new(3, 0, 2, 5.0, 0.1, 3, RefineConfig::new(3)).unwrap();
        assert_eq!(er.start().unwrap(), EffResVerdict::AboveThreshold);
        assert_eq!(er.insert_edge(0, 1, 1.0).unwrap(), EffResVerdict::AboveThreshold);
        assert!(matches!(er.insert_edge(1, 2, 1.0).unwrap(), EffResVerdict::Below { .. }));
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(IncrementalEffRes::new(2, 0, 1, 0.0, 0.1, 2, RefineConfig::new(2)).is_err());
        assert!(IncrementalEffRes::new(2, 0, 0, 1.0, 0.1, 2, RefineConfig::new(2)).is_err());
        let mut er = two_vertex(1.0);
        assert!(er.add_initial_edge(0, 1, -1.0).is_err());
    }
}
