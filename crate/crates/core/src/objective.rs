//! The smoothed p-norm objective `<g, f> + ||R f||_2^2 + ||W f||_p^p`.

use alloc::format;
use alloc::vec::Vec;

use crate::graph::{DemandTracker, EdgeId, IncrementalGraph, VertexId};
use crate::numeric::{dot, ipow, norm1, weighted_power_sum};
use crate::{Error, Result};

/// Per-edge coefficients: linear gradient `g`, l2 weight `r` and lp weight `w`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdgeAttrs {
    pub gradient: f64,
    pub resistance: f64,
    pub weight: f64,
}

impl EdgeAttrs {
    pub fn new(gradient: f64, resistance: f64, weight: f64) -> Self {
        Self {
            gradient,
            resistance,
            weight,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gradient.is_finite() && self.resistance.is_finite() && self.weight.is_finite()) {
            return Err(Error::NonFinite("edge attributes"));
        }
        if self.resistance <= 0.0 || self.weight <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "edge weights must be positive (r = {}, w = {})",
                self.resistance, self.weight
            )));
        }
        Ok(())
    }
}

impl Default for EdgeAttrs {
    fn default() -> Self {
        Self::new(0.0, 1.0, 1.0)
    }
}

/// A growing smoothed p-norm flow instance. Attributes are stored one column per field.
#[derive(Clone, Debug)]
pub struct PNormInstance {
    graph: IncrementalGraph,
    tracker: DemandTracker,
    gradient: Vec<f64>,
    resistance: Vec<f64>,
    weight: Vec<f64>,
    demand: Vec<f64>,
    p: u32,
    threshold: f64,
    eps: f64,
}

impl PNormInstance {
    pub fn new(demand: Vec<f64>, p: u32, threshold: f64, eps: f64) -> Result<Self> {
        if demand.is_empty() {
            return Err(Error::InvalidParameter("graph needs at least one vertex".into()));
        }
        if p < 2 {
            return Err(Error::InvalidParameter(format!("p must be at least 2, got {p}")));
        }
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
        }
        if !threshold.is_finite() || demand.iter().any(|d| !d.is_finite()) {
            return Err(Error::NonFinite("instance parameters"));
        }
        let total: f64 = demand.iter().sum();
        if total.abs() > 1e-9 * norm1(&demand).max(1.0) {
            return Err(Error::InvalidParameter(format!(
                "demand sums to {total}, expected 0"
            )));
        }
        Ok(Self {
            graph: IncrementalGraph::new(demand.len()),
            tracker: DemandTracker::new(&demand),
            gradient: Vec::new(),
            resistance: Vec::new(),
            weight: Vec::new(),
            demand,
            p,
            threshold,
            eps,
        })
    }

    pub fn add_edge(&mut self, u: VertexId, v: VertexId, attrs: EdgeAttrs) -> Result<EdgeId> {
        attrs.validate()?;
        let id = self.graph.add_edge(u, v)?;
        self.tracker.union(u, v);
        self.gradient.push(attrs.gradient);
        self.resistance.push(attrs.resistance);
        self.weight.push(attrs.weight);
        Ok(id)
    }

    pub fn graph(&self) -> &IncrementalGraph {
        &self.graph
    }

    pub fn edge_count(&self) -> usize {
        self.graph.edge_count()
    }

    pub fn vertex_count(&self) -> usize {
        self.graph.vertex_count()
    }

    pub fn attrs(&self, e: EdgeId) -> EdgeAttrs {
        EdgeAttrs::new(self.gradient[e], self.resistance[e], self.weight[e])
    }

    pub fn gradients(&self) -> &[f64] {
        &self.gradient
    }

    pub fn resistances(&self) -> &[f64] {
        &self.resistance
    }

    pub fn weights(&self) -> &[f64] {
        &self.weight
    }

    pub fn demand(&self) -> &[f64] {
        &self.demand
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Whether the demand can be routed on the current graph (maintained incrementally).
    pub fn routable(&self) -> bool {
        self.tracker.routable()
    }

    pub fn is_feasible(&self, f: &[f64]) -> bool {
        self.graph.routes(f, &self.demand)
    }

    fn check_flow(&self, f: &[f64]) -> Result<()> {
        if f.len() != self.edge_count() {
            return Err(Error::DimensionMismatch {
                expected: self.edge_count(),
                got: f.len(),
            });
        }
        if f.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("flow"));
        }
        Ok(())
    }

    pub fn energy(&self, f: &[f64]) -> Result<f64> {
        self.check_flow(f)?;
        Ok(energy_columns(&self.gradient, &self.resistance, &self.weight, self.p, f))
    }

    /// `grad E(f) = g + 2 r^2 f + p w^p |f|^{p-2} f`.
    pub fn gradient(&self, f: &[f64]) -> Result<Vec<f64>> {
        self.check_flow(f)?;
        Ok((0..f.len())
            .map(|e| {
                let (r, w, x) = (self.resistance[e], self.weight[e], f[e]);
                self.gradient[e]
                    + 2.0 * r * r * x
                    + self.p as f64 * ipow(w, self.p) * ipow(x.abs(), self.p - 2) * x
            })
            .collect())
    }
}

/// `<g, x> + ||r x||_2^2 + ||w x||_p^p` over parallel columns.
pub fn energy_columns(g: &[f64], r: &[f64], w: &[f64], p: u32, x: &[f64]) -> f64 {
    let quad: f64 = r.iter().zip(x).map(|(r, x)| (r * x) * (r * x)).sum();
    dot(g, x) + quad + weighted_power_sum(w, x, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use rand::{Rng, SeedableRng};

    fn single_edge(attrs: EdgeAttrs, p: u32) -> PNormInstance {
        let mut inst = PNormInstance::new(vec![-1.0, 1.0], p, 0.0, 1.0).unwrap();
        inst.add_edge(0, 1, attrs).unwrap();
        inst
    }

    #[test]
    fn energy_examples() {
        let inst = single_edge(EdgeAttrs::new(1.0, 1.0, 1.0), 2);
        assert_eq!(inst.energy(&[1.0]).unwrap(), 3.0);
        assert_eq!(inst.energy(&[0.0]).unwrap(), 0.0);
        let inst = single_edge(EdgeAttrs::new(0.0, 1.0, 2.0), 3);
        assert_eq!(inst.energy(&[1.0]).unwrap(), 9.0);
    }

    #[test]
    fn energy_rejects_bad_flows() {
        let inst = single_edge(EdgeAttrs::default(), 2);
        assert!(matches!(inst.energy(&[]), Err(Error::DimensionMismatch { .. })));
        assert_eq!(inst.energy(&[f64::NAN]), Err(Error::NonFinite("flow")));
    }

    #[test]
    fn instance_rejects_bad_parameters() {
        assert!(PNormInstance::new(vec![1.0, 1.0], 2, 0.0, 1.0).is_err());
        assert!(PNormInstance::new(vec![0.0, 0.0], 1, 0.0, 1.0).is_err());
        assert!(PNormInstance::new(vec![0.0, 0.0], 2, 0.0, 0.0).is_err());
        let mut inst = PNormInstance::new(vec![0.0, 0.0], 2, 0.0, 1.0).unwrap();
        assert!(inst.add_edge(0, 1, EdgeAttrs::new(0.0, 0.0, 1.0)).is_err());
        assert!(inst.add_edge(0, 1, EdgeAttrs::new(0.0, 1.0, -1.0)).is_err());
        assert_eq!(inst.edge_count(), 0);
    }

    #[test]
    fn normalized_energy_matches_naive_sum() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let p = [2u32, 3, 4, 8][rng.random_range(0..4)];
            let n = rng.random_range(2..8);
            let mut inst = PNormInstance::new(vec![0.0; n], p, 0.0, 1.0).unwrap();
            for _ in 0..rng.random_range(1..15) {
                let u = rng.random_range(0..n);
                let v = (u + rng.random_range(1..n)) % n;
                let attrs = EdgeAttrs::new(
                    rng.random_range(-3.0..3.0),
                    rng.random_range(0.1..3.0),
                    rng.random_range(0.1..3.0),
                );
                inst.add_edge(u, v, attrs).unwrap();
            }
            let f: Vec<f64> = (0..inst.edge_count())
                .map(|_| rng.random_range(-5.0..5.0))
                .collect();
            let terms: Vec<f64> = (0..f.len())
                .flat_map(|e| {
                    let a = inst.attrs(e);
                    [
                        a.gradient * f[e],
                        a.resistance * a.resistance * f[e] * f[e],
                        libm::pow((a.weight * f[e]).abs(), p as f64),
                    ]
                })
                .collect();
            let naive: f64 = terms.iter().sum();
            let scale: f64 = terms.iter().map(|t| t.abs()).sum();
            let fast = inst.energy(&f).unwrap();
            assert!((fast - naive).abs() <= 1e-10 * scale.max(1.0), "{fast} vs {naive}");
        }
    }
}
