//! Min-ratio cycles: minimize `<g, c> / ||L c||_1` over circulations `c`.
//!
//! Edge `e` is seen as two arcs: `2e` runs tail to head and carries `+g_e`,
//! `2e + 1` runs head to tail and carries `-g_e`. Both have length `l_e`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::graph::{EdgeId, IncrementalGraph, SparseFlow, VertexId};
use crate::{Error, Result};

mod brute;
pub mod hsfc;
mod monotone;
mod parametric;
mod spfa;
mod trees;

pub use brute::{brute_force_min_ratio_cycle, ENUMERATION_MAX_EDGES, ENUMERATION_MAX_VERTICES};
pub use monotone::{Backend, MonotoneMrcState, MrcUpdate};
pub use parametric::exact_min_ratio_cycle;
pub use trees::TreePath;

/// Gradients and strictly positive lengths on a multigraph.
#[derive(Clone, Debug, Default)]
pub struct MrcInstance {
    graph: IncrementalGraph,
    gradient: Vec<f64>,
    length: Vec<f64>,
}

impl MrcInstance {
    pub fn new(vertex_count: usize) -> Self {
        Self {
            graph: IncrementalGraph::new(vertex_count),
            gradient: Vec::new(),
            length: Vec::new(),
        }
    }

    /// Builds an instance over an existing graph.
    pub fn from_parts(graph: IncrementalGraph, gradient: Vec<f64>, length: Vec<f64>) -> Result<Self> {
        let m = graph.edge_count();
        for got in [gradient.len(), length.len()] {
            if got != m {
                return Err(Error::DimensionMismatch { expected: m, got });
            }
        }
        for e in 0..m {
            check_edge(gradient[e], length[e])?;
        }
        Ok(Self {
            graph,
            gradient,
            length,
        })
    }

    pub fn add_edge(&mut self, u: VertexId, v: VertexId, gradient: f64, length: f64) -> Result<EdgeId> {
        check_edge(gradient, length)?;
        let e = self.graph.add_edge(u, v)?;
        self.gradient.push(gradient);
        self.length.push(length);
        Ok(e)
    }

    pub fn increase_length(&mut self, e: EdgeId, length: f64) -> Result<()> {
        if e >= self.length.len() {
            return Err(Error::InvalidParameter(format!("unknown edge {e}")));
        }
        if !length.is_finite() {
            return Err(Error::NonFinite("length"));
        }
        let old = self.length[e];
        if length < old {
            return Err(Error::Monotonicity { edge: e, old, new: length });
        }
        self.length[e] = length;
        Ok(())
    }

    pub fn graph(&self) -> &IncrementalGraph {
        &self.graph
    }

    pub fn gradients(&self) -> &[f64] {
        &self.gradient
    }

    pub fn lengths(&self) -> &[f64] {
        &self.length
    }

    pub fn vertex_count(&self) -> usize {
        self.graph.vertex_count()
    }

    pub fn edge_count(&self) -> usize {
        self.graph.edge_count()
    }

    /// `<g, c> / ||L c||_1`, or `None` for the zero circulation.
    pub fn ratio(&self, c: &SparseFlow) -> Option<f64> {
        let len = c.weighted_l1(&self.length);
        (len > 0.0).then(|| c.dot(&self.gradient) / len)
    }

    /// Whether the graph has any cycle, counting a parallel pair as one.
    pub fn has_cycle(&self) -> bool {
        let mut dsu = crate::graph::DemandTracker::new(&vec![0.0; self.vertex_count()]);
        self.graph.edges().any(|(u, v)| !dsu.union(u, v))
    }

    /// Source, target and signed gradient of arc `a`.
    pub(crate) fn arc(&self, a: usize) -> (VertexId, VertexId, f64) {
        let (u, v) = self.graph.endpoints(a / 2);
        if a % 2 == 0 {
            (u, v, self.gradient[a / 2])
        } else {
            (v, u, -self.gradient[a / 2])
        }
    }

    /// Turns a closed arc walk into a circulation, cancelling opposite uses of one edge.
    pub(crate) fn solution_from_arcs(&self, arcs: &[usize]) -> Option<CycleSolution> {
        let mut coef: Vec<(EdgeId, f64)> = Vec::with_capacity(arcs.len());
        for &a in arcs {
            let s = if a % 2 == 0 { 1.0 } else { -1.0 };
            match coef.iter_mut().find(|(e, _)| *e == a / 2) {
                Some(entry) => entry.1 += s,
                None => coef.push((a / 2, s)),
            }
        }
        coef.retain(|&(_, x)| x != 0.0);
        coef.sort_unstable_by_key(|&(e, _)| e);
        let flow = SparseFlow(coef);
        let ratio = self.ratio(&flow)?;
        Some(CycleSolution {
            flow,
            ratio,
            tree_path: None,
        })
    }
}

fn check_edge(gradient: f64, length: f64) -> Result<()> {
    if !gradient.is_finite() || !length.is_finite() {
        return Err(Error::NonFinite("gradient or length"));
    }
    if length <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "edge lengths must be positive, got {length}"
        )));
    }
    Ok(())
}

/// A circulation together with its ratio `<g, c> / ||L c||_1`.
#[derive(Clone, Debug, PartialEq)]
pub struct CycleSolution {
    pub flow: SparseFlow,
    pub ratio: f64,
    /// Compressed form when the cycle came from a spanning tree.
    pub tree_path: Option<TreePath>,
}

impl CycleSolution {
    /// Re-derives the ratio from the instance and checks the circulation property.
    pub fn check(&self, instance: &MrcInstance) -> Result<()> {
        let dense = self.flow.to_dense(instance.edge_count());
        if !instance.graph().is_circulation(&dense) {
            return Err(Error::ContractBreach("cycle is not a circulation".into()));
        }
        let ratio = instance
            .ratio(&self.flow)
            .ok_or_else(|| Error::ContractBreach("empty cycle".into()))?;
        if (ratio - self.ratio).abs() > 1e-9 * ratio.abs().max(1e-300) + 1e-15 {
            return Err(Error::ContractBreach(format!(
                "reported ratio {} but recomputed {}",
                self.ratio, ratio
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// e1 = (1,2), e2 = (2,3), e3 = (3,1) in 0-based form.
    pub fn triangle(g: [f64; 3], l: [f64; 3]) -> MrcInstance {
        let mut inst = MrcInstance::new(3);
        inst.add_edge(0, 1, g[0], l[0]).unwrap();
        inst.add_edge(1, 2, g[1], l[1]).unwrap();
        inst.add_edge(2, 0, g[2], l[2]).unwrap();
        inst
    }

    pub fn random_instance(rng: &mut impl rand::Rng, n: usize, m: usize) -> MrcInstance {
        let mut inst = MrcInstance::new(n);
        while inst.edge_count() < m {
            let u = rng.random_range(0..n);
            let v = rng.random_range(0..n);
            if u != v {
                let g = rng.random_range(-2.0..2.0);
                let l = rng.random_range(0.1..3.0);
                inst.add_edge(u, v, g, l).unwrap();
            }
        }
        inst
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_length_rejected() {
        let mut inst = MrcInstance::new(2);
        assert!(inst.add_edge(0, 1, 1.0, 0.0).is_err());
        assert!(inst.add_edge(0, 1, 1.0, -1.0).is_err());
        assert!(inst.add_edge(0, 1, 1.0, 1.0).is_ok());
    }

    #[test]
    fn length_decrease_rejected() {
        let mut inst = fixtures::triangle([-3.0, 1.0, 1.0], [1.0; 3]);
        assert!(matches!(
            inst.increase_length(0, 0.5),
            Err(Error::Monotonicity { edge: 0, .. })
        ));
        inst.increase_length(0, 10.0).unwrap();
        assert_eq!(inst.lengths()[0], 10.0);
    }

    #[test]
    fn opposite_arcs_cancel() {
        let inst = fixtures::triangle([-3.0, 1.0, 1.0], [1.0; 3]);
        let sol = inst.solution_from_arcs(&[0, 1, 2, 4]).unwrap();
        assert_eq!(sol.flow, SparseFlow(vec![(1, 1.0), (2, 1.0)]));
        assert!(inst.solution_from_arcs(&[0, 1]).is_none());
    }
}
