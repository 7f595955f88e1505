//! Append-only undirected multigraph with implicitly oriented edges.
//!
//! Edge `e = (u, v)` has incidence `-1` at its tail `u` and `+1` at its head
//! `v`, so a unit of flow on `e` contributes `-1` to the net demand of `u` and
//! `+1` to that of `v`.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Neg};

use crate::numeric::{norm1, norm_inf};
use crate::{Error, Result};

pub type VertexId = usize;
pub type EdgeId = usize;

/// Relative tolerance for "is a circulation" / "routes the demand".
pub const CIRCULATION_TOL: f64 = 1e-8;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct IncrementalGraph {
    vertex_count: usize,
    tails: Vec<VertexId>,
    heads: Vec<VertexId>,
}

impl IncrementalGraph {
    pub fn new(vertex_count: usize) -> Self {
        Self {
            vertex_count,
            tails: Vec::new(),
            heads: Vec::new(),
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edge_count(&self) -> usize {
        self.tails.len()
    }

    pub fn endpoints(&self, e: EdgeId) -> (VertexId, VertexId) {
        (self.tails[e], self.heads[e])
    }

    pub fn tails(&self) -> &[VertexId] {
        &self.tails
    }

    pub fn heads(&self) -> &[VertexId] {
        &self.heads
    }

    pub fn edges(&self) -> impl Iterator<Item = (VertexId, VertexId)> + '_ {
        self.tails.iter().copied().zip(self.heads.iter().copied())
    }

    pub fn check_vertex(&self, v: VertexId) -> Result<()> {
        if v >= self.vertex_count {
            return Err(Error::VertexOutOfRange {
                vertex: v,
                count: self.vertex_count,
            });
        }
        Ok(())
    }

    /// Appends the edge `(u, v)` and returns its identifier. Parallel edges are fine.
    pub fn add_edge(&mut self, u: VertexId, v: VertexId) -> Result<EdgeId> {
        self.check_vertex(u)?;
        self.check_vertex(v)?;
        if u == v {
            return Err(Error::SelfLoop(u));
        }
        self.tails.push(u);
        self.heads.push(v);
        Ok(self.tails.len() - 1)
    }

    /// `B^T f`.
    pub fn net_demand(&self, f: &[f64]) -> Result<Vec<f64>> {
        self.net_demand_exact(f, 0.0)
    }

    /// `B^T f` over any additive group; used with rationals for exact checks.
    pub fn net_demand_exact<T>(&self, f: &[T], zero: T) -> Result<Vec<T>>
    where
        T: Copy + Add<Output = T> + Neg<Output = T>,
    {
        if f.len() != self.edge_count() {
            return Err(Error::DimensionMismatch {
                expected: self.edge_count(),
                got: f.len(),
            });
        }
        let mut d = vec![zero; self.vertex_count];
        for (e, &x) in f.iter().enumerate() {
            d[self.tails[e]] = d[self.tails[e]] + (-x);
            d[self.heads[e]] = d[self.heads[e]] + x;
        }
        Ok(d)
    }

    /// Whether `f` routes `d` up to `CIRCULATION_TOL * (1 + max(|f|, |d|))`.
    pub fn routes(&self, f: &[f64], d: &[f64]) -> bool {
        let Ok(net) = self.net_demand(f) else {
            return false;
        };
        if d.len() != net.len() {
            return false;
        }
        let scale = 1.0 + norm_inf(f).max(norm_inf(d));
        net.iter()
            .zip(d)
            .all(|(a, b)| (a - b).abs() <= CIRCULATION_TOL * scale)
    }

    pub fn is_circulation(&self, c: &[f64]) -> bool {
        self.routes(c, &vec![0.0; self.vertex_count])
    }
}

/// Signed flow stored as `(edge, value)` pairs.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseFlow(pub Vec<(EdgeId, f64)>);

impl SparseFlow {
    pub fn to_dense(&self, edge_count: usize) -> Vec<f64> {
        let mut out = vec![0.0; edge_count];
        self.add_to(&mut out, 1.0);
        out
    }

    pub fn add_to(&self, dense: &mut [f64], scale: f64) {
        for &(e, x) in &self.0 {
            dense[e] += scale * x;
        }
    }

    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.0.iter().map(|&(e, x)| x * dense[e]).sum()
    }

    /// `sum |weight_e * x_e|`.
    pub fn weighted_l1(&self, weight: &[f64]) -> f64 {
        self.0.iter().map(|&(e, x)| (weight[e] * x).abs()).sum()
    }

    pub fn scale(&mut self, s: f64) {
        for entry in &mut self.0 {
            entry.1 *= s;
        }
    }
}

/// Union-find over vertices carrying per-component demand sums, answering
/// "is `d` routable?" in near-constant amortized time per insertion.
#[derive(Clone, Debug)]
pub struct DemandTracker {
    parent: Vec<usize>,
    size: Vec<usize>,
    sum: Vec<f64>,
    tol: f64,
    unbalanced: usize,
}

impl DemandTracker {
    pub fn new(demand: &[f64]) -> Self {
        let tol = 1e-9 * norm1(demand);
        let unbalanced = demand.iter().filter(|x| x.abs() > tol).count();
        Self {
            parent: (0..demand.len()).collect(),
            size: vec![1; demand.len()],
            sum: demand.to_vec(),
            tol,
            unbalanced,
        }
    }

    pub fn find(&mut self, mut v: usize) -> usize {
        let mut root = v;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        while self.parent[v] != root {
            let next = self.parent[v];
            self.parent[v] = root;
            v = next;
        }
        root
    }

    /// Merges the components of `u` and `v`; returns `false` if they already coincide.
    pub fn union(&mut self, u: usize, v: usize) -> bool {
        let (mut a, mut b) = (self.find(u), self.find(v));
        if a == b {
            return false;
        }
        if self.size[a] < self.size[b] {
            core::mem::swap(&mut a, &mut b);
        }
        let before = self.is_unbalanced(a) as usize + self.is_unbalanced(b) as usize;
        self.parent[b] = a;
        self.size[a] += self.size[b];
        self.sum[a] += self.sum[b];
        self.unbalanced = self.unbalanced - before + self.is_unbalanced(a) as usize;
        true
    }

    pub fn connected(&mut self, u: usize, v: usize) -> bool {
        self.find(u) == self.find(v)
    }

    fn is_unbalanced(&self, root: usize) -> bool {
        self.sum[root].abs() > self.tol
    }

    pub fn routable(&self) -> bool {
        self.unbalanced == 0
    }
}

/// From-scratch routability check: every connected component's demand sums to zero.
pub fn demand_routable(graph: &IncrementalGraph, demand: &[f64]) -> bool {
    let mut tracker = DemandTracker::new(demand);
    for (u, v) in graph.edges() {
        tracker.union(u, v);
    }
    tracker.routable()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Rational64;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn add_edge_assigns_dense_ids() {
        let mut g = IncrementalGraph::new(3);
        assert_eq!(g.add_edge(0, 1), Ok(0));
        assert_eq!(g.add_edge(0, 1), Ok(1));
        assert_eq!(g.add_edge(1, 1), Err(Error::SelfLoop(1)));
        assert!(matches!(
            g.add_edge(0, 3),
            Err(Error::VertexOutOfRange { vertex: 3, .. })
        ));
        assert_eq!(g.edge_count(), 2);
    }

    #[test]
    fn net_demand_follows_incidence_convention() {
        let mut g = IncrementalGraph::new(3);
        g.add_edge(0, 1).unwrap();
        assert_eq!(g.net_demand(&[1.0]).unwrap(), vec![-1.0, 1.0, 0.0]);
        assert_eq!(g.net_demand(&[0.0]).unwrap(), vec![0.0; 3]);
        assert!(matches!(
            g.net_demand(&[1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn triangle_unit_flow_is_a_circulation() {
        let mut g = IncrementalGraph::new(3);
        g.add_edge(0, 1).unwrap();
        g.add_edge(1, 2).unwrap();
        g.add_edge(2, 0).unwrap();
        assert_eq!(g.net_demand(&[1.0, 1.0, 1.0]).unwrap(), vec![0.0; 3]);
        assert!(g.is_circulation(&[1.0, 1.0, 1.0]));
        assert!(!g.is_circulation(&[1.0, 1.0, 0.5]));
    }

    #[test]
    fn routability_examples() {
        let d = [-1.0, 1.0];
        let mut t = DemandTracker::new(&d);
        assert!(!t.routable());
        t.union(0, 1);
        assert!(t.routable());
        let zero = DemandTracker::new(&[0.0; 4]);
        assert!(zero.routable());
    }

    #[test]
    fn tracker_agrees_with_recomputation_on_random_streams() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let n = rng.random_range(2..=50);
            // a few +/- pairs, possibly spanning components
            let mut d = vec![0.0; n];
            for _ in 0..rng.random_range(1..4) {
                let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
                let x: f64 = rng.random_range(0.1..3.0);
                d[a] -= x;
                d[b] += x;
            }
            let mut g = IncrementalGraph::new(n);
            let mut tracker = DemandTracker::new(&d);
            for _ in 0..(2 * n) {
                let u = rng.random_range(0..n);
                let v = rng.random_range(0..n);
                if u == v {
                    continue;
                }
                g.add_edge(u, v).unwrap();
                tracker.union(u, v);
                assert_eq!(tracker.routable(), demand_routable(&g, &d));
            }
        }
    }

    proptest! {
        #[test]
        fn net_demand_is_linear_in_rationals(
            edges in prop::collection::vec((0usize..6, 0usize..6), 1..15),
            flows in prop::collection::vec(-50i64..50, 15),
            t in -20i64..20,
        ) {
            let mut g = IncrementalGraph::new(6);
            for (u, v) in edges {
                if u != v {
                    g.add_edge(u, v).unwrap();
                }
            }
            let m = g.edge_count();
            let f: Vec<Rational64> = flows[..m].iter().map(|&x| Rational64::from_integer(x)).collect();
            let scale = Rational64::new(t, 7);
            let scaled: Vec<Rational64> = f.iter().map(|&x| x * scale).collect();
            let zero = Rational64::from_integer(0);
            let lhs = g.net_demand_exact(&scaled, zero).unwrap();
            let rhs: Vec<Rational64> = g.net_demand_exact(&f, zero).unwrap().into_iter().map(|x| x * scale).collect();
            prop_assert_eq!(lhs, rhs);
        }
    }
}
