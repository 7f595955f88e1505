//! A collection of randomized low-length spanning forests. Each off-tree edge
//! closes a fundamental cycle whose gradient and length are read off root-path
//! sums: gradients are fixed per instance, lengths change through a Fenwick
//! tree over the Euler tour so that a tree-edge length increase is a range add.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{CycleSolution, MrcInstance};
use crate::graph::{DemandTracker, EdgeId, SparseFlow};

/// A fundamental cycle in compressed form: off-tree edge `off_tree` traversed
/// with orientation `sign`, closed through the tree path of tree `tree`.
#[derive(Clone, Debug, PartialEq)]
pub struct TreePath {
    pub tree: usize,
    pub off_tree: EdgeId,
    pub sign: f64,
}

#[derive(Clone, Debug, Default)]
struct Fenwick(Vec<f64>);

impl Fenwick {
    /// From point values, stored as a difference array.
    fn from_points(values: &[f64]) -> Self {
        let n = values.len();
        let mut t = vec![0.0; n + 1];
        for i in 0..n {
            let prev = if i == 0 { 0.0 } else { values[i - 1] };
            t[i + 1] = values[i] - prev;
        }
        for i in 1..=n {
            let j = i + (i & i.wrapping_neg());
            if j <= n {
                t[j] += t[i];
            }
        }
        Self(t)
    }

    fn add_suffix(&mut self, from: usize, delta: f64) {
        let mut i = from + 1;
        while i < self.0.len() {
            self.0[i] += delta;
            i += i & i.wrapping_neg();
        }
    }

    fn range_add(&mut self, lo: usize, hi: usize, delta: f64) {
        self.add_suffix(lo, delta);
        if hi + 1 < self.0.len() - 1 {
            self.add_suffix(hi + 1, -delta);
        }
    }

    fn point(&self, at: usize) -> f64 {
        let mut i = at + 1;
        let mut s = 0.0;
        while i > 0 {
            s += self.0[i];
            i -= i & i.wrapping_neg();
        }
        s
    }
}

const NONE: usize = usize::MAX;

#[derive(Clone, Debug, Default)]
struct Tree {
    parent: Vec<usize>,
    parent_edge: Vec<usize>,
    /// +1 when the parent edge points from the child to the parent.
    sign: Vec<f64>,
    root: Vec<usize>,
    depth: Vec<u32>,
    tin: Vec<usize>,
    tout: Vec<usize>,
    up: Vec<Vec<usize>>,
    grad: Vec<f64>,
    dist: Fenwick,
    /// child endpoint of each tree edge, `NONE` for off-tree edges
    child_of: Vec<usize>,
    off: Vec<(EdgeId, usize)>,
}

impl Tree {
    fn build(instance: &MrcInstance, tilde: &[f64], rng: &mut ChaCha8Rng) -> Self {
        let n = instance.vertex_count();
        let m = instance.edge_count();
        let graph = instance.graph();
        let mut order: Vec<(f64, usize)> = (0..m)
            .map(|e| (tilde[e] * (0.5 + rng.random::<f64>()), e))
            .collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut dsu = DemandTracker::new(&vec![0.0; n]);
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut child_of = vec![NONE; m];
        for &(_, e) in &order {
            let (u, v) = graph.endpoints(e);
            if dsu.union(u, v) {
                adj[u].push(e);
                adj[v].push(e);
                child_of[e] = 0;
            }
        }
        let mut t = Tree {
            parent: vec![NONE; n],
            parent_edge: vec![NONE; n],
            sign: vec![0.0; n],
            root: vec![NONE; n],
            depth: vec![0; n],
            tin: vec![0; n],
            tout: vec![0; n],
            grad: vec![0.0; n],
            ..Default::default()
        };
        let mut dist = vec![0.0; n];
        let mut euler = Vec::with_capacity(n);
        let mut dist_by_tin = vec![0.0; n];
        for r in 0..n {
            if t.root[r] != NONE {
                continue;
            }
            t.root[r] = r;
            // iterative DFS with explicit child cursor
            let mut stack: Vec<(usize, usize)> = vec![(r, 0)];
            t.tin[r] = euler.len();
            euler.push(r);
            while let Some(top) = stack.last_mut() {
                let (x, cursor) = *top;
                if cursor < adj[x].len() {
                    let e = adj[x][cursor];
                    top.1 += 1;
                    let (u, v) = graph.endpoints(e);
                    let y = if u == x { v } else { u };
                    if y == t.parent[x] && e == t.parent_edge[x] {
                        continue;
                    }
                    t.parent[y] = x;
                    t.parent_edge[y] = e;
                    t.sign[y] = if u == y { 1.0 } else { -1.0 };
                    t.root[y] = r;
                    t.depth[y] = t.depth[x] + 1;
                    t.grad[y] = t.grad[x] + t.sign[y] * instance.gradients()[e];
                    dist[y] = dist[x] + tilde[e];
                    child_of[e] = y;
                    t.tin[y] = euler.len();
                    euler.push(y);
                    stack.push((y, 0));
                } else {
                    t.tout[x] = euler.len() - 1;
                    stack.pop();
                }
            }
        }
        for v in 0..n {
            dist_by_tin[t.tin[v]] = dist[v];
        }
        t.dist = Fenwick::from_points(&dist_by_tin);
        let levels = (usize::BITS - n.max(1).leading_zeros()) as usize;
        let base: Vec<usize> = (0..n)
            .map(|v| if t.parent[v] == NONE { v } else { t.parent[v] })
            .collect();
        t.up.push(base);
        for k in 1..levels {
            let prev = &t.up[k - 1];
            let next: Vec<usize> = (0..n).map(|v| prev[prev[v]]).collect();
            t.up.push(next);
        }
        t.child_of = child_of;
        for e in 0..m {
            if t.child_of[e] == NONE {
                t.push_off_tree(instance, e);
            }
        }
        t
    }

    fn push_off_tree(&mut self, instance: &MrcInstance, e: EdgeId) {
        let (u, v) = instance.graph().endpoints(e);
        let l = self.lca(u, v);
        self.off.push((e, l));
    }

    fn lca(&self, mut a: usize, mut b: usize) -> usize {
        if self.depth[a] < self.depth[b] {
            core::mem::swap(&mut a, &mut b);
        }
        let mut diff = self.depth[a] - self.depth[b];
        let mut k = 0;
        while diff > 0 {
            if diff & 1 == 1 {
                a = self.up[k][a];
            }
            diff >>= 1;
            k += 1;
        }
        if a == b {
            return a;
        }
        for k in (0..self.up.len()).rev() {
            if self.up[k][a] != self.up[k][b] {
                a = self.up[k][a];
                b = self.up[k][b];
            }
        }
        self.parent[a]
    }

    fn dist(&self, v: usize) -> f64 {
        self.dist.point(self.tin[v])
    }

    /// Best-oriented fundamental cycle through off-tree edge `e`: `(gradient, length)`
    /// for the orientation that runs `e` from tail to head.
    fn cycle(&self, instance: &MrcInstance, tilde: &[f64], e: EdgeId, lca: usize) -> (f64, f64) {
        let (x, y) = instance.graph().endpoints(e);
        let gamma = instance.gradients()[e] + self.grad[y] - self.grad[x];
        let len = tilde[e] + self.dist(x) + self.dist(y) - 2.0 * self.dist(lca);
        (gamma, len)
    }

    fn materialize(&self, instance: &MrcInstance, e: EdgeId, sign: f64) -> SparseFlow {
        let (x, y) = instance.graph().endpoints(e);
        let mut flow = vec![(e, sign)];
        // close the cycle by routing from y back to x through the tree
        let (mut a, mut b) = (y, x);
        while a != b {
            if self.depth[a] >= self.depth[b] {
                flow.push((self.parent_edge[a], sign * self.sign[a]));
                a = self.parent[a];
            } else {
                flow.push((self.parent_edge[b], -sign * self.sign[b]));
                b = self.parent[b];
            }
        }
        flow.sort_unstable_by_key(|&(e, _)| e);
        SparseFlow(flow)
    }
}

#[derive(Clone, Debug)]
pub(crate) struct TreeCollection {
    trees: Vec<Tree>,
    tilde: Vec<f64>,
    total: f64,
    checkpoint: f64,
    rng: ChaCha8Rng,
    pub rebuilds: u64,
}

impl TreeCollection {
    /// `4 * ceil(log2 n)`.
    pub fn tree_count(vertex_count: usize) -> usize {
        let bits = usize::BITS - (vertex_count.max(2) - 1).leading_zeros();
        4 * bits as usize
    }

    pub fn new(instance: &MrcInstance, rng: ChaCha8Rng) -> Self {
        let tilde = instance.lengths().to_vec();
        let total = tilde.iter().sum();
        let mut c = Self {
            trees: Vec::new(),
            tilde,
            total,
            checkpoint: total,
            rng,
            rebuilds: 0,
        };
        c.rebuild_all(instance);
        c
    }

    fn rebuild_all(&mut self, instance: &MrcInstance) {
        let s = Self::tree_count(instance.vertex_count());
        self.trees = (0..s)
            .map(|_| Tree::build(instance, &self.tilde, &mut self.rng))
            .collect();
        self.checkpoint = self.total;
        self.rebuilds += 1;
    }

    pub fn trees(&self) -> usize {
        self.trees.len()
    }

    /// Checks that tree `i` spans every component of the instance.
    pub fn is_spanning(&self, instance: &MrcInstance, i: usize) -> bool {
        let t = &self.trees[i];
        let n = instance.vertex_count();
        let tree_edges = t.child_of.iter().filter(|&&c| c != NONE).count();
        let mut dsu = DemandTracker::new(&vec![0.0; n]);
        let mut comps = n;
        for (u, v) in instance.graph().edges() {
            if dsu.union(u, v) {
                comps -= 1;
            }
        }
        let forest_ok = (0..instance.edge_count())
            .filter(|&e| t.child_of[e] != NONE)
            .all(|e| {
                let c = t.child_of[e];
                t.parent_edge[c] == e
            });
        forest_ok && tree_edges == n - comps
    }

    pub fn on_insert(&mut self, instance: &MrcInstance, e: EdgeId) {
        let (u, v) = instance.graph().endpoints(e);
        self.tilde.push(instance.lengths()[e]);
        self.total += instance.lengths()[e];
        for i in 0..self.trees.len() {
            if self.trees[i].root[u] != self.trees[i].root[v] {
                self.trees[i] = Tree::build(instance, &self.tilde, &mut self.rng);
            } else {
                self.trees[i].child_of.push(NONE);
                self.trees[i].push_off_tree(instance, e);
            }
        }
        self.maybe_rebuild(instance);
    }

    pub fn on_increase(&mut self, instance: &MrcInstance, e: EdgeId) {
        let new = instance.lengths()[e];
        let delta = new - self.tilde[e];
        self.tilde[e] = new;
        self.total += delta;
        for t in &mut self.trees {
            let c = t.child_of[e];
            if c != NONE {
                let (lo, hi) = (t.tin[c], t.tout[c]);
                t.dist.range_add(lo, hi, delta);
            }
        }
        self.maybe_rebuild(instance);
    }

    fn maybe_rebuild(&mut self, instance: &MrcInstance) {
        if self.total >= 2.0 * self.checkpoint {
            self.rebuild_all(instance);
        }
    }

    /// Minimum-ratio fundamental cycle over all trees.
    pub fn best(&self, instance: &MrcInstance) -> Option<CycleSolution> {
        let mut best: Option<(f64, usize, EdgeId, f64)> = None;
        for (i, t) in self.trees.iter().enumerate() {
            for &(e, l) in &t.off {
                let (gamma, len) = t.cycle(instance, &self.tilde, e, l);
                let ratio = -gamma.abs() / len;
                if best.is_none_or(|b| ratio < b.0) {
                    let sign = if gamma > 0.0 { -1.0 } else { 1.0 };
                    best = Some((ratio, i, e, sign));
                }
            }
        }
        let (_, tree, off_tree, sign) = best?;
        let flow = self.trees[tree].materialize(instance, off_tree, sign);
        let ratio = instance.ratio(&flow)?;
        Some(CycleSolution {
            flow,
            ratio,
            tree_path: Some(TreePath {
                tree,
                off_tree,
                sign,
            }),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::random_instance;
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn fenwick_range_add_point_query() {
        let mut f = Fenwick::from_points(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(f.point(2), 3.0);
        f.range_add(1, 2, 10.0);
        assert_eq!(
            (0..4).map(|i| f.point(i)).collect::<Vec<_>>(),
            vec![1.0, 12.0, 13.0, 4.0]
        );
        f.range_add(3, 3, 1.0);
        assert_eq!(f.point(3), 5.0);
    }

    #[test]
    fn four_spanning_trees_on_ten_vertices() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let inst = random_instance(&mut rng, 10, 25);
        let c = TreeCollection::new(&inst, ChaCha8Rng::seed_from_u64(2));
        assert_eq!(c.trees(), 16);
        for i in 0..c.trees() {
            assert!(c.is_spanning(&inst, i));
        }
    }

    #[test]
    fn fundamental_cycles_match_materialization() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..30 {
            let mut inst = random_instance(&mut rng, 8, 14);
            let mut c = TreeCollection::new(&inst, ChaCha8Rng::seed_from_u64(9));
            for _ in 0..10 {
                let e = rng.random_range(0..inst.edge_count());
                let l = inst.lengths()[e] * rng.random_range(1.0..1.7);
                inst.increase_length(e, l).unwrap();
                c.on_increase(&inst, e);
            }
            for t in &c.trees {
                for &(e, l) in &t.off {
                    let (gamma, len) = t.cycle(&inst, &c.tilde, e, l);
                    let flow = t.materialize(&inst, e, 1.0);
                    let dense = flow.to_dense(inst.edge_count());
                    assert!(inst.graph().is_circulation(&dense));
                    assert!((flow.dot(inst.gradients()) - gamma).abs() < 1e-9);
                    assert!((flow.weighted_l1(&c.tilde) - len).abs() < 1e-9);
                }
            }
        }
    }
}
