//! Queue-based Bellman-Ford with warm potentials and parent-graph cycle detection.
//!
//! Invariant between runs: every arc `u -> v` with `pi[v] > pi[u] + w` has `u`
//! in the queue. Lengths only grow, so arc weights only grow and no arc can
//! become violated behind our back; the queue is therefore an exact dirty set.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

const NONE: usize = usize::MAX;

#[derive(Clone, Debug, Default)]
pub(crate) struct Spfa {
    pub pi: Vec<f64>,
    queue: VecDeque<usize>,
    queued: Vec<bool>,
    parent: Vec<usize>,
    parent_epoch: Vec<u32>,
    epoch: u32,
    touched: Vec<usize>,
    walk: Vec<u32>,
    walk_id: u32,
}

impl Spfa {
    pub fn new(n: usize) -> Self {
        Self {
            pi: vec![0.0; n],
            queued: vec![false; n],
            parent: vec![NONE; n],
            parent_epoch: vec![0; n],
            walk: vec![0; n],
            ..Default::default()
        }
    }

    pub fn mark_dirty(&mut self, v: usize) {
        if !self.queued[v] {
            self.queued[v] = true;
            self.queue.push_back(v);
        }
    }

    pub fn mark_all_dirty(&mut self) {
        for v in 0..self.pi.len() {
            self.mark_dirty(v);
        }
    }

    pub fn is_clean(&self) -> bool {
        self.queue.is_empty()
    }

    /// Relaxes from the dirty set until potentials are feasible (`None`) or a
    /// negative cycle appears in the parent graph (returned as arcs in walk order).
    ///
    /// `out(v)` lists arcs leaving `v`; `arc(a)` gives `(head, weight)`.
    pub fn run<'a, O, A>(&mut self, out: O, arc: A) -> Option<Vec<usize>>
    where
        O: Fn(usize) -> &'a [u32],
        A: Fn(usize) -> (usize, f64),
    {
        let n = self.pi.len();
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.parent_epoch.iter_mut().for_each(|x| *x = 0);
            self.epoch = 1;
        }
        self.touched.clear();
        let mut since_check = 0usize;
        while let Some(u) = self.queue.pop_front() {
            self.queued[u] = false;
            let pu = self.pi[u];
            for &a in out(u) {
                let a = a as usize;
                let (v, w) = arc(a);
                let cand = pu + w;
                let tol = 1e-12 * (pu.abs() + w.abs() + self.pi[v].abs());
                if cand < self.pi[v] - tol {
                    self.pi[v] = cand;
                    if self.parent_epoch[v] != self.epoch {
                        self.parent_epoch[v] = self.epoch;
                        self.touched.push(v);
                    }
                    self.parent[v] = a;
                    since_check += 1;
                    if !self.queued[v] {
                        self.queued[v] = true;
                        self.queue.push_back(v);
                    }
                }
            }
            if since_check >= n.max(8) {
                since_check = 0;
                if let Some(cycle) = self.parent_cycle(&arc) {
                    return Some(cycle);
                }
            }
        }
        None
    }

    fn parent_cycle<A: Fn(usize) -> (usize, f64)>(&mut self, arc: &A) -> Option<Vec<usize>> {
        // the tail of arc a is the head of its reverse a ^ 1
        let tail = |a: usize| arc(a ^ 1).0;
        if self.walk_id > u32::MAX - self.touched.len() as u32 - 1 {
            self.walk.iter_mut().for_each(|x| *x = 0);
            self.walk_id = 0;
        }
        let pass_start = self.walk_id + 1;
        for i in 0..self.touched.len() {
            self.walk_id += 1;
            let id = self.walk_id;
            let mut v = self.touched[i];
            loop {
                if self.walk[v] == id {
                    let mut arcs = Vec::new();
                    let mut x = v;
                    loop {
                        let a = self.parent[x];
                        arcs.push(a);
                        x = tail(a);
                        if x == v {
                            break;
                        }
                    }
                    arcs.reverse();
                    return Some(arcs);
                }
                if self.walk[v] >= pass_start {
                    // already explored by an earlier walk of this pass
                    break;
                }
                self.walk[v] = id;
                if self.parent_epoch[v] != self.epoch {
                    break;
                }
                v = tail(self.parent[v]);
            }
        }
        None
    }
}
