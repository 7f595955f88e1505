//! Enumeration of all simple oriented cycles. Test oracle only.

use alloc::vec;
use alloc::vec::Vec;

use super::{CycleSolution, MrcInstance};
use crate::{Error, Result};

pub const ENUMERATION_MAX_VERTICES: usize = 16;
pub const ENUMERATION_MAX_EDGES: usize = 24;

struct Search<'a> {
    instance: &'a MrcInstance,
    out: Vec<Vec<u32>>,
    on_path: Vec<bool>,
    path: Vec<usize>,
    best: Option<(f64, Vec<usize>)>,
}

impl Search<'_> {
    fn extend(&mut self, start: usize, v: usize, grad: f64, len: f64) {
        for i in 0..self.out[v].len() {
            let a = self.out[v][i] as usize;
            let (_, w, g) = self.instance.arc(a);
            let l = self.instance.lengths()[a / 2];
            if w == start {
                // a 2-cycle must use two distinct edges
                if self.path.len() == 1 && self.path[0] / 2 == a / 2 {
                    continue;
                }
                let ratio = (grad + g) / (len + l);
                if self.best.as_ref().is_none_or(|(r, _)| ratio < *r) {
                    let mut arcs = self.path.clone();
                    arcs.push(a);
                    self.best = Some((ratio, arcs));
                }
            } else if w > start && !self.on_path[w] {
                self.on_path[w] = true;
                self.path.push(a);
                self.extend(start, w, grad + g, len + l);
                self.path.pop();
                self.on_path[w] = false;
            }
        }
    }
}

/// Minimum ratio over all simple cycles in both orientations; `None` iff acyclic.
pub fn brute_force_min_ratio_cycle(instance: &MrcInstance) -> Result<Option<CycleSolution>> {
    let (n, m) = (instance.vertex_count(), instance.edge_count());
    if n > ENUMERATION_MAX_VERTICES && m > ENUMERATION_MAX_EDGES {
        return Err(Error::EnumerationBound { vertices: n, edges: m });
    }
    let mut search = Search {
        instance,
        out: super::parametric::out_arcs(instance),
        on_path: vec![false; n],
        path: Vec::new(),
        best: None,
    };
    for start in 0..n {
        search.on_path[start] = true;
        search.extend(start, start, 0.0, 0.0);
        search.on_path[start] = false;
    }
    Ok(search
        .best
        .and_then(|(_, arcs)| instance.solution_from_arcs(&arcs)))
}
