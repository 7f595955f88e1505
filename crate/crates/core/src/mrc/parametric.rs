//! Static exact min-ratio cycle by parametric negative-cycle search.

use alloc::vec;
use alloc::vec::Vec;

use super::spfa::Spfa;
use super::{CycleSolution, MrcInstance};
use crate::{Error, Result};

pub(crate) fn out_arcs(instance: &MrcInstance) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::new(); instance.vertex_count()];
    for (e, (u, v)) in instance.graph().edges().enumerate() {
        out[u].push(2 * e as u32);
        out[v].push(2 * e as u32 + 1);
    }
    out
}

/// Some cycle whose ratio at `mu` is negative, i.e. `<g, c> - mu ||L c||_1 < 0`.
pub(crate) fn negative_cycle_at(
    instance: &MrcInstance,
    out: &[Vec<u32>],
    mu: f64,
) -> Option<CycleSolution> {
    let mut spfa = Spfa::new(instance.vertex_count());
    spfa.mark_all_dirty();
    let lengths = instance.lengths();
    let arcs = spfa.run(
        |v| &out[v],
        |a| {
            let (_, head, g) = instance.arc(a);
            (head, g - mu * lengths[a / 2])
        },
    )?;
    instance.solution_from_arcs(&arcs)
}

/// Any cycle, oriented so that its gradient is non-positive.
pub(crate) fn any_cycle(instance: &MrcInstance) -> Option<CycleSolution> {
    let n = instance.vertex_count();
    // forest adjacency built edge by edge until an edge closes a cycle
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    let mut dsu = crate::graph::DemandTracker::new(&vec![0.0; n]);
    for (e, (u, v)) in instance.graph().edges().enumerate() {
        if dsu.union(u, v) {
            adj[u].push((v, 2 * e));
            adj[v].push((u, 2 * e + 1));
            continue;
        }
        // path v -> u in the forest, then arc u -> v through e
        let mut via = vec![usize::MAX; n];
        let mut seen = vec![false; n];
        let mut stack = vec![v];
        seen[v] = true;
        while let Some(x) = stack.pop() {
            for &(y, a) in &adj[x] {
                if !seen[y] {
                    seen[y] = true;
                    via[y] = a;
                    stack.push(y);
                }
            }
        }
        // via[y] is the arc that reached y; walking back from u gives v -> u
        let mut arcs = vec![2 * e];
        let mut x = u;
        while x != v {
            arcs.push(via[x]);
            x = instance.arc(via[x]).0;
        }
        let mut sol = instance.solution_from_arcs(&arcs)?;
        if sol.ratio > 0.0 {
            sol.flow.scale(-1.0);
            sol.ratio = -sol.ratio;
        }
        return Some(sol);
    }
    None
}

/// Minimum of `<g, c> / ||L c||_1` over circulations, to within `tol`.
///
/// Returns `None` iff the graph has no cycle.
pub fn exact_min_ratio_cycle(instance: &MrcInstance, tol: f64) -> Result<Option<CycleSolution>> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter("tolerance must be positive".into()));
    }
    if !instance.has_cycle() {
        return Ok(None);
    }
    let out = out_arcs(instance);
    let Some(mut best) = negative_cycle_at(instance, &out, 0.0) else {
        return Ok(any_cycle(instance));
    };
    let gmax = instance.gradients().iter().fold(0.0_f64, |m, g| m.max(g.abs()));
    let lmin = instance.lengths().iter().fold(f64::INFINITY, |m, l| m.min(*l));
    let mut lo = -gmax * instance.edge_count() as f64 / lmin;
    let mut hi = best.ratio.min(0.0);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        match negative_cycle_at(instance, &out, mid) {
            Some(c) => {
                if c.ratio < best.ratio {
                    best = c;
                }
                hi = mid.min(best.ratio);
            }
            None => lo = mid,
        }
    }
    // Newton steps: each strictly improving cycle lowers the ratio
    for _ in 0..64 {
        match negative_cycle_at(instance, &out, best.ratio) {
            Some(c) if c.ratio < best.ratio - 1e-14 * best.ratio.abs() => best = c,
            _ => break,
        }
    }
    Ok(Some(best))
}
