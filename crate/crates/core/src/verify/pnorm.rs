use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use crate::graph::IncrementalGraph;
use crate::numeric::{dot, ipow};
use crate::objective::PNormInstance;
use crate::{Error, Result};

use super::laplacian::grounded_solve;

#[derive(Clone, Debug, PartialEq)]
pub struct OracleReport {
    pub value: f64,
    pub flow: Vec<f64>,
    pub iterations: usize,
    /// Euclidean norm of the energy gradient projected onto the cycle space.
    pub gradient_norm: f64,
    pub converged: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleSettings {
    /// Stop once the projected gradient norm is at most `tol * (1 + |E|)`.
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for OracleSettings {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iterations: 2000,
        }
    }
}

/// A flow routing `demand` along a BFS spanning forest.
pub fn tree_routing(graph: &IncrementalGraph, demand: &[f64]) -> Result<Vec<f64>> {
    let (f, imbalance) = forest_flow(graph, demand);
    let scale = demand.iter().map(|d| d.abs()).sum::<f64>();
    if imbalance > 1e-9 * scale {
        return Err(Error::NotRoutable);
    }
    Ok(f)
}

/// Routes the rounding drift `demand - B^T f` back along a spanning forest.
pub(crate) fn repair_routing(graph: &IncrementalGraph, f: &mut [f64], demand: &[f64]) {
    let net = graph.net_demand(f).expect("sizes match");
    let drift: Vec<f64> = demand.iter().zip(&net).map(|(d, x)| d - x).collect();
    for (x, y) in f.iter_mut().zip(forest_flow(graph, &drift).0) {
        *x += y;
    }
}

/// Forest routing plus the largest demand left over at a component root.
fn forest_flow(graph: &IncrementalGraph, demand: &[f64]) -> (Vec<f64>, f64) {
    let n = graph.vertex_count();
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (e, (u, v)) in graph.edges().enumerate() {
        adj[u].push((v, e));
        adj[v].push((u, e));
    }
    let mut parent_edge = vec![usize::MAX; n];
    let mut seen = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut roots = Vec::new();
    for root in 0..n {
        if seen[root] {
            continue;
        }
        roots.push(root);
        seen[root] = true;
        let mut queue = VecDeque::from([root]);
        while let Some(x) = queue.pop_front() {
            order.push(x);
            for &(y, e) in &adj[x] {
                if !seen[y] {
                    seen[y] = true;
                    parent_edge[y] = e;
                    queue.push_back(y);
                }
            }
        }
    }
    let mut subtree = demand.to_vec();
    let mut f = vec![0.0; graph.edge_count()];
    for &v in order.iter().rev() {
        let e = parent_edge[v];
        if e == usize::MAX {
            continue;
        }
        let (tail, head) = graph.endpoints(e);
        let (parent, sign) = if head == v { (tail, 1.0) } else { (head, -1.0) };
        f[e] = sign * subtree[v];
        subtree[parent] += subtree[v];
    }
    let imbalance = roots.iter().map(|&r| subtree[r].abs()).fold(0.0, f64::max);
    (f, imbalance)
}

/// Minimizes the energy over flows routing the instance's demand.
pub fn static_pnorm_opt(instance: &PNormInstance, tol: f64) -> Result<OracleReport> {
    let start = tree_routing(instance.graph(), instance.demand())?;
    static_pnorm_opt_from(
        instance,
        &start,
        OracleSettings {
            tol,
            ..Default::default()
        },
    )
}

/// Damped Newton on the affine space of feasible flows, from a feasible `start`.
///
/// The Newton direction solves a Laplacian system weighted by the inverse
/// diagonal Hessian, so every iterate routes the demand exactly up to rounding.
pub fn static_pnorm_opt_from(instance: &PNormInstance, start: &[f64], settings: OracleSettings) -> Result<OracleReport> {
    if !instance.routable() {
        return Err(Error::NotRoutable);
    }
    if !instance.is_feasible(start) {
        return Err(Error::InvalidParameter("starting flow does not route the demand".into()));
    }
    let graph = instance.graph();
    let (r, w, p) = (instance.resistances(), instance.weights(), instance.p());
    let m = instance.edge_count();
    let mut f = start.to_vec();
    let mut value = instance.energy(&f)?;
    if !value.is_finite() {
        return Err(Error::NonFinite("starting energy"));
    }
    let ones = vec![1.0; m];
    let mut gradient_norm = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    let mut stalls = 0;
    while iterations < settings.max_iterations {
        let grad = instance.gradient(&f)?;
        let norm = projected_norm(graph, &ones, &grad)?;
        stalls = if norm < gradient_norm { 0 } else { stalls + 1 };
        gradient_norm = gradient_norm.min(norm);
        if norm <= settings.tol * (1.0 + value.abs()) {
            gradient_norm = norm;
            converged = true;
            break;
        }
        if stalls >= 3 {
            break;
        }
        let inv_h: Vec<f64> = (0..m)
            .map(|e| {
                let curv = 2.0 * r[e] * r[e] + (p * (p - 1)) as f64 * ipow(w[e], p) * ipow(f[e].abs(), p - 2);
                1.0 / curv
            })
            .collect();
        let dir = newton_direction(graph, &inv_h, &grad)?;
        // <grad, dir> = -<dir, H dir> exactly; this form avoids cancellation
        let slope = -dir.iter().zip(&inv_h).map(|(x, d)| x * x / d).sum::<f64>();
        if !(slope < 0.0) {
            break;
        }
        // near the optimum energy differences drown in rounding; the slack lets
        // full Newton steps through so the gradient keeps shrinking
        let slack = 1e-14 * (1.0 + value.abs());
        let mut step = 1.0;
        let mut next = vec![0.0; m];
        let mut accepted = false;
        for _ in 0..80 {
            for e in 0..m {
                next[e] = f[e] + step * dir[e];
            }
            let v = instance.energy(&next)?;
            if v <= value + 0.25 * step * slope + slack {
                accepted = true;
                core::mem::swap(&mut f, &mut next);
                // ill-conditioned solves drift off the affine space; pull back
                repair_routing(graph, &mut f, instance.demand());
                value = instance.energy(&f)?;
                break;
            }
            step *= 0.5;
        }
        iterations += 1;
        if !accepted {
            break;
        }
    }
    Ok(OracleReport {
        value,
        flow: f,
        iterations,
        gradient_norm,
        converged,
    })
}

/// `-D (grad - B phi)` where `B^T D B phi = B^T D grad`; a circulation.
fn newton_direction(graph: &IncrementalGraph, d: &[f64], grad: &[f64]) -> Result<Vec<f64>> {
    if d.iter().chain(grad).any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("Newton system"));
    }
    let weighted: Vec<f64> = d.iter().zip(grad).map(|(a, b)| a * b).collect();
    let rhs = graph.net_demand(&weighted)?;
    // fails only when some weights vanish and split the graph
    let phi = grounded_solve(graph, d, &rhs).ok_or(Error::NonFinite("Newton system"))?;
    Ok(graph
        .edges()
        .enumerate()
        .map(|(e, (u, v))| -d[e] * (grad[e] - (phi[v] - phi[u])))
        .collect())
}

fn projected_norm(graph: &IncrementalGraph, ones: &[f64], grad: &[f64]) -> Result<f64> {
    if grad.is_empty() {
        return Ok(0.0);
    }
    let dir = newton_direction(graph, ones, grad)?;
    Ok(libm::sqrt(dot(&dir, &dir)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::EdgeAttrs;
    use crate::verify::effective_resistance;
    use rand::{Rng, SeedableRng};

    fn unit_demand(n: usize, s: usize, t: usize) -> Vec<f64> {
        let mut d = vec![0.0; n];
        d[s] = -1.0;
        d[t] = 1.0;
        d
    }

    #[test]
    fn parallel_pair_splits_evenly() {
        let mut inst = PNormInstance::new(unit_demand(2, 0, 1), 2, 0.0, 1.0).unwrap();
        inst.add_edge(0, 1, EdgeAttrs::new(0.0, 1.0, 1e-6)).unwrap();
        inst.add_edge(0, 1, EdgeAttrs::new(0.0, 1.0, 1e-6)).unwrap();
        let rep = static_pnorm_opt(&inst, 1e-9).unwrap();
        assert!(rep.converged);
        assert!((rep.flow[0] - 0.5).abs() < 1e-9 && (rep.flow[1] - 0.5).abs() < 1e-9);
        assert!((rep.value - 0.5).abs() < 1e-6);
    }

    #[test]
    fn single_edge_has_no_freedom() {
        let mut inst = PNormInstance::new(unit_demand(2, 0, 1), 2, 0.0, 1.0).unwrap();
        inst.add_edge(0, 1, EdgeAttrs::default()).unwrap();
        let rep = static_pnorm_opt(&inst, 1e-9).unwrap();
        assert_eq!(rep.flow, vec![1.0]);
        assert_eq!(rep.value, 2.0);
    }

    #[test]
    fn zero_demand_zero_gradient_gives_zero() {
        let mut inst = PNormInstance::new(vec![0.0; 3], 3, 0.0, 1.0).unwrap();
        inst.add_edge(0, 1, EdgeAttrs::default()).unwrap();
        inst.add_edge(1, 2, EdgeAttrs::default()).unwrap();
        inst.add_edge(2, 0, EdgeAttrs::default()).unwrap();
        let rep = static_pnorm_opt(&inst, 1e-9).unwrap();
        assert_eq!(rep.value, 0.0);
        assert!(rep.flow.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn unroutable_demand_is_rejected() {
        let mut inst = PNormInstance::new(unit_demand(3, 0, 2), 2, 0.0, 1.0).unwrap();
        inst.add_edge(0, 1, EdgeAttrs::default()).unwrap();
        assert_eq!(static_pnorm_opt(&inst, 1e-9), Err(Error::NotRoutable));
    }

    fn random_instance(rng: &mut impl Rng, p: u32) -> PNormInstance {
        let n = rng.random_range(3..9);
        let mut d: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mean = d.iter().sum::<f64>() / n as f64;
        d.iter_mut().for_each(|x| *x -= mean);
        let mut inst = PNormInstance::new(d, p, 0.0, 1.0).unwrap();
        for v in 1..n {
            let u = rng.random_range(0..v);
            inst.add_edge(u, v, random_attrs(rng)).unwrap();
        }
        for _ in 0..rng.random_range(0..2 * n) {
            let u = rng.random_range(0..n);
            let v = (u + rng.random_range(1..n)) % n;
            inst.add_edge(u, v, random_attrs(rng)).unwrap();
        }
        inst
    }

    fn random_attrs(rng: &mut impl Rng) -> EdgeAttrs {
        EdgeAttrs::new(rng.random_range(-1.0..1.0), rng.random_range(0.2..2.0), rng.random_range(0.2..2.0))
    }

    #[test]
    fn optimum_does_not_depend_on_the_start() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        for p in [2, 3, 4, 8] {
            for _ in 0..10 {
                let inst = random_instance(&mut rng, p);
                let a = static_pnorm_opt(&inst, 1e-9).unwrap();
                assert!(a.converged, "p={p} grad={}", a.gradient_norm);
                assert!(inst.is_feasible(&a.flow));
                // restart from the tree routing plus a random circulation
                let base = tree_routing(inst.graph(), inst.demand()).unwrap();
                let noise: Vec<f64> = (0..inst.edge_count()).map(|_| rng.random_range(-2.0..2.0)).collect();
                let fix = tree_routing(inst.graph(), &inst.graph().net_demand(&noise).unwrap()).unwrap();
                let start: Vec<f64> = (0..noise.len()).map(|e| base[e] + noise[e] - fix[e]).collect();
                let b = static_pnorm_opt_from(&inst, &start, OracleSettings::default()).unwrap();
                assert!((a.value - b.value).abs() <= 1e-8 * (1.0 + a.value.abs()));
                // no feasible perturbation improves on the optimum
                for _ in 0..20 {
                    let noise: Vec<f64> = (0..inst.edge_count()).map(|_| rng.random_range(-0.1..0.1)).collect();
                    let net = inst.graph().net_demand(&noise).unwrap();
                    let fix = tree_routing(inst.graph(), &net).unwrap();
                    let cand: Vec<f64> = (0..noise.len()).map(|e| a.flow[e] + noise[e] - fix[e]).collect();
                    assert!(inst.is_feasible(&cand));
                    assert!(inst.energy(&cand).unwrap() >= a.value - 1e-9 * (1.0 + a.value.abs()));
                }
            }
        }
    }

    #[test]
    fn quadratic_optimum_is_the_effective_resistance() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let n = rng.random_range(2..8);
            let mut inst = PNormInstance::new(unit_demand(n, 0, n - 1), 2, 0.0, 1.0).unwrap();
            let mut res = Vec::new();
            for v in 1..n {
                let u = rng.random_range(0..v);
                let r: f64 = rng.random_range(0.2..3.0);
                inst.add_edge(u, v, EdgeAttrs::new(0.0, r.sqrt(), 1e-7)).unwrap();
                res.push(r);
            }
            for _ in 0..n {
                let u = rng.random_range(0..n);
                let v = (u + rng.random_range(1..n.max(2))) % n;
                if u == v {
                    continue;
                }
                let r: f64 = rng.random_range(0.2..3.0);
                inst.add_edge(u, v, EdgeAttrs::new(0.0, r.sqrt(), 1e-7)).unwrap();
                res.push(r);
            }
            let reff = effective_resistance(inst.graph(), &res, 0, n - 1).unwrap();
            let rep = static_pnorm_opt(&inst, 1e-12).unwrap();
            assert!(((rep.value - reff) / reff).abs() < 1e-6, "{} vs {reff}", rep.value);
        }
    }
}
