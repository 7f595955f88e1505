//! Seeded instance generators.
//!
//! Every generator draws from `incflow::rng::stream(seed, label)` so a stream
//! is a pure function of its arguments.

use incflow::verify::{effective_resistance, static_pnorm_opt, static_pnorm_opt_from, OracleSettings};
use incflow::{Error, IncrementalGraph, PNormInstance};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::stream::{EdgeSpec, Header, Problem, UpdateStream};

const LABEL_GRAPH: u64 = 1;
const LABEL_THRESHOLD: u64 = 2;

/// Four significant digits; keeps generated files readable.
fn round4(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let scale = 10f64.powi(3 - x.abs().log10().floor() as i32);
    (x * scale).round() / scale
}

fn random_pair(rng: &mut ChaCha8Rng, n: usize) -> (usize, usize) {
    let u = rng.random_range(0..n);
    let v = (u + rng.random_range(1..n)) % n;
    (u, v)
}

fn pnorm_edge(rng: &mut ChaCha8Rng, u: usize, v: usize) -> EdgeSpec {
    EdgeSpec {
        g: Some(round4(rng.random_range(-1.0..1.0))),
        r: Some(round4(rng.random_range(0.2..2.0))),
        w: Some(round4(rng.random_range(0.2..2.0))),
        ..EdgeSpec::new(u, v)
    }
}

/// Oracle optimum after the initial graph and after every event; `None`
/// while the demand is not routable.
pub fn pnorm_optima(stream: &UpdateStream) -> incflow::Result<Vec<Option<f64>>> {
    let Problem::PNorm { p, .. } = stream.header.problem else {
        return Err(Error::InvalidParameter("not a p-norm stream".into()));
    };
    let mut inst = PNormInstance::new(stream.demand_vector(), p, 0.0, 1.0)?;
    for e in &stream.initial {
        inst.add_edge(e.u, e.v, e.attrs())?;
    }
    let mut out = Vec::with_capacity(stream.events.len() + 1);
    let mut warm: Option<Vec<f64>> = None;
    for i in 0..=stream.events.len() {
        if i > 0 {
            let e = &stream.events[i - 1];
            inst.add_edge(e.u, e.v, e.attrs())?;
        }
        if !inst.routable() {
            out.push(None);
            continue;
        }
        let rep = match &warm {
            Some(f) => {
                let mut start = f.clone();
                start.resize(inst.edge_count(), 0.0);
                static_pnorm_opt_from(&inst, &start, OracleSettings { tol: 1e-10, ..Default::default() })?
            }
            None => static_pnorm_opt(&inst, 1e-10)?,
        };
        out.push(Some(rep.value));
        warm = Some(rep.flow);
    }
    Ok(out)
}

/// Picks a threshold between consecutive finite oracle values so that the
/// verdict has a chance to change mid-stream. Returns `(F, eps)`.
fn threshold_from(values: &[Option<f64>], rng: &mut ChaCha8Rng) -> (f64, f64) {
    let finite: Vec<usize> = (0..values.len()).filter(|&i| values[i].is_some()).collect();
    let Some(&first) = finite.first() else {
        // never routable: any threshold is certified throughout
        return (1.0, 0.01);
    };
    let j = finite[rng.random_range(0..finite.len())];
    let v = values[j].expect("finite");
    let prev = if j > first { values[j - 1] } else { None };
    let spread = match prev {
        Some(pv) if pv > v => pv - v,
        _ => 0.5 * (1.0 + v.abs()),
    };
    let f = round4(v + rng.random_range(0.05..0.95) * spread);
    let eps = round4(10f64.powf(rng.random_range(-3.0..-1.0)) * (1.0 + f.abs()));
    (f, eps)
}

/// Random p-norm stream: n in [4, 12], at most `m_max` edges, sparse random
/// demand, a few initial edges, threshold placed at a random event.
pub fn random_pnorm(seed: u64, p: u32, m_max: usize) -> incflow::Result<UpdateStream> {
    let mut rng = incflow::rng::stream(seed, LABEL_GRAPH);
    let n = rng.random_range(4..=12);
    let m = rng.random_range(n.min(m_max)..=m_max.max(n.min(m_max)));
    let initial_count = rng.random_range(0..=m / 3);
    let mut demand = Vec::new();
    let sinks = rng.random_range(1..=2);
    let mut vertices: Vec<usize> = (0..n).collect();
    vertices.shuffle(&mut rng);
    let mut total = 0.0;
    for &v in &vertices[1..=sinks] {
        let x = round4(rng.random_range(0.5..2.0));
        demand.push((v, x));
        total += x;
    }
    demand.insert(0, (vertices[0], -total));
    let edges: Vec<EdgeSpec> = (0..m)
        .map(|_| {
            let (u, v) = random_pair(&mut rng, n);
            pnorm_edge(&mut rng, u, v)
        })
        .collect();
    let mut stream = UpdateStream {
        header: Header {
            problem: Problem::PNorm { p, threshold: 0.0, eps: 1.0 },
            n,
            m_hat: m,
        },
        demand,
        initial: edges[..initial_count].to_vec(),
        events: edges[initial_count..].to_vec(),
    };
    let values = pnorm_optima(&stream)?;
    let (threshold, eps) = threshold_from(&values, &mut incflow::rng::stream(seed, LABEL_THRESHOLD));
    stream.header.problem = Problem::PNorm { p, threshold, eps };
    Ok(stream)
}

/// Planted-threshold p-norm stream: a random spanning tree first, then
/// `m - n + 1` random insertions; unit demand between the first and last
/// vertex. `F = OPT_final + rho (OPT_initial - OPT_final)` and
/// `eps = 1e-3 (OPT_initial - OPT_final)`, so the verdict flips strictly
/// inside the stream.
pub fn planted_pnorm(seed: u64, n: usize, m: usize, p: u32, rho: f64) -> incflow::Result<UpdateStream> {
    if n < 2 || m < n {
        return Err(Error::InvalidParameter(format!("need 2 <= n <= m, got n={n} m={m}")));
    }
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::InvalidParameter(format!("rho must lie in (0, 1), got {rho}")));
    }
    let mut rng = incflow::rng::stream(seed, LABEL_GRAPH);
    let mut edges = Vec::with_capacity(m);
    for v in 1..n {
        let u = rng.random_range(0..v);
        edges.push(pnorm_edge(&mut rng, u, v));
    }
    while edges.len() < m {
        let (u, v) = random_pair(&mut rng, n);
        edges.push(pnorm_edge(&mut rng, u, v));
    }
    let mut stream = UpdateStream {
        header: Header {
            problem: Problem::PNorm { p, threshold: 0.0, eps: 1.0 },
            n,
            m_hat: m,
        },
        demand: vec![(0, -1.0), (n - 1, 1.0)],
        initial: edges[..n - 1].to_vec(),
        events: edges[n - 1..].to_vec(),
    };
    let opt = |s: &UpdateStream, all: bool| -> incflow::Result<f64> {
        let mut inst = PNormInstance::new(s.demand_vector(), p, 0.0, 1.0)?;
        let list: Vec<&EdgeSpec> = if all { s.edges().collect() } else { s.initial.iter().collect() };
        for e in list {
            inst.add_edge(e.u, e.v, e.attrs())?;
        }
        Ok(static_pnorm_opt(&inst, 1e-10)?.value)
    };
    let first = opt(&stream, false)?;
    let last = opt(&stream, true)?;
    let gap = first - last;
    if !(gap > 0.0) {
        return Err(Error::InvalidParameter("insertions do not lower the optimum; pick another seed".into()));
    }
    stream.header.problem = Problem::PNorm {
        p,
        threshold: last + rho * gap,
        eps: 1e-3 * gap,
    };
    Ok(stream)
}

/// Random maxflow stream: n in [4, 12], s = first vertex, t = last, up to
/// three initial edges and `events` insertions with capacities in [1, u_max].
pub fn random_maxflow(seed: u64, eps: f64, events: usize, u_max: u64) -> UpdateStream {
    let mut rng = incflow::rng::stream(seed, LABEL_GRAPH);
    let n = rng.random_range(4..=12);
    let initial_count = rng.random_range(0..=3);
    let edges: Vec<EdgeSpec> = (0..initial_count + events)
        .map(|_| {
            let (u, v) = random_pair(&mut rng, n);
            EdgeSpec {
                cap: Some(rng.random_range(1..=u_max)),
                ..EdgeSpec::new(u, v)
            }
        })
        .collect();
    UpdateStream {
        header: Header {
            problem: Problem::Maxflow { s: 0, t: n - 1, eps },
            n,
            m_hat: edges.len(),
        },
        demand: Vec::new(),
        initial: edges[..initial_count].to_vec(),
        events: edges[initial_count..].to_vec(),
    }
}

/// Maxflow stream that keeps the optimum growing: `paths` vertex-disjoint
/// two-edge s-t paths arrive one after another (each with unit capacity,
/// plus a chord between consecutive middles), so nearly every relative gain
/// of `e^{eps/2}` forces a new phase.
pub fn phase_stress(seed: u64, paths: usize, eps: f64) -> UpdateStream {
    let mut rng = incflow::rng::stream(seed, LABEL_GRAPH);
    let n = paths + 2;
    let (s, t) = (0, n - 1);
    let mut events = Vec::new();
    for i in 0..paths {
        let mid = i + 1;
        let (a, b) = if rng.random_bool(0.5) { (s, t) } else { (t, s) };
        events.push(EdgeSpec { cap: Some(1), ..EdgeSpec::new(a, mid) });
        events.push(EdgeSpec { cap: Some(1), ..EdgeSpec::new(mid, b) });
        if i > 0 {
            let cap = rng.random_range(1..=2);
            events.push(EdgeSpec { cap: Some(cap), ..EdgeSpec::new(mid - 1, mid) });
        }
    }
    UpdateStream {
        header: Header {
            problem: Problem::Maxflow { s, t, eps },
            n,
            m_hat: events.len(),
        },
        demand: Vec::new(),
        initial: Vec::new(),
        events,
    }
}

/// Effective resistance after the initial graph and each event (`None` while disconnected).
pub fn effres_values(stream: &UpdateStream) -> incflow::Result<Vec<Option<f64>>> {
    let (Problem::EffRes { s, t, .. } | Problem::Maxflow { s, t, .. }) = stream.header.problem else {
        return Err(Error::InvalidParameter("not an s-t stream".into()));
    };
    let mut graph = IncrementalGraph::new(stream.header.n);
    let mut res = Vec::new();
    let mut out = Vec::new();
    for (i, e) in stream.edges().enumerate() {
        graph.add_edge(e.u, e.v)?;
        res.push(e.r.unwrap_or(1.0));
        if i + 1 < stream.initial.len() {
            continue;
        }
        out.push(match effective_resistance(&graph, &res, s, t) {
            Ok(r) => Some(r),
            Err(Error::Disconnected(..)) => None,
            Err(e) => return Err(e),
        });
    }
    if stream.initial.is_empty() {
        out.insert(0, None);
    }
    Ok(out)
}

/// Random effective-resistance stream: n in [4, 12], resistances in
/// [0.5, 2], theta placed between the values at two consecutive events.
pub fn random_effres(seed: u64, eps_rel: f64, m_max: usize) -> incflow::Result<UpdateStream> {
    let mut rng = incflow::rng::stream(seed, LABEL_GRAPH);
    let n = rng.random_range(4..=12);
    let m = rng.random_range(n.min(m_max)..=m_max.max(n.min(m_max)));
    let initial_count = rng.random_range(0..=m / 4);
    let edges: Vec<EdgeSpec> = (0..m)
        .map(|_| {
            let (u, v) = random_pair(&mut rng, n);
            EdgeSpec {
                r: Some(round4(rng.random_range(0.5..2.0))),
                ..EdgeSpec::new(u, v)
            }
        })
        .collect();
    let mut stream = UpdateStream {
        header: Header {
            problem: Problem::EffRes { s: 0, t: n - 1, theta: 1.0, eps: eps_rel },
            n,
            m_hat: m,
        },
        demand: Vec::new(),
        initial: edges[..initial_count].to_vec(),
        events: edges[initial_count..].to_vec(),
    };
    let values = effres_values(&stream)?;
    let (theta, _) = threshold_from(&values, &mut incflow::rng::stream(seed, LABEL_THRESHOLD));
    stream.header.problem = Problem::EffRes {
        s: 0,
        t: n - 1,
        theta: theta.max(1e-3),
        eps: eps_rel,
    };
    Ok(stream)
}
