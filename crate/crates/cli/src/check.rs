//! Event-by-event comparison of a run against the static oracles.

use incflow::drivers::{phase_bound, EffResVerdict, MaxflowParams, MaxflowEvent};
use incflow::verify::{effective_resistance, exact_maxflow, static_pnorm_opt, static_pnorm_opt_from, OracleSettings};
use incflow::{Error, IncrementalGraph, PNormInstance, Verdict};
use serde::Serialize;

use crate::runner::{Outcome, RunReport};
use crate::stream::{EdgeSpec, Problem, UpdateStream};

/// Relative slack on top of the oracle tolerance.
pub const SLACK: f64 = 1e-7;
pub const ORACLE_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EventCheck {
    pub event: usize,
    pub verdict: &'static str,
    /// Oracle optimum (pnorm), exact maxflow value, or effective resistance;
    /// `None` when infinite (demand not routable, s and t disconnected).
    pub oracle: Option<f64>,
    pub ok: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub problems: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CheckReport {
    pub events: Vec<EventCheck>,
    /// Whole-run findings (phase count, verdict monotonicity).
    pub run_problems: Vec<String>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.run_problems.is_empty() && self.events.iter().all(|e| e.ok)
    }

    pub fn failures(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .events
            .iter()
            .flat_map(|e| e.problems.iter().map(move |p| format!("event {}: {p}", e.event)))
            .collect();
        out.extend(self.run_problems.iter().cloned());
        out
    }
}

pub fn check_run(stream: &UpdateStream, report: &RunReport) -> incflow::Result<CheckReport> {
    if report.events.len() != stream.events.len() + 1 {
        return Err(Error::DimensionMismatch {
            expected: stream.events.len() + 1,
            got: report.events.len(),
        });
    }
    match stream.header.problem {
        Problem::PNorm { p, threshold, eps } => check_pnorm(stream, report, p, threshold, eps),
        Problem::Maxflow { s, t, eps } => check_maxflow(stream, report, s, t, eps),
        Problem::EffRes { s, t, theta, eps } => check_effres(stream, report, s, t, theta, eps),
    }
}

/// Edges present after event `i` (event 0 is the initial graph).
fn prefixes(stream: &UpdateStream) -> impl Iterator<Item = (usize, &[EdgeSpec])> {
    (0..=stream.events.len()).map(move |i| if i == 0 { (0, &[][..]) } else { (i, &stream.events[i - 1..i]) })
}

fn check_pnorm(stream: &UpdateStream, report: &RunReport, p: u32, f_thr: f64, eps: f64) -> incflow::Result<CheckReport> {
    let mut inst = PNormInstance::new(stream.demand_vector(), p, f_thr, eps)?;
    for e in &stream.initial {
        inst.add_edge(e.u, e.v, e.attrs())?;
    }
    let mut warm: Option<Vec<f64>> = None;
    let mut out = CheckReport::default();
    for (i, new) in prefixes(stream) {
        for e in new {
            inst.add_edge(e.u, e.v, e.attrs())?;
        }
        let mut problems = Vec::new();
        let opt = if inst.routable() {
            let rep = match &warm {
                Some(f) => {
                    let mut start = f.clone();
                    start.resize(inst.edge_count(), 0.0);
                    static_pnorm_opt_from(&inst, &start, OracleSettings { tol: ORACLE_TOL, ..Default::default() })?
                }
                None => static_pnorm_opt(&inst, ORACLE_TOL)?,
            };
            if !rep.converged {
                problems.push(format!("oracle stopped with gradient norm {:.3e}", rep.gradient_norm));
            }
            warm = Some(rep.flow);
            Some(rep.value)
        } else {
            None
        };
        let outcome = &report.events[i].outcome;
        match outcome {
            Outcome::PNorm(Verdict::CertifiedAbove) => {
                if let Some(v) = opt {
                    if v <= f_thr - SLACK * (1.0 + f_thr.abs()) {
                        problems.push(format!("certified above {f_thr} but the optimum is {v}"));
                    }
                }
            }
            Outcome::PNorm(Verdict::Flow { flow, energy }) => {
                if flow.len() != inst.edge_count() || !inst.is_feasible(flow) {
                    problems.push("published flow does not route the demand".into());
                } else {
                    let e = inst.energy(flow)?;
                    if e > f_thr + eps + SLACK * (f_thr.abs() + eps) {
                        problems.push(format!("energy {e} exceeds {f_thr} + {eps}"));
                    }
                    if (e - energy).abs() > SLACK * (1.0 + e.abs()) {
                        problems.push(format!("reported energy {energy} but recomputed {e}"));
                    }
                }
            }
            other => problems.push(format!("unexpected outcome {}", other.label())),
        }
        out.events.push(EventCheck {
            event: i,
            verdict: outcome.label(),
            oracle: opt,
            ok: problems.is_empty(),
            problems,
        });
    }
    Ok(out)
}

fn check_maxflow(stream: &UpdateStream, report: &RunReport, s: usize, t: usize, eps: f64) -> incflow::Result<CheckReport> {
    // the driver rejects eps outside (0, 1/2]; mirror it so a bad header is an error, not a pass
    MaxflowParams::new(eps, stream.header.m_hat)?;
    let mut graph = IncrementalGraph::new(stream.header.n);
    let mut caps: Vec<u64> = Vec::new();
    let mut out = CheckReport::default();
    for (i, new) in prefixes(stream) {
        let added = if i == 0 { &stream.initial[..] } else { new };
        for e in added {
            graph.add_edge(e.u, e.v)?;
            caps.push(e.cap.unwrap_or(1));
        }
        let exact = exact_maxflow(&graph, &caps, s, t)?.value;
        let mut problems = Vec::new();
        let outcome = &report.events[i].outcome;
        match outcome {
            Outcome::Maxflow(MaxflowEvent { value, flow, .. }) => {
                let v = *value as f64;
                if v < (1.0 - eps) * exact as f64 - 1e-9 {
                    problems.push(format!("value {value} below (1 - {eps}) * {exact}"));
                }
                if *value > exact {
                    problems.push(format!("value {value} above the maxflow {exact}"));
                }
                if flow.len() != graph.edge_count() {
                    problems.push("flow has the wrong length".into());
                } else {
                    if let Some(e) = (0..flow.len()).find(|&e| flow[e].abs() > caps[e] as f64 * (1.0 + 1e-12)) {
                        problems.push(format!("edge {e} carries {} over capacity {}", flow[e], caps[e]));
                    }
                    let mut d = vec![0.0; graph.vertex_count()];
                    d[s] = -v;
                    d[t] = v;
                    if !graph.routes(flow, &d) {
                        problems.push(format!("flow does not carry {value} from s to t"));
                    }
                }
            }
            other => problems.push(format!("unexpected outcome {}", other.label())),
        }
        out.events.push(EventCheck {
            event: i,
            verdict: outcome.label(),
            oracle: Some(exact as f64),
            ok: problems.is_empty(),
            problems,
        });
    }
    let total: u64 = caps.iter().sum();
    let bound = phase_bound(total, eps);
    if let Some(phases) = report.phases {
        if phases > bound {
            out.run_problems.push(format!("{phases} phases exceed the bound {bound}"));
        }
    }
    Ok(out)
}

fn check_effres(
    stream: &UpdateStream,
    report: &RunReport,
    s: usize,
    t: usize,
    theta: f64,
    eps: f64,
) -> incflow::Result<CheckReport> {
    let gamma2 = incflow::drivers::GAMMA * incflow::drivers::GAMMA;
    let mut graph = IncrementalGraph::new(stream.header.n);
    let mut res = Vec::new();
    for e in &stream.initial {
        graph.add_edge(e.u, e.v)?;
        res.push(e.r.unwrap_or(1.0));
    }
    let mut unit = vec![0.0; stream.header.n];
    unit[s] = -1.0;
    unit[t] = 1.0;
    let mut out = CheckReport::default();
    let mut seen_below = false;
    for (i, new) in prefixes(stream) {
        for e in new {
            graph.add_edge(e.u, e.v)?;
            res.push(e.r.unwrap_or(1.0));
        }
        let r_eff = match effective_resistance(&graph, &res, s, t) {
            Ok(r) => Some(r),
            Err(Error::Disconnected(..)) => None,
            Err(e) => return Err(e),
        };
        let mut problems = Vec::new();
        let outcome = &report.events[i].outcome;
        match outcome {
            Outcome::EffRes(EffResVerdict::AboveThreshold) => {
                if seen_below {
                    problems.push("above after below".into());
                }
                if let Some(r) = r_eff {
                    if r < theta / (1.0 + gamma2) * (1.0 - SLACK) {
                        problems.push(format!("above {theta} but the resistance is {r}"));
                    }
                    if r < theta * (1.0 - eps) {
                        problems.push(format!("still above at resistance {r} < {theta} (1 - {eps})"));
                    }
                }
            }
            Outcome::EffRes(EffResVerdict::Below { flow, estimate }) => {
                seen_below = true;
                if flow.len() != graph.edge_count() || !graph.routes(flow, &unit) {
                    problems.push("flow is not a unit s-t flow".into());
                } else {
                    let energy: f64 = flow.iter().zip(&res).map(|(f, r)| r * f * f).sum();
                    if (energy - estimate).abs() > SLACK * (1.0 + energy) {
                        problems.push(format!("estimate {estimate} but the flow has energy {energy}"));
                    }
                }
                if *estimate > theta * (1.0 + eps) * (1.0 + SLACK) {
                    problems.push(format!("estimate {estimate} exceeds {theta} (1 + {eps})"));
                }
                match r_eff {
                    Some(r) if r <= estimate * (1.0 + SLACK) => {}
                    Some(r) => problems.push(format!("estimate {estimate} below the resistance {r}")),
                    None => problems.push("below while s and t are disconnected".into()),
                }
            }
            other => problems.push(format!("unexpected outcome {}", other.label())),
        }
        out.events.push(EventCheck {
            event: i,
            verdict: outcome.label(),
            oracle: r_eff,
            ok: problems.is_empty(),
            problems,
        });
    }
    Ok(out)
}
