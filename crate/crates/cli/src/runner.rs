//! Runs a parsed stream through the matching solver, one record per event.

use std::time::{Duration, Instant};

use incflow::drivers::{EffResVerdict, IncrementalEffRes, IncrementalMaxflow, MaxflowEvent, ObserverFactory};
use incflow::refine::RefineStats;
use incflow::{Backend, IncrementalPNorm, PNormInstance, RefineConfig, StepRule, Verdict};
use serde::Serialize;

use crate::stream::{Problem, UpdateStream};
use crate::trace::TraceSink;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunOptions {
    pub backend: Backend,
    pub kappa: f64,
    pub seed: u64,
    pub assert_invariants: bool,
    pub step_rule: StepRule,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            backend: Backend::Exact,
            kappa: 1.0,
            seed: 0,
            assert_invariants: false,
            step_rule: StepRule::LineSearch,
        }
    }
}

impl RunOptions {
    pub fn refine_config(&self, m_hat: usize) -> RefineConfig {
        RefineConfig {
            kappa: self.kappa,
            backend: self.backend,
            seed: self.seed,
            assert_invariants: self.assert_invariants,
            step_rule: self.step_rule,
            ..RefineConfig::new(m_hat)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Outcome {
    PNorm(Verdict),
    Maxflow(MaxflowEvent),
    EffRes(EffResVerdict),
}

impl Outcome {
    pub fn label(&self) -> &'static str {
        match self {
            Outcome::PNorm(Verdict::CertifiedAbove) => "certified_above",
            Outcome::PNorm(Verdict::Flow { .. }) => "flow",
            Outcome::Maxflow(ev) if ev.restarted => "restart",
            Outcome::Maxflow(_) => "hold",
            Outcome::EffRes(EffResVerdict::AboveThreshold) => "above",
            Outcome::EffRes(EffResVerdict::Below { .. }) => "below",
        }
    }

    pub fn objective(&self) -> Option<f64> {
        match self {
            Outcome::PNorm(Verdict::Flow { energy, .. }) => Some(*energy),
            Outcome::Maxflow(ev) => Some(ev.value as f64),
            Outcome::EffRes(EffResVerdict::Below { estimate, .. }) => Some(*estimate),
            _ => None,
        }
    }

    pub fn flow(&self) -> Option<&[f64]> {
        match self {
            Outcome::PNorm(Verdict::Flow { flow, .. }) => Some(flow),
            Outcome::Maxflow(ev) => Some(&ev.flow),
            Outcome::EffRes(EffResVerdict::Below { flow, .. }) => Some(flow),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EventRecord {
    pub index: usize,
    pub outcome: Outcome,
    /// Cumulative counters after this event.
    pub mrc_queries: u64,
    pub mwu_iterations: u64,
    pub refinement_steps: u64,
    pub wall: Duration,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunReport {
    pub events: Vec<EventRecord>,
    /// Solver statistics over the whole run (all phases for maxflow).
    pub stats: RefineStats,
    /// Maxflow phases with positive value.
    pub phases: Option<u64>,
    pub wall: Duration,
}

/// One single-line metrics record.
#[derive(Clone, Debug, Serialize)]
pub struct MetricsRecord<'a> {
    pub event: usize,
    pub verdict: &'static str,
    pub objective: Option<f64>,
    pub mrc_queries: u64,
    pub mwu_iterations: u64,
    pub refinement_steps: u64,
    pub wall_ms: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flow: Option<&'a [f64]>,
}

impl<'a> MetricsRecord<'a> {
    pub fn new(rec: &'a EventRecord, with_flow: bool) -> Self {
        Self {
            event: rec.index,
            verdict: rec.outcome.label(),
            objective: rec.outcome.objective(),
            mrc_queries: rec.mrc_queries,
            mwu_iterations: rec.mwu_iterations,
            refinement_steps: rec.refinement_steps,
            wall_ms: rec.wall.as_secs_f64() * 1e3,
            flow: if with_flow { rec.outcome.flow() } else { None },
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plain data")
    }

    pub fn to_text(&self) -> String {
        let objective = self.objective.map_or("-".to_string(), |x| x.to_string());
        let mut s = format!(
            "event={} verdict={} objective={} mrc_queries={} mwu_iterations={} refinement_steps={} wall_ms={:.3}",
            self.event, self.verdict, objective, self.mrc_queries, self.mwu_iterations, self.refinement_steps, self.wall_ms
        );
        if let Some(f) = self.flow {
            let parts: Vec<String> = f.iter().map(|x| x.to_string()).collect();
            s.push_str(&format!(" flow={}", parts.join(",")));
        }
        s
    }
}

/// Streams events through the solver, calling `emit` after each one.
pub fn run_stream_with(
    stream: &UpdateStream,
    opts: &RunOptions,
    trace: Option<TraceSink>,
    mut emit: impl FnMut(&EventRecord),
) -> incflow::Result<RunReport> {
    let start = Instant::now();
    let h = stream.header;
    let config = opts.refine_config(h.m_hat);
    let mut events = Vec::with_capacity(stream.events.len() + 1);
    let mut push = |index: usize, outcome: Outcome, counters: (u64, u64, u64), t0: Instant| {
        let rec = EventRecord {
            index,
            outcome,
            mrc_queries: counters.0,
            mwu_iterations: counters.1,
            refinement_steps: counters.2,
            wall: t0.elapsed(),
        };
        emit(&rec);
        events.push(rec);
    };
    let (stats, phases) = match h.problem {
        Problem::PNorm { p, threshold, eps } => {
            let mut inst = PNormInstance::new(stream.demand_vector(), p, threshold, eps)?;
            for e in &stream.initial {
                inst.add_edge(e.u, e.v, e.attrs())?;
            }
            let mut solver = IncrementalPNorm::new(inst, config)?;
            if let Some(sink) = &trace {
                solver.set_observer(Box::new(sink.observer(0)));
            }
            let counters = |s: &IncrementalPNorm| (s.mrc_queries(), s.mwu_iterations(), s.stats().steps);
            let t0 = Instant::now();
            let v = solver.start()?;
            push(0, Outcome::PNorm(v), counters(&solver), t0);
            for (i, e) in stream.events.iter().enumerate() {
                let t0 = Instant::now();
                let v = solver.insert_edge(e.u, e.v, e.attrs())?;
                push(i + 1, Outcome::PNorm(v), counters(&solver), t0);
            }
            (solver.summary(), None)
        }
        Problem::Maxflow { s, t, eps } => {
            let mut mf = IncrementalMaxflow::new(h.n, s, t, eps, h.m_hat, config)?;
            if let Some(sink) = &trace {
                let sink = sink.clone();
                mf.set_observer_factory(ObserverFactory(Box::new(move |phase| Box::new(sink.observer(phase)))));
            }
            for e in &stream.initial {
                mf.add_initial_edge(e.u, e.v, e.cap.unwrap_or(1))?;
            }
            let counters = |m: &IncrementalMaxflow| (m.mrc_queries(), m.mwu_iterations(), m.refinement_steps());
            let t0 = Instant::now();
            let ev = mf.start()?;
            push(0, Outcome::Maxflow(ev), counters(&mf), t0);
            for (i, e) in stream.events.iter().enumerate() {
                let t0 = Instant::now();
                let ev = mf.insert_edge(e.u, e.v, e.cap.unwrap_or(1))?;
                push(i + 1, Outcome::Maxflow(ev), counters(&mf), t0);
            }
            (mf.stats(), Some(mf.phases()))
        }
        Problem::EffRes { s, t, theta, eps } => {
            let mut er = IncrementalEffRes::new(h.n, s, t, theta, eps, h.m_hat, config)?;
            if let Some(sink) = &trace {
                er.set_observer(Box::new(sink.observer(0)));
            }
            for e in &stream.initial {
                er.add_initial_edge(e.u, e.v, e.r.unwrap_or(1.0))?;
            }
            let counters = |r: &IncrementalEffRes| {
                let s = r.solver();
                (s.mrc_queries(), s.mwu_iterations(), s.stats().steps)
            };
            let t0 = Instant::now();
            let v = er.start()?;
            push(0, Outcome::EffRes(v), counters(&er), t0);
            for (i, e) in stream.events.iter().enumerate() {
                let t0 = Instant::now();
                let v = er.insert_edge(e.u, e.v, e.r.unwrap_or(1.0))?;
                push(i + 1, Outcome::EffRes(v), counters(&er), t0);
            }
            (er.solver().summary(), None)
        }
    };
    if let Some(sink) = &trace {
        sink.flush();
    }
    Ok(RunReport {
        events,
        stats,
        phases,
        wall: start.elapsed(),
    })
}

pub fn run_stream(stream: &UpdateStream, opts: &RunOptions) -> incflow::Result<RunReport> {
    run_stream_with(stream, opts, None, |_| {})
}
