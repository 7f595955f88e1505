//! Incremental (1 - eps)-approximate undirected maxflow.
//!
//! Each phase starts from an exact maxflow of value `nu` and watches, through
//! the thresholded p-norm solver, for a flow of value `nu` with congestion
//! below `e^{-eps/2}`. While none exists the phase flow is within `1 - eps` of
//! optimal; once one shows up the phase restarts.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use crate::graph::{IncrementalGraph, VertexId};
use crate::objective::{EdgeAttrs, PNormInstance};
use crate::refine::{IncrementalPNorm, Observer, RefineConfig, RefineStats, Verdict};
use crate::verify::exact_maxflow;
use crate::{Error, Result};

/// Derived constants for one run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MaxflowParams {
    pub eps: f64,
    pub m_hat: usize,
    /// `ceil(2 ln(2 m_hat) / eps)`, raised when needed to keep the (1 - eps) margin.
    pub p: u32,
    /// `m_hat e^{-eps p}`; also the additive error handed to the solver.
    pub threshold: f64,
    /// l2 padding `e^{-eps p / 2} / (2 sqrt(m_hat))`.
    pub delta: f64,
}

impl MaxflowParams {
    pub fn new(eps: f64, m_hat: usize) -> Result<Self> {
        if !(eps > 0.0 && eps <= 0.5) {
            return Err(Error::InvalidParameter(alloc::format!("eps must lie in (0, 1/2], got {eps}")));
        }
        if m_hat == 0 {
            return Err(Error::InvalidParameter("edge bound must be positive".into()));
        }
        let mh = m_hat as f64;
        // also large enough that a flow of congestion 1 - eps stays under F
        // despite the l2 padding: e^{-eps^2 p / 2} + 1/(4 m_hat) <= 1
        let margin = 2.0 * -libm::log(1.0 - 0.25 / mh) / (eps * eps);
        let p = libm::ceil(2.0 * libm::log(2.0 * mh) / eps).max(libm::ceil(margin)).max(2.0) as u32;
        let ep = eps * p as f64;
        Ok(Self {
            eps,
            m_hat,
            p,
            threshold: mh * libm::exp(-ep),
            delta: libm::exp(-ep / 2.0) / (2.0 * libm::sqrt(mh)),
        })
    }
}

/// `ceil(ln(total capacity) / (eps / 2)) + 1`.
pub fn phase_bound(total_capacity: u64, eps: f64) -> u64 {
    libm::ceil(libm::log(total_capacity.max(1) as f64) / (eps / 2.0)) as u64 + 1
}

/// What is published after an event.
#[derive(Clone, Debug, PartialEq)]
pub struct MaxflowEvent {
    pub value: u64,
    /// Signed per-edge flow, feasible for the capacities.
    pub flow: Vec<f64>,
    /// A new phase started at this event.
    pub restarted: bool,
}

#[derive(Debug)]
struct Phase {
    value: u64,
    flow: Vec<f64>,
    solver: Option<IncrementalPNorm>,
}

/// Builds an observer for the solver of each new phase.
pub struct ObserverFactory(pub Box<dyn FnMut(u64) -> Box<dyn Observer>>);

impl core::fmt::Debug for ObserverFactory {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str("ObserverFactory")
    }
}

#[derive(Debug)]
pub struct IncrementalMaxflow {
    params: MaxflowParams,
    config: RefineConfig,
    graph: IncrementalGraph,
    caps: Vec<u64>,
    s: VertexId,
    t: VertexId,
    phase: Option<Phase>,
    phases: u64,
    history: RefineStats,
    observers: Option<ObserverFactory>,
}

impl IncrementalMaxflow {
    /// `config` supplies backend, kappa, seed and invariant checking for every
    /// phase; its edge bound is replaced by `m_hat`.
    pub fn new(vertex_count: usize, s: VertexId, t: VertexId, eps: f64, m_hat: usize, config: RefineConfig) -> Result<Self> {
        let graph = IncrementalGraph::new(vertex_count);
        graph.check_vertex(s)?;
        graph.check_vertex(t)?;
        if s == t {
            return Err(Error::InvalidParameter("source and sink coincide".into()));
        }
        Ok(Self {
            params: MaxflowParams::new(eps, m_hat)?,
            config: RefineConfig { m_hat, ..config },
            graph,
            caps: Vec::new(),
            s,
            t,
            phase: None,
            phases: 0,
            history: RefineStats::default(),
            observers: None,
        })
    }

    /// `factory` is called with the phase number whenever a phase starts.
    pub fn set_observer_factory(&mut self, factory: ObserverFactory) {
        self.observers = Some(factory);
    }

    pub fn params(&self) -> &MaxflowParams {
        &self.params
    }

    pub fn graph(&self) -> &IncrementalGraph {
        &self.graph
    }

    pub fn capacities(&self) -> &[u64] {
        &self.caps
    }

    /// Phases started with a positive flow value.
    pub fn phases(&self) -> u64 {
        self.phases
    }

    /// Solver statistics over all phases so far.
    pub fn stats(&self) -> RefineStats {
        let mut out = self.history.clone();
        if let Some(s) = self.solver() {
            out.absorb(&s.summary());
        }
        out
    }

    pub fn mrc_queries(&self) -> u64 {
        self.history.mrc_queries + self.solver().map_or(0, |s| s.mrc_queries())
    }

    pub fn mwu_iterations(&self) -> u64 {
        self.history.audit.iterations + self.solver().map_or(0, |s| s.mwu_iterations())
    }

    pub fn refinement_steps(&self) -> u64 {
        self.history.steps + self.solver().map_or(0, |s| s.stats().steps)
    }

    /// The running phase's solver, if the phase has positive value.
    pub fn solver(&self) -> Option<&IncrementalPNorm> {
        self.phase.as_ref().and_then(|p| p.solver.as_ref())
    }

    /// Adds an edge of the initial graph; no event is published.
    pub fn add_initial_edge(&mut self, u: VertexId, v: VertexId, cap: u64) -> Result<()> {
        if self.phase.is_some() {
            return Err(Error::InvalidParameter("initial edges must precede start".into()));
        }
        self.push_edge(u, v, cap)
    }

    fn push_edge(&mut self, u: VertexId, v: VertexId, cap: u64) -> Result<()> {
        if cap == 0 {
            return Err(Error::InvalidParameter("capacities must be positive integers".into()));
        }
        if self.graph.edge_count() >= self.params.m_hat {
            return Err(Error::InvalidParameter(alloc::format!("more than {} edges", self.params.m_hat)));
        }
        self.graph.add_edge(u, v)?;
        self.caps.push(cap);
        Ok(())
    }

    fn attrs(&self, cap: u64) -> EdgeAttrs {
        let u = cap as f64;
        EdgeAttrs::new(0.0, self.params.delta / u, 1.0 / u)
    }

    fn start_phase(&mut self) -> Result<()> {
        if let Some(old) = self.phase.take().and_then(|p| p.solver) {
            self.history.absorb(&old.summary());
        }
        let exact = exact_maxflow(&self.graph, &self.caps, self.s, self.t)?;
        let flow: Vec<f64> = exact.flow.iter().map(|&x| x as f64).collect();
        if exact.value == 0 {
            self.phase = Some(Phase { value: 0, flow, solver: None });
            return Ok(());
        }
        self.phases += 1;
        let congestion = flow
            .iter()
            .zip(&self.caps)
            .map(|(f, &u)| f.abs() / u as f64)
            .fold(0.0, f64::max);
        let nu = exact.value as f64 / congestion;
        let mut demand = vec![0.0; self.graph.vertex_count()];
        demand[self.s] = -nu;
        demand[self.t] = nu;
        let mut inst = PNormInstance::new(demand, self.params.p, self.params.threshold, self.params.threshold)?;
        for (e, (u, v)) in self.graph.edges().enumerate() {
            inst.add_edge(u, v, self.attrs(self.caps[e]))?;
        }
        let config = RefineConfig {
            seed: crate::rng::split(self.config.seed, self.phases),
            ..self.config.clone()
        };
        let mut solver = IncrementalPNorm::new(inst, config)?;
        if let Some(factory) = &mut self.observers {
            solver.set_observer((factory.0)(self.phases));
        }
        // tree routings can overload one edge by a factor of nu, which at this
        // p leaves the oracle's Newton systems hopelessly ill-conditioned
        let scaled: Vec<f64> = flow.iter().map(|x| x / congestion).collect();
        solver.warm_start(&scaled)?;
        // any flow of value nu has congestion at least 1, so energy above 1 > 2F
        if solver.start()?.is_flow() {
            return Err(Error::InvariantViolation("phase start already below the threshold".into()));
        }
        self.phase = Some(Phase {
            value: exact.value,
            flow,
            solver: Some(solver),
        });
        Ok(())
    }

    fn publish(&self, restarted: bool) -> MaxflowEvent {
        let phase = self.phase.as_ref().expect("started");
        let mut flow = phase.flow.clone();
        flow.resize(self.graph.edge_count(), 0.0);
        MaxflowEvent {
            value: phase.value,
            flow,
            restarted,
        }
    }

    pub fn start(&mut self) -> Result<MaxflowEvent> {
        if self.phase.is_some() {
            return Err(Error::InvalidParameter("already started".into()));
        }
        self.start_phase()?;
        Ok(self.publish(true))
    }

    pub fn insert_edge(&mut self, u: VertexId, v: VertexId, cap: u64) -> Result<MaxflowEvent> {
        if self.phase.is_none() {
            return Err(Error::InvalidParameter("insert before start".into()));
        }
        self.push_edge(u, v, cap)?;
        let attrs = self.attrs(cap);
        let phase = self.phase.as_mut().expect("started");
        let restart = match &mut phase.solver {
            Some(solver) => solver.insert_edge(u, v, attrs)? != Verdict::CertifiedAbove,
            // no s-t path yet: restart once one appears
            None => crate::graph::demand_routable(&self.graph, &unit(self.graph.vertex_count(), self.s, self.t)),
        };
        if restart {
            self.start_phase()?;
        }
        Ok(self.publish(restart))
    }
}

fn unit(n: usize, s: usize, t: usize) -> Vec<f64> {
    let mut d = vec![0.0; n];
    d[s] = -1.0;
    d[t] = 1.0;
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants() {
        let p = MaxflowParams::new(0.5, 2).unwrap();
        // 2 ln 4 / 0.5 = 5.545
        assert_eq!(p.p, 6);
        assert!((p.threshold - 2.0 * libm::exp(-3.0)).abs() < 1e-15);
        // the (1 - eps) margin: e^{-eps^2 p / 2} + 1/(4 m_hat) <= 1
        for eps in [0.5, 0.25, 0.1] {
            for m in [1, 2, 10, 40, 5000] {
                let p = MaxflowParams::new(eps, m).unwrap();
                let pf = p.p as f64;
                assert!(libm::exp(-eps * eps * pf / 2.0) + 0.25 / m as f64 <= 1.0);
                assert!(libm::pow(2.0 * m as f64, 1.0 / pf) <= libm::exp(eps / 2.0) * (1.0 + 1e-12));
            }
        }
        assert!(MaxflowParams::new(0.6, 3).is_err());
        assert_eq!(phase_bound(10, 0.5), 11);
    }

    #[test]
    fn parallel_edge_trips_a_restart() {
        let mut mf = IncrementalMaxflow::new(2, 0, 1, 0.5, 2, RefineConfig::new(2)).unwrap();
        mf.add_initial_edge(0, 1, 5).unwrap();
        let first = mf.start().unwrap();
        assert_eq!(first.value, 5);
        assert_eq!(first.flow, vec![5.0]);
        let second = mf.insert_edge(0, 1, 5).unwrap();
        assert!(second.restarted);
        assert_eq!(second.value, 10);
        assert_eq!(mf.phases(), 2);
    }

    #[test]
    fn edges_away_from_the_cut_never_restart() {
        // s=0, t=1 joined by one edge; the rest hangs off t
        let mut mf = IncrementalMaxflow::new(4, 0, 1, 0.25, 4, RefineConfig::new(4)).unwrap();
        mf.add_initial_edge(0, 1, 3).unwrap();
        assert_eq!(mf.start().unwrap().value, 3);
        for (u, v) in [(1, 2), (2, 3), (3, 1)] {
            let ev = mf.insert_edge(u, v, 7).unwrap();
            assert_eq!(ev.value, 3);
            assert!(!ev.restarted);
        }
        assert_eq!(mf.phases(), 1);
    }

    #[test]
    fn first_connecting_edge_publishes_its_capacity() {
        let mut mf = IncrementalMaxflow::new(3, 0, 2, 0.5, 3, RefineConfig::new(3)).unwrap();
        mf.add_initial_edge(0, 1, 4).unwrap();
        let ev = mf.start().unwrap();
        assert_eq!(ev.value, 0);
        assert_eq!(mf.phases(), 0);
        let ev = mf.insert_edge(1, 2, 2).unwrap();
        assert_eq!(ev.value, 2);
        assert!(ev.restarted);
        assert_eq!(ev.flow, vec![2.0, 2.0]);
        assert_eq!(mf.phases(), 1);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(IncrementalMaxflow::new(2, 0, 0, 0.5, 2, RefineConfig::new(2)).is_err());
        let mut mf = IncrementalMaxflow::new(2, 0, 1, 0.5, 1, RefineConfig::new(1)).unwrap();
        assert!(mf.add_initial_edge(0, 1, 0).is_err());
        mf.add_initial_edge(0, 1, 1).unwrap();
        mf.start().unwrap();
        assert!(mf.insert_edge(0, 1, 1).is_err());
    }
}
