//! The monotone min-ratio cycle oracle: the instance only grows by edge
//! insertions and length increases, and each query must find a cycle of
//! ratio at most `-alpha / kappa` whenever one of ratio at most `-alpha` exists.

use alloc::format;
use alloc::vec::Vec;

use super::hsfc::UpdateLog;
use super::parametric::exact_min_ratio_cycle;
use super::spfa::Spfa;
use super::trees::TreeCollection;
use super::{CycleSolution, MrcInstance};
use crate::graph::{EdgeId, VertexId};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Backend {
    /// Warm-started negative-cycle detection at parameter `-alpha`; `kappa = 1`.
    #[default]
    Exact,
    /// Best fundamental cycle over a collection of random spanning forests.
    Trees,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MrcUpdate {
    InsertEdge {
        edge: EdgeId,
        tail: VertexId,
        head: VertexId,
        gradient: f64,
        length: f64,
    },
    IncreaseLength {
        edge: EdgeId,
        length: f64,
    },
}

#[derive(Clone, Debug)]
enum Engine {
    Exact {
        spfa: Spfa,
        out: Vec<Vec<u32>>,
        // last cycle returned; reused while it still beats -alpha
        cached: Option<Vec<usize>>,
    },
    Trees(TreeCollection),
}

#[derive(Clone, Debug)]
pub struct MonotoneMrcState {
    instance: MrcInstance,
    alpha: f64,
    kappa: f64,
    backend: Backend,
    engine: Engine,
    validate: bool,
    queries: u64,
    log: Option<UpdateLog>,
}

impl MonotoneMrcState {
    pub fn new(vertex_count: usize, alpha: f64, kappa: f64, backend: Backend, seed: u64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidParameter(format!("target ratio must be positive, got {alpha}")));
        }
        if !(kappa >= 1.0) {
            return Err(Error::InvalidParameter(format!("kappa must be at least 1, got {kappa}")));
        }
        if backend == Backend::Exact && kappa != 1.0 {
            return Err(Error::InvalidParameter("the exact backend has kappa = 1".into()));
        }
        let instance = MrcInstance::new(vertex_count);
        let engine = match backend {
            Backend::Exact => Engine::Exact {
                spfa: Spfa::new(vertex_count),
                out: alloc::vec![Vec::new(); vertex_count],
                cached: None,
            },
            Backend::Trees => Engine::Trees(TreeCollection::new(&instance, crate::rng::stream(seed, 0x7ee5))),
        };
        Ok(Self {
            instance,
            alpha,
            kappa,
            backend,
            engine,
            validate: false,
            queries: 0,
            log: None,
        })
    }

    /// With validation on, a tree-backend miss is cross-checked against the
    /// exact solver and reported as [`Error::KappaViolation`].
    pub fn with_validation(mut self, on: bool) -> Self {
        self.validate = on;
        self
    }

    /// Records every update as a batch for the stable-flow witness checker.
    pub fn with_log(mut self) -> Self {
        self.log = Some(UpdateLog::new(self.instance.vertex_count()));
        self
    }

    pub fn instance(&self) -> &MrcInstance {
        &self.instance
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    pub fn queries(&self) -> u64 {
        self.queries
    }

    pub fn log(&self) -> Option<&UpdateLog> {
        self.log.as_ref()
    }

    pub fn tree_count(&self) -> usize {
        match &self.engine {
            Engine::Trees(c) => c.trees(),
            Engine::Exact { .. } => 0,
        }
    }

    pub fn trees_span(&self) -> bool {
        match &self.engine {
            Engine::Trees(c) => (0..c.trees()).all(|i| c.is_spanning(&self.instance, i)),
            Engine::Exact { .. } => true,
        }
    }

    /// Counts queries answered without running the oracle because its state
    /// had not changed since the last one.
    pub fn count_repeats(&mut self, n: u64) {
        self.queries += n;
    }

    pub fn update(&mut self, update: MrcUpdate) -> Result<()> {
        match update {
            MrcUpdate::InsertEdge {
                edge,
                tail,
                head,
                gradient,
                length,
            } => {
                if edge != self.instance.edge_count() {
                    return Err(Error::EdgeOrder {
                        expected: self.instance.edge_count(),
                        got: edge,
                    });
                }
                self.instance.add_edge(tail, head, gradient, length)?;
                match &mut self.engine {
                    Engine::Exact { spfa, out, .. } => {
                        out[tail].push(2 * edge as u32);
                        out[head].push(2 * edge as u32 + 1);
                        spfa.mark_dirty(tail);
                        spfa.mark_dirty(head);
                    }
                    Engine::Trees(c) => c.on_insert(&self.instance, edge),
                }
            }
            MrcUpdate::IncreaseLength { edge, length } => {
                self.instance.increase_length(edge, length)?;
                // heavier arcs never invalidate feasible potentials
                if let Engine::Trees(c) = &mut self.engine {
                    c.on_increase(&self.instance, edge);
                }
            }
        }
        if let Some(log) = &mut self.log {
            log.record(&update);
        }
        Ok(())
    }

    /// A cycle of ratio at most `-alpha / kappa`, or `None`.
    pub fn query(&mut self) -> Result<Option<CycleSolution>> {
        self.queries += 1;
        let threshold = -self.alpha / self.kappa;
        match &mut self.engine {
            Engine::Exact { spfa, out, cached } => {
                let inst = &self.instance;
                let alpha = self.alpha;
                let lengths = inst.lengths();
                let weight = |a: usize| {
                    let (_, head, g) = inst.arc(a);
                    (head, g + alpha * lengths[a / 2])
                };
                if let Some(arcs) = cached {
                    if arcs.iter().map(|&a| weight(a).1).sum::<f64>() < 0.0 {
                        return Ok(inst.solution_from_arcs(arcs));
                    }
                }
                let arcs = spfa.run(|v| &out[v], weight);
                debug_assert!(arcs.is_some() || spfa.is_clean());
                let sol = arcs.as_ref().and_then(|arcs| inst.solution_from_arcs(arcs));
                *cached = arcs;
                Ok(sol)
            }
            Engine::Trees(c) => {
                let best = c.best(&self.instance);
                if let Some(sol) = best.filter(|s| s.ratio <= threshold) {
                    return Ok(Some(sol));
                }
                if self.validate {
                    if let Some(exact) = exact_min_ratio_cycle(&self.instance, 1e-9 * self.alpha)? {
                        if exact.ratio <= -self.alpha {
                            let tree_ratio = c.best(&self.instance).map_or(0.0, |s| s.ratio);
                            return Err(Error::KappaViolation {
                                tree_ratio,
                                exact_ratio: exact.ratio,
                            });
                        }
                    }
                }
                Ok(None)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::random_instance;
    use super::*;
    use rand::{Rng, SeedableRng};

    fn triangle_state(alpha: f64, backend: Backend) -> MonotoneMrcState {
        let mut s = MonotoneMrcState::new(3, alpha, 1.0, backend, 1).unwrap();
        let edges = [(0, 1, -3.0), (1, 2, 1.0), (2, 0, 1.0)];
        for (e, &(u, v, g)) in edges.iter().enumerate() {
            s.update(MrcUpdate::InsertEdge {
                edge: e,
                tail: u,
                head: v,
                gradient: g,
                length: 1.0,
            })
            .unwrap();
        }
        s
    }

    #[test]
    fn triangle_query_and_length_increase() {
        let mut s = triangle_state(0.3, Backend::Exact);
        assert_eq!(s.kappa(), 1.0);
        let sol = s.query().unwrap().unwrap();
        assert!((sol.ratio + 1.0 / 3.0).abs() < 1e-12);
        sol.check(s.instance()).unwrap();
        s.update(MrcUpdate::IncreaseLength { edge: 0, length: 10.0 }).unwrap();
        let exact = exact_min_ratio_cycle(s.instance(), 1e-12).unwrap().unwrap();
        assert!((exact.ratio + 1.0 / 12.0).abs() < 1e-9);
        assert_eq!(s.query().unwrap(), None);
    }

    #[test]
    fn length_decrease_is_rejected() {
        let mut s = triangle_state(0.3, Backend::Exact);
        assert!(matches!(
            s.update(MrcUpdate::IncreaseLength { edge: 0, length: 0.5 }),
            Err(Error::Monotonicity { .. })
        ));
    }

    #[test]
    fn construction_errors_and_empty_graph() {
        assert!(MonotoneMrcState::new(3, 0.0, 1.0, Backend::Exact, 0).is_err());
        assert!(MonotoneMrcState::new(3, 0.1, 0.5, Backend::Trees, 0).is_err());
        assert!(MonotoneMrcState::new(3, 0.1, 2.0, Backend::Exact, 0).is_err());
        for backend in [Backend::Exact, Backend::Trees] {
            let mut s = MonotoneMrcState::new(4, 0.1, 1.0, backend, 0).unwrap();
            assert_eq!(s.query().unwrap(), None);
        }
        let mut s = MonotoneMrcState::new(2, 0.1, 1.0, Backend::Exact, 0).unwrap();
        s.update(MrcUpdate::InsertEdge { edge: 0, tail: 0, head: 1, gradient: 1.0, length: 1.0 })
            .unwrap();
        assert_eq!(s.instance().edge_count(), 1);
        assert!(matches!(
            s.update(MrcUpdate::InsertEdge { edge: 5, tail: 0, head: 1, gradient: 1.0, length: 1.0 }),
            Err(Error::EdgeOrder { .. })
        ));
    }

    /// Replays random monotone update sequences against the static solver.
    #[test]
    fn warm_exact_backend_matches_static_solver() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(41);
        for _ in 0..60 {
            let n = rng.random_range(2..9);
            let alpha = rng.random_range(0.05..0.8);
            let mut s = MonotoneMrcState::new(n, alpha, 1.0, Backend::Exact, 0).unwrap();
            for _ in 0..40 {
                let m = s.instance().edge_count();
                if m == 0 || rng.random_bool(0.3) {
                    let u = rng.random_range(0..n);
                    let v = rng.random_range(0..n);
                    if u == v {
                        continue;
                    }
                    let upd = MrcUpdate::InsertEdge {
                        edge: m,
                        tail: u,
                        head: v,
                        gradient: rng.random_range(-2.0..2.0),
                        length: rng.random_range(0.1..2.0),
                    };
                    s.update(upd).unwrap();
                } else {
                    let e = rng.random_range(0..m);
                    let l = s.instance().lengths()[e] * rng.random_range(1.0..2.0);
                    s.update(MrcUpdate::IncreaseLength { edge: e, length: l }).unwrap();
                }
                let truth = exact_min_ratio_cycle(s.instance(), 1e-11).unwrap();
                let got = s.query().unwrap();
                match (got, truth) {
                    (Some(sol), _) => {
                        sol.check(s.instance()).unwrap();
                        assert!(sol.ratio <= -alpha * (1.0 - 1e-9), "{} vs {}", sol.ratio, -alpha);
                    }
                    (None, Some(t)) => assert!(t.ratio > -alpha - 1e-9, "missed {}", t.ratio),
                    (None, None) => {}
                }
            }
        }
    }

    #[test]
    fn tree_backend_validation_reports_misses() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(43);
        let mut misses = 0;
        let mut hits = 0;
        for seed in 0..40 {
            let inst = random_instance(&mut rng, 8, 16);
            let mut s = MonotoneMrcState::new(8, 0.2, 1.0, Backend::Trees, seed)
                .unwrap()
                .with_validation(true);
            for (e, (u, v)) in inst.graph().edges().enumerate() {
                s.update(MrcUpdate::InsertEdge {
                    edge: e,
                    tail: u,
                    head: v,
                    gradient: inst.gradients()[e],
                    length: inst.lengths()[e],
                })
                .unwrap();
            }
            assert!(s.trees_span());
            match s.query() {
                Ok(Some(sol)) => {
                    sol.check(s.instance()).unwrap();
                    assert!(sol.ratio <= -0.2);
                    assert!(sol.tree_path.is_some());
                    hits += 1;
                }
                Ok(None) => {
                    let t = exact_min_ratio_cycle(s.instance(), 1e-12).unwrap();
                    assert!(t.is_none_or(|t| t.ratio > -0.2));
                }
                Err(Error::KappaViolation { tree_ratio, exact_ratio }) => {
                    assert!(tree_ratio > -0.2 && exact_ratio <= -0.2);
                    misses += 1;
                }
                Err(e) => panic!("{e}"),
            }
        }
        assert!(hits > 0);
        let _ = misses;
    }
}
