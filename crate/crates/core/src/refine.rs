//! Iterative refinement for incremental thresholded p-norm flow.
//!
//! Each refinement step linearizes the energy around the current flow into a
//! residual problem, scales it by the residual threshold `R = (E(f) - F) / lambda`
//! and hands it to the MWU solver. A stalled solver certifies `OPT > F` for the
//! current graph; a finished one yields a circulation that shrinks `E(f) - F`
//! by a constant factor.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};

use crate::graph::{EdgeId, VertexId};
use crate::mrc::Backend;
use crate::mwu::{MwuAudit, MwuEdge, MwuParams, MwuState, MwuStep};
use crate::numeric::{ipow, pow_pos, sqrt, weighted_p_norm};
use crate::objective::{energy_columns, EdgeAttrs, PNormInstance};
use crate::verify::{static_pnorm_opt_from, tree_routing, OracleSettings};
use crate::{Error, Result};

/// The local model `R_f(x) = <g, x> + ||R x||_2^2 + ||W x||_p^p` of
/// `E(f + x) - E(f)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidualProblem {
    pub gradient: Vec<f64>,
    pub resistance: Vec<f64>,
    pub weight: Vec<f64>,
    pub p: u32,
}

impl ResidualProblem {
    /// Residual terms of one edge carrying flow `f`. For `p = 2` the factor
    /// `|f|^{p-2}` is 1 even at `f = 0`.
    pub fn edge_terms(attrs: EdgeAttrs, p: u32, f: f64) -> (f64, f64, f64) {
        let EdgeAttrs {
            gradient: g,
            resistance: r,
            weight: w,
        } = attrs;
        // w^p |f|^{p-2} = (w |f|)^{p-2} w^2
        let curv = ipow(w * f.abs(), p - 2) * w * w;
        let pf = p as f64;
        (
            g + 2.0 * r * r * f + pf * curv * f,
            sqrt(r * r + 2.0 * pf * pf * curv),
            pf * w,
        )
    }

    pub fn build(instance: &PNormInstance, f: &[f64]) -> Result<Self> {
        if f.len() != instance.edge_count() {
            return Err(Error::DimensionMismatch {
                expected: instance.edge_count(),
                got: f.len(),
            });
        }
        let p = instance.p();
        let mut out = Self {
            gradient: Vec::with_capacity(f.len()),
            resistance: Vec::with_capacity(f.len()),
            weight: Vec::with_capacity(f.len()),
            p,
        };
        for (e, &x) in f.iter().enumerate() {
            let (g, r, w) = Self::edge_terms(instance.attrs(e), p, x);
            out.gradient.push(g);
            out.resistance.push(r);
            out.weight.push(w);
        }
        Ok(out)
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        energy_columns(&self.gradient, &self.resistance, &self.weight, self.p, x)
    }

    pub fn scaled_weights(&self, big_r: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        let (rs, ws) = scale_factors(big_r, self.p)?;
        Ok((
            self.resistance.iter().map(|r| rs * r).collect(),
            self.weight.iter().map(|w| ws * w).collect(),
        ))
    }
}

/// `(2 sqrt(R), R^{(p-1)/p})`, the factors turning residual weights into MWU weights.
pub fn scale_factors(big_r: f64, p: u32) -> Result<(f64, f64)> {
    if !(big_r > 0.0) || !big_r.is_finite() {
        return Err(Error::InvalidParameter(format!("residual threshold must be positive, got {big_r}")));
    }
    Ok((2.0 * sqrt(big_r), pow_pos(big_r, (p - 1) as f64 / p as f64)))
}

/// `E(f + x) - E(f)` summed edge by edge, plus the magnitude of the summed terms.
fn energy_change(instance: &PNormInstance, f: &[f64], x: &[f64]) -> (f64, f64) {
    let p = instance.p();
    let (mut diff, mut scale) = (0.0, 0.0);
    for e in 0..f.len() {
        if x[e] == 0.0 {
            continue;
        }
        let a = instance.attrs(e);
        let (f0, f1) = (f[e], f[e] + x[e]);
        let lin = a.gradient * x[e];
        let quad = a.resistance * a.resistance * (f1 * f1 - f0 * f0);
        let hi = ipow((a.weight * f1).abs(), p);
        let lo = ipow((a.weight * f0).abs(), p);
        diff += lin + quad + (hi - lo);
        scale += lin.abs() + a.resistance * a.resistance * (f1 * f1 + f0 * f0) + hi + lo;
    }
    (diff, scale)
}

/// Outcome of checking both refinement inequalities on one `(f, x)` pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SandwichCheck {
    pub upper: bool,
    pub lower: bool,
}

/// `E(f+x) - E(f) <= R_f(x)` and `E(f+lambda x) - E(f) >= lambda R_f(x)`,
/// each with relative slack `1e-9` plus the rounding floor of the sums.
pub fn sandwich(instance: &PNormInstance, f: &[f64], x: &[f64], lambda: f64) -> Result<SandwichCheck> {
    let res = ResidualProblem::build(instance, f)?;
    let model = res.value(x);
    let (up, up_scale) = energy_change(instance, f, x);
    let big: Vec<f64> = x.iter().map(|v| lambda * v).collect();
    let (down, down_scale) = energy_change(instance, f, &big);
    if !(up_scale.is_finite() && down_scale.is_finite() && model.is_finite()) {
        return Err(Error::NonFinite("energy"));
    }
    let floor = 1e-13;
    Ok(SandwichCheck {
        upper: up <= model + 1e-9 * model.abs() + floor * up_scale,
        lower: down >= lambda * model - 1e-9 * (lambda * model).abs() - floor * down_scale,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Calibration {
    pub lambda: f64,
    pub escalations: u32,
    pub checked: usize,
}

/// One random `(instance, f, x)` triple. Every eighth triple is adversarial:
/// `x` cancels `f` exactly, dwarfs it, or `f` is zero.
pub fn random_triple(rng: &mut impl Rng, p: u32, index: usize) -> (PNormInstance, Vec<f64>, Vec<f64>) {
    let m = rng.random_range(1..5);
    let mut inst = PNormInstance::new(vec![0.0; 2], p, 0.0, 1.0).expect("valid parameters");
    for _ in 0..m {
        let attrs = EdgeAttrs::new(
            rng.random_range(-2.0..2.0),
            pow_pos(10.0, rng.random_range(-2.0..1.0)),
            pow_pos(10.0, rng.random_range(-1.0..0.5)),
        );
        inst.add_edge(0, 1, attrs).expect("valid edge");
    }
    let mut f: Vec<f64> = (0..m).map(|_| rng.random_range(-3.0..3.0)).collect();
    let mut x: Vec<f64> = (0..m).map(|_| rng.random_range(-3.0..3.0) * pow_pos(10.0, rng.random_range(-3.0..0.0))).collect();
    match index % 8 {
        0 => x = f.iter().map(|v| -v).collect(),
        1 => x.iter_mut().for_each(|v| *v *= 1e3),
        2 => f.iter_mut().for_each(|v| *v = 0.0),
        _ => {}
    }
    // keep (w |f + lambda x|)^p representable for lambda up to 64p
    let limit = pow_pos(10.0, 200.0 / p as f64);
    let reach = (0..m)
        .map(|e| inst.attrs(e).weight * (f[e].abs() + 64.0 * p as f64 * x[e].abs()))
        .fold(0.0, f64::max);
    if reach > limit {
        let s = limit / reach;
        f.iter_mut().chain(x.iter_mut()).for_each(|v| *v *= s);
    }
    (inst, f, x)
}

/// Validates `lambda` on sampled triples, doubling it after any violation.
pub fn calibrate_lambda(p: u32, start: f64, seed: u64, samples: usize) -> Result<Calibration> {
    let mut lambda = start;
    let mut escalations = 0;
    'outer: loop {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(crate::rng::split(seed, p as u64));
        for i in 0..samples {
            let (inst, f, x) = random_triple(&mut rng, p, i);
            let check = match sandwich(&inst, &f, &x, lambda) {
                Ok(c) => c,
                // past the representable range after many escalations
                Err(Error::NonFinite(_)) => continue,
                Err(e) => return Err(e),
            };
            if !check.upper {
                // the upper inequality does not depend on lambda
                return Err(Error::InvariantViolation(format!("residual model below the energy change at p={p}")));
            }
            if !check.lower {
                escalations += 1;
                if escalations > 30 {
                    return Err(Error::NoConvergence("lambda escalation".into()));
                }
                lambda *= 2.0;
                continue 'outer;
            }
        }
        return Ok(Calibration {
            lambda,
            escalations,
            checked: samples,
        });
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum StepRule {
    /// `f += (R / 2K^2) c`.
    Fixed,
    /// The better of the fixed step and the minimizer of `E(f + eta c)` over `eta >= 0`.
    #[default]
    LineSearch,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RefineConfig {
    /// Edge bound for the whole stream; fixes the MWU constants.
    pub m_hat: usize,
    pub kappa: f64,
    pub backend: Backend,
    pub seed: u64,
    /// `None` picks `16p` and validates it on sampled triples.
    pub lambda: Option<f64>,
    pub calibration_samples: usize,
    pub step_rule: StepRule,
    pub assert_invariants: bool,
    pub oracle: OracleSettings,
}

impl RefineConfig {
    pub fn new(m_hat: usize) -> Self {
        Self {
            m_hat,
            kappa: 1.0,
            backend: Backend::Exact,
            seed: 0,
            lambda: None,
            calibration_samples: 64,
            step_rule: StepRule::LineSearch,
            assert_invariants: false,
            oracle: OracleSettings::default(),
        }
    }
}

/// The adversary-visible answer after initialization and after each insertion.
#[derive(Clone, Debug, PartialEq)]
pub enum Verdict {
    /// Every flow routing the demand has energy above the threshold.
    CertifiedAbove,
    /// A feasible flow with energy at most `F + eps`.
    Flow { flow: Vec<f64>, energy: f64 },
}

impl Verdict {
    pub fn is_flow(&self) -> bool {
        matches!(self, Verdict::Flow { .. })
    }
}

/// Internal state hooks; everything passed here is hidden from the verdict stream.
pub trait Observer: core::fmt::Debug {
    /// `iteration` is the count after a run of `repeats` identical iterations.
    fn mwu_step(&mut self, _iteration: u64, _repeats: u64, _phi: f64, _psi: f64, _ratio: f64) {}
    fn refinement_step(&mut self, _step: u64, _energy: f64, _eta: f64) {}
}

/// Measurements of one completed MWU run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MwuRunRecord {
    pub k: f64,
    pub q: u32,
    pub phi_initial: f64,
    pub psi_initial: f64,
    pub phi_expected: f64,
    pub psi_expected: f64,
    pub phi_final: f64,
    pub psi_final: f64,
    /// `<g, c>`, `||R' c||_2` and `||W' c||_p` of the returned circulation.
    pub gradient: f64,
    pub r_norm: f64,
    pub w_norm: f64,
}

/// Measurements of one refinement step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepRecord {
    pub energy_before: f64,
    pub energy_after: f64,
    /// Right-hand side of the contraction inequality.
    pub contraction_bound: f64,
    pub eta: f64,
    pub eta_fixed: f64,
    /// `R_f(eta_fixed c)` against its ceiling `-R / (6K^2)`.
    pub residual_value: f64,
    pub residual_ceiling: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RefineStats {
    pub steps: u64,
    pub budget: Option<u64>,
    pub certified: u64,
    pub flows: u64,
    pub contraction_violations: u64,
    pub residual_value_violations: u64,
    pub mwu_runs: Vec<MwuRunRecord>,
    pub step_records: Vec<StepRecord>,
    pub audit: MwuAudit,
    pub mrc_queries: u64,
}

impl RefineStats {
    /// Adds the counters and records of another run.
    pub fn absorb(&mut self, other: &RefineStats) {
        self.steps += other.steps;
        self.budget = match (self.budget, other.budget) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        };
        self.certified += other.certified;
        self.flows += other.flows;
        self.contraction_violations += other.contraction_violations;
        self.residual_value_violations += other.residual_value_violations;
        self.mwu_runs.extend_from_slice(&other.mwu_runs);
        self.step_records.extend_from_slice(&other.step_records);
        self.audit.merge(&other.audit);
        self.mrc_queries += other.mrc_queries;
    }
}

#[derive(Debug)]
struct ActiveMwu {
    mwu: MwuState,
    residual: ResidualProblem,
    big_r: f64,
    r_scale: f64,
    w_scale: f64,
}

#[derive(Debug)]
pub struct IncrementalPNorm {
    instance: PNormInstance,
    config: RefineConfig,
    lambda: f64,
    calibration: Option<Calibration>,
    k_ref: f64,
    flow: Option<Vec<f64>>,
    energy: f64,
    done: bool,
    active: Option<ActiveMwu>,
    stats: RefineStats,
    observer: Option<Box<dyn Observer>>,
}

impl IncrementalPNorm {
    pub fn new(instance: PNormInstance, config: RefineConfig) -> Result<Self> {
        if instance.edge_count() > config.m_hat {
            return Err(Error::InvalidParameter(format!(
                "{} initial edges exceed the bound {}",
                instance.edge_count(),
                config.m_hat
            )));
        }
        let params = MwuParams {
            kappa: config.kappa,
            ..MwuParams::new(instance.p(), config.m_hat)
        };
        params.validate()?;
        let p = instance.p();
        let (lambda, calibration) = match config.lambda {
            Some(l) if l > 0.0 => (l, None),
            Some(l) => return Err(Error::InvalidParameter(format!("lambda must be positive, got {l}"))),
            None => {
                let c = calibrate_lambda(p, 16.0 * p as f64, config.seed, config.calibration_samples)?;
                (c.lambda, Some(c))
            }
        };
        Ok(Self {
            k_ref: 2.0 * params.k(),
            instance,
            config,
            lambda,
            calibration,
            flow: None,
            energy: f64::INFINITY,
            done: false,
            active: None,
            stats: RefineStats::default(),
            observer: None,
        })
    }

    pub fn set_observer(&mut self, observer: Box<dyn Observer>) {
        self.observer = Some(observer);
    }

    pub fn instance(&self) -> &PNormInstance {
        &self.instance
    }

    pub fn config(&self) -> &RefineConfig {
        &self.config
    }

    /// Extends the initial graph. Only valid before [`start`](Self::start).
    pub fn add_initial_edge(&mut self, u: VertexId, v: VertexId, attrs: EdgeAttrs) -> Result<EdgeId> {
        if self.flow.is_some() || self.stats.certified > 0 {
            return Err(Error::InvalidParameter("initial edges must precede start".into()));
        }
        if self.instance.edge_count() >= self.config.m_hat {
            return Err(Error::InvalidParameter(format!("more than {} edges", self.config.m_hat)));
        }
        self.instance.add_edge(u, v, attrs)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn calibration(&self) -> Option<&Calibration> {
        self.calibration.as_ref()
    }

    /// The `K` of the refinement analysis: twice the MWU's `K`, since the
    /// MWU only guarantees norms up to `2K`.
    pub fn k(&self) -> f64 {
        self.k_ref
    }

    pub fn flow(&self) -> Option<&[f64]> {
        self.flow.as_deref()
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn stats(&self) -> &RefineStats {
        &self.stats
    }

    /// Statistics including the audit and queries of the running MWU.
    pub fn summary(&self) -> RefineStats {
        let mut out = self.stats.clone();
        out.audit = self.audit();
        out.mrc_queries = self.mrc_queries();
        out
    }

    /// MRC queries so far, including those of the running MWU.
    pub fn mrc_queries(&self) -> u64 {
        self.stats.mrc_queries + self.active.as_ref().map_or(0, |a| a.mwu.mrc_queries())
    }

    /// MWU iterations so far, including those of the running MWU.
    pub fn mwu_iterations(&self) -> u64 {
        self.stats.audit.iterations + self.active.as_ref().map_or(0, |a| a.mwu.audit().iterations)
    }

    /// Audit counters over all MWU runs, including the running one.
    pub fn audit(&self) -> MwuAudit {
        let mut a = self.stats.audit;
        if let Some(active) = &self.active {
            a.merge(active.mwu.audit());
        }
        a
    }

    /// The verdict for the initial graph.
    pub fn start(&mut self) -> Result<Verdict> {
        self.drive()
    }

    pub fn insert_edge(&mut self, u: VertexId, v: VertexId, attrs: EdgeAttrs) -> Result<Verdict> {
        if self.instance.edge_count() >= self.config.m_hat {
            return Err(Error::InvalidParameter(format!("more than {} edges", self.config.m_hat)));
        }
        let e = self.instance.add_edge(u, v, attrs)?;
        if let Some(f) = &mut self.flow {
            f.push(0.0);
        }
        if let Some(active) = &mut self.active {
            let (g, r, w) = ResidualProblem::edge_terms(attrs, self.instance.p(), 0.0);
            active.residual.gradient.push(g);
            active.residual.resistance.push(r);
            active.residual.weight.push(w);
            active.mwu.insert_edge(MwuEdge {
                tail: u,
                head: v,
                gradient: g,
                resistance: active.r_scale * r,
                weight: active.w_scale * w,
            })?;
        }
        debug_assert_eq!(e + 1, self.instance.edge_count());
        self.drive()
    }

    fn initialize(&mut self) -> Result<()> {
        let start = tree_routing(self.instance.graph(), self.instance.demand())?;
        let report = static_pnorm_opt_from(&self.instance, &start, self.config.oracle)?;
        self.set_initial_flow(report.flow)
    }

    /// Initializes at the static optimum, running the oracle from `start`
    /// rather than from a tree routing.
    pub fn warm_start(&mut self, start: &[f64]) -> Result<()> {
        let report = static_pnorm_opt_from(&self.instance, start, self.config.oracle)?;
        self.set_initial_flow(report.flow)
    }

    /// Starts from a given feasible flow instead of the static optimum.
    pub fn set_initial_flow(&mut self, flow: Vec<f64>) -> Result<()> {
        if !self.instance.is_feasible(&flow) {
            return Err(Error::InvalidParameter("initial flow does not route the demand".into()));
        }
        self.energy = self.instance.energy(&flow)?;
        self.flow = Some(flow);
        self.active = None;
        let gap = self.energy - self.instance.threshold();
        let eps = self.instance.eps();
        let k2 = self.k_ref * self.k_ref;
        self.stats.budget = Some(if gap > eps {
            libm::ceil(6.0 * k2 * self.lambda * libm::log(gap / eps)) as u64 + 1
        } else {
            1
        });
        Ok(())
    }

    fn drive(&mut self) -> Result<Verdict> {
        loop {
            if let Some(v) = self.advance()? {
                return Ok(v);
            }
        }
    }

    /// Runs until a verdict is due or one refinement step has landed.
    fn advance(&mut self) -> Result<Option<Verdict>> {
        if self.flow.is_none() {
            if !self.instance.routable() {
                self.stats.certified += 1;
                return Ok(Some(Verdict::CertifiedAbove));
            }
            self.initialize()?;
        }
        let gap = self.energy - self.instance.threshold();
        if self.done || gap <= self.instance.eps() {
            self.done = true;
            self.stats.flows += 1;
            return Ok(Some(Verdict::Flow {
                flow: self.flow.clone().unwrap_or_default(),
                energy: self.energy,
            }));
        }
        if self.active.is_none() {
            self.active = Some(self.start_mwu(gap / self.lambda)?);
        }
        let active = self.active.as_mut().expect("just set");
        let finished = loop {
            match active.mwu.step()? {
                MwuStep::Progress { ratio, iterations, .. } => {
                    if let Some(obs) = &mut self.observer {
                        obs.mwu_step(active.mwu.iteration(), iterations, active.mwu.phi(), active.mwu.psi(), ratio);
                    }
                }
                MwuStep::Stalled => break false,
                MwuStep::Done => break true,
            }
        };
        if !finished {
            self.stats.certified += 1;
            return Ok(Some(Verdict::CertifiedAbove));
        }
        let active = self.active.take().expect("running");
        self.finish_step(active)?;
        Ok(None)
    }

    fn start_mwu(&self, big_r: f64) -> Result<ActiveMwu> {
        let f = self.flow.as_ref().expect("initialized");
        let residual = ResidualProblem::build(&self.instance, f)?;
        let (r_scale, w_scale) = scale_factors(big_r, self.instance.p())?;
        let params = MwuParams {
            kappa: self.config.kappa,
            backend: self.config.backend,
            seed: crate::rng::split(self.config.seed, self.stats.steps),
            assert_invariants: self.config.assert_invariants,
            ..MwuParams::new(self.instance.p(), self.config.m_hat)
        };
        let graph = self.instance.graph();
        let edges = graph.edges().enumerate().map(|(e, (u, v))| MwuEdge {
            tail: u,
            head: v,
            gradient: residual.gradient[e],
            resistance: r_scale * residual.resistance[e],
            weight: w_scale * residual.weight[e],
        });
        let mwu = MwuState::with_edges(graph.vertex_count(), params, edges)?;
        Ok(ActiveMwu {
            mwu,
            residual,
            big_r,
            r_scale,
            w_scale,
        })
    }

    fn finish_step(&mut self, active: ActiveMwu) -> Result<()> {
        let ActiveMwu {
            mwu,
            residual,
            big_r,
            r_scale,
            w_scale,
        } = active;
        let c = mwu.circulation().to_vec();
        let (phi_expected, psi_expected) = mwu.expected_initial_potentials();
        let (phi_initial, psi_initial) = mwu.initial_potentials();
        let scaled_r: Vec<f64> = residual.resistance.iter().map(|r| r_scale * r).collect();
        let scaled_w: Vec<f64> = residual.weight.iter().map(|w| w_scale * w).collect();
        self.stats.mwu_runs.push(MwuRunRecord {
            k: mwu.k(),
            q: mwu.q(),
            phi_initial,
            psi_initial,
            phi_expected,
            psi_expected,
            phi_final: mwu.phi(),
            psi_final: mwu.psi(),
            gradient: crate::numeric::dot(&residual.gradient, &c),
            r_norm: weighted_p_norm(&scaled_r, &c, 2),
            w_norm: weighted_p_norm(&scaled_w, &c, residual.p),
        });
        self.stats.audit.merge(mwu.audit());
        self.stats.mrc_queries += mwu.mrc_queries();
        drop(mwu);

        let f = self.flow.as_mut().expect("initialized");
        let k2 = self.k_ref * self.k_ref;
        let eta_fixed = big_r / (2.0 * k2);
        let fixed_step: Vec<f64> = c.iter().map(|x| eta_fixed * x).collect();
        let residual_value = residual.value(&fixed_step);
        let residual_ceiling = -big_r / (6.0 * k2);
        if residual_value > residual_ceiling + 1e-9 * residual_ceiling.abs() {
            self.stats.residual_value_violations += 1;
        }
        let eta = match self.config.step_rule {
            StepRule::Fixed => eta_fixed,
            StepRule::LineSearch => {
                let best = line_search(&self.instance, f, &c, eta_fixed);
                let at = |eta: f64| {
                    let trial: Vec<f64> = f.iter().zip(&c).map(|(a, b)| a + eta * b).collect();
                    self.instance.energy(&trial).unwrap_or(f64::INFINITY)
                };
                if at(best) < at(eta_fixed) {
                    best
                } else {
                    eta_fixed
                }
            }
        };
        for (x, d) in f.iter_mut().zip(&c) {
            *x += eta * d;
        }
        let before = self.energy;
        let after = self.instance.energy(f)?;
        let threshold = self.instance.threshold();
        let factor = 1.0 - 1.0 / (6.0 * k2 * self.lambda);
        let bound = factor * (before - threshold) + 1e-9 * before.abs();
        self.energy = after;
        self.stats.steps += 1;
        self.stats.step_records.push(StepRecord {
            energy_before: before,
            energy_after: after,
            contraction_bound: bound,
            eta,
            eta_fixed,
            residual_value,
            residual_ceiling,
        });
        if let Some(obs) = &mut self.observer {
            obs.refinement_step(self.stats.steps, after, eta);
        }
        if after - threshold > bound {
            self.stats.contraction_violations += 1;
            if self.config.assert_invariants {
                return Err(Error::InvariantViolation(format!(
                    "refinement step {}: E - F went from {} to {}, bound {}",
                    self.stats.steps,
                    before - threshold,
                    after - threshold,
                    bound
                )));
            }
        }
        if let Some(budget) = self.stats.budget {
            if self.stats.steps > budget {
                return Err(Error::NoConvergence(format!("step budget {budget} exhausted")));
            }
        }
        Ok(())
    }

    /// Runs a whole stream: the initial verdict, then one per inserted edge.
    pub fn run<I>(&mut self, events: I) -> Result<Vec<Verdict>>
    where
        I: IntoIterator<Item = (VertexId, VertexId, EdgeAttrs)>,
    {
        let mut out = vec![self.start()?];
        for (u, v, attrs) in events {
            out.push(self.insert_edge(u, v, attrs)?);
        }
        Ok(out)
    }

    pub fn edge_count(&self) -> EdgeId {
        self.instance.edge_count()
    }
}

/// Minimizer of the convex function `eta -> E(f + eta c)` over `eta >= 0`,
/// searched outward from `eta0`. Non-finite energies count as `+inf`.
fn line_search(instance: &PNormInstance, f: &[f64], c: &[f64], eta0: f64) -> f64 {
    let support: Vec<usize> = (0..c.len()).filter(|&e| c[e] != 0.0).collect();
    let p = instance.p();
    let slope = |eta: f64| -> f64 {
        let mut s = 0.0;
        for &e in &support {
            let a = instance.attrs(e);
            let x = f[e] + eta * c[e];
            let d = a.gradient + 2.0 * a.resistance * a.resistance * x + p as f64 * ipow(a.weight * x.abs(), p - 2) * a.weight * a.weight * x;
            s += c[e] * d;
        }
        if s.is_finite() {
            s
        } else {
            f64::INFINITY
        }
    };
    let (mut lo, mut hi) = (0.0, eta0);
    if slope(eta0) < 0.0 {
        lo = eta0;
        hi = 2.0 * eta0;
        let mut doublings = 0;
        while slope(hi) < 0.0 {
            lo = hi;
            hi *= 2.0;
            doublings += 1;
            if doublings > 200 {
                return lo;
            }
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if slope(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}
