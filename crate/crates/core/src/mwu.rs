//! Incremental K-approximate residual solver: l1 multiplicative weights over
//! the monotone min-ratio cycle oracle.
//!
//! Given gradients `g` and weights `r, w`, the solver either finds a
//! circulation `c` with `<g, c> = -1`, `||Rc||_2 <= 2K` and `||Wc||_p <= 2K`,
//! or claims that no circulation with `<g, c> = -1`, `||Rc||_2 <= 1` and
//! `||Wc||_p <= 1` is supported on the current graph.

use alloc::format;
use alloc::vec::Vec;

use crate::graph::{EdgeId, SparseFlow, VertexId};
use crate::mrc::{Backend, MonotoneMrcState, MrcUpdate};
use crate::numeric::{ipow, pow_pos, weighted_p_norm};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MwuParams {
    pub p: u32,
    /// Upper bound on the number of edges over the whole run.
    pub m_hat: usize,
    pub kappa: f64,
    pub backend: Backend,
    pub seed: u64,
    /// Fail with [`Error::InvariantViolation`] on the first broken invariant
    /// instead of only counting it in the audit.
    pub assert_invariants: bool,
}

impl MwuParams {
    pub fn new(p: u32, m_hat: usize) -> Self {
        Self {
            p,
            m_hat,
            kappa: 1.0,
            backend: Backend::Exact,
            seed: 0,
            assert_invariants: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.p < 2 {
            return Err(Error::InvalidParameter(format!("p must be at least 2, got {}", self.p)));
        }
        if self.m_hat == 0 {
            return Err(Error::InvalidParameter("edge bound must be positive".into()));
        }
        if !(self.kappa >= 1.0) || !self.kappa.is_finite() {
            return Err(Error::InvalidParameter(format!("kappa must be at least 1, got {}", self.kappa)));
        }
        Ok(())
    }

    /// `min(floor(log2 m_hat), p)`, but never below 2.
    pub fn q(&self) -> u32 {
        let log = usize::BITS - 1 - self.m_hat.max(1).leading_zeros();
        log.clamp(2, self.p.max(2))
    }

    pub fn k(&self) -> f64 {
        100.0 * self.q() as f64 * self.kappa
    }

    pub fn alpha(&self) -> f64 {
        let q = self.q();
        1.0 / (ipow(self.k(), q - 1) * 40.0 * q as f64)
    }

    /// Number of progress iterations `T`.
    pub fn iterations(&self) -> u64 {
        100 * self.q() as u64 * self.m_hat as u64
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MwuStep {
    /// `iterations` consecutive iterations along one cycle of the given
    /// ratio (w.r.t. the length estimate), ending at the next length push.
    Progress { ratio: f64, support: usize, iterations: u64 },
    /// The oracle found no good cycle; nothing changed.
    Stalled,
    /// All `T` iterations are done.
    Done,
}

#[derive(Clone, Debug, PartialEq)]
pub enum MwuOutcome {
    /// No circulation with unit negative gradient and unit norms exists on
    /// the current graph.
    Certified,
    Solution(Vec<f64>),
}

/// Counters for every invariant the solver checks as it runs.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MwuAudit {
    pub iterations: u64,
    pub stalls: u64,
    pub length_pushes: u64,
    /// Largest observed `dPhi / (3K^2/T)` and `dPsi / (4qK^q/T)`.
    pub max_phi_step: f64,
    pub max_psi_step: f64,
    pub phi_violations: u64,
    pub psi_violations: u64,
    /// `l <= l~ <= 2l` broken.
    pub window_violations: u64,
    /// `l` or `l~` decreased on some edge.
    pub monotone_violations: u64,
    /// `a >= |c|` or `b >= |c|` broken.
    pub domination_violations: u64,
    pub final_violations: u64,
}

impl MwuAudit {
    pub fn violations(&self) -> u64 {
        self.phi_violations
            + self.psi_violations
            + self.window_violations
            + self.monotone_violations
            + self.domination_violations
            + self.final_violations
    }

    pub fn merge(&mut self, other: &MwuAudit) {
        self.iterations += other.iterations;
        self.stalls += other.stalls;
        self.length_pushes += other.length_pushes;
        self.max_phi_step = self.max_phi_step.max(other.max_phi_step);
        self.max_psi_step = self.max_psi_step.max(other.max_psi_step);
        self.phi_violations += other.phi_violations;
        self.psi_violations += other.psi_violations;
        self.window_violations += other.window_violations;
        self.monotone_violations += other.monotone_violations;
        self.domination_violations += other.domination_violations;
        self.final_violations += other.final_violations;
    }
}

/// One edge arriving while the solver waits.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MwuEdge {
    pub tail: VertexId,
    pub head: VertexId,
    pub gradient: f64,
    pub resistance: f64,
    pub weight: f64,
}

const SLACK: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct MwuState {
    params: MwuParams,
    q: u32,
    k: f64,
    alpha: f64,
    total: u64,
    g: Vec<f64>,
    r: Vec<f64>,
    w: Vec<f64>,
    a: Vec<f64>,
    b: Vec<f64>,
    len: Vec<f64>,
    tilde: Vec<f64>,
    c: Vec<f64>,
    phi: f64,
    psi: f64,
    phi_start: f64,
    psi_start: f64,
    start_edges: usize,
    iter: u64,
    mrc: MonotoneMrcState,
    audit: MwuAudit,
    pushes: Vec<MrcUpdate>,
}

impl MwuState {
    pub fn new(vertex_count: usize, params: MwuParams) -> Result<Self> {
        params.validate()?;
        let mrc = MonotoneMrcState::new(vertex_count, params.alpha(), params.kappa, params.backend, params.seed)?;
        Ok(Self {
            params,
            q: params.q(),
            k: params.k(),
            alpha: params.alpha(),
            total: params.iterations(),
            g: Vec::new(),
            r: Vec::new(),
            w: Vec::new(),
            a: Vec::new(),
            b: Vec::new(),
            len: Vec::new(),
            tilde: Vec::new(),
            c: Vec::new(),
            phi: 0.0,
            psi: 0.0,
            phi_start: 0.0,
            psi_start: 0.0,
            start_edges: 0,
            iter: 0,
            mrc,
            audit: MwuAudit::default(),
            pushes: Vec::new(),
        })
    }

    /// A solver over all edges of `edges`, in order.
    pub fn with_edges(vertex_count: usize, params: MwuParams, edges: impl IntoIterator<Item = MwuEdge>) -> Result<Self> {
        let mut s = Self::new(vertex_count, params)?;
        for e in edges {
            s.insert_edge(e)?;
        }
        Ok(s)
    }

    pub fn params(&self) -> &MwuParams {
        &self.params
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn total_iterations(&self) -> u64 {
        self.total
    }

    pub fn iteration(&self) -> u64 {
        self.iter
    }

    pub fn edge_count(&self) -> usize {
        self.g.len()
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn psi(&self) -> f64 {
        self.psi
    }

    /// Potentials right before the first iteration.
    pub fn initial_potentials(&self) -> (f64, f64) {
        if self.iter == 0 {
            (self.phi, self.psi)
        } else {
            (self.phi_start, self.psi_start)
        }
    }

    /// `(K^2, K^q)` scaled by the fraction of the edge bound present at start.
    pub fn expected_initial_potentials(&self) -> (f64, f64) {
        let m = if self.iter == 0 { self.g.len() } else { self.start_edges };
        let frac = m as f64 / self.params.m_hat as f64;
        (self.k * self.k * frac, ipow(self.k, self.q) * frac)
    }

    pub fn audit(&self) -> &MwuAudit {
        &self.audit
    }

    pub fn lengths(&self) -> &[f64] {
        &self.len
    }

    pub fn length_estimates(&self) -> &[f64] {
        &self.tilde
    }

    pub fn weights_a(&self) -> &[f64] {
        &self.a
    }

    pub fn weights_b(&self) -> &[f64] {
        &self.b
    }

    pub fn circulation(&self) -> &[f64] {
        &self.c
    }

    pub fn mrc(&self) -> &MonotoneMrcState {
        &self.mrc
    }

    pub fn mrc_queries(&self) -> u64 {
        self.mrc.queries()
    }

    /// `||L c*||_1` under the current exact lengths.
    pub fn length_norm(&self, c_star: &SparseFlow) -> f64 {
        c_star.weighted_l1(&self.len)
    }

    fn length_of(&self, e: EdgeId) -> f64 {
        self.length_at(e, self.a[e], self.b[e])
    }

    fn length_at(&self, e: EdgeId, a: f64, b: f64) -> f64 {
        let (r, w) = (self.r[e], self.w[e]);
        ipow(self.k, self.q - 2) * r * r * a + ipow(w * b, self.q - 1) * w
    }

    pub fn insert_edge(&mut self, edge: MwuEdge) -> Result<EdgeId> {
        let MwuEdge {
            tail,
            head,
            gradient,
            resistance,
            weight,
        } = edge;
        if !gradient.is_finite() {
            return Err(Error::NonFinite("gradient"));
        }
        if !(resistance > 0.0 && resistance.is_finite() && weight > 0.0 && weight.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "edge weights must be positive, got r={resistance} w={weight}"
            )));
        }
        if self.g.len() >= self.params.m_hat {
            return Err(Error::InvalidParameter(format!("more than {} edges", self.params.m_hat)));
        }
        let e = self.g.len();
        let m_hat = self.params.m_hat as f64;
        let a = self.k / libm::sqrt(m_hat) / resistance;
        let b = self.k * pow_pos(m_hat, -1.0 / self.q as f64) / weight;
        self.g.push(gradient);
        self.r.push(resistance);
        self.w.push(weight);
        self.a.push(a);
        self.b.push(b);
        self.c.push(0.0);
        let l = self.length_of(e);
        self.len.push(l);
        self.tilde.push(l);
        self.phi += resistance * resistance * a * a;
        self.psi += ipow(weight * b, self.q);
        self.mrc.update(MrcUpdate::InsertEdge {
            edge: e,
            tail,
            head,
            gradient,
            length: l,
        })?;
        Ok(e)
    }

    fn violation(&self, what: &str) -> Result<()> {
        if self.params.assert_invariants {
            Err(Error::InvariantViolation(format!("mwu iteration {}: {what}", self.iter)))
        } else {
            Ok(())
        }
    }

    pub fn step(&mut self) -> Result<MwuStep> {
        if self.iter >= self.total {
            return Ok(MwuStep::Done);
        }
        let Some(sol) = self.mrc.query()? else {
            self.audit.stalls += 1;
            return Ok(MwuStep::Stalled);
        };
        let grad = sol.flow.dot(&self.g);
        if !(grad < 0.0) {
            return Err(Error::ContractBreach(format!("cycle with gradient {grad}")));
        }
        let ratio = grad / sol.flow.weighted_l1(&self.tilde);
        if ratio > -self.alpha / self.params.kappa * (1.0 - SLACK) {
            return Err(Error::ContractBreach(format!(
                "cycle ratio {ratio} above {}",
                -self.alpha / self.params.kappa
            )));
        }
        if self.iter == 0 {
            self.phi_start = self.phi;
            self.psi_start = self.psi;
            self.start_edges = self.g.len();
        }
        let t = self.total as f64;
        let scale = -1.0 / grad;
        let q = self.q as f64;
        // With l~ unchanged the oracle state is unchanged, so it would return
        // this cycle again; take every such iteration up to the next push.
        let remaining = self.total - self.iter;
        let mut reps = remaining;
        for &(e, x) in &sol.flow.0 {
            let d = (x * scale).abs() / t;
            let at = |j: u64| self.length_at(e, self.a[e] + j as f64 * d, self.b[e] + j as f64 * d);
            if at(reps) > self.tilde[e] {
                let (mut lo, mut hi) = (0, reps);
                while hi - lo > 1 {
                    let mid = lo + (hi - lo) / 2;
                    if at(mid) > self.tilde[e] {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                reps = hi;
            }
        }
        let kf = reps as f64;
        let (mut dphi, mut dpsi) = (0.0, 0.0);
        let (mut last_phi, mut last_psi) = (0.0, 0.0);
        let mut bad = None;
        for &(e, x) in &sol.flow.0 {
            let delta = x * scale;
            let d = delta.abs() / t;
            let (a, b) = (self.a[e], self.b[e]);
            let (r2, wq) = (self.r[e] * self.r[e], ipow(self.w[e] * b, self.q));
            dphi += r2 * kf * d * (2.0 * a + kf * d);
            dpsi += wq * libm::expm1(q * libm::log1p(kf * d / b));
            // the last iteration of the run has the largest increments
            let (a1, b1) = (a + (kf - 1.0) * d, b + (kf - 1.0) * d);
            last_phi += r2 * d * (2.0 * a1 + d);
            last_psi += ipow(self.w[e] * b1, self.q) * libm::expm1(q * libm::log1p(d / b1));
            self.c[e] += kf * delta / t;
            self.a[e] = a + kf * d;
            self.b[e] = b + kf * d;
            let (old_len, old_tilde) = (self.len[e], self.tilde[e]);
            self.len[e] = self.length_of(e);
            if self.len[e] > self.tilde[e] {
                self.tilde[e] = 2.0 * self.len[e];
                self.pushes.push(MrcUpdate::IncreaseLength {
                    edge: e,
                    length: self.tilde[e],
                });
            }
            if self.len[e] < old_len || self.tilde[e] < old_tilde {
                self.audit.monotone_violations += 1;
                bad = Some("length decreased");
            }
            if !(self.len[e] <= self.tilde[e] && self.tilde[e] <= 2.0 * self.len[e]) {
                self.audit.window_violations += 1;
                bad = Some("length estimate outside [l, 2l]");
            }
            let cabs = self.c[e].abs();
            if cabs > self.a[e] * (1.0 + SLACK) || cabs > self.b[e] * (1.0 + SLACK) {
                self.audit.domination_violations += 1;
                bad = Some("weights do not dominate the circulation");
            }
        }
        self.audit.length_pushes += self.pushes.len() as u64;
        for u in self.pushes.drain(..) {
            self.mrc.update(u)?;
        }
        self.mrc.count_repeats(reps - 1);
        let phi_bound = 3.0 * self.k * self.k / t;
        let psi_bound = 4.0 * q * ipow(self.k, self.q) / t;
        self.audit.max_phi_step = self.audit.max_phi_step.max(last_phi / phi_bound);
        self.audit.max_psi_step = self.audit.max_psi_step.max(last_psi / psi_bound);
        if last_phi > phi_bound * (1.0 + SLACK) {
            self.audit.phi_violations += 1;
            bad = Some("potential Phi grew too fast");
        }
        if last_psi > psi_bound * (1.0 + SLACK) {
            self.audit.psi_violations += 1;
            bad = Some("potential Psi grew too fast");
        }
        self.phi += dphi;
        self.psi += dpsi;
        self.iter += reps;
        self.audit.iterations += reps;
        if self.iter == self.total {
            let (kk, kq) = (self.k * self.k, ipow(self.k, self.q));
            if self.phi > 4.0 * kk * (1.0 + SLACK) || self.psi > 5.0 * q * kq * (1.0 + SLACK) {
                self.audit.final_violations += 1;
                bad = Some("final potential above its bound");
            }
        }
        if let Some(what) = bad {
            self.violation(what)?;
        }
        Ok(MwuStep::Progress {
            ratio,
            support: sol.flow.0.len(),
            iterations: reps,
        })
    }

    /// Steps until the solver stalls or finishes.
    pub fn advance(&mut self) -> Result<MwuOutcome> {
        loop {
            match self.step()? {
                MwuStep::Progress { .. } => {}
                MwuStep::Stalled => return Ok(MwuOutcome::Certified),
                MwuStep::Done => return Ok(MwuOutcome::Solution(self.c.clone())),
            }
        }
    }

    /// Runs to completion, inserting edges from `events` whenever the solver
    /// stalls. `on_claim` is told the edge count at every certification.
    /// Returns `Certified` if the events run out first.
    pub fn run<I>(&mut self, events: &mut I, mut on_claim: impl FnMut(usize)) -> Result<MwuOutcome>
    where
        I: Iterator<Item = MwuEdge>,
    {
        loop {
            match self.advance()? {
                MwuOutcome::Certified => {
                    on_claim(self.edge_count());
                    match events.next() {
                        Some(e) => {
                            self.insert_edge(e)?;
                        }
                        None => return Ok(MwuOutcome::Certified),
                    }
                }
                sol => return Ok(sol),
            }
        }
    }

    /// `(<g, c>, ||Rc||_2, ||Wc||_p)` for a circulation over the current edges.
    pub fn output_norms(&self, c: &[f64]) -> (f64, f64, f64) {
        let grad = crate::numeric::dot(&self.g, c);
        let rc = weighted_p_norm(&self.r, c, 2);
        let wc = weighted_p_norm(&self.w, c, self.params.p);
        (grad, rc, wc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mrc::exact_min_ratio_cycle;
    use alloc::vec;
    use crate::mrc::MrcInstance;
    use rand::{Rng, SeedableRng};

    fn edge(tail: usize, head: usize, gradient: f64, r: f64, w: f64) -> MwuEdge {
        MwuEdge {
            tail,
            head,
            gradient,
            resistance: r,
            weight: w,
        }
    }

    #[test]
    fn single_edge_constants() {
        let s = MwuState::with_edges(2, MwuParams::new(2, 1), [edge(0, 1, 0.0, 1.0, 1.0)]).unwrap();
        assert_eq!(s.q(), 2);
        assert_eq!(s.k(), 200.0);
        assert_eq!(s.weights_a(), &[200.0]);
        assert_eq!(s.weights_b(), &[200.0]);
        assert_eq!(s.lengths(), &[400.0]);
        assert_eq!(s.total_iterations(), 200);
    }

    #[test]
    fn q_and_alpha() {
        let p = MwuParams::new(3, 5000);
        assert_eq!(p.q(), 3);
        assert_eq!(MwuParams::new(8, 5000).q(), 8);
        assert_eq!(MwuParams::new(20, 5000).q(), 12);
        assert_eq!(MwuParams::new(8, 3).q(), 2);
        let p = MwuParams::new(4, 16);
        assert_eq!(p.q(), 4);
        assert_eq!(p.k(), 400.0);
        assert!((p.alpha() - 1.0 / (400f64.powi(3) * 160.0)).abs() < 1e-25);
        assert!(p.alpha() * ipow(p.k(), p.q()) / p.kappa <= ipow(p.k(), p.q()));
    }

    #[test]
    fn initial_potentials_are_exact() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for p in [2, 3, 4, 7] {
            let m = 20;
            let edges: Vec<_> = (0..m)
                .map(|i| edge(i % 6, (i + 1 + i / 6) % 6, rng.random_range(-1.0..1.0), rng.random_range(0.1..5.0), rng.random_range(0.1..5.0)))
                .filter(|e| e.tail != e.head)
                .collect();
            let m_hat = edges.len();
            let s = MwuState::with_edges(6, MwuParams::new(p, m_hat), edges).unwrap();
            let (phi, psi) = s.initial_potentials();
            let k = s.k();
            assert!(((phi - k * k) / (k * k)).abs() < 1e-12, "{phi}");
            let kq = ipow(k, s.q());
            assert!(((psi - kq) / kq).abs() < 1e-12, "{psi}");
        }
    }

    #[test]
    fn insertion_adds_its_share_of_the_potential() {
        let mut s = MwuState::new(3, MwuParams::new(3, 10)).unwrap();
        s.insert_edge(edge(0, 1, 0.5, 2.0, 0.3)).unwrap();
        let k = s.k();
        assert!((s.phi() - k * k / 10.0).abs() < 1e-9 * k * k);
        s.insert_edge(edge(0, 1, 0.5, 2.0, 0.3)).unwrap();
        assert_eq!(s.weights_a()[0], s.weights_a()[1]);
        assert_eq!(s.weights_b()[0], s.weights_b()[1]);
        assert!(s.insert_edge(edge(0, 1, 0.5, 0.0, 0.3)).is_err());
    }

    #[test]
    fn no_negative_cycle_certifies_every_event() {
        // all gradients zero: <g, c> = -1 is impossible
        let mut s = MwuState::new(3, MwuParams::new(2, 4)).unwrap();
        let mut events = [edge(0, 1, 0.0, 1.0, 1.0), edge(1, 2, 0.0, 1.0, 1.0), edge(2, 0, 0.0, 1.0, 1.0)].into_iter();
        let mut claims = Vec::new();
        let out = s.run(&mut events, |m| claims.push(m)).unwrap();
        assert_eq!(out, MwuOutcome::Certified);
        assert_eq!(claims, vec![0, 1, 2, 3]);
    }

    /// A triangle supporting `c* = (1/3)(1,1,1)` with `<g,c*> = -1` and unit norms.
    fn planted(p: u32) -> (Vec<MwuEdge>, SparseFlow) {
        let third = 1.0 / 3.0;
        // ||R c*||_2 = sqrt(3 r^2/9) <= 1 for r <= sqrt 3
        let r = 1.5;
        let w = 1.0;
        let edges = vec![edge(0, 1, -1.0, r, w), edge(1, 2, -1.0, r, w), edge(2, 0, -1.0, r, w)];
        let cs = SparseFlow(vec![(0, third), (1, third), (2, third)]);
        let _ = p;
        (edges, cs)
    }

    #[test]
    fn planted_instance_certifies_then_solves() {
        for p in [2, 3] {
            let (edges, cs) = planted(p);
            let params = MwuParams {
                assert_invariants: true,
                ..MwuParams::new(p, 6)
            };
            let mut s = MwuState::new(5, params).unwrap();
            // decoy edges first: a pendant path closing no cycle
            let mut events = [edge(0, 3, 1.0, 1.0, 1.0), edge(3, 4, 1.0, 1.0, 1.0)]
                .into_iter()
                .chain(edges);
            let mut claims = Vec::new();
            let bound = 20.0 * s.q() as f64 * ipow(s.k(), s.q() - 1);
            let mut checks = 0;
            let out = loop {
                match s.step().unwrap() {
                    MwuStep::Progress { .. } if s.edge_count() == 5 => {
                        let mut full = cs.clone();
                        for x in &mut full.0 {
                            x.0 += 2;
                        }
                        assert!(s.length_norm(&full) <= bound);
                        checks += 1;
                    }
                    MwuStep::Progress { .. } => {}
                    MwuStep::Stalled => {
                        claims.push(s.edge_count());
                        let e = events.next().expect("planted cycle must be found");
                        s.insert_edge(e).unwrap();
                    }
                    MwuStep::Done => break s.circulation().to_vec(),
                }
            };
            assert!(checks > 0);
            assert_eq!(claims, vec![0, 1, 2, 3, 4]);
            let (grad, rc, wc) = s.output_norms(&out);
            assert!((grad + 1.0).abs() < 1e-9);
            assert!(rc <= 2.0 * s.k() && wc <= 2.0 * s.k());
            assert_eq!(s.audit().violations(), 0);
            assert!(s.audit().max_phi_step <= 1.0 && s.audit().max_psi_step <= 1.0);
        }
    }

    #[test]
    fn certified_claims_are_sound_on_random_instances() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        for _ in 0..20 {
            let n = rng.random_range(3..7);
            let m = rng.random_range(3..10);
            let params = MwuParams {
                assert_invariants: true,
                ..MwuParams::new(2, m)
            };
            let mut s = MwuState::new(n, params).unwrap();
            for _ in 0..m {
                let u = rng.random_range(0..n);
                let v = (u + rng.random_range(1..n)) % n;
                s.insert_edge(edge(u, v, rng.random_range(-1.0..0.5), rng.random_range(0.2..2.0), rng.random_range(0.2..2.0)))
                    .unwrap();
            }
            match s.advance().unwrap() {
                MwuOutcome::Certified => {
                    // no cycle at ratio -alpha under the current length estimate
                    let inst = MrcInstance::from_parts(
                        s.mrc().instance().graph().clone(),
                        s.mrc().instance().gradients().to_vec(),
                        s.length_estimates().to_vec(),
                    )
                    .unwrap();
                    if let Some(best) = exact_min_ratio_cycle(&inst, 1e-15).unwrap() {
                        assert!(best.ratio > -s.alpha() * (1.0 + 1e-6));
                    }
                }
                MwuOutcome::Solution(c) => {
                    let (grad, rc, wc) = s.output_norms(&c);
                    assert!((grad + 1.0).abs() < 1e-9);
                    assert!(rc <= 2.0 * s.k() && wc <= 2.0 * s.k());
                }
            }
            assert_eq!(s.audit().violations(), 0);
        }
    }

    #[test]
    fn scaled_cycle_has_unit_gradient() {
        // raw cycle: <g,c> = -2 and l~-length 4 becomes <g,D> = -1 and length 2
        let c = SparseFlow(vec![(0, 1.0), (1, 1.0)]);
        let g = [-1.0, -1.0];
        let l = [2.0, 2.0];
        let grad = c.dot(&g);
        let mut d = c.clone();
        d.scale(-1.0 / grad);
        assert_eq!(d.dot(&g), -1.0);
        assert_eq!(d.weighted_l1(&l), 2.0);
    }
}
