//! Relative entropy of resource `D_F(rho) = inf_{sigma in F} D(rho || sigma)`.
//!
//! Sep and pi-Sep are solved by pairwise Frank-Wolfe over product atoms,
//! PPT and Rains sets by projected gradient. Each result carries a
//! bracket: the upper value is attained by a feasible `sigma`; the lower
//! value is the best of a linearization bound and dual certificates built
//! from the regularized log-ratio ansatz.

mod dual;
mod frank_wolfe;
mod lmo_bound;
mod objective;
mod polish;
mod probes;
mod projected;

pub use dual::{auto_candidate_x, dual_certificate, DualCertificate};
pub use frank_wolfe::{Atom, AtomSet};
pub use lmo_bound::linear_max_bound;
pub use probes::{minimizer_continuity_probe, two_copy_subadditivity_check, ContinuityProbe};

use crate::entropy::{ensure_state, relative_entropy};
use crate::error::{Error, Result};
use crate::freesets::{pi_sep_lmo, ppt_project, rains_project, Bipartition, FreeSetKind, FreeSetSpec};
use crate::opcore::{eig_hermitian, HermitianOp};
use frank_wolfe::{frank_wolfe, FwSettings};
use objective::{Objective, RelEntObjective};
use projected::{projected_gradient, PgSettings};

/// Weight of `I/d` in the initial iterate.
pub const INIT_MIXING: f64 = 1e-3;

/// Weight of `I/d` mixed in before evaluating a linearization bound, so the
/// gradient is taken at a faithful point.
const CERT_MIXING: f64 = 1e-9;

/// Above this total dimension the separable-set oracle bound falls back to
/// the heuristic product-state oracle.
pub const RIGOROUS_SEP_DIM_CAP: usize = 36;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepRule {
    /// Exact one-dimensional minimization along the step direction.
    LineSearch,
    /// The open-loop step `2 / (k + 2)`.
    Harmonic,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub max_iters: usize,
    /// Target for the duality gap, in nats.
    pub tol: f64,
    pub lmo_restarts: usize,
    pub seed: u64,
    /// Central regularization of the dual ansatz; the ladder is
    /// `{10 eps, eps, eps / 10}`.
    pub epsilon_reg: f64,
    pub step_rule: StepRule,
    /// Compute dual certificates for the lower value.
    pub certify: bool,
    pub dykstra_iters: usize,
    pub dykstra_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iters: 500,
            tol: 1e-6,
            lmo_restarts: 8,
            seed: 0,
            epsilon_reg: 1e-4,
            step_rule: StepRule::LineSearch,
            certify: true,
            dykstra_iters: crate::freesets::DYKSTRA_MAX_ITERS,
            dykstra_tol: crate::freesets::DYKSTRA_TOL,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument(format!("tol must be positive, got {}", self.tol)));
        }
        if !(self.epsilon_reg > 0.0 && self.epsilon_reg < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "epsilon_reg must lie in (0, 1), got {}",
                self.epsilon_reg
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidArgument("max_iters must be positive".into()));
        }
        Ok(())
    }

    fn epsilon_ladder(&self) -> Vec<f64> {
        [10.0, 1.0, 0.1]
            .iter()
            .map(|m| self.epsilon_reg * m)
            .filter(|e| *e > 0.0 && *e < 1.0)
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    /// `D(rho || minimizer)`, attained by a member of the set.
    pub upper: f64,
    /// Certified lower bound (see `lower_rigorous`).
    pub lower: f64,
    /// False when the bound relies on the heuristic product-state oracle.
    pub lower_rigorous: bool,
    pub minimizer: HermitianOp,
    pub gap: f64,
    pub iterations: usize,
    /// Objective value after each accepted step.
    pub trace: Vec<f64>,
    pub converged: bool,
    /// Stopping statistic of the primal method: the heuristic Frank-Wolfe
    /// gap, or the certified gap for projected methods.
    pub primal_gap: f64,
    pub certificate: Option<DualCertificate>,
    /// Product-state decomposition of the minimizer (Sep and pi-Sep).
    pub decomposition: Option<AtomSet>,
}

fn mix_identity(x: &HermitianOp, w: f64) -> HermitianOp {
    let mut out = x.scale(1.0 - w);
    out.add_scaled(w, &HermitianOp::maximally_mixed(x.dims()));
    out
}

/// Upper bound on `max_{omega in F} Tr[G omega]`; the flag reports whether
/// it is rigorous.
pub(crate) fn linear_max(g: &HermitianOp, free: &FreeSetSpec, cfg: &SolverConfig) -> Result<(f64, bool)> {
    match free.lmo_partitions() {
        Some(parts) if free.dim() > RIGOROUS_SEP_DIM_CAP => {
            let p = pi_sep_lmo(&-g, &parts, cfg.lmo_restarts, cfg.seed)?;
            Ok((-p.value, false))
        }
        _ => Ok((linear_max_bound(g, free)?, true)),
    }
}

/// `min_F obj >= obj(x') - <grad, x'> - max_F <-grad, omega>` at the
/// faithful point `x' = (1 - eta) x + eta I/d`.
pub(crate) fn certified_lower(
    obj: &dyn Objective,
    free: &FreeSetSpec,
    x: &HermitianOp,
    cfg: &SolverConfig,
) -> Result<(f64, bool)> {
    let xm = mix_identity(x, CERT_MIXING);
    let (f, g) = obj.value_grad(&xm)?;
    let (u, rigorous) = linear_max(&-&g, free, cfg)?;
    Ok((f - g.inner(&xm) - u, rigorous))
}

/// Consecutive hopeless check windows before an iteration gives up. The
/// certified lower bound moves in jumps, so one flat window is not enough.
const HOPELESS_STRIKES: usize = 3;

/// Tracks the certified gap `f - lower` across check windows.
pub(crate) struct StallWatch {
    gap_prev: f64,
    strikes: usize,
}

impl StallWatch {
    pub(crate) fn new() -> Self {
        StallWatch { gap_prev: f64::INFINITY, strikes: 0 }
    }

    /// True once the gap has shrunk by less than `tol` per window for
    /// `HOPELESS_STRIKES` windows in a row and that rate, sustained for the
    /// remaining windows, cannot bring it down to `tol`.
    pub(crate) fn hopeless(&mut self, gap: f64, tol: f64, windows_left: usize) -> bool {
        let gain = self.gap_prev - gap;
        let flat = self.gap_prev.is_finite() && gain < tol && gain * (windows_left as f64) < gap - tol;
        self.gap_prev = gap;
        self.strikes = if flat { self.strikes + 1 } else { 0 };
        self.strikes >= HOPELESS_STRIKES
    }
}

fn check_inputs(rho: &HermitianOp, free: &FreeSetSpec, cfg: &SolverConfig) -> Result<()> {
    cfg.validate()?;
    ensure_state(rho)?;
    if rho.dims() != free.dims() {
        return Err(Error::DimensionMismatch(format!(
            "state dims {:?} differ from free-set dims {:?}",
            rho.dims(),
            free.dims()
        )));
    }
    Ok(())
}

/// Minimizes `D(rho || sigma)` over `sigma in F`.
pub fn minimize_primal(rho: &HermitianOp, free: &FreeSetSpec, cfg: &SolverConfig) -> Result<SolveResult> {
    check_inputs(rho, free, cfg)?;
    let obj = RelEntObjective::new(rho);
    let mut res = match free.kind() {
        FreeSetKind::SingleState(sigma) => {
            let d = relative_entropy(rho, sigma)?.value.finite().ok_or(Error::InfeasibleStart)?;
            return Ok(SolveResult {
                upper: d,
                lower: d,
                lower_rigorous: true,
                minimizer: sigma.clone(),
                gap: 0.0,
                iterations: 0,
                trace: vec![d],
                converged: true,
                primal_gap: 0.0,
                certificate: None,
                decomposition: None,
            });
        }
        FreeSetKind::Sep(_) | FreeSetKind::PiSep(_) => solve_fw(rho, free, &obj, cfg)?,
        FreeSetKind::Ppt(b) | FreeSetKind::Rains(b) => solve_pg(rho, free, b, &obj, cfg)?,
    };
    if cfg.certify {
        let warm = match &res.decomposition {
            Some(atoms) => dual::Warm::Atoms(atoms),
            None => dual::Warm::Point(&res.minimizer),
        };
        let mut best: Option<(f64, DualCertificate)> = None;
        for eps in cfg.epsilon_ladder() {
            let x = auto_candidate_x(rho, &res.minimizer, eps)?;
            let cert = dual::dual_certificate_from(rho, free, &x, cfg, Some(warm.clone()))?;
            let v = cert.certified_bound();
            if best.as_ref().is_none_or(|(b, _)| v > *b) {
                best = Some((v, cert));
            }
        }
        if let Some((v, cert)) = best {
            if v > res.lower || !res.lower.is_finite() {
                res.lower = v;
                res.lower_rigorous = cert.rigorous;
            }
            res.certificate = Some(cert);
        }
    }
    res.gap = res.upper - res.lower;
    Ok(res)
}

fn solve_fw(rho: &HermitianOp, free: &FreeSetSpec, obj: &RelEntObjective, cfg: &SolverConfig) -> Result<SolveResult> {
    let parts = free.lmo_partitions().expect("sep-type set");
    let dims = free.dims();
    let start = pi_sep_lmo(&-rho, &parts, cfg.lmo_restarts, cfg.seed)?;
    let mut init = AtomSet::new(dims);
    init.add(Atom::Product(start), 1.0 - INIT_MIXING);
    init.add(Atom::Mixed(HermitianOp::maximally_mixed(dims)), INIT_MIXING);
    let lower_fn = |x: &HermitianOp| certified_lower(obj, free, x, cfg).map(|(v, _)| v);
    let settings = FwSettings {
        partitions: &parts,
        max_iters: cfg.max_iters,
        tol: cfg.tol,
        restarts: cfg.lmo_restarts,
        seed: cfg.seed,
        step_rule: cfg.step_rule,
        lower_bound: if cfg.certify { Some(&lower_fn) } else { None },
        check_every: 20,
    };
    let out = frank_wolfe(obj, init, &settings)?;
    let (v, rigorous) = certified_lower(obj, free, &out.x, cfg)?;
    let lower = v.max(out.lower);
    Ok(SolveResult {
        upper: out.value,
        lower,
        lower_rigorous: rigorous,
        minimizer: out.x,
        gap: 0.0,
        iterations: out.iterations,
        trace: out.trace,
        converged: out.converged,
        primal_gap: out.gap,
        certificate: None,
        decomposition: Some(out.atoms),
    })
}

pub(crate) fn projector_for<'a>(
    free: &'a FreeSetSpec,
    split: &'a Bipartition,
    cfg: &'a SolverConfig,
) -> impl Fn(&HermitianOp) -> Result<HermitianOp> + 'a {
    move |a: &HermitianOp| {
        let p = match free.kind() {
            FreeSetKind::Rains(_) => rains_project(a, split, cfg.dykstra_iters, cfg.dykstra_tol)?,
            _ => ppt_project(a, split, cfg.dykstra_iters, cfg.dykstra_tol)?,
        };
        Ok(p.op)
    }
}

fn solve_pg(
    rho: &HermitianOp,
    free: &FreeSetSpec,
    split: &Bipartition,
    obj: &RelEntObjective,
    cfg: &SolverConfig,
) -> Result<SolveResult> {
    let project = projector_for(free, split, cfg);
    let x0 = mix_identity(&project(rho)?, INIT_MIXING);
    let lower_fn = |x: &HermitianOp| certified_lower(obj, free, x, cfg).map(|(v, _)| v);
    let settings = PgSettings {
        max_iters: cfg.max_iters,
        tol: cfg.tol,
        project: &project,
        lower_bound: &lower_fn,
        check_every: 20,
    };
    let out = projected_gradient(obj, x0, &settings)?;
    Ok(SolveResult {
        upper: out.value,
        lower: out.lower,
        lower_rigorous: true,
        minimizer: out.x,
        gap: 0.0,
        iterations: out.iterations,
        trace: out.trace,
        converged: out.converged,
        primal_gap: out.value - out.lower,
        certificate: None,
        decomposition: None,
    })
}

/// Minimizes `D(rho || sigma) + 1 - Tr sigma` over the Rains set.
pub fn rains_bound(rho: &HermitianOp, split: &Bipartition, cfg: &SolverConfig) -> Result<SolveResult> {
    let free = FreeSetSpec::new(rho.dims().to_vec(), FreeSetKind::Rains(split.clone()))?;
    minimize_primal(rho, &free, cfg)
}

/// Smallest eigenvalue of a state, used to reject non-faithful inputs.
pub(crate) fn min_eigenvalue(rho: &HermitianOp) -> f64 {
    eig_hermitian(rho).lambda_min()
}
