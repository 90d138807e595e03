//! Lower bounds from the variational formula
//! `D_F(rho) = sup_X { Tr rho X - sup_{sigma in F} ln Tr e^{ln sigma + X} }`.

use super::frank_wolfe::{frank_wolfe, Atom, AtomSet, FwSettings};
use super::objective::{NegLogTraceExp, Objective};
use super::projected::{projected_gradient, PgSettings};
use super::{certified_lower, mix_identity, projector_for, SolverConfig, INIT_MIXING};
use crate::entropy::{ensure_state, log_trace_exp};
use crate::error::{Error, Result};
use crate::freesets::{FreeSetKind, FreeSetSpec};
use crate::opcore::{eig_hermitian, HermitianOp};

#[derive(Clone, Debug)]
pub struct DualCertificate {
    pub x: HermitianOp,
    /// Best value of `ln Tr e^{ln sigma + X}` found over the set.
    pub inner_sup_value: f64,
    /// `Tr rho X - inner_sup_value`.
    pub bound: f64,
    /// Certified upper bound on `sup - inner_sup_value`.
    pub inner_sup_residual: f64,
    /// Whether the inner solver met its tolerance.
    pub reliable: bool,
    /// False when the residual relies on the heuristic product-state oracle.
    pub rigorous: bool,
    pub inner_iterations: usize,
}

impl DualCertificate {
    /// `bound - inner_sup_residual`, a lower bound on `D_F(rho)`.
    pub fn certified_bound(&self) -> f64 {
        self.bound - self.inner_sup_residual
    }
}

/// `ln(rho + eps^2 I) - ln(xi + eps I) + (Tr xi - 1) I`.
pub fn auto_candidate_x(rho: &HermitianOp, xi: &HermitianOp, eps: f64) -> Result<HermitianOp> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidArgument(format!("epsilon {eps} outside (0, 1)")));
    }
    if rho.dims() != xi.dims() {
        return Err(Error::DimensionMismatch("rho and xi dims differ".into()));
    }
    let a = eig_hermitian(rho).map(|v| (v.max(0.0) + eps * eps).ln());
    let b = eig_hermitian(xi).map(|v| (v.max(0.0) + eps).ln());
    let mut x = &a - &b;
    x.add_scaled(xi.trace() - 1.0, &HermitianOp::identity(rho.dims()));
    Ok(x)
}

#[derive(Clone)]
pub(crate) enum Warm<'a> {
    Atoms(&'a AtomSet),
    Point(&'a HermitianOp),
}

/// Evaluates the inner supremum for a given `X` and returns the resulting
/// bound with its residual.
pub fn dual_certificate(
    rho: &HermitianOp,
    free: &FreeSetSpec,
    x: &HermitianOp,
    cfg: &SolverConfig,
) -> Result<DualCertificate> {
    dual_certificate_from(rho, free, x, cfg, None)
}

pub(crate) fn dual_certificate_from(
    rho: &HermitianOp,
    free: &FreeSetSpec,
    x: &HermitianOp,
    cfg: &SolverConfig,
    warm: Option<Warm<'_>>,
) -> Result<DualCertificate> {
    cfg.validate()?;
    ensure_state(rho)?;
    if x.dims() != free.dims() || rho.dims() != free.dims() {
        return Err(Error::DimensionMismatch("certificate operands and free set differ".into()));
    }
    let tr_rho_x = rho.inner(x);
    let obj = NegLogTraceExp { x: x.clone() };
    let mut inner_cfg = cfg.clone();
    inner_cfg.tol = cfg.tol / 10.0;

    let (xi, iterations, reliable) = match free.kind() {
        FreeSetKind::SingleState(sigma) => {
            let v = log_trace_exp(sigma, x)?;
            return Ok(DualCertificate {
                x: x.clone(),
                inner_sup_value: v,
                bound: tr_rho_x - v,
                inner_sup_residual: 0.0,
                reliable: true,
                rigorous: true,
                inner_iterations: 0,
            });
        }
        FreeSetKind::Sep(_) | FreeSetKind::PiSep(_) => {
            let parts = free.lmo_partitions().expect("sep-type set");
            let dims = free.dims();
            let mut init = match warm {
                Some(Warm::Atoms(a)) => a.clone(),
                Some(Warm::Point(p)) => {
                    let mut s = AtomSet::new(dims);
                    s.add(Atom::Mixed(p.clone()), 1.0);
                    s
                }
                None => AtomSet::new(dims),
            };
            if init.is_empty() {
                init.add(Atom::Mixed(HermitianOp::maximally_mixed(dims)), 1.0);
            } else {
                init = mixed_atoms(&init, dims);
            }
            let lower_fn = |p: &HermitianOp| certified_lower(&obj, free, p, &inner_cfg).map(|(v, _)| v);
            let settings = FwSettings {
                partitions: &parts,
                max_iters: cfg.max_iters,
                tol: inner_cfg.tol,
                restarts: cfg.lmo_restarts,
                seed: cfg.seed,
                step_rule: cfg.step_rule,
                lower_bound: Some(&lower_fn),
                check_every: 20,
            };
            let out = frank_wolfe(&obj, init, &settings)?;
            (out.x, out.iterations, out.converged)
        }
        FreeSetKind::Ppt(b) | FreeSetKind::Rains(b) => {
            let project = projector_for(free, b, cfg);
            let start = match warm {
                Some(Warm::Point(p)) => p.clone(),
                Some(Warm::Atoms(a)) => a.assemble(),
                None => free.interior_point(),
            };
            let x0 = mix_identity(&start, INIT_MIXING);
            let lower_fn = |p: &HermitianOp| certified_lower(&obj, free, p, &inner_cfg).map(|(v, _)| v);
            let settings = PgSettings {
                max_iters: cfg.max_iters,
                tol: inner_cfg.tol,
                project: &project,
                lower_bound: &lower_fn,
                check_every: 20,
            };
            let out = projected_gradient(&obj, x0, &settings)?;
            (out.x, out.iterations, out.converged)
        }
    };

    // sup h <= -min(-h), bounded through the linearization at a faithful point
    let (neg_lower, rigorous) = certified_lower(&obj, free, &xi, &inner_cfg)?;
    let sup_upper = -neg_lower;
    let value = -obj.value(&xi);
    let value = value.min(sup_upper);
    Ok(DualCertificate {
        x: x.clone(),
        inner_sup_value: value,
        bound: tr_rho_x - value,
        inner_sup_residual: (sup_upper - value).max(0.0),
        reliable,
        rigorous,
        inner_iterations: iterations,
    })
}

fn mixed_atoms(a: &AtomSet, dims: &[usize]) -> AtomSet {
    let mut out = AtomSet::new(dims);
    for (w, atom) in a.atoms() {
        out.add(atom.clone(), w * (1.0 - INIT_MIXING));
    }
    out.add(Atom::Mixed(HermitianOp::maximally_mixed(dims)), INIT_MIXING);
    out
}
