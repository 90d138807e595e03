//! Frobenius projections onto the PPT and Rains sets by Dykstra's
//! alternating projections.

use super::{Bipartition, PPT_TOL};
use crate::error::Result;
use crate::opcore::{eig_hermitian, partial_transpose_set, HermitianOp};

pub const DYKSTRA_MAX_ITERS: usize = 5000;
pub const DYKSTRA_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct Projection {
    /// A feasible point: the Dykstra limit after a final feasibility repair.
    pub op: HermitianOp,
    /// The raw Dykstra iterate before repair.
    pub raw: HermitianOp,
    pub iterations: usize,
    /// Largest constraint violation of `raw`.
    pub residual: f64,
    pub converged: bool,
}

fn psd_clip(a: &HermitianOp) -> HermitianOp {
    eig_hermitian(a).map(|x| x.max(0.0))
}

fn gamma_clip(a: &HermitianOp, cut: &[usize]) -> HermitianOp {
    let g = partial_transpose_set(a, cut).expect("validated cut");
    partial_transpose_set(&psd_clip(&g), cut).expect("validated cut")
}

fn unit_trace(a: &HermitianOp) -> HermitianOp {
    let d = a.dim() as f64;
    let mut out = a.clone();
    out.add_scaled((1.0 - a.trace()) / d, &HermitianOp::identity(a.dims()));
    out
}

/// Projection onto the trace-norm unit ball: soft-thresholding of the
/// eigenvalues at the exact water level.
fn trace_ball(a: &HermitianOp) -> HermitianOp {
    let eig = eig_hermitian(a);
    let total: f64 = eig.values.iter().map(|x| x.abs()).sum();
    if total <= 1.0 {
        return a.clone();
    }
    let theta = water_level(&eig.values);
    eig.map(|x| x.signum() * (x.abs() - theta).max(0.0))
}

/// The `theta >= 0` with `sum max(|x| - theta, 0) = 1`, given `sum |x| > 1`.
fn water_level(values: &[f64]) -> f64 {
    let mut mags: Vec<f64> = values.iter().map(|x| x.abs()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    let mut prefix = 0.0;
    for (k, &m) in mags.iter().enumerate() {
        prefix += m;
        let theta = (prefix - 1.0) / (k + 1) as f64;
        let next = mags.get(k + 1).copied().unwrap_or(0.0);
        if theta >= next {
            return theta.max(0.0);
        }
    }
    0.0
}

fn rains_ball(a: &HermitianOp, cut: &[usize]) -> HermitianOp {
    let g = partial_transpose_set(a, cut).expect("validated cut");
    partial_transpose_set(&trace_ball(&g), cut).expect("validated cut")
}

type Proj<'a> = Box<dyn Fn(&HermitianOp) -> HermitianOp + 'a>;

/// Cyclic Dykstra over `sets`; stops when a full cycle moves the iterate
/// by at most `tol` (Frobenius) and the violation is at most `tol`.
fn dykstra(
    start: &HermitianOp,
    sets: &[Proj<'_>],
    violation: &dyn Fn(&HermitianOp) -> f64,
    max_iters: usize,
    tol: f64,
) -> (HermitianOp, usize, f64, bool) {
    let mut x = start.clone();
    let mut corr: Vec<HermitianOp> = sets.iter().map(|_| HermitianOp::zeros(start.dims())).collect();
    for it in 1..=max_iters {
        let before = x.clone();
        for (p, c) in sets.iter().zip(corr.iter_mut()) {
            let shifted = &x + c;
            let y = p(&shifted);
            *c = &shifted - &y;
            x = y;
        }
        let moved = (&x - &before).frobenius_norm();
        if moved <= tol {
            let v = violation(&x);
            if v <= tol {
                return (x, it, v, true);
            }
        }
    }
    let v = violation(&x);
    (x, max_iters, v, false)
}

fn ppt_violation(x: &HermitianOp, cut: &[usize]) -> f64 {
    let psd = -eig_hermitian(x).lambda_min();
    let g = partial_transpose_set(x, cut).expect("validated cut");
    let gam = -eig_hermitian(&g).lambda_min();
    psd.max(gam).max((x.trace() - 1.0).abs()).max(0.0)
}

/// Frobenius-nearest PPT state to `a`.
///
/// The returned `op` is repaired to satisfy the constraints exactly: any
/// residual negativity `mu` of `x` or `x^Gamma` is removed by mixing with
/// `I/d`, which changes `x` by `O(|mu| d)`.
pub fn ppt_project(a: &HermitianOp, split: &Bipartition, max_iters: usize, tol: f64) -> Result<Projection> {
    let cut = split.a_side().to_vec();
    let sets: Vec<Proj<'_>> = vec![
        Box::new(psd_clip),
        Box::new(|x: &HermitianOp| gamma_clip(x, &cut)),
        Box::new(unit_trace),
    ];
    let (raw, iterations, residual, converged) =
        dykstra(a, &sets, &|x| ppt_violation(x, &cut), max_iters, tol);
    let op = repair_ppt(&raw, &cut);
    Ok(Projection { op, raw, iterations, residual, converged })
}

/// Mixes a unit-trace operator with `I/d` until both it and its partial
/// transpose are PSD.
pub(crate) fn repair_ppt(x: &HermitianOp, cut: &[usize]) -> HermitianOp {
    let x = unit_trace(x);
    let g = partial_transpose_set(&x, cut).expect("validated cut");
    let mu = eig_hermitian(&x).lambda_min().min(eig_hermitian(&g).lambda_min());
    // keep a margin so the repaired point clears the PPT_TOL test robustly
    let target = -0.1 * PPT_TOL;
    if mu >= target {
        return x;
    }
    let d = x.dim() as f64;
    let t = (target - mu) / (1.0 / d - mu);
    let mut out = x.scale(1.0 - t);
    out.add_scaled(t, &HermitianOp::maximally_mixed(x.dims()));
    out
}

fn rains_violation(x: &HermitianOp, cut: &[usize]) -> f64 {
    let psd = -eig_hermitian(x).lambda_min();
    let g = partial_transpose_set(x, cut).expect("validated cut");
    let norm: f64 = eig_hermitian(&g).values.iter().map(|v| v.abs()).sum();
    psd.max(norm - 1.0).max(0.0)
}

/// Frobenius-nearest point of `{sigma >= 0, ||sigma^Gamma||_1 <= 1}`.
///
/// The returned `op` is repaired by clipping negative eigenvalues and
/// rescaling into the trace-norm ball.
pub fn rains_project(a: &HermitianOp, split: &Bipartition, max_iters: usize, tol: f64) -> Result<Projection> {
    let cut = split.a_side().to_vec();
    let sets: Vec<Proj<'_>> = vec![
        Box::new(psd_clip),
        Box::new(|x: &HermitianOp| rains_ball(x, &cut)),
    ];
    let (raw, iterations, residual, converged) =
        dykstra(a, &sets, &|x| rains_violation(x, &cut), max_iters, tol);
    let op = repair_rains(&raw, &cut);
    Ok(Projection { op, raw, iterations, residual, converged })
}

pub(crate) fn repair_rains(x: &HermitianOp, cut: &[usize]) -> HermitianOp {
    let clipped = psd_clip(x);
    let g = partial_transpose_set(&clipped, cut).expect("validated cut");
    let norm: f64 = eig_hermitian(&g).values.iter().map(|v| v.abs()).sum();
    if norm > 1.0 {
        clipped.scale(1.0 / norm)
    } else {
        clipped
    }
}
