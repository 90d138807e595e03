//! Certified upper bounds on `max_{omega in F} Tr[G omega]`.
//!
//! For PPT states and any `Z >= 0`,
//! `Tr[G omega] <= Tr[(G + Z^Gamma) omega] <= lambda_max(G + Z^Gamma)`.
//! For the Rains set and any `Y >= 0`,
//! `Tr[G omega] <= Tr[(G + Y)^Gamma omega^Gamma] <= ||(G + Y)^Gamma||_op`.
//! Both hold for every feasible multiplier, so any iterate of the
//! multiplier search yields a valid bound; the search only tightens it.
//! Separable sets are bounded through their PPT relaxation.

use crate::entropy::log_sum_exp;
use crate::error::Result;
use crate::freesets::{FreeSetKind, FreeSetSpec};
use crate::opcore::{eig_hermitian, partial_transpose_set, EigenSystem, HermitianOp};

const STAGES: usize = 8;
const STAGE_ITERS: usize = 120;

pub fn linear_max_bound(g: &HermitianOp, free: &FreeSetSpec) -> Result<f64> {
    Ok(match free.kind() {
        FreeSetKind::SingleState(s) => g.inner(s),
        FreeSetKind::Ppt(b) | FreeSetKind::Sep(b) => ppt_bound(g, b.a_side()),
        FreeSetKind::Rains(b) => rains_bound_op(g, b.a_side()),
        FreeSetKind::PiSep(parts) => {
            let mut worst = f64::NEG_INFINITY;
            for p in parts {
                let blocks = p.blocks();
                let bound = if blocks.len() == 1 {
                    eig_hermitian(g).lambda_max()
                } else {
                    // every block is a proper subset, hence a valid cut
                    blocks.iter().map(|b| ppt_bound(g, b)).fold(f64::INFINITY, f64::min)
                };
                worst = worst.max(bound);
            }
            worst
        }
    })
}

fn gamma(a: &HermitianOp, cut: &[usize]) -> HermitianOp {
    partial_transpose_set(a, cut).expect("validated cut")
}

fn psd_part(a: &HermitianOp) -> HermitianOp {
    eig_hermitian(a).map(|x| x.max(0.0))
}

fn spectral_scale(e: &EigenSystem) -> f64 {
    (e.lambda_max() - e.lambda_min()).max(e.lambda_max().abs()).max(1e-300)
}

/// Accelerated projected gradient on a smoothed multiplier objective with
/// continuation in the smoothing width. `smooth(M, mu)` returns the exact
/// bound at `M`, and the gradient of the smoothed objective.
fn minimize_multiplier(
    dims: &[usize],
    scale: f64,
    initial: f64,
    smooth: impl Fn(&HermitianOp, f64) -> (f64, HermitianOp),
) -> f64 {
    let mut best = initial;
    let mut z = HermitianOp::zeros(dims);
    let mut mu = 0.1 * scale;
    for _ in 0..STAGES {
        let mut y = z.clone();
        let mut t = 1.0f64;
        let mut since_best = 0;
        for _ in 0..STAGE_ITERS {
            let (_, grad) = smooth(&y, mu);
            let mut step = y.clone();
            step.add_scaled(-mu, &grad);
            let z_next = psd_part(&step);
            let (exact, _) = smooth(&z_next, mu);
            if exact < best - 1e-15 * scale {
                best = exact;
                since_best = 0;
            } else {
                since_best += 1;
            }
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            let mut y_next = z_next.clone();
            y_next.add_scaled((t - 1.0) / t_next, &(&z_next - &z));
            z = z_next;
            y = y_next;
            t = t_next;
            if since_best > 40 {
                break;
            }
        }
        mu *= 0.1;
    }
    best
}

/// Upper bound on `max Tr[G omega]` over PPT states across `cut`.
pub(crate) fn ppt_bound(g: &HermitianOp, cut: &[usize]) -> f64 {
    let e0 = eig_hermitian(g);
    let scale = spectral_scale(&e0);
    minimize_multiplier(g.dims(), scale, e0.lambda_max(), |z, mu| {
        let h = g + &gamma(z, cut);
        let e = eig_hermitian(&h);
        let top = e.lambda_max();
        let lse = log_sum_exp(&e.values.iter().map(|v| (v - top) / mu).collect::<Vec<_>>());
        let w = e.map(|v| ((v - top) / mu - lse).exp());
        (top, gamma(&w, cut))
    })
}

/// Upper bound on `max Tr[G omega]` over `{omega >= 0, ||omega^Gamma||_1 <= 1}`.
pub(crate) fn rains_bound_op(g: &HermitianOp, cut: &[usize]) -> f64 {
    let g0 = gamma(g, cut);
    let e0 = eig_hermitian(&g0);
    let scale = spectral_scale(&e0);
    let opnorm = |e: &EigenSystem| e.lambda_max().abs().max(e.lambda_min().abs());
    let best = minimize_multiplier(g.dims(), scale, opnorm(&e0), |y, mu| {
        let h = gamma(&(g + y), cut);
        let e = eig_hermitian(&h);
        let top = opnorm(&e);
        let mut args: Vec<f64> = e.values.iter().map(|v| (v - top) / mu).collect();
        args.extend(e.values.iter().map(|v| (-v - top) / mu));
        let lse = log_sum_exp(&args);
        let w = e.map(|v| ((v - top) / mu - lse).exp() - ((-v - top) / mu - lse).exp());
        (top, gamma(&w, cut))
    });
    best.max(0.0)
}
