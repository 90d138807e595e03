//! Projected gradient with Barzilai-Borwein steps and Armijo backtracking.

use super::objective::Objective;
use crate::error::{Error, Result};
use crate::opcore::HermitianOp;

const ARMIJO_C: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 40;
/// Gradient step shrinks tried when the projected direction is not a descent direction.
const MAX_STEP_SHRINKS: usize = 4;

pub struct PgSettings<'a> {
    pub max_iters: usize,
    pub tol: f64,
    /// Feasible point nearest to the argument.
    pub project: &'a dyn Fn(&HermitianOp) -> Result<HermitianOp>,
    /// Certified lower bound on the optimum, evaluated around `x`.
    pub lower_bound: &'a dyn Fn(&HermitianOp) -> Result<f64>,
    /// Iterations between certified-gap evaluations.
    pub check_every: usize,
}

#[derive(Clone, Debug)]
pub struct PgOutcome {
    pub x: HermitianOp,
    pub value: f64,
    pub lower: f64,
    pub iterations: usize,
    pub trace: Vec<f64>,
    pub converged: bool,
}

pub fn projected_gradient(obj: &dyn Objective, x0: HermitianOp, s: &PgSettings<'_>) -> Result<PgOutcome> {
    let mut x = x0;
    let (mut f, mut g) = obj.value_grad(&x)?;
    if !f.is_finite() {
        return Err(Error::InfeasibleStart);
    }
    let mut trace = vec![f];
    let mut lower = f64::NEG_INFINITY;
    let mut t = 1.0 / g.frobenius_norm().max(1e-12);
    let mut converged = false;
    let mut iterations = 0;
    let mut stall = super::StallWatch::new();
    for k in 0..s.max_iters {
        if k % s.check_every == 0 {
            lower = lower.max((s.lower_bound)(&x)?);
            if f - lower <= s.tol {
                converged = true;
                break;
            }
            if stall.hopeless(f - lower, s.tol, (s.max_iters - k) / s.check_every) {
                break;
            }
        }
        iterations = k + 1;
        // Backtrack along the segment from x to P(x - t g). Both ends are
        // feasible, so every point on it is; an inexact projection then
        // cannot push the iterate uphill.
        let mut accepted = None;
        let mut step = t;
        'outer: for _ in 0..MAX_STEP_SHRINKS {
            let mut trial = x.clone();
            trial.add_scaled(-step, &g);
            let dir = &(s.project)(&trial)? - &x;
            let slope = g.inner(&dir);
            if slope < 0.0 {
                let mut alpha = 1.0;
                for _ in 0..MAX_BACKTRACKS {
                    let mut y = x.clone();
                    y.add_scaled(alpha, &dir);
                    let fy = obj.value(&y);
                    if fy.is_finite() && fy <= f + ARMIJO_C * alpha * slope && fy < f {
                        accepted = Some((y, fy, dir.scale(alpha)));
                        break 'outer;
                    }
                    alpha *= 0.5;
                }
            }
            step *= 0.1;
        }
        let Some((y, fy, dx)) = accepted else { break };
        if dx.frobenius_norm() == 0.0 {
            break;
        }
        let (fy2, gy) = obj.value_grad(&y)?;
        debug_assert!((fy2 - fy).abs() <= 1e-9 * fy.abs().max(1.0));
        let dg = &gy - &g;
        let sy = dx.inner(&dg);
        let ss = dx.inner(&dx);
        t = if sy > 0.0 { (ss / sy).clamp(1e-12, 1e12) } else { (2.0 * step).min(1e12) };
        x = y;
        f = fy2;
        g = gy;
        trace.push(f);
    }
    if !converged {
        lower = lower.max((s.lower_bound)(&x)?);
        converged = f - lower <= s.tol;
    }
    Ok(PgOutcome { x, value: f, lower, iterations, trace, converged })
}

