//! Entropic functionals in nats.
//!
//! Relative entropy uses the general-operator form
//! `D(X||Y) = Tr[X ln X - X ln Y + Y - X]`, which is nonnegative for all PSD
//! arguments and reduces to the usual divergence between states.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::freesets::FreeSetSpec;
use crate::opcore::{eig_hermitian, EigenSystem, HermitianOp, DEFAULT_CUTOFF};
use crate::solver::{minimize_primal, SolverConfig};

/// Squared overlap above which a support eigenvector of `X` is considered
/// to reach into `ker Y`.
pub const SUPPORT_OVERLAP_TOL: f64 = 1e-10;

/// Accepted deviation of `Tr rho` from one for density operators.
pub const STATE_TRACE_TOL: f64 = 1e-9;

/// A real number or `+inf`. The infinite branch is only produced by
/// support conditions, never by overflow.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExtendedReal {
    Finite(f64),
    PosInf,
}

impl ExtendedReal {
    pub fn is_finite(self) -> bool {
        matches!(self, ExtendedReal::Finite(_))
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtendedReal::Finite(v) => Some(v),
            ExtendedReal::PosInf => None,
        }
    }

    /// Lossy view as `f64`, mapping `+inf` to `f64::INFINITY`.
    pub fn to_f64(self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }
}

impl fmt::Display for ExtendedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedReal::Finite(v) => write!(f, "{v:.16e}"),
            ExtendedReal::PosInf => f.write_str("+inf"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectrumSummary {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EntropyReport {
    pub value: ExtendedReal,
    pub support_ok: bool,
    pub spectrum: SpectrumSummary,
}

/// Validates a density operator: PSD within the default cutoff and unit trace.
pub fn ensure_state(rho: &HermitianOp) -> Result<EigenSystem> {
    let eig = eig_hermitian(rho);
    eig.check_psd(DEFAULT_CUTOFF)
        .map_err(|_| Error::NotAState(format!("negative eigenvalue {:.3e}", eig.lambda_min())))?;
    let tr = rho.trace();
    if (tr - 1.0).abs() > STATE_TRACE_TOL {
        return Err(Error::NotAState(format!("trace {tr:.12} differs from 1")));
    }
    Ok(eig)
}

fn clipped(eig: &EigenSystem, cutoff: f64) -> Vec<f64> {
    let th = eig.threshold(cutoff);
    eig.values.iter().map(|&x| if x > th { x } else { 0.0 }).collect()
}

fn xlogx(x: f64) -> f64 {
    if x > 0.0 {
        x * x.ln()
    } else {
        0.0
    }
}

pub fn von_neumann_entropy(x: &HermitianOp) -> Result<f64> {
    let eig = eig_hermitian(x);
    eig.check_psd(DEFAULT_CUTOFF)?;
    Ok(entropy_of_spectrum(&clipped(&eig, DEFAULT_CUTOFF)))
}

/// `-sum x ln x` over a nonnegative spectrum.
pub fn entropy_of_spectrum(values: &[f64]) -> f64 {
    -values.iter().map(|&x| xlogx(x)).sum::<f64>()
}

pub fn relative_entropy(x: &HermitianOp, y: &HermitianOp) -> Result<EntropyReport> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch(format!("{} vs {}", x.dim(), y.dim())));
    }
    let ex = eig_hermitian(x);
    let ey = eig_hermitian(y);
    relative_entropy_eig(&ex, &ey)
}

/// Relative entropy from precomputed spectral decompositions.
pub fn relative_entropy_eig(ex: &EigenSystem, ey: &EigenSystem) -> Result<EntropyReport> {
    ex.check_psd(DEFAULT_CUTOFF)?;
    ey.check_psd(DEFAULT_CUTOFF)?;
    let spectrum = SpectrumSummary {
        x_min: ex.lambda_min(),
        x_max: ex.lambda_max(),
        y_min: ey.lambda_min(),
        y_max: ey.lambda_max(),
    };
    let xs = clipped(ex, DEFAULT_CUTOFF);
    let ys = clipped(ey, DEFAULT_CUTOFF);
    let tr_x: f64 = xs.iter().sum();
    let tr_y: f64 = ys.iter().sum();
    let infinite = EntropyReport { value: ExtendedReal::PosInf, support_ok: false, spectrum };

    let x_supp: Vec<usize> = (0..xs.len()).filter(|&i| xs[i] > 0.0).collect();
    if x_supp.is_empty() {
        return Ok(EntropyReport { value: ExtendedReal::Finite(tr_y), support_ok: true, spectrum });
    }
    let y_supp: Vec<usize> = (0..ys.len()).filter(|&j| ys[j] > 0.0).collect();
    if y_supp.is_empty() {
        return Ok(infinite);
    }

    // overlap[i][j] = |<e_i|f_j>|^2
    let ov: DMatrix<C64> = ex.vectors.adjoint() * &ey.vectors;
    let d = ys.len();
    let mut cross = 0.0;
    for &i in &x_supp {
        for j in 0..d {
            let w = ov[(i, j)].norm_sqr();
            if ys[j] > 0.0 {
                cross += w * xs[i] * ys[j].ln();
            } else if w > SUPPORT_OVERLAP_TOL {
                return Ok(infinite);
            }
        }
    }
    let self_term: f64 = x_supp.iter().map(|&i| xlogx(xs[i])).sum();
    let value = (self_term - cross + tr_y - tr_x).max(0.0);
    Ok(EntropyReport { value: ExtendedReal::Finite(value), support_ok: true, spectrum })
}

pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("probability {p} outside [0, 1]")));
    }
    Ok(-xlogx(p) - xlogx(1.0 - p))
}

/// `g(x) = (x+1) ln(x+1) - x ln x`, the entropy of a thermal mode with
/// mean occupation `x`.
pub fn g_func(x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::InvalidArgument(format!("g(x) needs x >= 0, got {x}")));
    }
    Ok(g_unchecked(x))
}

pub(crate) fn g_unchecked(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else if x.is_infinite() {
        f64::INFINITY
    } else {
        x.ln_1p() + x * (1.0 / x).ln_1p()
    }
}

/// The exponent `P ln(P xi P) P + P X P` in the support eigenbasis of `xi`,
/// together with that basis.
struct SupportExponent {
    basis: DMatrix<C64>,
    exponent: HermitianOp,
}

fn support_exponent(xi: &HermitianOp, x: &HermitianOp) -> Result<SupportExponent> {
    if xi.dim() != x.dim() {
        return Err(Error::DimensionMismatch(format!("{} vs {}", xi.dim(), x.dim())));
    }
    let eig = eig_hermitian(xi);
    eig.check_psd(DEFAULT_CUTOFF)?;
    if eig.lambda_max() <= 0.0 {
        return Err(Error::Undefined("ln Tr exp(ln xi + X) with xi = 0".into()));
    }
    let idx = eig.support_indices(DEFAULT_CUTOFF);
    let basis = DMatrix::from_fn(eig.dim(), idx.len(), |r, c| eig.vectors[(r, idx[c])]);
    let mut m = basis.adjoint() * x.matrix() * &basis;
    for (c, &k) in idx.iter().enumerate() {
        m[(c, c)] += eig.values[k].ln();
    }
    let exponent = HermitianOp::from_hermitian_part(vec![idx.len()], m)?;
    Ok(SupportExponent { basis, exponent })
}

/// `ln Tr exp(P ln(P xi P) P + P X P)` with `P` the support projector of `xi`.
pub fn log_trace_exp(xi: &HermitianOp, x: &HermitianOp) -> Result<f64> {
    let se = support_exponent(xi, x)?;
    Ok(log_sum_exp(&eig_hermitian(&se.exponent).values))
}

/// The value of [`log_trace_exp`] together with the normalized operator
/// `e^L / Tr e^L` embedded in the full space.
pub fn log_trace_exp_with_gibbs(xi: &HermitianOp, x: &HermitianOp) -> Result<(f64, HermitianOp)> {
    let se = support_exponent(xi, x)?;
    let eig = eig_hermitian(&se.exponent);
    let lse = log_sum_exp(&eig.values);
    let w = eig.map(|m| (m - lse).exp());
    let full = &se.basis * w.matrix() * se.basis.adjoint();
    Ok((lse, HermitianOp::from_hermitian_part(x.dims().to_vec(), full)?))
}

pub(crate) fn log_sum_exp(values: &[f64]) -> f64 {
    let m = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + values.iter().map(|&v| (v - m).exp()).sum::<f64>().ln()
}

/// `Tr rho X - ln Tr exp(ln sigma + X)`, a lower bound on `D(rho||sigma)`.
pub fn petz_dual_value(rho: &HermitianOp, sigma: &HermitianOp, x: &HermitianOp) -> Result<f64> {
    ensure_state(rho)?;
    Ok(rho.inner(x) - log_trace_exp(sigma, x)?)
}

/// `D_F(p rho + (1-p) sigma) - [p D_F(rho) + (1-p) D_F(sigma) - h2(p)]`,
/// evaluated with the solver's upper values.
pub fn almost_convexity_gap(
    rho: &HermitianOp,
    sigma: &HermitianOp,
    free: &FreeSetSpec,
    p: f64,
    cfg: &SolverConfig,
) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidArgument(format!("mixing weight {p} outside (0, 1)")));
    }
    ensure_state(rho)?;
    ensure_state(sigma)?;
    let mix = if rho == sigma {
        rho.clone()
    } else {
        let mut m = rho.scale(p);
        m.add_scaled(1.0 - p, sigma);
        m
    };
    let d_mix = minimize_primal(&mix, free, cfg)?.upper;
    let d_rho = minimize_primal(rho, free, cfg)?.upper;
    let d_sigma = if rho == sigma { d_rho } else { minimize_primal(sigma, free, cfg)?.upper };
    Ok(d_mix - (p * d_rho + (1.0 - p) * d_sigma - binary_entropy(p)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_density, random_hermitian, random_pure};
    use approx::assert_abs_diff_eq;
    use nalgebra::DVector;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::LN_2;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn phi2() -> HermitianOp {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        HermitianOp::projector(&[2, 2], &DVector::from_vec(vec![c(s), c(0.0), c(0.0), c(s)])).unwrap()
    }

    fn diag(v: &[f64]) -> HermitianOp {
        HermitianOp::from_real_diagonal(&[v.len()], v).unwrap()
    }

    #[test]
    fn entropy_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let psi = HermitianOp::projector(&[3], &random_pure(3, &mut rng)).unwrap();
        assert!(von_neumann_entropy(&psi).unwrap().abs() < 1e-12);
        assert_abs_diff_eq!(
            von_neumann_entropy(&HermitianOp::maximally_mixed(&[5])).unwrap(),
            5f64.ln(),
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(
            von_neumann_entropy(&diag(&[0.5, 0.25, 0.25])).unwrap(),
            1.5 * LN_2,
            epsilon = 1e-15
        );
    }

    #[test]
    fn relative_entropy_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rho = random_density(&[3], &mut rng);
        assert!(relative_entropy(&rho, &rho).unwrap().value.to_f64() < 1e-13);

        let r = relative_entropy(&diag(&[1.0, 0.0]), &diag(&[0.5, 0.5])).unwrap();
        assert_abs_diff_eq!(r.value.to_f64(), LN_2, epsilon = 1e-15);

        let phi = phi2();
        let id = HermitianOp::identity(&[2, 2]);
        let sigma1 = &phi.scale(0.5) + &(&id - &phi).scale(1.0 / 6.0);
        let r = relative_entropy(&phi, &sigma1).unwrap();
        assert_abs_diff_eq!(r.value.to_f64(), LN_2, epsilon = 1e-12);
    }

    #[test]
    fn relative_entropy_support_conventions() {
        let zero = HermitianOp::zeros(&[2]);
        let y = diag(&[0.3, 0.2]);
        assert_eq!(relative_entropy(&zero, &zero).unwrap().value, ExtendedReal::Finite(0.0));
        assert_abs_diff_eq!(relative_entropy(&zero, &y).unwrap().value.to_f64(), 0.5, epsilon = 1e-15);
        let r = relative_entropy(&y, &zero).unwrap();
        assert_eq!(r.value, ExtendedReal::PosInf);
        assert!(!r.support_ok);
        let r = relative_entropy(&diag(&[0.5, 0.5]), &diag(&[1.0, 0.0])).unwrap();
        assert_eq!(r.value, ExtendedReal::PosInf);
        let r = relative_entropy(&diag(&[1.0, 0.0]), &diag(&[0.5, 0.0])).unwrap();
        assert_abs_diff_eq!(r.value.to_f64(), LN_2 + 0.5 - 1.0, epsilon = 1e-15);
        assert!(matches!(
            relative_entropy(&diag(&[1.0, -0.5]), &y),
            Err(Error::NotPsd { .. })
        ));
    }

    #[test]
    fn relative_entropy_splitting_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let x = random_density(&[3], &mut rng).scale(0.7);
            let y = random_density(&[3], &mut rng).scale(1.3);
            let (ly, _) = crate::opcore::matrix_log_support(&y, 1e-12).unwrap();
            let split = -von_neumann_entropy(&x).unwrap() - x.inner(&ly) + y.trace() - x.trace();
            assert_abs_diff_eq!(relative_entropy(&x, &y).unwrap().value.to_f64(), split, epsilon = 1e-9);
        }
    }

    #[test]
    fn binary_and_g() {
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        assert_abs_diff_eq!(binary_entropy(0.5).unwrap(), LN_2, epsilon = 1e-16);
        for k in 0..=100 {
            let p = k as f64 / 100.0;
            assert_abs_diff_eq!(binary_entropy(p).unwrap(), binary_entropy(1.0 - p).unwrap(), epsilon = 1e-15);
        }
        assert!(binary_entropy(1.5).is_err());

        assert_eq!(g_func(0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(g_func(1.0).unwrap(), 2.0 * LN_2, epsilon = 1e-15);
        assert!(g_func(-1.0).is_err());
        let mut prev = 0.0;
        for k in 1..1000 {
            let v = g_func(k as f64 * 0.01).unwrap();
            assert!(v > prev);
            prev = v;
        }
        // direct formula at moderate x
        let x: f64 = 3.7;
        assert_abs_diff_eq!(g_func(x).unwrap(), (x + 1.0) * (x + 1.0).ln() - x * x.ln(), epsilon = 1e-13);
    }

    #[test]
    fn log_trace_exp_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let xi = random_density(&[3], &mut rng);
        let x = HermitianOp::identity(&[3]).scale(0.8);
        assert_abs_diff_eq!(log_trace_exp(&xi, &x).unwrap(), 0.8, epsilon = 1e-13);

        let xi = diag(&[0.2, 0.3, 0.5]);
        let x = diag(&[1.0, -2.0, 0.5]);
        let want = (0.2 * 1f64.exp() + 0.3 * (-2f64).exp() + 0.5 * 0.5f64.exp()).ln();
        assert_abs_diff_eq!(log_trace_exp(&xi, &x).unwrap(), want, epsilon = 1e-14);

        // unfaithful xi: only the support contributes
        let xi = diag(&[0.5, 0.0, 0.5]);
        let want = (0.5 * 1f64.exp() + 0.5 * 0.5f64.exp()).ln();
        assert_abs_diff_eq!(log_trace_exp(&xi, &x).unwrap(), want, epsilon = 1e-14);

        assert!(matches!(log_trace_exp(&HermitianOp::zeros(&[3]), &x), Err(Error::Undefined(_))));
    }

    #[test]
    fn log_trace_exp_matches_trotter_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..3 {
            let xi = random_density(&[3], &mut rng);
            let x = random_hermitian(&[3], &mut rng);
            let n = 1u32 << 14;
            let eig = eig_hermitian(&xi);
            let a = eig.map(|v| v.powf(1.0 / n as f64));
            let b = crate::opcore::matrix_exp(&x.scale(1.0 / n as f64));
            let mut step = a.matrix() * b.matrix();
            // (AB)^n by repeated squaring: n is a power of two
            for _ in 0..14 {
                step = &step * &step;
            }
            let tr: f64 = step.diagonal().iter().map(|z| z.re).sum();
            assert_abs_diff_eq!(log_trace_exp(&xi, &x).unwrap(), tr.ln(), epsilon = 1e-6);
        }
    }

    #[test]
    fn petz_dual_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let rho = random_density(&[3], &mut rng);
        let zero = HermitianOp::zeros(&[3]);
        assert!(petz_dual_value(&rho, &rho, &zero).unwrap().abs() < 1e-14);

        let rho = diag(&[0.6, 0.3, 0.1]);
        let sigma = diag(&[0.2, 0.5, 0.3]);
        let x = diag(&[(0.6f64 / 0.2).ln(), (0.3f64 / 0.5).ln(), (0.1f64 / 0.3).ln()]);
        let d = relative_entropy(&rho, &sigma).unwrap().value.to_f64();
        assert_abs_diff_eq!(petz_dual_value(&rho, &sigma, &x).unwrap(), d, epsilon = 1e-14);
    }

    #[test]
    fn log_trace_exp_gibbs_state_is_normalized() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let xi = random_density(&[4], &mut rng);
        let x = random_hermitian(&[4], &mut rng);
        let (v, w) = log_trace_exp_with_gibbs(&xi, &x).unwrap();
        assert_abs_diff_eq!(v, log_trace_exp(&xi, &x).unwrap(), epsilon = 1e-14);
        assert_abs_diff_eq!(w.trace(), 1.0, epsilon = 1e-13);
    }

    #[test]
    fn ensure_state_rejects() {
        assert!(ensure_state(&diag(&[0.5, 0.4])).is_err());
        assert!(ensure_state(&diag(&[1.2, -0.2])).is_err());
        assert!(ensure_state(&diag(&[0.5, 0.5])).is_ok());
    }
}
