//! Continuous-variable states in a truncated Fock basis.
//!
//! Quadratures are ordered `(x_1..x_m, p_1..p_m)` with `x = (a + a^dag)/sqrt 2`,
//! so the vacuum has covariance `V = I` and a thermal mode with mean
//! occupation `N` has symplectic eigenvalue `2N + 1`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::entropy::{ensure_state, g_unchecked, von_neumann_entropy};
use crate::error::{Error, Result};
use crate::opcore::{eig_hermitian, partial_trace, HermitianOp};

/// Tail mass above which moments are flagged as unreliable.
pub const LEAKAGE_WARN: f64 = 1e-4;
/// Tail mass above which the non-Gaussianity is refused.
pub const LEAKAGE_ERROR: f64 = 1e-2;
/// Symplectic eigenvalues below `1 - UNPHYSICAL_TOL` are rejected.
pub const UNPHYSICAL_TOL: f64 = 1e-6;
const NU_FLOOR: f64 = 1e-10;

/// An `m`-mode state on `cutoff^m` Fock levels, mode 1 the leading factor.
#[derive(Clone, Debug)]
pub struct FockRep {
    modes: usize,
    cutoff: usize,
    state: HermitianOp,
}

impl FockRep {
    pub fn new(modes: usize, cutoff: usize, state: HermitianOp) -> Result<Self> {
        if modes == 0 || cutoff < 2 {
            return Err(Error::InvalidArgument(format!(
                "need at least one mode and cutoff >= 2, got {modes} modes, cutoff {cutoff}"
            )));
        }
        if state.dims() != vec![cutoff; modes].as_slice() {
            return Err(Error::DimensionMismatch(format!(
                "state dims {:?} differ from {modes} modes of cutoff {cutoff}",
                state.dims()
            )));
        }
        ensure_state(&state)?;
        Ok(Self { modes, cutoff, state })
    }

    /// Single-mode Fock state `|n>`.
    pub fn fock(n: usize, cutoff: usize) -> Result<Self> {
        if n >= cutoff {
            return Err(Error::InvalidIndex { index: n, count: cutoff });
        }
        let mut diag = vec![0.0; cutoff];
        diag[n] = 1.0;
        Self::new(1, cutoff, HermitianOp::from_real_diagonal(&[cutoff], &diag)?)
    }

    /// Single-mode thermal state with mean occupation `n_mean`, truncated
    /// and renormalized.
    pub fn thermal(n_mean: f64, cutoff: usize) -> Result<Self> {
        if !(n_mean >= 0.0) {
            return Err(Error::InvalidArgument(format!("mean occupation {n_mean} is negative")));
        }
        let q = n_mean / (n_mean + 1.0);
        let w: Vec<f64> = (0..cutoff).map(|k| q.powi(k as i32)).collect();
        let z: f64 = w.iter().sum();
        let diag: Vec<f64> = w.iter().map(|p| p / z).collect();
        Self::new(1, cutoff, HermitianOp::from_real_diagonal(&[cutoff], &diag)?)
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn state(&self) -> &HermitianOp {
        &self.state
    }

    /// Largest per-mode probability in the top two Fock levels.
    pub fn leakage(&self) -> f64 {
        let c = self.cutoff;
        (0..self.modes)
            .map(|j| {
                let marginal = if self.modes == 1 {
                    self.state.clone()
                } else {
                    partial_trace(&self.state, &[j]).expect("mode index in range")
                };
                let m = marginal.matrix();
                (c.saturating_sub(2)..c).map(|n| m[(n, n)].re).sum::<f64>()
            })
            .fold(0.0, f64::max)
    }
}

/// Annihilation operator on `dim` levels.
fn annihilation(dim: usize) -> DMatrix<C64> {
    let mut a = DMatrix::zeros(dim, dim);
    for n in 1..dim {
        a[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    a
}

fn embed_mode(op: &DMatrix<C64>, mode: usize, modes: usize) -> DMatrix<C64> {
    let d = op.nrows();
    let id = DMatrix::<C64>::identity(d, d);
    let mut out = DMatrix::from_element(1, 1, C64::new(1.0, 0.0));
    for k in 0..modes {
        out = out.kronecker(if k == mode { op } else { &id });
    }
    out
}

/// Single-mode `x` and `p` on `dim` levels.
fn single_quadratures(dim: usize) -> (DMatrix<C64>, DMatrix<C64>) {
    let a = annihilation(dim);
    let ad = a.adjoint();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let x = (&a + &ad) * C64::new(s, 0.0);
    let p = (&a - &ad) * C64::new(0.0, -s);
    (x, p)
}

/// Truncated quadratures `(x_1..x_m, p_1..p_m)`.
pub fn quadrature_ops(modes: usize, cutoff: usize) -> Result<Vec<HermitianOp>> {
    if modes == 0 || cutoff < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least one mode and cutoff >= 2, got {modes} modes, cutoff {cutoff}"
        )));
    }
    let (x, p) = single_quadratures(cutoff);
    let dims = vec![cutoff; modes];
    let mut out = Vec::with_capacity(2 * modes);
    for single in [&x, &p] {
        for j in 0..modes {
            out.push(HermitianOp::from_hermitian_part(dims.clone(), embed_mode(single, j, modes))?);
        }
    }
    Ok(out)
}

/// First and second moments in the convention `V = Tr rho {r - s, (r - s)^T}`.
#[derive(Clone, Debug)]
pub struct MomentData {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
    /// Per-mode tail mass, see [`FockRep::leakage`].
    pub leakage: f64,
    pub leakage_warning: bool,
}

/// `Omega = [[0, I], [-I, 0]]`.
pub fn symplectic_form(modes: usize) -> DMatrix<f64> {
    let mut w = DMatrix::zeros(2 * modes, 2 * modes);
    for j in 0..modes {
        w[(j, modes + j)] = 1.0;
        w[(modes + j, j)] = -1.0;
    }
    w
}

/// Moments with products `r_j r_k` formed one level above the cutoff and
/// compressed, so second moments have their exact Fock matrix elements.
pub fn moments(rho: &FockRep) -> MomentData {
    let m = rho.modes;
    let c = rho.cutoff;
    let (x1, p1) = single_quadratures(c + 1);
    let one = [x1, p1];
    // r_j on cutoff+1 levels per mode
    let r_big: Vec<DMatrix<C64>> =
        (0..2 * m).map(|k| embed_mode(&one[k / m], k % m, m)).collect();
    // indices of the truncated subspace inside the enlarged one
    let keep: Vec<usize> = (0..c.pow(m as u32))
        .map(|i| {
            let mut rem = i;
            let mut big = 0;
            let mut stride = 1;
            for _ in 0..m {
                big += (rem % c) * stride;
                rem /= c;
                stride *= c + 1;
            }
            big
        })
        .collect();
    let compress = |op: &DMatrix<C64>| DMatrix::from_fn(keep.len(), keep.len(), |i, j| op[(keep[i], keep[j])]);
    let rho_m = rho.state.matrix();
    let expect = |op: &DMatrix<C64>| -> C64 { (rho_m.component_mul(&op.transpose())).sum() };

    let mean = DVector::from_fn(2 * m, |k, _| expect(&compress(&r_big[k])).re);
    let mut cov = DMatrix::zeros(2 * m, 2 * m);
    for j in 0..2 * m {
        for k in j..2 * m {
            let prod = compress(&(&r_big[j] * &r_big[k]));
            let v = 2.0 * expect(&prod).re - 2.0 * mean[j] * mean[k];
            cov[(j, k)] = v;
            cov[(k, j)] = v;
        }
    }
    let leakage = rho.leakage();
    let leakage_warning = leakage > LEAKAGE_WARN;
    if leakage_warning {
        log::warn!("Fock truncation leakage {leakage:.3e} exceeds {LEAKAGE_WARN:e}");
    }
    MomentData { mean, covariance: cov, leakage, leakage_warning }
}

/// Symplectic eigenvalues of `V`, ascending.
pub fn symplectic_eigenvalues(v: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = v.nrows();
    if n == 0 || n % 2 != 0 || v.ncols() != n {
        return Err(Error::DimensionMismatch(format!("covariance must be 2m x 2m, got {}x{}", n, v.ncols())));
    }
    let asym = (v - v.transpose()).abs().max();
    if asym > 1e-10 * v.abs().max().max(1.0) {
        return Err(Error::NotHermitian { max_asymmetry: asym });
    }
    let sym = (v + v.transpose()) * 0.5;
    let se = sym.clone().symmetric_eigen();
    let lmin = se.eigenvalues.min();
    if !(lmin > 0.0) {
        return Err(Error::NotPsd { min_eigenvalue: lmin });
    }
    let sqrt_v = &se.eigenvectors
        * DMatrix::from_diagonal(&se.eigenvalues.map(f64::sqrt))
        * se.eigenvectors.transpose();
    let m = n / 2;
    let k = &sqrt_v * symplectic_form(m) * &sqrt_v;
    // i K is Hermitian with spectrum {+-nu_j}
    let ik = k.map(|a| C64::new(0.0, a));
    let op = HermitianOp::from_hermitian_part(vec![n], ik)?;
    let vals = eig_hermitian(&op).values;
    let nus: Vec<f64> = vals[m..].to_vec();
    if let Some(&bad) = nus.iter().find(|&&nu| nu < 1.0 - UNPHYSICAL_TOL) {
        return Err(Error::Unphysical { nu: bad });
    }
    Ok(nus)
}

/// Entropy of a Gaussian mode with symplectic eigenvalue `nu`.
pub fn h_nu(nu: f64) -> f64 {
    let n = (nu - 1.0) / 2.0;
    if n <= NU_FLOOR {
        0.0
    } else {
        g_unchecked(n)
    }
}

/// Entropy of the Gaussian state with covariance `V`.
pub fn gaussian_entropy(v: &DMatrix<f64>) -> Result<f64> {
    Ok(symplectic_eigenvalues(v)?.into_iter().map(h_nu).sum())
}

/// `S(rho_G) - S(rho)` with `rho_G` the Gaussian state of equal moments.
pub fn relent_non_gaussianity(rho: &FockRep) -> Result<f64> {
    let md = moments(rho);
    if md.leakage > LEAKAGE_ERROR {
        return Err(Error::Leakage { leakage: md.leakage, limit: LEAKAGE_ERROR });
    }
    Ok(gaussian_entropy(&md.covariance)? - von_neumann_entropy(&rho.state)?)
}
