//! Dense Hermitian operators on finite tensor-product spaces.
//!
//! Every operator carries its tensor factorization (`dims`), so partial
//! traces, partial transposes and factor permutations can be expressed by
//! subsystem index. Matrix functions are computed spectrally. Logarithms
//! follow the support convention: eigenvalues at or below
//! `cutoff * lambda_max` are treated as exact zeros and the logarithm is
//! taken on the complementary subspace only.

use std::cmp::Ordering;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Absolute per-entry tolerance for `A == A^dag`.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Default relative cutoff below which eigenvalues count as zero.
pub const DEFAULT_CUTOFF: f64 = 1e-12;

/// Eigenvalues closer than this (relative to the larger one) use the
/// diagonal branch of the logarithm's divided difference.
const LOEWNER_DEGENERACY: f64 = 1e-10;

/// Relative tolerance used to detect operands that leak outside a support.
const SUPPORT_LEAK_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOp {
    dims: Vec<usize>,
    mat: DMatrix<C64>,
}

impl HermitianOp {
    /// Validates squareness, the factorization and Hermiticity.
    pub fn new(dims: Vec<usize>, mat: DMatrix<C64>) -> Result<Self> {
        check_dims(&dims, &mat)?;
        let asym = max_asymmetry(&mat);
        if asym > HERMITIAN_TOL {
            return Err(Error::NotHermitian { max_asymmetry: asym });
        }
        Ok(Self { dims, mat }.hermitized())
    }

    /// Builds an operator from a matrix that is Hermitian up to rounding,
    /// replacing it by its Hermitian part.
    pub fn from_hermitian_part(dims: Vec<usize>, mat: DMatrix<C64>) -> Result<Self> {
        check_dims(&dims, &mat)?;
        Ok(Self { dims, mat }.hermitized())
    }

    pub(crate) fn from_parts(dims: Vec<usize>, mat: DMatrix<C64>) -> Self {
        debug_assert_eq!(dims.iter().product::<usize>(), mat.nrows());
        Self { dims, mat }.hermitized()
    }

    pub fn zeros(dims: &[usize]) -> Self {
        let d = dims.iter().product();
        Self { dims: dims.to_vec(), mat: DMatrix::zeros(d, d) }
    }

    pub fn identity(dims: &[usize]) -> Self {
        let d = dims.iter().product();
        Self { dims: dims.to_vec(), mat: DMatrix::identity(d, d) }
    }

    /// The maximally mixed state `I/d`.
    pub fn maximally_mixed(dims: &[usize]) -> Self {
        let d: usize = dims.iter().product();
        Self::identity(dims) * (1.0 / d as f64)
    }

    pub fn from_real_diagonal(dims: &[usize], diag: &[f64]) -> Result<Self> {
        let d: usize = dims.iter().product();
        if diag.len() != d {
            return Err(Error::DimensionMismatch(format!(
                "diagonal of length {} for total dimension {d}",
                diag.len()
            )));
        }
        let v = DVector::from_iterator(d, diag.iter().map(|&x| C64::new(x, 0.0)));
        Ok(Self { dims: dims.to_vec(), mat: DMatrix::from_diagonal(&v) })
    }

    /// Rank-one projector `|psi><psi|` (no normalization is applied).
    pub fn projector(dims: &[usize], psi: &DVector<C64>) -> Result<Self> {
        let d: usize = dims.iter().product();
        if psi.len() != d {
            return Err(Error::DimensionMismatch(format!(
                "vector of length {} for total dimension {d}",
                psi.len()
            )));
        }
        Ok(Self { dims: dims.to_vec(), mat: psi * psi.adjoint() })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.mat
    }

    /// Reinterprets the same matrix under another factorization.
    pub fn with_dims(mut self, dims: Vec<usize>) -> Result<Self> {
        check_dims(&dims, &self.mat)?;
        self.dims = dims;
        Ok(self)
    }

    pub fn trace(&self) -> f64 {
        self.mat.diagonal().iter().map(|z| z.re).sum()
    }

    /// `Tr[A B]`, real for Hermitian operands.
    pub fn inner(&self, other: &HermitianOp) -> f64 {
        // Tr[A B] = sum_ij A_ij B_ji = sum_ij A_ij conj(B_ij)
        self.mat
            .iter()
            .zip(other.mat.iter())
            .map(|(a, b)| (a * b.conj()).re)
            .sum()
    }

    /// `<psi|A|psi>`.
    pub fn expectation(&self, psi: &DVector<C64>) -> f64 {
        (psi.adjoint() * &self.mat * psi)[(0, 0)].re
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.mat.norm()
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.mat.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&self, c: f64) -> Self {
        Self { dims: self.dims.clone(), mat: &self.mat * C64::new(c, 0.0) }
    }

    /// `self + c * other`, in place.
    pub fn add_scaled(&mut self, c: f64, other: &HermitianOp) {
        self.mat.zip_apply(&other.mat, |a, b| *a += b * c);
    }

    /// Adds `c * |psi><psi|` in place.
    pub fn add_scaled_projector(&mut self, c: f64, psi: &DVector<C64>) {
        let d = self.dim();
        for j in 0..d {
            let pj = psi[j].conj() * c;
            for i in 0..d {
                self.mat[(i, j)] += psi[i] * pj;
            }
        }
    }

    /// Unitary conjugation `U A U^dag`.
    pub fn conjugate_by(&self, u: &DMatrix<C64>) -> Self {
        Self::from_parts(self.dims.clone(), u * &self.mat * u.adjoint())
    }

    /// Embeds a compression `V^dag A V` for an isometry `V` (columns).
    pub fn compress(&self, v: &DMatrix<C64>, dims: Vec<usize>) -> Result<Self> {
        Self::from_hermitian_part(dims, v.adjoint() * &self.mat * v)
    }

    fn hermitized(mut self) -> Self {
        let d = self.mat.nrows();
        for i in 0..d {
            self.mat[(i, i)].im = 0.0;
            for j in (i + 1)..d {
                let avg = (self.mat[(i, j)] + self.mat[(j, i)].conj()) * 0.5;
                self.mat[(i, j)] = avg;
                self.mat[(j, i)] = avg.conj();
            }
        }
        self
    }
}

impl Add<&HermitianOp> for &HermitianOp {
    type Output = HermitianOp;
    fn add(self, rhs: &HermitianOp) -> HermitianOp {
        assert_eq!(self.dim(), rhs.dim(), "operator dimensions differ");
        HermitianOp { dims: self.dims.clone(), mat: &self.mat + &rhs.mat }
    }
}

impl Sub<&HermitianOp> for &HermitianOp {
    type Output = HermitianOp;
    fn sub(self, rhs: &HermitianOp) -> HermitianOp {
        assert_eq!(self.dim(), rhs.dim(), "operator dimensions differ");
        HermitianOp { dims: self.dims.clone(), mat: &self.mat - &rhs.mat }
    }
}

impl Mul<f64> for HermitianOp {
    type Output = HermitianOp;
    fn mul(mut self, rhs: f64) -> HermitianOp {
        self.mat *= C64::new(rhs, 0.0);
        self
    }
}

impl Neg for &HermitianOp {
    type Output = HermitianOp;
    fn neg(self) -> HermitianOp {
        HermitianOp { dims: self.dims.clone(), mat: -&self.mat }
    }
}

fn check_dims(dims: &[usize], mat: &DMatrix<C64>) -> Result<()> {
    if mat.nrows() != mat.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "matrix is {}x{}, not square",
            mat.nrows(),
            mat.ncols()
        )));
    }
    if dims.is_empty() || dims.contains(&0) {
        return Err(Error::DimensionMismatch(format!("invalid subsystem dimensions {dims:?}")));
    }
    let d: usize = dims.iter().product();
    if d != mat.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "dims {dims:?} give total dimension {d}, matrix has {}",
            mat.nrows()
        )));
    }
    Ok(())
}

/// Largest entry of `|A - A^dag|`.
pub fn max_asymmetry(mat: &DMatrix<C64>) -> f64 {
    let d = mat.nrows().min(mat.ncols());
    let mut worst = 0.0f64;
    for i in 0..d {
        for j in i..d {
            worst = worst.max((mat[(i, j)] - mat[(j, i)].conj()).norm());
        }
    }
    worst
}

// ---------------------------------------------------------------------------
// Spectral decomposition

/// Eigen-decomposition `A = U diag(values) U^dag`, ascending eigenvalues.
#[derive(Clone, Debug)]
pub struct EigenSystem {
    pub dims: Vec<usize>,
    pub values: Vec<f64>,
    /// Unitary matrix whose columns are the eigenvectors.
    pub vectors: DMatrix<C64>,
}

/// Projector onto the support of a PSD operator.
#[derive(Clone, Debug)]
pub struct SupportInfo {
    pub rank: usize,
    pub projector: HermitianOp,
    pub cutoff_used: f64,
}

/// Ascending eigen-decomposition with deterministic ordering.
///
/// Eigenvector phases are fixed so the largest-modulus component is real
/// and positive. Within a run of (numerically) equal eigenvalues the
/// vectors are ordered lexicographically by their components, comparing
/// real then imaginary parts.
pub fn eig_hermitian(a: &HermitianOp) -> EigenSystem {
    let d = a.dim();
    let se = a.mat.clone().symmetric_eigen();
    let finite = se.eigenvalues.iter().all(|x| x.is_finite()) && se.eigenvectors.iter().all(|z| z.is_finite());
    let (eigenvalues, mut vectors) = if finite {
        (se.eigenvalues.as_slice().to_vec(), se.eigenvectors)
    } else {
        jacobi_eigen(&a.mat)
    };
    for k in 0..d {
        fix_phase(&mut vectors, k);
    }
    let scale = eigenvalues.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let tie = 1e-12 * scale;

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| eigenvalues[i].total_cmp(&eigenvalues[j]));
    let mut start = 0;
    while start < d {
        let mut end = start + 1;
        while end < d && eigenvalues[order[end]] - eigenvalues[order[end - 1]] <= tie {
            end += 1;
        }
        if end - start > 1 {
            order[start..end].sort_by(|&i, &j| lex_cmp(&vectors, i, j));
        }
        start = end;
    }

    let values = order.iter().map(|&k| eigenvalues[k]).collect();
    let sorted = DMatrix::from_fn(d, d, |r, c| vectors[(r, order[c])]);
    EigenSystem { dims: a.dims.clone(), values, vectors: sorted }
}

const JACOBI_MAX_SWEEPS: usize = 100;

/// Cyclic Jacobi for Hermitian matrices. Slower than the tridiagonal QR
/// path, used only when that path returns non-finite output, which happens
/// on some highly degenerate sparse inputs.
fn jacobi_eigen(m: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let d = m.nrows();
    let mut a = m.clone();
    let mut v = DMatrix::<C64>::identity(d, d);
    let total = a.norm();
    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..d).flat_map(|i| (0..d).map(move |j| (i, j))).filter(|(i, j)| i != j).map(|(i, j)| a[(i, j)].norm_sqr()).sum();
        if off.sqrt() <= f64::EPSILON * total {
            break;
        }
        for p in 0..d {
            for q in p + 1..d {
                let apq = a[(p, q)];
                let r = apq.norm();
                if r <= f64::MIN_POSITIVE {
                    continue;
                }
                // J = diag(1, conj(e)) times a real rotation zeroing |a_pq|.
                let e = apq / r;
                let theta = (a[(q, q)].re - a[(p, p)].re) / (2.0 * r);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let jpp = C64::new(c, 0.0);
                let jpq = C64::new(s, 0.0);
                let jqp = -e.conj() * s;
                let jqq = e.conj() * c;
                for k in 0..d {
                    let (x, y) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = x * jpp + y * jqp;
                    a[(k, q)] = x * jpq + y * jqq;
                    let (x, y) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = x * jpp + y * jqp;
                    v[(k, q)] = x * jpq + y * jqq;
                }
                for k in 0..d {
                    let (x, y) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = jpp.conj() * x + jqp.conj() * y;
                    a[(q, k)] = jpq.conj() * x + jqq.conj() * y;
                }
                a[(p, q)] = C64::new(0.0, 0.0);
                a[(q, p)] = C64::new(0.0, 0.0);
                a[(p, p)].im = 0.0;
                a[(q, q)].im = 0.0;
            }
        }
    }
    ((0..d).map(|i| a[(i, i)].re).collect(), v)
}

fn fix_phase(v: &mut DMatrix<C64>, col: usize) {
    let d = v.nrows();
    let max = (0..d).map(|r| v[(r, col)].norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return;
    }
    let pivot = (0..d)
        .find(|&r| v[(r, col)].norm() >= max * (1.0 - 1e-12))
        .unwrap_or(0);
    let z = v[(pivot, col)];
    let phase = z.conj() / z.norm();
    for r in 0..d {
        v[(r, col)] *= phase;
    }
}

fn lex_cmp(v: &DMatrix<C64>, i: usize, j: usize) -> Ordering {
    for r in 0..v.nrows() {
        let (a, b) = (v[(r, i)], v[(r, j)]);
        match a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    Ordering::Equal
}

impl EigenSystem {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn lambda_max(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    pub fn lambda_min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    /// Absolute threshold `cutoff * max(lambda_max, 0)`.
    pub fn threshold(&self, cutoff: f64) -> f64 {
        cutoff * self.lambda_max().max(0.0)
    }

    /// Indices of eigenvalues strictly above the support threshold.
    pub fn support_indices(&self, cutoff: f64) -> Vec<usize> {
        let th = self.threshold(cutoff);
        (0..self.dim()).filter(|&k| self.values[k] > th).collect()
    }

    /// Rejects spectra with eigenvalues below `-cutoff * lambda_max`.
    pub fn check_psd(&self, cutoff: f64) -> Result<()> {
        let min = self.lambda_min();
        if min < -self.threshold(cutoff) || (self.lambda_max() <= 0.0 && min < 0.0) {
            return Err(Error::NotPsd { min_eigenvalue: min });
        }
        Ok(())
    }

    /// `U diag(f(lambda)) U^dag` over all eigenvalues.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> HermitianOp {
        let weights: Vec<f64> = self.values.iter().map(|&x| f(x)).collect();
        self.weighted_outer(&weights, None)
    }

    /// `U diag(f(lambda)) U^dag` restricted to the support; zero elsewhere.
    pub fn map_support(&self, cutoff: f64, f: impl Fn(f64) -> f64) -> HermitianOp {
        let th = self.threshold(cutoff);
        let weights: Vec<f64> = self
            .values
            .iter()
            .map(|&x| if x > th { f(x) } else { 0.0 })
            .collect();
        self.weighted_outer(&weights, None)
    }

    fn weighted_outer(&self, weights: &[f64], cols: Option<&[usize]>) -> HermitianOp {
        let d = self.dim();
        let idx: Vec<usize> = match cols {
            Some(c) => c.to_vec(),
            None => (0..d).filter(|&k| weights[k] != 0.0).collect(),
        };
        let u = DMatrix::from_fn(d, idx.len(), |r, c| self.vectors[(r, idx[c])]);
        let uw = DMatrix::from_fn(d, idx.len(), |r, c| {
            self.vectors[(r, idx[c])] * weights[idx[c]]
        });
        HermitianOp::from_parts(self.dims.clone(), uw * u.adjoint())
    }

    pub fn reconstruct(&self) -> HermitianOp {
        self.weighted_outer(&self.values, Some(&(0..self.dim()).collect::<Vec<_>>()))
    }

    pub fn support(&self, cutoff: f64) -> SupportInfo {
        let idx = self.support_indices(cutoff);
        let mut w = vec![0.0; self.dim()];
        for &k in &idx {
            w[k] = 1.0;
        }
        SupportInfo {
            rank: idx.len(),
            projector: self.weighted_outer(&w, Some(&idx)),
            cutoff_used: cutoff,
        }
    }

    /// Columns of `U` spanning the support.
    pub fn support_basis(&self, cutoff: f64) -> DMatrix<C64> {
        let idx = self.support_indices(cutoff);
        DMatrix::from_fn(self.dim(), idx.len(), |r, c| self.vectors[(r, idx[c])])
    }
}

/// Logarithm on the support: `P^dag ln(P A P^dag) P`.
pub fn matrix_log_support(a: &HermitianOp, cutoff: f64) -> Result<(HermitianOp, SupportInfo)> {
    let eig = eig_hermitian(a);
    eig.check_psd(cutoff)?;
    Ok((eig.map_support(cutoff, f64::ln), eig.support(cutoff)))
}

pub fn matrix_exp(h: &HermitianOp) -> HermitianOp {
    eig_hermitian(h).map(f64::exp)
}

/// Sum of singular values; for Hermitian input the sum of `|lambda|`.
pub fn trace_norm(a: &HermitianOp) -> f64 {
    eig_hermitian(a).values.iter().map(|x| x.abs()).sum()
}

// ---------------------------------------------------------------------------
// Tensor bookkeeping

pub(crate) fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * dims[k + 1];
    }
    s
}

/// For every multi-index over `factors` (row-major, in the given order),
/// the offset it contributes to a full linear index.
pub(crate) fn factor_offsets(dims: &[usize], factors: &[usize]) -> Vec<usize> {
    let full = strides(dims);
    let sub: Vec<usize> = factors.iter().map(|&f| dims[f]).collect();
    let n: usize = sub.iter().product();
    let mut out = Vec::with_capacity(n);
    let mut digit = vec![0usize; factors.len()];
    for _ in 0..n {
        out.push(factors.iter().zip(&digit).map(|(&f, &x)| x * full[f]).sum());
        for k in (0..factors.len()).rev() {
            digit[k] += 1;
            if digit[k] < sub[k] {
                break;
            }
            digit[k] = 0;
        }
    }
    out
}

pub(crate) fn complement(n: usize, set: &[usize]) -> Vec<usize> {
    (0..n).filter(|k| !set.contains(k)).collect()
}

fn validate_factor_set(count: usize, set: &[usize]) -> Result<Vec<usize>> {
    let mut s = set.to_vec();
    s.sort_unstable();
    s.dedup();
    if let Some(&bad) = s.iter().find(|&&k| k >= count) {
        return Err(Error::InvalidIndex { index: bad, count });
    }
    Ok(s)
}

/// Traces out every factor not listed in `keep`. The result keeps the
/// listed factors in ascending order.
pub fn partial_trace(a: &HermitianOp, keep: &[usize]) -> Result<HermitianOp> {
    if keep.is_empty() {
        return Err(Error::InvalidArgument("partial trace needs a non-empty keep set".into()));
    }
    let keep = validate_factor_set(a.dims.len(), keep)?;
    let traced = complement(a.dims.len(), &keep);
    let ok = factor_offsets(&a.dims, &keep);
    let ot = factor_offsets(&a.dims, &traced);
    let n = ok.len();
    let m = &a.mat;
    let out = DMatrix::from_fn(n, n, |i, j| {
        ot.iter().map(|&t| m[(ok[i] + t, ok[j] + t)]).sum::<C64>()
    });
    let dims = keep.iter().map(|&k| a.dims[k]).collect();
    Ok(HermitianOp::from_parts(dims, out))
}

/// Transposes a single tensor factor in the computational basis.
pub fn partial_transpose(a: &HermitianOp, subsystem: usize) -> Result<HermitianOp> {
    partial_transpose_set(a, &[subsystem])
}

/// Transposes every factor in `factors`.
pub fn partial_transpose_set(a: &HermitianOp, factors: &[usize]) -> Result<HermitianOp> {
    let set = validate_factor_set(a.dims.len(), factors)?;
    let d = a.dim();
    let st = strides(&a.dims);
    let tpart: Vec<usize> = (0..d)
        .map(|i| set.iter().map(|&f| (i / st[f]) % a.dims[f] * st[f]).sum())
        .collect();
    let m = &a.mat;
    let out = DMatrix::from_fn(d, d, |r, c| {
        let rr = r - tpart[r] + tpart[c];
        let cc = c - tpart[c] + tpart[r];
        m[(rr, cc)]
    });
    Ok(HermitianOp { dims: a.dims.clone(), mat: out })
}

/// Reorders tensor factors: factor `k` of the result is factor `order[k]`
/// of the input.
pub fn permute_factors(a: &HermitianOp, order: &[usize]) -> Result<HermitianOp> {
    let n = a.dims.len();
    let mut seen = order.to_vec();
    seen.sort_unstable();
    if seen != (0..n).collect::<Vec<_>>() {
        return Err(Error::InvalidArgument(format!("{order:?} is not a permutation of 0..{n}")));
    }
    let map = factor_offsets(&a.dims, order);
    let m = &a.mat;
    let out = DMatrix::from_fn(map.len(), map.len(), |i, j| m[(map[i], map[j])]);
    let dims = order.iter().map(|&k| a.dims[k]).collect();
    Ok(HermitianOp { dims, mat: out })
}

/// Kronecker product with concatenated factorization.
pub fn tensor(a: &HermitianOp, b: &HermitianOp) -> HermitianOp {
    let mut dims = a.dims.clone();
    dims.extend_from_slice(&b.dims);
    HermitianOp { dims, mat: a.mat.kronecker(&b.mat) }
}

pub fn tensor_vec(a: &DVector<C64>, b: &DVector<C64>) -> DVector<C64> {
    a.kronecker(b)
}

// ---------------------------------------------------------------------------
// Frechet derivative of the logarithm

/// Divided-difference kernel of `ln` in the eigenbasis of a PSD operator
/// `xi`, i.e. the Loewner form of
/// `Gamma_xi(X) = int_0^inf (xi + s)^-1 X (xi + s)^-1 ds`.
#[derive(Clone, Debug)]
pub struct LogDerivative {
    eig: EigenSystem,
    support: Vec<usize>,
    kernel: DMatrix<f64>,
}

impl LogDerivative {
    pub fn new(xi: &HermitianOp, cutoff: f64) -> Result<Self> {
        Self::from_eigen(eig_hermitian(xi), cutoff)
    }

    pub fn from_eigen(eig: EigenSystem, cutoff: f64) -> Result<Self> {
        eig.check_psd(cutoff)?;
        let support = eig.support_indices(cutoff);
        let k = support.len();
        let lam: Vec<f64> = support.iter().map(|&i| eig.values[i]).collect();
        let kernel = DMatrix::from_fn(k, k, |i, j| log_divided_difference(lam[i], lam[j]));
        Ok(Self { eig, support, kernel })
    }

    pub fn eigen(&self) -> &EigenSystem {
        &self.eig
    }

    pub fn rank(&self) -> usize {
        self.support.len()
    }

    /// `Gamma_xi(X)`; fails if `X` has weight outside `supp xi`.
    pub fn apply(&self, x: &HermitianOp) -> Result<HermitianOp> {
        let u = &self.eig.vectors;
        let xt = u.adjoint() * x.matrix() * u;
        let scale = xt.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
        let d = self.eig.dim();
        if self.support.len() < d {
            let mut in_supp = vec![false; d];
            for &i in &self.support {
                in_supp[i] = true;
            }
            let mut leak = 0.0f64;
            for i in 0..d {
                for j in 0..d {
                    if !(in_supp[i] && in_supp[j]) {
                        leak = leak.max(xt[(i, j)].norm());
                    }
                }
            }
            if leak > SUPPORT_LEAK_TOL * scale {
                return Err(Error::SupportMismatch { leak });
            }
        }
        Ok(self.finish(x, &xt))
    }

    /// `Gamma_xi(P X P)` with `P` the support projector of `xi`: any weight
    /// of `X` outside the support is discarded instead of reported.
    pub fn apply_lenient(&self, x: &HermitianOp) -> HermitianOp {
        let u = &self.eig.vectors;
        let xt = u.adjoint() * x.matrix() * u;
        self.finish(x, &xt)
    }

    fn finish(&self, x: &HermitianOp, xt: &DMatrix<C64>) -> HermitianOp {
        let u = &self.eig.vectors;
        let d = self.eig.dim();
        let k = self.support.len();
        let us = DMatrix::from_fn(d, k, |r, c| u[(r, self.support[c])]);
        let inner = DMatrix::from_fn(k, k, |i, j| {
            xt[(self.support[i], self.support[j])] * self.kernel[(i, j)]
        });
        HermitianOp::from_parts(x.dims().to_vec(), &us * inner * us.adjoint())
    }
}

/// `(ln a - ln b) / (a - b)`, with the removable singularity filled by `1/a`.
pub fn log_divided_difference(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi - lo <= LOEWNER_DEGENERACY * hi {
        return 1.0 / a;
    }
    // ln(hi/lo) = ln1p((hi-lo)/lo) keeps full precision for close pairs.
    ((hi - lo) / lo).ln_1p() / (hi - lo)
}

/// `Gamma_xi(X)` for PSD `xi` and `supp X` within `supp xi`.
pub fn loewner_log_frechet(xi: &HermitianOp, x: &HermitianOp, cutoff: f64) -> Result<HermitianOp> {
    if xi.dim() != x.dim() {
        return Err(Error::DimensionMismatch("xi and X differ in dimension".into()));
    }
    LogDerivative::new(xi, cutoff)?.apply(x)
}

// ---------------------------------------------------------------------------
// Schmidt decomposition

#[derive(Clone, Debug)]
pub struct Schmidt {
    /// Descending, strictly positive.
    pub coefficients: Vec<f64>,
    pub left: Vec<DVector<C64>>,
    pub right: Vec<DVector<C64>>,
}

/// Coefficients below this are dropped from a Schmidt decomposition.
const SCHMIDT_FLOOR: f64 = 1e-12;

/// `psi = sum_k c_k left_k (x) right_k` across a `d_left : d_right` cut.
pub fn schmidt_decompose(psi: &DVector<C64>, d_left: usize, d_right: usize) -> Result<Schmidt> {
    if psi.len() != d_left * d_right {
        return Err(Error::DimensionMismatch(format!(
            "vector of length {} cannot split as {d_left}x{d_right}",
            psi.len()
        )));
    }
    let norm = psi.norm();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::NotNormalized { norm });
    }
    let m = DMatrix::from_fn(d_left, d_right, |i, j| psi[i * d_right + j]);
    let svd = m.svd(true, true);
    let u = svd.u.expect("left singular vectors requested");
    let vt = svd.v_t.expect("right singular vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let mut out = Schmidt { coefficients: vec![], left: vec![], right: vec![] };
    for k in order {
        let s = svd.singular_values[k];
        if s <= SCHMIDT_FLOOR {
            continue;
        }
        out.coefficients.push(s);
        out.left.push(u.column(k).into_owned());
        out.right.push(vt.row(k).transpose());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_density, random_hermitian, random_pure};
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn phi2() -> HermitianOp {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let v = DVector::from_vec(vec![c(s), c(0.0), c(0.0), c(s)]);
        HermitianOp::projector(&[2, 2], &v).unwrap()
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = DMatrix::from_row_slice(2, 2, &[c(1.0), c(2.0), c(0.0), c(1.0)]);
        match HermitianOp::new(vec![2], m) {
            Err(Error::NotHermitian { max_asymmetry }) => assert_abs_diff_eq!(max_asymmetry, 2.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_factorization() {
        assert!(HermitianOp::new(vec![2, 2], DMatrix::identity(3, 3)).is_err());
    }

    #[test]
    fn eigenvalues_of_simple_operators() {
        let e = eig_hermitian(&HermitianOp::identity(&[3]));
        assert_eq!(e.values, vec![1.0, 1.0, 1.0]);
        let e = eig_hermitian(&HermitianOp::from_real_diagonal(&[2], &[2.0, -1.0]).unwrap());
        assert_abs_diff_eq!(e.values[0], -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(e.values[1], 2.0, epsilon = 1e-15);
    }

    #[test]
    fn eigen_reconstruction_and_unitarity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10 {
            let a = random_hermitian(&[5], &mut rng);
            let e = eig_hermitian(&a);
            let rec = e.reconstruct();
            assert!((&rec - &a).frobenius_norm() / a.frobenius_norm() <= 1e-10);
            let uu = e.vectors.adjoint() * &e.vectors;
            assert!((uu - DMatrix::<C64>::identity(5, 5)).norm() <= 1e-10);
            let sum: f64 = e.values.iter().sum();
            assert!((sum - a.trace()).abs() <= 1e-10 * 5.0);
            assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn eigen_ordering_is_deterministic_under_degeneracy() {
        let a = HermitianOp::from_real_diagonal(&[4], &[1.0, 0.5, 1.0, 0.5]).unwrap();
        let e1 = eig_hermitian(&a);
        let e2 = eig_hermitian(&a.clone());
        assert_eq!(e1.vectors, e2.vectors);
        assert_eq!(e1.values, vec![0.5, 0.5, 1.0, 1.0]);
    }

    #[test]
    fn log_on_support() {
        let (l, s) = matrix_log_support(&HermitianOp::identity(&[3]), DEFAULT_CUTOFF).unwrap();
        assert!(l.max_abs_entry() < 1e-15);
        assert_eq!(s.rank, 3);

        let a = HermitianOp::from_real_diagonal(&[2], &[std::f64::consts::E, 0.0]).unwrap();
        let (l, s) = matrix_log_support(&a, 1e-12).unwrap();
        assert_abs_diff_eq!(l.matrix()[(0, 0)].re, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(l.matrix()[(1, 1)].re, 0.0, epsilon = 1e-14);
        assert_eq!(s.rank, 1);

        let half = HermitianOp::maximally_mixed(&[2]);
        let (l, _) = matrix_log_support(&half, 1e-12).unwrap();
        assert_abs_diff_eq!(l.matrix()[(0, 0)].re, -(2f64.ln()), epsilon = 1e-14);
        assert_abs_diff_eq!(l.matrix()[(1, 1)].re, -(2f64.ln()), epsilon = 1e-14);
    }

    #[test]
    fn log_rejects_negative_spectrum() {
        let a = HermitianOp::from_real_diagonal(&[2], &[1.0, -0.1]).unwrap();
        assert!(matches!(matrix_log_support(&a, 1e-12), Err(Error::NotPsd { .. })));
    }

    #[test]
    fn support_projector_is_idempotent_and_commutes() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = crate::random::random_density_rank(&[5], 3, &mut rng);
        let (_, s) = matrix_log_support(&a, 1e-12).unwrap();
        assert_eq!(s.rank, 3);
        let p = s.projector.matrix();
        assert!((p * p - p).norm() <= 1e-10);
        let comm = p * a.matrix() - a.matrix() * p;
        assert!(comm.norm() <= 1e-9);
    }

    #[test]
    fn exp_examples() {
        let z = matrix_exp(&HermitianOp::zeros(&[3]));
        assert!((z.matrix() - DMatrix::<C64>::identity(3, 3)).norm() < 1e-15);
        let h = HermitianOp::from_real_diagonal(&[2], &[2f64.ln(), 3f64.ln()]).unwrap();
        let e = matrix_exp(&h);
        assert_abs_diff_eq!(e.matrix()[(0, 0)].re, 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e.matrix()[(1, 1)].re, 3.0, epsilon = 1e-14);
    }

    #[test]
    fn exp_log_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10 {
            let a = random_density(&[4], &mut rng);
            let (l, _) = matrix_log_support(&a, 1e-12).unwrap();
            assert!((&matrix_exp(&l) - &a).max_abs_entry() <= 1e-9);
            let h = random_hermitian(&[4], &mut rng);
            let (back, _) = matrix_log_support(&matrix_exp(&h), 1e-14).unwrap();
            assert!((&back - &h).max_abs_entry() <= 1e-9);
        }
    }

    #[test]
    fn partial_trace_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let tau = random_density(&[2], &mut rng);
        let omega = random_hermitian(&[3], &mut rng);
        let prod = tensor(&tau, &omega);
        let red = partial_trace(&prod, &[0]).unwrap();
        assert!((&red - &tau.scale(omega.trace())).max_abs_entry() < 1e-14);

        let red = partial_trace(&phi2(), &[0]).unwrap();
        assert!((&red - &HermitianOp::maximally_mixed(&[2])).max_abs_entry() < 1e-15);

        let rho = random_density(&[2, 3], &mut rng);
        for keep in [vec![0], vec![1]] {
            let r = partial_trace(&rho, &keep).unwrap();
            assert_abs_diff_eq!(r.trace(), 1.0, epsilon = 1e-13);
        }
        assert_eq!(partial_trace(&rho, &[1]).unwrap().dims(), &[3]);
    }

    #[test]
    fn partial_trace_matches_direct_index_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let rho = random_density(&[2, 3, 2], &mut rng);
        let red = partial_trace(&rho, &[0, 2]).unwrap();
        let m = rho.matrix();
        for a in 0..2 {
            for c in 0..2 {
                for a2 in 0..2 {
                    for c2 in 0..2 {
                        let mut s = C64::new(0.0, 0.0);
                        for b in 0..3 {
                            s += m[(a * 6 + b * 2 + c, a2 * 6 + b * 2 + c2)];
                        }
                        let got = red.matrix()[(a * 2 + c, a2 * 2 + c2)];
                        assert!((got - s).norm() < 1e-14);
                    }
                }
            }
        }
    }

    #[test]
    fn partial_trace_errors() {
        let rho = HermitianOp::maximally_mixed(&[2, 2]);
        assert!(partial_trace(&rho, &[]).is_err());
        assert!(matches!(partial_trace(&rho, &[2]), Err(Error::InvalidIndex { .. })));
    }

    #[test]
    fn partial_transpose_examples() {
        let pt = partial_transpose(&phi2(), 1).unwrap();
        let e = eig_hermitian(&pt);
        let expect = [-0.5, 0.5, 0.5, 0.5];
        for (a, b) in e.values.iter().zip(expect) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-14);
        }
        assert_abs_diff_eq!(trace_norm(&pt), 2.0, epsilon = 1e-13);
        assert_abs_diff_eq!(trace_norm(&phi2()), 1.0, epsilon = 1e-13);
        assert_abs_diff_eq!(trace_norm(&-&pt), 2.0, epsilon = 1e-13);

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_density(&[2], &mut rng);
        let b = random_density(&[3], &mut rng);
        let ab = tensor(&a, &b);
        let g = partial_transpose(&ab, 1).unwrap();
        let bt = HermitianOp::new(vec![3], b.matrix().transpose()).unwrap();
        assert!((&g - &tensor(&a, &bt)).max_abs_entry() < 1e-15);
        assert!(eig_hermitian(&g).lambda_min() > -1e-14);
        assert_eq!(partial_transpose(&g, 1).unwrap(), ab);
        assert!(matches!(partial_transpose(&ab, 2), Err(Error::InvalidIndex { .. })));
    }

    #[test]
    fn partial_transpose_preserves_trace_and_frobenius() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let a = random_hermitian(&[2, 3, 2], &mut rng);
        for set in [vec![0], vec![1], vec![0, 2]] {
            let g = partial_transpose_set(&a, &set).unwrap();
            assert_abs_diff_eq!(g.trace(), a.trace(), epsilon = 1e-12);
            assert_abs_diff_eq!(g.frobenius_norm(), a.frobenius_norm(), epsilon = 1e-12);
        }
    }

    #[test]
    fn permutation_moves_factors() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random_density(&[2], &mut rng);
        let b = random_density(&[3], &mut rng);
        let ba = permute_factors(&tensor(&a, &b), &[1, 0]).unwrap();
        assert!((&ba - &tensor(&b, &a)).max_abs_entry() < 1e-15);
        assert_eq!(ba.dims(), &[3, 2]);
    }

    #[test]
    fn tensor_examples() {
        let i6 = tensor(&HermitianOp::identity(&[2]), &HermitianOp::identity(&[3]));
        assert_eq!(i6.dims(), &[2, 3]);
        assert!((i6.matrix() - DMatrix::<C64>::identity(6, 6)).norm() == 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a = random_hermitian(&[2], &mut rng);
        let b = random_hermitian(&[3], &mut rng);
        assert_abs_diff_eq!(tensor(&a, &b).trace(), a.trace() * b.trace(), epsilon = 1e-12);
    }

    #[test]
    fn loewner_scalar_and_self_cases() {
        let xi = HermitianOp::from_real_diagonal(&[1], &[0.37]).unwrap();
        let x = HermitianOp::from_real_diagonal(&[1], &[2.0]).unwrap();
        let g = loewner_log_frechet(&xi, &x, 1e-12).unwrap();
        assert_abs_diff_eq!(g.matrix()[(0, 0)].re, 2.0 / 0.37, epsilon = 1e-13);

        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let xi = crate::random::random_density_rank(&[4], 3, &mut rng);
        let g = loewner_log_frechet(&xi, &xi, 1e-12).unwrap();
        let (_, s) = matrix_log_support(&xi, 1e-12).unwrap();
        assert!((&g - &s.projector).max_abs_entry() < 1e-10);
    }

    #[test]
    fn loewner_rejects_support_leak() {
        let xi = HermitianOp::from_real_diagonal(&[2], &[1.0, 0.0]).unwrap();
        let x = HermitianOp::maximally_mixed(&[2]);
        assert!(matches!(loewner_log_frechet(&xi, &x, 1e-12), Err(Error::SupportMismatch { .. })));
    }

    #[test]
    fn loewner_is_linear_and_hermitian_with_trace_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let xi = random_density(&[4], &mut rng);
        let x = random_hermitian(&[4], &mut rng);
        let y = random_hermitian(&[4], &mut rng);
        let ld = LogDerivative::new(&xi, 1e-12).unwrap();
        let lhs = ld.apply(&(&x.scale(2.0) + &y)).unwrap();
        let rhs = &ld.apply(&x).unwrap().scale(2.0) + &ld.apply(&y).unwrap();
        assert!((&lhs - &rhs).max_abs_entry() < 1e-9);
        assert!(max_asymmetry(lhs.matrix()) < 1e-12);
        // Tr Gamma_xi(X) = Tr xi^-1 X
        let inv = eig_hermitian(&xi).map(|v| 1.0 / v);
        assert_abs_diff_eq!(ld.apply(&x).unwrap().trace(), inv.inner(&x), epsilon = 1e-9);
    }

    #[test]
    fn divided_difference_branches() {
        assert_abs_diff_eq!(log_divided_difference(2.0, 2.0), 0.5);
        let a = 1e-3;
        let b = 1e-3 * (1.0 + 1e-11);
        assert_abs_diff_eq!(log_divided_difference(a, b), 1.0 / a, epsilon = 1e-6);
        let exact = (3f64.ln() - 1f64.ln()) / 2.0;
        assert_abs_diff_eq!(log_divided_difference(3.0, 1.0), exact, epsilon = 1e-15);
    }

    #[test]
    fn schmidt_examples() {
        let prod = tensor_vec(
            &DVector::from_vec(vec![c(0.6), c(0.8)]),
            &DVector::from_vec(vec![c(0.0), c(1.0), c(0.0)]),
        );
        let s = schmidt_decompose(&prod, 2, 3).unwrap();
        assert_eq!(s.coefficients.len(), 1);
        assert_abs_diff_eq!(s.coefficients[0], 1.0, epsilon = 1e-14);

        let h = std::f64::consts::FRAC_1_SQRT_2;
        let phi = DVector::from_vec(vec![c(h), c(0.0), c(0.0), c(h)]);
        let s = schmidt_decompose(&phi, 2, 2).unwrap();
        assert_eq!(s.coefficients.len(), 2);
        for x in &s.coefficients {
            assert_abs_diff_eq!(*x, h, epsilon = 1e-14);
        }

        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let psi = random_pure(12, &mut rng);
        let s = schmidt_decompose(&psi, 3, 4).unwrap();
        let mut rec = DVector::<C64>::zeros(12);
        for k in 0..s.coefficients.len() {
            rec += tensor_vec(&s.left[k], &s.right[k]) * c(s.coefficients[k]);
        }
        assert!((rec - &psi).norm() <= 1e-10);
        let sq: f64 = s.coefficients.iter().map(|x| x * x).sum();
        assert_abs_diff_eq!(sq, 1.0, epsilon = 1e-12);
        assert!(s.coefficients.windows(2).all(|w| w[0] >= w[1]));
        for i in 0..s.left.len() {
            for j in 0..s.left.len() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!(((s.left[i].adjoint() * &s.left[j])[(0, 0)].norm() - want).abs() < 1e-12);
                assert!(((s.right[i].adjoint() * &s.right[j])[(0, 0)].norm() - want).abs() < 1e-12);
            }
        }
        assert!(matches!(
            schmidt_decompose(&(psi * c(2.0)), 3, 4),
            Err(Error::NotNormalized { .. })
        ));
    }
}
