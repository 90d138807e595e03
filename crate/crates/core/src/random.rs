//! Random states for tests, restarts and probes. All samplers take an
//! explicit RNG so callers control determinism.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::opcore::HermitianOp;

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<C64> {
    DMatrix::from_fn(rows, cols, |_, _| gaussian(rng))
}

/// Haar-random unit vector.
pub fn random_pure<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DVector<C64> {
    loop {
        let v = DVector::from_fn(d, |_, _| gaussian(rng));
        let n = v.norm();
        if n > 1e-300 {
            return v / C64::new(n, 0.0);
        }
    }
}

/// Hilbert-Schmidt random density matrix of the given rank.
pub fn random_density_rank<R: Rng + ?Sized>(dims: &[usize], rank: usize, rng: &mut R) -> HermitianOp {
    let d: usize = dims.iter().product();
    let g = ginibre(d, rank.max(1), rng);
    let m = &g * g.adjoint();
    let tr: f64 = m.diagonal().iter().map(|z| z.re).sum();
    HermitianOp::from_parts(dims.to_vec(), m / C64::new(tr, 0.0))
}

/// Full-rank Hilbert-Schmidt random density matrix.
pub fn random_density<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> HermitianOp {
    let d: usize = dims.iter().product();
    random_density_rank(dims, d, rng)
}

/// Hermitian matrix with independent Gaussian entries.
pub fn random_hermitian<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> HermitianOp {
    let d: usize = dims.iter().product();
    let g = ginibre(d, d, rng);
    HermitianOp::from_parts(dims.to_vec(), (&g + g.adjoint()) * C64::new(0.5, 0.0))
}
