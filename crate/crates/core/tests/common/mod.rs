#![allow(dead_code)]

use nalgebra::DVector;
use num_complex::Complex64 as C64;
use relres::HermitianOp;

pub fn ket(amps: &[f64]) -> DVector<C64> {
    let n = amps.iter().map(|a| a * a).sum::<f64>().sqrt();
    DVector::from_iterator(amps.len(), amps.iter().map(|a| C64::new(a / n, 0.0)))
}

/// `(|00> + |11>) / sqrt 2`.
pub fn bell() -> HermitianOp {
    HermitianOp::projector(&[2, 2], &ket(&[1.0, 0.0, 0.0, 1.0])).unwrap()
}

pub fn assert_close(a: f64, b: f64, tol: f64, what: &str) {
    assert!((a - b).abs() <= tol, "{what}: {a} vs {b} (tol {tol})");
}

pub fn rng(seed: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    rand_chacha::ChaCha8Rng::seed_from_u64(seed)
}

/// Random state with every eigenvalue at least `floor`.
pub fn faithful<R: rand::Rng>(dims: &[usize], floor: f64, rng: &mut R) -> HermitianOp {
    let d: usize = dims.iter().product();
    let r = relres::random::random_density(dims, rng);
    let mut out = r.scale(1.0 - d as f64 * floor);
    out.add_scaled(floor, &HermitianOp::identity(dims));
    out
}

/// `diag(values)` on one factor.
pub fn diag(values: &[f64]) -> HermitianOp {
    HermitianOp::from_real_diagonal(&[values.len()], values).unwrap()
}

/// Largest entry modulus of `a - b`.
pub fn max_diff(a: &HermitianOp, b: &HermitianOp) -> f64 {
    (a - b).max_abs_entry()
}
