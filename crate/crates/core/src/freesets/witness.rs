use nalgebra::DVector;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::opcore::{schmidt_decompose, tensor, HermitianOp};

/// Fully separable state built from nested Schmidt decompositions of `psi`
/// across the cuts `A_1 : rest`, `A_2 : rest`, ...
///
/// Every single-factor marginal of the result equals that of `psi`, and
/// `D(psi || sigma) <= sum_{k < m} S(psi_{A_k})`.
pub fn separable_witness_from_pure(psi: &DVector<C64>, dims: &[usize]) -> Result<HermitianOp> {
    if dims.len() < 2 {
        return Err(Error::InvalidArgument("witness needs at least two factors".into()));
    }
    let d: usize = dims.iter().product();
    if psi.len() != d {
        return Err(Error::DimensionMismatch(format!(
            "vector of length {} for dims {dims:?}",
            psi.len()
        )));
    }
    let norm = psi.norm();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::NotNormalized { norm });
    }
    nested(psi, dims)
}

fn nested(psi: &DVector<C64>, dims: &[usize]) -> Result<HermitianOp> {
    if dims.len() == 1 {
        return HermitianOp::projector(dims, psi);
    }
    let rest: usize = dims[1..].iter().product();
    let s = schmidt_decompose(&renormalized(psi), dims[0], rest)?;
    let mut out = HermitianOp::zeros(dims);
    for k in 0..s.coefficients.len() {
        let left = HermitianOp::projector(&dims[..1], &s.left[k])?;
        let right = nested(&renormalized(&s.right[k]), &dims[1..])?;
        out.add_scaled(s.coefficients[k].powi(2), &tensor(&left, &right));
    }
    Ok(out)
}

fn renormalized(v: &DVector<C64>) -> DVector<C64> {
    v / C64::new(v.norm(), 0.0)
}
