//! Free-state families.
//!
//! Separable and pi-separable sets are handled through a linear
//! minimization oracle over pure product states; PPT and Rains sets through
//! Frobenius projections.

mod dykstra;
mod product;
mod witness;

use std::fmt;

pub use dykstra::{ppt_project, rains_project, Projection, DYKSTRA_MAX_ITERS, DYKSTRA_TOL};
pub(crate) use product::ProductFrame;
pub use product::{pi_sep_lmo, product_lmo, product_lmo_warm, sep_lmo, ProductState, LMO_MAX_SWEEPS};
pub use witness::separable_witness_from_pure;

use crate::error::{Error, Result};
use crate::opcore::{complement, eig_hermitian, partial_transpose_set, trace_norm, HermitianOp};

/// Eigenvalues of `sigma^Gamma` above `-PPT_TOL` count as nonnegative.
pub const PPT_TOL: f64 = 1e-10;

/// A cut of the tensor factors into an A side (listed) and its complement.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Bipartition {
    a_side: Vec<usize>,
}

impl Bipartition {
    /// `a_side` must be a non-empty proper subset of `0..m`.
    pub fn new(a_side: &[usize], m: usize) -> Result<Self> {
        let mut a = a_side.to_vec();
        a.sort_unstable();
        a.dedup();
        if let Some(&bad) = a.iter().find(|&&k| k >= m) {
            return Err(Error::InvalidIndex { index: bad, count: m });
        }
        if a.is_empty() || a.len() == m {
            return Err(Error::InvalidPartition(format!(
                "A side {a_side:?} must be a non-empty proper subset of {m} factors"
            )));
        }
        Ok(Self { a_side: a })
    }

    pub fn a_side(&self) -> &[usize] {
        &self.a_side
    }

    pub fn b_side(&self, m: usize) -> Vec<usize> {
        complement(m, &self.a_side)
    }

    pub fn as_partition(&self, m: usize) -> Partition {
        Partition { blocks: vec![self.a_side.clone(), self.b_side(m)] }
    }
}

/// A set partition of the factors `0..m` into non-empty blocks.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Partition {
    blocks: Vec<Vec<usize>>,
}

impl Partition {
    pub fn new(blocks: Vec<Vec<usize>>, m: usize) -> Result<Self> {
        let mut seen = vec![false; m];
        let mut norm = Vec::with_capacity(blocks.len());
        for block in blocks {
            if block.is_empty() {
                return Err(Error::InvalidPartition("empty block".into()));
            }
            let mut b = block.clone();
            b.sort_unstable();
            for &k in &b {
                if k >= m {
                    return Err(Error::InvalidIndex { index: k, count: m });
                }
                if seen[k] {
                    return Err(Error::InvalidPartition(format!("factor {k} appears twice")));
                }
                seen[k] = true;
            }
            norm.push(b);
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidPartition(format!("factor {missing} is not covered")));
        }
        norm.sort();
        Ok(Self { blocks: norm })
    }

    /// One block per factor.
    pub fn finest(m: usize) -> Self {
        Self { blocks: (0..m).map(|k| vec![k]).collect() }
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    /// Whether `set` is a union of blocks.
    pub fn is_coarsened_by(&self, set: &[usize]) -> bool {
        self.blocks.iter().all(|b| {
            let inside = b.iter().filter(|k| set.contains(k)).count();
            inside == 0 || inside == b.len()
        })
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: Vec<String> = self
            .blocks
            .iter()
            .map(|b| b.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(","))
            .collect();
        f.write_str(&s.join("|"))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum FreeSetKind {
    Sep(Bipartition),
    PiSep(Vec<Partition>),
    Ppt(Bipartition),
    Rains(Bipartition),
    SingleState(HermitianOp),
}

#[derive(Clone, Debug, PartialEq)]
pub struct FreeSetSpec {
    dims: Vec<usize>,
    kind: FreeSetKind,
}

impl FreeSetSpec {
    pub fn new(dims: Vec<usize>, kind: FreeSetKind) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::DimensionMismatch(format!("invalid dims {dims:?}")));
        }
        let m = dims.len();
        match &kind {
            FreeSetKind::Sep(b) | FreeSetKind::Ppt(b) | FreeSetKind::Rains(b) => {
                Bipartition::new(b.a_side(), m)?;
            }
            FreeSetKind::PiSep(parts) => {
                if parts.is_empty() {
                    return Err(Error::InvalidPartition("empty partition list".into()));
                }
                for p in parts {
                    Partition::new(p.blocks.clone(), m)?;
                }
            }
            FreeSetKind::SingleState(s) => {
                if s.dims() != dims.as_slice() {
                    return Err(Error::DimensionMismatch(format!(
                        "reference state has dims {:?}, expected {dims:?}",
                        s.dims()
                    )));
                }
            }
        }
        Ok(Self { dims, kind })
    }

    pub fn sep(dims: &[usize], a_side: &[usize]) -> Result<Self> {
        Self::new(dims.to_vec(), FreeSetKind::Sep(Bipartition::new(a_side, dims.len())?))
    }

    pub fn ppt(dims: &[usize], a_side: &[usize]) -> Result<Self> {
        Self::new(dims.to_vec(), FreeSetKind::Ppt(Bipartition::new(a_side, dims.len())?))
    }

    pub fn rains(dims: &[usize], a_side: &[usize]) -> Result<Self> {
        Self::new(dims.to_vec(), FreeSetKind::Rains(Bipartition::new(a_side, dims.len())?))
    }

    pub fn pi_sep(dims: &[usize], partitions: Vec<Partition>) -> Result<Self> {
        Self::new(dims.to_vec(), FreeSetKind::PiSep(partitions))
    }

    /// Fully separable states over all factors.
    pub fn full_sep(dims: &[usize]) -> Result<Self> {
        Self::pi_sep(dims, vec![Partition::finest(dims.len())])
    }

    pub fn single_state(sigma: HermitianOp) -> Result<Self> {
        Self::new(sigma.dims().to_vec(), FreeSetKind::SingleState(sigma))
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn kind(&self) -> &FreeSetKind {
        &self.kind
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            FreeSetKind::Sep(_) => "sep",
            FreeSetKind::PiSep(_) => "pisep",
            FreeSetKind::Ppt(_) => "ppt",
            FreeSetKind::Rains(_) => "rains",
            FreeSetKind::SingleState(_) => "state",
        }
    }

    /// Partitions whose product states generate the set (Sep and PiSep).
    pub fn lmo_partitions(&self) -> Option<Vec<Partition>> {
        let m = self.dims.len();
        match &self.kind {
            FreeSetKind::Sep(b) => Some(vec![b.as_partition(m)]),
            FreeSetKind::PiSep(p) => Some(p.clone()),
            _ => None,
        }
    }

    /// A faithful member: `I/d`, or the reference state itself.
    pub fn interior_point(&self) -> HermitianOp {
        match &self.kind {
            FreeSetKind::SingleState(s) => s.clone(),
            _ => HermitianOp::maximally_mixed(&self.dims),
        }
    }

    /// Membership test at tolerance `tol`.
    ///
    /// Exact for PPT, Rains and single-state sets. For Sep and PiSep it
    /// checks the necessary conditions: a unit-trace PSD operator that is
    /// PPT across every cut coarsening all generating partitions.
    pub fn contains(&self, sigma: &HermitianOp, tol: f64) -> Result<bool> {
        if sigma.dims() != self.dims.as_slice() {
            return Err(Error::DimensionMismatch("state and free set dims differ".into()));
        }
        let min_eig = eig_hermitian(sigma).lambda_min();
        if min_eig < -tol {
            return Ok(false);
        }
        let m = self.dims.len();
        let unit = (sigma.trace() - 1.0).abs() <= tol;
        match &self.kind {
            FreeSetKind::SingleState(s) => Ok((sigma - s).max_abs_entry() <= tol),
            FreeSetKind::Ppt(b) => Ok(unit && ppt_min_eigenvalue(sigma, b)? >= -tol.max(PPT_TOL)),
            FreeSetKind::Rains(b) => {
                Ok(trace_norm(&partial_transpose_set(sigma, b.a_side())?) <= 1.0 + tol)
            }
            FreeSetKind::Sep(_) | FreeSetKind::PiSep(_) => {
                if !unit {
                    return Ok(false);
                }
                let parts = self.lmo_partitions().expect("sep-type set");
                for mask in 1..(1usize << m) - 1 {
                    let set: Vec<usize> = (0..m).filter(|k| mask >> k & 1 == 1).collect();
                    if set.contains(&0) && parts.iter().all(|p| p.is_coarsened_by(&set)) {
                        let cut = Bipartition { a_side: set };
                        if ppt_min_eigenvalue(sigma, &cut)? < -tol.max(PPT_TOL) {
                            return Ok(false);
                        }
                    }
                }
                Ok(true)
            }
        }
    }
}

fn ppt_min_eigenvalue(sigma: &HermitianOp, split: &Bipartition) -> Result<f64> {
    Ok(eig_hermitian(&partial_transpose_set(sigma, split.a_side())?).lambda_min())
}

/// True iff `min eig(sigma^Gamma) >= -1e-10`, transposing the A side.
pub fn is_ppt(sigma: &HermitianOp, split: &Bipartition) -> Result<bool> {
    Ok(ppt_min_eigenvalue(sigma, split)? >= -PPT_TOL)
}
