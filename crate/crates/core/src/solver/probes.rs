//! Empirical probes of structural properties of `D_F`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{min_eigenvalue, minimize_primal, SolverConfig};
use crate::entropy::ensure_state;
use crate::error::{Error, Result};
use crate::freesets::{Bipartition, FreeSetKind, FreeSetSpec};
use crate::opcore::{tensor, trace_norm, HermitianOp};
use crate::random::random_density;

/// Largest doubled dimension accepted by the two-copy check.
pub const TWO_COPY_DIM_CAP: usize = 36;

/// Minimum eigenvalue required by the continuity probe.
pub const FAITHFUL_FLOOR: f64 = 1e-6;

fn single_copy(free: &FreeSetSpec) -> Result<FreeSetSpec> {
    let dims = free.dims();
    let m = dims.len();
    if m % 2 != 0 || dims[..m / 2] != dims[m / 2..] {
        return Err(Error::DimensionMismatch(format!("{dims:?} is not a doubled factorization")));
    }
    let n = m / 2;
    let split = |b: &Bipartition| -> Result<Bipartition> {
        let lo: Vec<usize> = b.a_side().iter().copied().filter(|&k| k < n).collect();
        let hi: Vec<usize> = b.a_side().iter().filter(|&&k| k >= n).map(|k| k - n).collect();
        if lo != hi {
            return Err(Error::InvalidPartition(format!(
                "cut {:?} does not act identically on both copies",
                b.a_side()
            )));
        }
        Bipartition::new(&lo, n)
    };
    let single = &dims[..n];
    let kind = match free.kind() {
        FreeSetKind::Sep(b) => FreeSetKind::Sep(split(b)?),
        FreeSetKind::Ppt(b) => FreeSetKind::Ppt(split(b)?),
        FreeSetKind::Rains(b) => FreeSetKind::Rains(split(b)?),
        _ => {
            return Err(Error::Unsupported(format!(
                "two-copy check for the {} family",
                free.name()
            )))
        }
    };
    FreeSetSpec::new(single.to_vec(), kind)
}

/// `E(rho (x) rho) - 2 E(rho)` with both values from [`minimize_primal`];
/// `free` acts on the doubled system.
pub fn two_copy_subadditivity_check(rho: &HermitianOp, free: &FreeSetSpec, cfg: &SolverConfig) -> Result<f64> {
    if free.dim() > TWO_COPY_DIM_CAP {
        return Err(Error::InvalidArgument(format!(
            "doubled dimension {} exceeds the cap {TWO_COPY_DIM_CAP}",
            free.dim()
        )));
    }
    let one = single_copy(free)?;
    let two = tensor(rho, rho);
    let e2 = minimize_primal(&two, free, cfg)?.upper;
    let e1 = minimize_primal(rho, &one, cfg)?.upper;
    Ok(e2 - 2.0 * e1)
}

#[derive(Clone, Debug)]
pub struct ContinuityProbe {
    pub delta: f64,
    pub base_value: f64,
    /// `||sigma*(rho') - sigma*(rho)||_1` per trial.
    pub displacements: Vec<f64>,
    pub max_displacement: f64,
}

/// Solves at `rho` and at `trials` perturbations `rho' = (1 - s) rho + s tau`
/// with `||rho - rho'||_1 = delta` and random states `tau`, and reports how
/// far the minimizer moves. Trial `k` draws `tau` from stream `k` of a
/// generator seeded with `cfg.seed`, so ladders over `delta` reuse the
/// same directions.
pub fn minimizer_continuity_probe(
    rho: &HermitianOp,
    free: &FreeSetSpec,
    delta: f64,
    trials: usize,
    cfg: &SolverConfig,
) -> Result<ContinuityProbe> {
    ensure_state(rho)?;
    let lmin = min_eigenvalue(rho);
    if lmin <= FAITHFUL_FLOOR {
        return Err(Error::NotAState(format!(
            "continuity probe needs a faithful state (min eigenvalue {lmin:.3e})"
        )));
    }
    if !(delta >= 0.0) {
        return Err(Error::InvalidArgument(format!("delta must be nonnegative, got {delta}")));
    }
    let mut cfg = cfg.clone();
    cfg.certify = false;
    let base = minimize_primal(rho, free, &cfg)?;
    let mut displacements = Vec::with_capacity(trials);
    for k in 0..trials {
        if delta == 0.0 || matches!(free.kind(), FreeSetKind::SingleState(_)) {
            displacements.push(0.0);
            continue;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(k as u64 + 1);
        let tau = random_density(rho.dims(), &mut rng);
        let s = (delta / trace_norm(&(rho - &tau))).min(1.0);
        let mut moved = rho.scale(1.0 - s);
        moved.add_scaled(s, &tau);
        let r = minimize_primal(&moved, free, &cfg)?;
        displacements.push(trace_norm(&(&r.minimizer - &base.minimizer)));
    }
    let max_displacement = displacements.iter().copied().fold(0.0, f64::max);
    Ok(ContinuityProbe { delta, base_value: base.upper, displacements, max_displacement })
}
