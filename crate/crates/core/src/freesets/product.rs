//! Best-product-state oracle by alternating bottom-eigenvector updates.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Bipartition, Partition};
use crate::error::{Error, Result};
use crate::opcore::{eig_hermitian, factor_offsets, permute_factors, HermitianOp};
use crate::random::random_pure;

pub const LMO_MAX_SWEEPS: usize = 200;
const LMO_SWEEP_TOL: f64 = 1e-12;

/// A pure state that factorizes over the blocks of a partition.
#[derive(Clone, Debug)]
pub struct ProductState {
    pub dims: Vec<usize>,
    pub partition: Partition,
    /// One unit vector per block, over the block's factors in ascending order.
    pub factors: Vec<DVector<C64>>,
    /// The assembled vector in the original factor order.
    pub vector: DVector<C64>,
    /// `<v|G|v>` for the operator the oracle was called with.
    pub value: f64,
}

impl ProductState {
    pub fn operator(&self) -> HermitianOp {
        HermitianOp::projector(&self.dims, &self.vector).expect("dims match by construction")
    }
}

fn kron_all(vs: &[DVector<C64>]) -> DVector<C64> {
    let mut out = DVector::from_element(1, C64::new(1.0, 0.0));
    for v in vs {
        out = out.kronecker(v);
    }
    out
}

struct BlockLayout {
    order: Vec<usize>,
    block_dims: Vec<usize>,
}

impl BlockLayout {
    fn new(dims: &[usize], partition: &Partition) -> Self {
        let order: Vec<usize> = partition.blocks().iter().flatten().copied().collect();
        let block_dims = partition
            .blocks()
            .iter()
            .map(|b| b.iter().map(|&k| dims[k]).product())
            .collect();
        Self { order, block_dims }
    }

    /// Columns `kron(v_0, .., e_i, .., v_k)` for block `b`.
    fn embedding(&self, vs: &[DVector<C64>], b: usize) -> DMatrix<C64> {
        let left = kron_all(&vs[..b]);
        let right = kron_all(&vs[b + 1..]);
        let db = self.block_dims[b];
        let (nl, nr) = (left.len(), right.len());
        let mut w = DMatrix::zeros(nl * db * nr, db);
        for l in 0..nl {
            for i in 0..db {
                for r in 0..nr {
                    w[((l * db + i) * nr + r, i)] = left[l] * right[r];
                }
            }
        }
        w
    }

    /// Top eigenvector of the block-`b` marginal of `u`.
    fn marginal_top(&self, u: &DVector<C64>, b: usize) -> DVector<C64> {
        let db = self.block_dims[b];
        let nl: usize = self.block_dims[..b].iter().product();
        let nr: usize = self.block_dims[b + 1..].iter().product();
        let mut rho = DMatrix::<C64>::zeros(db, db);
        for l in 0..nl {
            for r in 0..nr {
                for i in 0..db {
                    let ui = u[(l * db + i) * nr + r];
                    for j in 0..db {
                        rho[(i, j)] += ui * u[(l * db + j) * nr + r].conj();
                    }
                }
            }
        }
        let op = HermitianOp::from_hermitian_part(vec![db], rho).expect("square");
        let e = eig_hermitian(&op);
        e.vectors.column(db - 1).into_owned()
    }
}

/// Coordinates for product vectors over one partition: block order for
/// the factors, original factor order for assembled vectors.
pub(crate) struct ProductFrame {
    layout: BlockLayout,
    map: Vec<usize>,
}

impl ProductFrame {
    pub(crate) fn new(dims: &[usize], partition: &Partition) -> Self {
        let layout = BlockLayout::new(dims, partition);
        let map = factor_offsets(dims, &layout.order);
        Self { layout, map }
    }

    pub(crate) fn block_dims(&self) -> &[usize] {
        &self.layout.block_dims
    }

    /// `h` with its factors regrouped into block order.
    pub(crate) fn permute(&self, h: &HermitianOp) -> DMatrix<C64> {
        let m = h.matrix();
        DMatrix::from_fn(self.map.len(), self.map.len(), |i, j| m[(self.map[i], self.map[j])])
    }

    /// The tensor product of `factors` in the original factor order.
    pub(crate) fn assemble(&self, factors: &[DVector<C64>]) -> DVector<C64> {
        let permuted = kron_all(factors);
        let mut out = DVector::zeros(permuted.len());
        for (n, &old) in self.map.iter().enumerate() {
            out[old] = permuted[n];
        }
        out
    }

    /// `W_b^dag hp x` for every block `b`, where `x` is the block-order
    /// product of `factors` and `W_b` replaces factor `b` by the identity.
    pub(crate) fn factor_gradients(&self, hp: &DMatrix<C64>, factors: &[DVector<C64>]) -> Vec<DVector<C64>> {
        let hx = hp * kron_all(factors);
        (0..factors.len()).map(|b| self.layout.embedding(factors, b).adjoint() * &hx).collect()
    }
}

fn bottom(op: DMatrix<C64>) -> (f64, DVector<C64>) {
    let d = op.nrows();
    let h = HermitianOp::from_hermitian_part(vec![d], op).expect("square");
    let e = eig_hermitian(&h);
    (e.values[0], e.vectors.column(0).into_owned())
}

fn alternate(gp: &DMatrix<C64>, layout: &BlockLayout, vs: &mut [DVector<C64>]) -> f64 {
    let k = vs.len();
    let mut value = f64::INFINITY;
    for _ in 0..LMO_MAX_SWEEPS {
        let prev = value;
        for b in 0..k {
            let w = layout.embedding(vs, b);
            let (lam, v) = bottom(w.adjoint() * gp * &w);
            value = lam;
            vs[b] = v;
        }
        if k == 1 || (prev - value).abs() <= LMO_SWEEP_TOL * value.abs().max(1.0) {
            break;
        }
    }
    value
}

/// Minimizes `<v|G|v>` over unit vectors that factorize over `partition`.
///
/// Restart 0 starts from the block marginals of the bottom eigenvector of
/// `G`; restarts `1..=restarts` from Haar-random product vectors drawn
/// from stream `r` of a generator seeded with `seed`. Ties keep the
/// earliest restart.
pub fn product_lmo(
    g: &HermitianOp,
    partition: &Partition,
    restarts: usize,
    seed: u64,
) -> Result<ProductState> {
    product_lmo_warm(g, partition, None, restarts, seed)
}

/// [`product_lmo`] with an extra start, tried right after restart 0.
///
/// `warm` holds one unit vector per block, e.g. the factors of an earlier
/// [`ProductState`] for the same partition.
pub fn product_lmo_warm(
    g: &HermitianOp,
    partition: &Partition,
    warm: Option<&[DVector<C64>]>,
    restarts: usize,
    seed: u64,
) -> Result<ProductState> {
    let dims = g.dims().to_vec();
    let m = dims.len();
    if partition.blocks().iter().flatten().count() != m {
        return Err(Error::InvalidPartition(format!(
            "partition {partition} does not cover {m} factors"
        )));
    }
    Partition::new(partition.blocks().to_vec(), m)?;
    let layout = BlockLayout::new(&dims, partition);
    if let Some(w) = warm {
        let fits = w.len() == layout.block_dims.len()
            && w.iter().zip(&layout.block_dims).all(|(v, &d)| v.len() == d);
        if !fits {
            return Err(Error::DimensionMismatch("warm start does not match the partition".into()));
        }
    }
    let gp = permute_factors(g, &layout.order)?.into_matrix();
    let k = layout.block_dims.len();

    let mut starts: Vec<Vec<DVector<C64>>> = Vec::with_capacity(restarts + 2);
    let (_, u) = bottom(gp.clone());
    starts.push(if k == 1 { vec![u] } else { (0..k).map(|b| layout.marginal_top(&u, b)).collect() });
    if k > 1 {
        if let Some(w) = warm {
            starts.push(w.to_vec());
        }
        for r in 1..=restarts {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            starts.push(layout.block_dims.iter().map(|&d| random_pure(d, &mut rng)).collect());
        }
    }
    let mut best: Option<(f64, Vec<DVector<C64>>)> = None;
    for mut vs in starts {
        let value = alternate(&gp, &layout, &mut vs);
        if best.as_ref().is_none_or(|(v, _)| value < *v) {
            best = Some((value, vs));
        }
    }
    let (value, factors) = best.expect("at least one start");

    let permuted = kron_all(&factors);
    let map = factor_offsets(&dims, &layout.order);
    let mut vector = DVector::zeros(permuted.len());
    for (n, &old) in map.iter().enumerate() {
        vector[old] = permuted[n];
    }
    Ok(ProductState { dims, partition: partition.clone(), factors, vector, value })
}

pub fn sep_lmo(g: &HermitianOp, split: &Bipartition, restarts: usize, seed: u64) -> Result<ProductState> {
    product_lmo(g, &split.as_partition(g.dims().len()), restarts, seed)
}

/// Best product state over every allowed partition; ties keep the earliest.
pub fn pi_sep_lmo(
    g: &HermitianOp,
    partitions: &[Partition],
    restarts: usize,
    seed: u64,
) -> Result<ProductState> {
    let mut best: Option<ProductState> = None;
    for p in partitions {
        let cand = product_lmo(g, p, restarts, seed)?;
        if best.as_ref().is_none_or(|b| cand.value < b.value) {
            best = Some(cand);
        }
    }
    best.ok_or_else(|| Error::InvalidPartition("empty partition list".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::opcore::tensor;
    use approx::assert_abs_diff_eq;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn ghz3() -> HermitianOp {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut v = DVector::zeros(8);
        v[0] = c(s);
        v[7] = c(s);
        HermitianOp::projector(&[2, 2, 2], &v).unwrap()
    }

    #[test]
    fn identity_functional() {
        let g = HermitianOp::identity(&[2, 3]);
        let p = sep_lmo(&g, &Bipartition::new(&[0], 2).unwrap(), 4, 1).unwrap();
        assert_abs_diff_eq!(p.value, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.vector.norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn commuting_product_hamiltonian() {
        let a = HermitianOp::from_real_diagonal(&[2], &[0.3, -1.0]).unwrap();
        let b = HermitianOp::from_real_diagonal(&[3], &[2.0, 0.5, 1.0]).unwrap();
        let g = &tensor(&a, &HermitianOp::identity(&[3])) + &tensor(&HermitianOp::identity(&[2]), &b);
        let p = sep_lmo(&g, &Bipartition::new(&[0], 2).unwrap(), 0, 0).unwrap();
        assert_abs_diff_eq!(p.value, -0.5, epsilon = 1e-12);
        // bottom vector is |1>|1>, index 1*3 + 1
        assert_abs_diff_eq!(p.vector[4].norm(), 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(g.expectation(&p.vector), p.value, epsilon = 1e-12);
    }

    #[test]
    fn ghz_full_separability() {
        let g = -&ghz3();
        let p = pi_sep_lmo(&g, &[Partition::finest(3)], 8, 3).unwrap();
        assert_abs_diff_eq!(p.value, -0.5, epsilon = 1e-9);
        let one = pi_sep_lmo(&g, &[Partition::new(vec![vec![0, 1, 2]], 3).unwrap()], 8, 3).unwrap();
        assert_abs_diff_eq!(one.value, -1.0, epsilon = 1e-12);
    }

    #[test]
    fn interleaved_blocks_assemble_in_original_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = crate::random::random_hermitian(&[2, 3, 2], &mut rng);
        let part = Partition::new(vec![vec![0, 2], vec![1]], 3).unwrap();
        let p = product_lmo(&g, &part, 4, 9).unwrap();
        assert_abs_diff_eq!(g.expectation(&p.vector), p.value, epsilon = 1e-10);
        let op = p.operator();
        let red = crate::opcore::partial_trace(&op, &[1]).unwrap();
        // the middle factor is pure
        let purity = red.inner(&red);
        assert_abs_diff_eq!(purity, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let g = crate::random::random_hermitian(&[3, 3], &mut rng);
        let cut = Bipartition::new(&[0], 2).unwrap();
        let a = sep_lmo(&g, &cut, 6, 42).unwrap();
        let b = sep_lmo(&g, &cut, 6, 42).unwrap();
        assert_eq!(a.vector, b.vector);
    }
}
