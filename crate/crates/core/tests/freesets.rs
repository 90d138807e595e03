mod common;

use common::*;
use nalgebra::DVector;
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use relres::entropy::{relative_entropy, von_neumann_entropy};
use relres::freesets::*;
use relres::opcore::{partial_trace, trace_norm, partial_transpose};
use relres::random::{random_density, random_hermitian, random_pure};
use relres::HermitianOp;

fn cut() -> Bipartition {
    Bipartition::new(&[0], 2).unwrap()
}

/// `min <a (x) b| G |a (x) b>` with `a` on a 1000 x 1000 Bloch grid and
/// `b` solved exactly as the bottom eigenvector of the 2 x 2 contraction.
fn brute_force_product_min(g: &HermitianOp) -> f64 {
    let m = g.matrix();
    let n = 1000;
    let mut best = f64::INFINITY;
    for i in 0..=n {
        let theta = std::f64::consts::PI * i as f64 / n as f64;
        let phis = if i == 0 || i == n { 1 } else { n };
        for j in 0..phis {
            let phi = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
            let a = [C64::new((theta / 2.0).cos(), 0.0), C64::from_polar((theta / 2.0).sin(), phi)];
            // c[(k, l)] = sum_{ij} conj(a_i) a_j G[(2i + k, 2j + l)]
            let mut c = [[C64::new(0.0, 0.0); 2]; 2];
            for (k, row) in c.iter_mut().enumerate() {
                for (l, entry) in row.iter_mut().enumerate() {
                    for ai in 0..2 {
                        for aj in 0..2 {
                            *entry += a[ai].conj() * a[aj] * m[(2 * ai + k, 2 * aj + l)];
                        }
                    }
                }
            }
            let (p, q) = (c[0][0].re, c[1][1].re);
            let low = 0.5 * (p + q) - (0.25 * (p - q) * (p - q) + c[0][1].norm_sqr()).sqrt();
            best = best.min(low);
        }
    }
    best
}

#[test]
fn sep_lmo_matches_brute_force_grid() {
    let mut r = rng(31);
    for k in 0..4 {
        let g = random_hermitian(&[2, 2], &mut r);
        let lmo = sep_lmo(&g, &cut(), 32, k).unwrap();
        let grid = brute_force_product_min(&g);
        assert!((lmo.value - grid).abs() <= 1e-4, "case {k}: lmo {} grid {grid}", lmo.value);
        // The oracle value is attained by its own product state.
        assert_close(lmo.operator().inner(&g), lmo.value, 1e-12, "attained value");
    }
}

#[test]
fn bell_functional_has_product_minimum_minus_half() {
    let g = bell().scale(-1.0);
    assert_close(sep_lmo(&g, &cut(), 8, 0).unwrap().value, -0.5, 1e-10, "sep_lmo(-Phi)");
    assert_close(brute_force_product_min(&g), -0.5, 1e-5, "grid(-Phi)");
}

#[test]
fn trivial_partition_gives_bottom_eigenvector() {
    let mut r = rng(32);
    let g = random_hermitian(&[2, 3], &mut r);
    let whole = Partition::new(vec![vec![0, 1]], 2).unwrap();
    let ps = pi_sep_lmo(&g, &[whole], 4, 0).unwrap();
    let bottom = relres::opcore::eig_hermitian(&g).values[0];
    assert_close(ps.value, bottom, 1e-10, "global bottom eigenvalue");
}

#[test]
fn witness_of_ghz_state() {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut v = DVector::<C64>::zeros(8);
    v[0] = C64::new(s, 0.0);
    v[7] = C64::new(s, 0.0);
    let sigma = separable_witness_from_pure(&v, &[2, 2, 2]).unwrap();
    let psi = HermitianOp::projector(&[2, 2, 2], &v).unwrap();
    let d = relative_entropy(&psi, &sigma).unwrap().value.to_f64();
    assert_close(d, std::f64::consts::LN_2, 1e-12, "D(GHZ||sigma)");
}

fn dims_strategy() -> impl Strategy<Value = Vec<usize>> {
    prop_oneof![Just(vec![2, 2]), Just(vec![2, 3]), Just(vec![3, 3]), Just(vec![2, 2, 2]), Just(vec![2, 3, 2])]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn ppt_projection_is_feasible_and_idempotent(seed in any::<u64>(), scale in 0.1f64..3.0) {
        let mut r = rng(seed);
        let a = random_hermitian(&[2, 2], &mut r).scale(scale);
        let p = ppt_project(&a, &cut(), DYKSTRA_MAX_ITERS, DYKSTRA_TOL).unwrap();
        prop_assert!(is_ppt(&p.op, &cut()).unwrap());
        prop_assert!((p.op.trace() - 1.0).abs() <= DYKSTRA_TOL);
        prop_assert!(relres::opcore::eig_hermitian(&p.op).values[0] >= -1e-10);
        let again = ppt_project(&p.op, &cut(), DYKSTRA_MAX_ITERS, DYKSTRA_TOL).unwrap();
        prop_assert!(max_diff(&again.op, &p.op) <= 1e-6);
    }

    #[test]
    fn rains_projection_is_feasible(seed in any::<u64>(), scale in 0.1f64..3.0) {
        let mut r = rng(seed);
        let a = random_hermitian(&[2, 2], &mut r).scale(scale);
        let p = rains_project(&a, &cut(), DYKSTRA_MAX_ITERS, DYKSTRA_TOL).unwrap();
        prop_assert!(relres::opcore::eig_hermitian(&p.op).values[0] >= -1e-12);
        prop_assert!(trace_norm(&partial_transpose(&p.op, 0).unwrap()) <= 1.0 + DYKSTRA_TOL);
    }

    #[test]
    fn lmo_outputs_are_ppt_product_states(seed in any::<u64>(), dims in dims_strategy()) {
        let mut r = rng(seed);
        let g = random_hermitian(&dims, &mut r);
        let full = Partition::finest(dims.len());
        let ps = product_lmo(&g, &full, 4, seed).unwrap();
        let op = ps.operator();
        prop_assert!((op.trace() - 1.0).abs() < 1e-12);
        let spec = FreeSetSpec::full_sep(&dims).unwrap();
        prop_assert!(spec.contains(&op, 1e-10).unwrap());
        // Restarts never make the value worse than the deterministic start.
        let base = product_lmo(&g, &full, 0, seed).unwrap();
        prop_assert!(ps.value <= base.value + 1e-12);
    }

    #[test]
    fn witness_keeps_marginals_and_entropy_sum(seed in any::<u64>(), dims in dims_strategy()) {
        let mut r = rng(seed);
        let d: usize = dims.iter().product();
        let psi = random_pure(d, &mut r);
        let sigma = separable_witness_from_pure(&psi, &dims).unwrap();
        let big = HermitianOp::projector(&dims, &psi).unwrap();
        let mut entropy_sum = 0.0;
        for k in 0..dims.len() {
            let a = partial_trace(&big, &[k]).unwrap();
            let b = partial_trace(&sigma, &[k]).unwrap();
            prop_assert!(trace_norm(&(&a - &b)) <= 1e-9);
            if k + 1 < dims.len() {
                entropy_sum += von_neumann_entropy(&a).unwrap();
            }
        }
        let d_val = relative_entropy(&big, &sigma).unwrap().value.to_f64();
        prop_assert!(entropy_sum - d_val >= -1e-9, "D = {d_val}, sum = {entropy_sum}");
        prop_assert!(FreeSetSpec::full_sep(&dims).unwrap().contains(&sigma, 1e-9).unwrap());
    }

    #[test]
    fn separable_mixtures_are_ppt(seed in any::<u64>()) {
        let mut r = rng(seed);
        let a = random_density(&[2], &mut r);
        let b = random_density(&[3], &mut r);
        let prod = relres::opcore::tensor(&a, &b);
        prop_assert!(is_ppt(&prod, &cut()).unwrap());
        let p = ppt_project(&prod, &cut(), DYKSTRA_MAX_ITERS, DYKSTRA_TOL).unwrap();
        prop_assert!(max_diff(&p.op, &prod) <= 1e-9);
    }
}
