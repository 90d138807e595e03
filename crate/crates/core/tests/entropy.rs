mod common;

use common::*;
use relres::entropy::*;
use relres::opcore::{eig_hermitian, matrix_log_support, DEFAULT_CUTOFF};
use relres::random::{random_density, random_density_rank, random_hermitian};
use rand::Rng;
use relres::HermitianOp;

const VIOLATION_TOL: f64 = 1e-9;
const CASES: usize = 200;

fn d(x: &HermitianOp, y: &HermitianOp) -> f64 {
    relative_entropy(x, y).unwrap().value.to_f64()
}

fn mix(ops: &[HermitianOp], p: &[f64]) -> HermitianOp {
    let mut out = HermitianOp::zeros(ops[0].dims());
    for (o, &w) in ops.iter().zip(p) {
        out.add_scaled(w, o);
    }
    out
}

fn weights<R: rand::Rng>(n: usize, r: &mut R) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| r.random::<f64>() + 1e-3).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

/// Random PSD operator `X <= Y` built as `Y = X + B B^dag`.
fn ordered_pair<R: rand::Rng>(dim: usize, r: &mut R) -> (HermitianOp, HermitianOp) {
    let x = random_density(&[dim], r);
    let mut y = x.clone();
    y.add_scaled(r.random::<f64>(), &random_density_rank(&[dim], 1 + r.random_range(0..dim), r));
    (x, y)
}

#[test]
fn joint_convexity() {
    let mut r = rng(21);
    let mut worst = f64::NEG_INFINITY;
    for k in 0..CASES {
        let dim = 2 + k % 3;
        let n = 2 + k % 3;
        let xs: Vec<_> = (0..n).map(|_| random_density(&[dim], &mut r)).collect();
        let ys: Vec<_> = (0..n).map(|_| random_density(&[dim], &mut r)).collect();
        let p = weights(n, &mut r);
        let lhs = d(&mix(&xs, &p), &mix(&ys, &p));
        let rhs: f64 = (0..n).map(|i| p[i] * d(&xs[i], &ys[i])).sum();
        worst = worst.max(lhs - rhs);
    }
    assert!(worst <= VIOLATION_TOL, "joint convexity violated by {worst:.3e}");
}

#[test]
fn scaling_identity() {
    let mut r = rng(22);
    for k in 0..CASES {
        let dim = 2 + k % 4;
        let rho = random_density(&[dim], &mut r);
        let sigma = random_density(&[dim], &mut r);
        let lambda: f64 = 1e-3 + (1.0 - 1e-3) * r.random::<f64>();
        let lhs = d(&rho, &sigma.scale(lambda));
        let rhs = d(&rho, &sigma) + lambda - 1.0 - lambda.ln();
        assert!((lhs - rhs).abs() <= VIOLATION_TOL * (1.0 + rhs.abs()), "case {k}: {lhs} vs {rhs}");
    }
}

#[test]
fn peierls_bogoliubov() {
    let mut r = rng(23);
    for k in 0..CASES {
        let dim = 2 + k % 4;
        // Rank-deficient states exercise the support convention.
        let rho = if k % 2 == 0 {
            random_density(&[dim], &mut r)
        } else {
            random_density_rank(&[dim], 1 + k % dim, &mut r)
        };
        let x = random_hermitian(&[dim], &mut r);
        let gap = log_trace_exp(&rho, &x).unwrap() - rho.inner(&x);
        assert!(gap >= -VIOLATION_TOL, "case {k}: gap {gap:.3e}");
    }
}

#[test]
fn log_trace_exp_is_monotone() {
    let mut r = rng(24);
    for k in 0..CASES {
        let dim = 2 + k % 4;
        let (xi1, xi2) = ordered_pair(dim, &mut r);
        let x = random_hermitian(&[dim], &mut r);
        let (a, b) = (log_trace_exp(&xi1, &x).unwrap(), log_trace_exp(&xi2, &x).unwrap());
        assert!(a <= b + VIOLATION_TOL, "case {k}: {a} > {b}");
    }
}

#[test]
fn log_trace_exp_is_concave() {
    let mut r = rng(25);
    for k in 0..CASES {
        let dim = 2 + k % 4;
        let xi1 = random_density(&[dim], &mut r);
        let xi2 = random_density(&[dim], &mut r);
        let x = random_hermitian(&[dim], &mut r);
        let p: f64 = r.random();
        let mid = mix(&[xi1.clone(), xi2.clone()], &[p, 1.0 - p]);
        let lhs = log_trace_exp(&mid, &x).unwrap();
        let rhs = p * log_trace_exp(&xi1, &x).unwrap() + (1.0 - p) * log_trace_exp(&xi2, &x).unwrap();
        assert!(lhs >= rhs - VIOLATION_TOL, "case {k}: {lhs} < {rhs}");
    }
}

#[test]
fn log_trace_exp_monotone_along_a_ray() {
    // Finite differences along xi + t P with P >= 0.
    let mut r = rng(26);
    let xi = random_density(&[3], &mut r);
    let p = random_density_rank(&[3], 1, &mut r);
    let x = random_hermitian(&[3], &mut r);
    let vals: Vec<f64> = (0..50)
        .map(|k| {
            let mut a = xi.clone();
            a.add_scaled(k as f64 * 0.02, &p);
            log_trace_exp(&a, &x).unwrap()
        })
        .collect();
    assert!(vals.windows(2).all(|w| w[1] >= w[0] - VIOLATION_TOL));
}

#[test]
fn petz_dual_never_exceeds_relative_entropy() {
    let mut r = rng(27);
    for k in 0..50 {
        let rho = random_density(&[4], &mut r);
        let sigma = random_density(&[4], &mut r);
        let x = random_hermitian(&[4], &mut r);
        let v = petz_dual_value(&rho, &sigma, &x).unwrap();
        assert!(v <= d(&rho, &sigma) + VIOLATION_TOL, "case {k}");
    }
}

#[test]
fn petz_dual_is_attained_at_the_log_ratio() {
    // X = ln rho - ln sigma attains D(rho||sigma) for faithful pairs.
    let mut r = rng(28);
    for _ in 0..20 {
        let rho = faithful(&[3], 0.01, &mut r);
        let sigma = faithful(&[3], 0.01, &mut r);
        let (lr, _) = matrix_log_support(&rho, DEFAULT_CUTOFF).unwrap();
        let (ls, _) = matrix_log_support(&sigma, DEFAULT_CUTOFF).unwrap();
        let v = petz_dual_value(&rho, &sigma, &(&lr - &ls)).unwrap();
        assert_close(v, d(&rho, &sigma), 1e-10, "attained dual value");
    }
}

#[test]
fn splitting_identity_on_random_pairs() {
    let mut r = rng(29);
    for _ in 0..CASES {
        let x = random_density(&[3], &mut r).scale(0.5 + r.random::<f64>());
        let y = faithful(&[3], 0.02, &mut r).scale(0.5 + r.random::<f64>());
        let (ly, _) = matrix_log_support(&y, DEFAULT_CUTOFF).unwrap();
        let split = -von_neumann_entropy(&x).unwrap() - x.inner(&ly) + y.trace() - x.trace();
        assert_close(d(&x, &y), split, VIOLATION_TOL, "splitting identity");
    }
}

#[test]
fn support_mismatch_is_infinite() {
    let mut r = rng(30);
    for _ in 0..20 {
        let x = random_density(&[3], &mut r);
        let y = random_density_rank(&[3], 2, &mut r);
        assert!(!relative_entropy(&x, &y).unwrap().value.is_finite());
        assert!(relative_entropy(&y, &x).unwrap().value.is_finite());
    }
}

#[test]
fn non_uniqueness_witness() {
    // Two distinct states both at relative entropy ln 2 from the Bell state.
    let phi = bell();
    let mut s1 = phi.scale(0.5);
    s1.add_scaled(1.0 / 6.0, &(&HermitianOp::identity(&[2, 2]) - &phi));
    let s2 = diag(&[0.5, 0.0, 0.0, 0.5]).with_dims(vec![2, 2]).unwrap();
    let (a, b) = (d(&phi, &s1), d(&phi, &s2));
    assert_close(a, std::f64::consts::LN_2, 1e-12, "D(Phi||sigma1)");
    assert_close(b, std::f64::consts::LN_2, 1e-12, "D(Phi||sigma2)");
    let diff = &s1 - &s2;
    let t: f64 = eig_hermitian(&diff).values.iter().map(|v| v.abs()).sum();
    assert!(t > 0.1);
}
