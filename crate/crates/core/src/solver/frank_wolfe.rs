//! Pairwise Frank-Wolfe over convex hulls of product states.

use nalgebra::DVector;
use num_complex::Complex64 as C64;

use super::objective::Objective;
use super::StepRule;
use crate::error::{Error, Result};
use crate::freesets::{product_lmo_warm, Partition, ProductState};
use crate::opcore::HermitianOp;
use crate::scalar::brent_min;

/// Squared overlap above which two pure atoms are merged.
const MERGE_OVERLAP: f64 = 1.0 - 1e-12;
const DROP_WEIGHT: f64 = 1e-15;
const FULL_EVERY: usize = 10;
/// Iterations between local refinements of the decomposition.
const POLISH_EVERY: usize = 25;

#[derive(Clone, Debug)]
pub enum Atom {
    /// A pure product state with its block factors.
    Product(ProductState),
    /// A fixed mixed state, e.g. `I/d`.
    Mixed(HermitianOp),
}

impl Atom {
    fn pairing(&self, g: &HermitianOp) -> f64 {
        match self {
            Atom::Product(p) => g.expectation(&p.vector),
            Atom::Mixed(m) => g.inner(m),
        }
    }

    fn add_to(&self, target: &mut HermitianOp, w: f64) {
        match self {
            Atom::Product(p) => target.add_scaled_projector(w, &p.vector),
            Atom::Mixed(m) => target.add_scaled(w, m),
        }
    }
}

/// A convex combination of atoms.
#[derive(Clone, Debug)]
pub struct AtomSet {
    dims: Vec<usize>,
    atoms: Vec<Atom>,
    weights: Vec<f64>,
}

impl AtomSet {
    pub fn new(dims: &[usize]) -> Self {
        Self { dims: dims.to_vec(), atoms: vec![], weights: vec![] }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn atoms(&self) -> impl Iterator<Item = (f64, &Atom)> {
        self.weights.iter().copied().zip(self.atoms.iter())
    }

    fn find(&self, atom: &Atom) -> Option<usize> {
        let Atom::Product(p) = atom else { return None };
        self.atoms.iter().position(|a| match a {
            Atom::Product(q) => (q.vector.adjoint() * &p.vector)[(0, 0)].norm_sqr() >= MERGE_OVERLAP,
            Atom::Mixed(_) => false,
        })
    }

    pub fn add(&mut self, atom: Atom, w: f64) {
        match self.find(&atom) {
            Some(i) => self.weights[i] += w,
            None => {
                self.atoms.push(atom);
                self.weights.push(w);
            }
        }
    }

    fn scale(&mut self, c: f64) {
        for w in &mut self.weights {
            *w *= c;
        }
    }

    fn prune(&mut self) {
        let mut k = 0;
        while k < self.atoms.len() {
            if self.weights[k] <= DROP_WEIGHT {
                self.atoms.remove(k);
                self.weights.remove(k);
            } else {
                k += 1;
            }
        }
    }

    pub fn assemble(&self) -> HermitianOp {
        let mut out = HermitianOp::zeros(&self.dims);
        for (w, a) in self.atoms() {
            a.add_to(&mut out, w);
        }
        HermitianOp::from_hermitian_part(self.dims.clone(), out.into_matrix()).expect("dims")
    }
}

pub struct FwSettings<'a> {
    pub partitions: &'a [Partition],
    pub max_iters: usize,
    pub tol: f64,
    pub restarts: usize,
    pub seed: u64,
    pub step_rule: StepRule,
    /// Certified lower bound on the optimum, checked every `check_every`
    /// iterations; meeting `tol` against it also stops the loop.
    pub lower_bound: Option<&'a dyn Fn(&HermitianOp) -> Result<f64>>,
    pub check_every: usize,
}

#[derive(Clone, Debug)]
pub struct FwOutcome {
    pub atoms: AtomSet,
    pub x: HermitianOp,
    pub value: f64,
    /// Linearization gap with the heuristic oracle at the last iterate.
    pub gap: f64,
    /// Best certified lower bound seen, `-inf` without a checker.
    pub lower: f64,
    pub iterations: usize,
    pub trace: Vec<f64>,
    pub converged: bool,
}

/// Product-state oracle over every partition, warm-started from the
/// previous answer for each one. Random restarts run only when `full`.
fn lmo(
    g: &HermitianOp,
    s: &FwSettings<'_>,
    k: usize,
    warm: &mut [Option<Vec<DVector<C64>>>],
    full: bool,
) -> Result<ProductState> {
    let seed = s.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(k as u64);
    let restarts = if full { s.restarts } else { 0 };
    let mut best: Option<ProductState> = None;
    for (p, w) in s.partitions.iter().zip(warm.iter_mut()) {
        let cand = product_lmo_warm(g, p, w.as_deref(), restarts, seed)?;
        *w = Some(cand.factors.clone());
        if best.as_ref().is_none_or(|b| cand.value < b.value) {
            best = Some(cand);
        }
    }
    best.ok_or_else(|| Error::InvalidPartition("empty partition list".into()))
}

fn line_search(obj: &dyn Objective, x: &HermitianOp, dir: &HermitianOp, gmax: f64) -> (f64, f64) {
    let phi = |gam: f64| {
        let mut y = x.clone();
        y.add_scaled(gam, dir);
        obj.value(&y)
    };
    let (g, v) = brent_min(0.0, gmax, 1e-10, 80, phi);
    let v_end = phi(gmax);
    if v_end <= v {
        (gmax, v_end)
    } else {
        (g, v)
    }
}

pub fn frank_wolfe(obj: &dyn Objective, init: AtomSet, s: &FwSettings<'_>) -> Result<FwOutcome> {
    let mut atoms = init;
    let mut x = atoms.assemble();
    let mut f = obj.value(&x);
    if !f.is_finite() {
        return Err(Error::InfeasibleStart);
    }
    let mut trace = vec![f];
    let mut gap = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;
    let mut lower = f64::NEG_INFINITY;
    let mut stall = super::StallWatch::new();
    let mut warm = vec![None; s.partitions.len()];
    for k in 0..s.max_iters {
        if let Some(lb) = s.lower_bound {
            if k > 0 && k % s.check_every == 0 {
                lower = lower.max(lb(&x)?);
                if f - lower <= s.tol {
                    converged = true;
                    break;
                }
                if stall.hopeless(f - lower, s.tol, (s.max_iters - k) / s.check_every) {
                    break;
                }
            }
        }
        let (fk, g) = obj.value_grad(&x)?;
        f = fk;
        let mut omega = lmo(&g, s, k, &mut warm, k % FULL_EVERY == 0)?;
        gap = g.inner(&x) - omega.value;
        if gap <= s.tol {
            // Confirm with the restarted oracle before stopping.
            omega = lmo(&g, s, k, &mut warm, true)?;
            gap = g.inner(&x) - omega.value;
            if gap <= s.tol {
                converged = true;
                break;
            }
        }
        iterations = k + 1;
        let new_atom = Atom::Product(omega.clone());
        match s.step_rule {
            StepRule::Harmonic => {
                let gam = 2.0 / (k as f64 + 2.0);
                atoms.scale(1.0 - gam);
                atoms.add(new_atom, gam);
                atoms.prune();
                x = atoms.assemble();
                f = obj.value(&x);
            }
            StepRule::LineSearch => {
                let (ia, _) = atoms
                    .atoms()
                    .enumerate()
                    .map(|(i, (_, a))| (i, a.pairing(&g)))
                    .fold((0, f64::NEG_INFINITY), |b, c| if c.1 > b.1 { c } else { b });
                let wa = atoms.weights[ia];
                let mut dir = omega.operator();
                atoms.atoms[ia].add_to(&mut dir, -1.0);
                let (gam, v) = line_search(obj, &x, &dir, wa);
                if v < f && gam > 0.0 {
                    atoms.weights[ia] -= gam;
                    if gam >= wa {
                        atoms.weights[ia] = 0.0;
                    }
                    atoms.add(new_atom, gam);
                } else {
                    let dir = &omega.operator() - &x;
                    let (gam, v) = line_search(obj, &x, &dir, 1.0);
                    if !(v < f && gam > 0.0) {
                        break;
                    }
                    atoms.scale(1.0 - gam);
                    atoms.add(new_atom, gam);
                }
                atoms.prune();
                if iterations % POLISH_EVERY == 0 {
                    if let Some((polished, fp)) = super::polish::polish(obj, &atoms, s.partitions)? {
                        let v = obj.value(&atoms.assemble());
                        if fp < v {
                            atoms = polished;
                        }
                    }
                }
                x = atoms.assemble();
                f = obj.value(&x);
            }
        }
        trace.push(f);
    }
    Ok(FwOutcome { atoms, x, value: f, gap, lower, iterations, trace, converged })
}
