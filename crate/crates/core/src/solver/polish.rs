//! Local refinement of a product-state decomposition.
//!
//! A decomposition `sum_i w_i |x_i><x_i| + sum_j w_j M_j` is rewritten with
//! unnormalized block factors and mixed-atom amplitudes,
//! `S = sum_i |u_i1 (x) .. (x) u_ik><..| + sum_j c_j^2 M_j`, and
//! `f(S / Tr S)` is minimized over all of them by L-BFGS. Every point of
//! this parametrization lies in the set, so whatever local minimum is
//! reached stays feasible. Frank-Wolfe supplies the atoms; this step moves
//! them, which Frank-Wolfe over a curved hull cannot do.

use std::collections::VecDeque;

use nalgebra::DVector;
use num_complex::Complex64 as C64;

use super::frank_wolfe::{Atom, AtomSet};
use super::objective::Objective;
use crate::error::Result;
use crate::freesets::{Partition, ProductFrame, ProductState};
use crate::opcore::HermitianOp;

const MEMORY: usize = 8;
const MAX_ITERS: usize = 200;
const ARMIJO_C: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 40;
/// Relative decrease below which the refinement stops.
const STALL: f64 = 1e-15;

struct ProductSlot {
    partition: usize,
    offset: usize,
}

struct Param<'a> {
    dims: Vec<usize>,
    partitions: &'a [Partition],
    frames: Vec<ProductFrame>,
    products: Vec<ProductSlot>,
    mixed: Vec<HermitianOp>,
    mixed_offset: usize,
}

impl Param<'_> {
    fn factors(&self, p: &[f64], slot: &ProductSlot) -> Vec<DVector<C64>> {
        let mut at = slot.offset;
        self.frames[slot.partition]
            .block_dims()
            .iter()
            .map(|&d| {
                let v = DVector::from_fn(d, |i, _| C64::new(p[at + 2 * i], p[at + 2 * i + 1]));
                at += 2 * d;
                v
            })
            .collect()
    }

    /// `S` and its trace.
    fn build(&self, p: &[f64]) -> (HermitianOp, f64) {
        let mut s = HermitianOp::zeros(&self.dims);
        for slot in &self.products {
            let x = self.frames[slot.partition].assemble(&self.factors(p, slot));
            s.add_scaled_projector(1.0, &x);
        }
        for (j, m) in self.mixed.iter().enumerate() {
            let c = p[self.mixed_offset + j];
            s.add_scaled(c * c, m);
        }
        let t = s.trace();
        (s, t)
    }

    fn value(&self, obj: &dyn Objective, p: &[f64]) -> f64 {
        let (s, t) = self.build(p);
        if !(t > 0.0) {
            return f64::INFINITY;
        }
        obj.value(&s.scale(1.0 / t))
    }

    fn value_grad(&self, obj: &dyn Objective, p: &[f64]) -> Result<(f64, Vec<f64>)> {
        let (s, t) = self.build(p);
        if !(t > 0.0) {
            return Ok((f64::INFINITY, vec![]));
        }
        let sigma = s.scale(1.0 / t);
        let (f, g) = obj.value_grad(&sigma)?;
        if !f.is_finite() {
            return Ok((f, vec![]));
        }
        // d f(S / Tr S) = Tr[h dS] with h = (G - Tr[G sigma] I) / Tr S.
        let mut h = g.scale(1.0 / t);
        h.add_scaled(-g.inner(&sigma) / t, &HermitianOp::identity(&self.dims));
        let permuted: Vec<_> = self.frames.iter().map(|fr| fr.permute(&h)).collect();
        let mut grad = vec![0.0; p.len()];
        for slot in &self.products {
            let factors = self.factors(p, slot);
            let z = self.frames[slot.partition].factor_gradients(&permuted[slot.partition], &factors);
            let mut at = slot.offset;
            for zb in z {
                for v in zb.iter() {
                    grad[at] = 2.0 * v.re;
                    grad[at + 1] = 2.0 * v.im;
                    at += 2;
                }
            }
        }
        for (j, m) in self.mixed.iter().enumerate() {
            grad[self.mixed_offset + j] = 2.0 * p[self.mixed_offset + j] * h.inner(m);
        }
        Ok((f, grad))
    }

    fn atoms(&self, p: &[f64]) -> AtomSet {
        let (_, t) = self.build(p);
        let mut out = AtomSet::new(&self.dims);
        for slot in &self.products {
            let mut factors = self.factors(p, slot);
            let mut w = 1.0 / t;
            for f in &mut factors {
                let n = f.norm();
                w *= n * n;
                if n > 0.0 {
                    *f /= C64::new(n, 0.0);
                }
            }
            if w > 0.0 {
                let frame = &self.frames[slot.partition];
                let vector = frame.assemble(&factors);
                let state = ProductState {
                    dims: self.dims.clone(),
                    partition: self.partitions[slot.partition].clone(),
                    factors,
                    vector,
                    value: f64::NAN,
                };
                out.add(Atom::Product(state), w);
            }
        }
        for (j, m) in self.mixed.iter().enumerate() {
            let c = p[self.mixed_offset + j];
            if c != 0.0 {
                out.add(Atom::Mixed(m.clone()), c * c * m.trace() / t);
            }
        }
        out
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// L-BFGS refinement of `atoms`; `None` when no atom can be parametrized
/// or the starting point is outside the objective's domain.
pub(crate) fn polish(
    obj: &dyn Objective,
    atoms: &AtomSet,
    partitions: &[Partition],
) -> Result<Option<(AtomSet, f64)>> {
    let dims = atoms.dims().to_vec();
    let frames: Vec<ProductFrame> = partitions.iter().map(|q| ProductFrame::new(&dims, q)).collect();
    let mut p0 = Vec::new();
    let mut products = Vec::new();
    let mut mixed = Vec::new();
    let mut mixed_amps = Vec::new();
    for (w, atom) in atoms.atoms() {
        match atom {
            Atom::Product(ps) => {
                let Some(q) = partitions.iter().position(|q| q == &ps.partition) else {
                    return Ok(None);
                };
                products.push(ProductSlot { partition: q, offset: p0.len() });
                for (b, f) in ps.factors.iter().enumerate() {
                    let scale = if b == 0 { w.max(0.0).sqrt() } else { 1.0 };
                    for z in f.iter() {
                        p0.push(scale * z.re);
                        p0.push(scale * z.im);
                    }
                }
            }
            Atom::Mixed(m) => {
                mixed.push(m.clone());
                mixed_amps.push(w.max(0.0).sqrt());
            }
        }
    }
    if products.is_empty() {
        return Ok(None);
    }
    let mixed_offset = p0.len();
    p0.extend(mixed_amps);
    let param = Param { dims, partitions, frames, products, mixed, mixed_offset };

    let mut p = p0;
    let (mut f, mut g) = param.value_grad(obj, &p)?;
    if !f.is_finite() {
        return Ok(None);
    }
    let mut memory: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(MEMORY);
    for _ in 0..MAX_ITERS {
        // Two-loop recursion for d = -H g.
        let mut q = g.clone();
        let mut alphas = Vec::with_capacity(memory.len());
        for (s, y, rho) in memory.iter().rev() {
            let a = rho * dot(s, &q);
            q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
            alphas.push(a);
        }
        let gamma = memory.back().map_or_else(
            || 1.0 / dot(&g, &g).sqrt().max(1e-300),
            |(s, y, _)| dot(s, y) / dot(y, y),
        );
        q.iter_mut().for_each(|qi| *qi *= gamma);
        for ((s, y, rho), a) in memory.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &q);
            q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
        }
        let mut d: Vec<f64> = q.iter().map(|x| -x).collect();
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            memory.clear();
            let n = dot(&g, &g).sqrt().max(1e-300);
            d = g.iter().map(|x| -x / n).collect();
            slope = dot(&g, &d);
        }
        let mut step = 1.0;
        let mut next = None;
        for _ in 0..MAX_BACKTRACKS {
            let trial: Vec<f64> = p.iter().zip(&d).map(|(x, di)| x + step * di).collect();
            let ft = param.value(obj, &trial);
            if ft.is_finite() && ft <= f + ARMIJO_C * step * slope {
                next = Some(trial);
                break;
            }
            step *= 0.5;
        }
        let Some(p_new) = next else { break };
        let (f_new, g_new) = param.value_grad(obj, &p_new)?;
        if !f_new.is_finite() {
            break;
        }
        let s: Vec<f64> = p_new.iter().zip(&p).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            if memory.len() == MEMORY {
                memory.pop_front();
            }
            memory.push_back((s, y, 1.0 / sy));
        }
        let gain = f - f_new;
        p = p_new;
        f = f_new;
        g = g_new;
        if gain <= STALL * f.abs().max(1.0) {
            break;
        }
    }
    Ok(Some((param.atoms(&p), f)))
}
