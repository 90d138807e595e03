//! Continuity bounds for entanglement measures under an energy constraint.
//!
//! All bounds take the trace distance `eps = ||rho - sigma||_1 / 2` and a
//! mean-energy ceiling `E`, and minimize a one-parameter family over `t`
//! by a log-spaced grid followed by golden-section refinement.

use crate::entropy::g_unchecked;
use crate::error::{Error, Result};
use crate::scalar::{bisect, geomspace, grid_then_golden};

/// Relative tolerance of the Gibbs energy equation.
pub const GIBBS_REL_TOL: f64 = 1e-10;
/// Points of the geometric grid behind [`g_min`].
pub const GMIN_GRID: usize = 200;
/// Seeds of the grid preceding golden-section refinement over `t`.
pub const T_GRID: usize = 64;
const T_GRID_SPAN: f64 = 1e-8;
const GOLDEN_ITERS: usize = 200;
const GMIN_REFINE_ITERS: usize = 80;

#[derive(Clone, Debug, PartialEq)]
pub struct OscillatorSpec {
    omegas: Vec<f64>,
}

impl OscillatorSpec {
    pub fn new(omegas: Vec<f64>) -> Result<Self> {
        if omegas.is_empty() || omegas.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidArgument(format!("frequencies must be positive, got {omegas:?}")));
        }
        Ok(Self { omegas })
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    pub fn modes(&self) -> usize {
        self.omegas.len()
    }

    /// `E_0 = sum(omega) / 2`.
    pub fn e0(&self) -> f64 {
        0.5 * self.omegas.iter().sum::<f64>()
    }

    /// Geometric mean of the frequencies.
    pub fn e_star(&self) -> f64 {
        (self.omegas.iter().map(|w| w.ln()).sum::<f64>() / self.modes() as f64).exp()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum HamiltonianSpec {
    /// Ascending spectrum with ground energy 0, counted with multiplicity.
    Spectrum(Vec<f64>),
    /// `sum_k omega_k a_k^dag a_k`.
    Oscillator(OscillatorSpec),
}

impl HamiltonianSpec {
    pub fn spectrum(levels: Vec<f64>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::InvalidArgument("empty spectrum".into()));
        }
        if levels.windows(2).any(|w| !(w[0] <= w[1])) || levels.iter().any(|e| !e.is_finite()) {
            return Err(Error::InvalidArgument("spectrum must be finite and ascending".into()));
        }
        if levels[0] != 0.0 {
            return Err(Error::InvalidArgument(format!("spectrum must be grounded, min is {}", levels[0])));
        }
        Ok(Self::Spectrum(levels))
    }

    pub fn oscillator(omegas: Vec<f64>) -> Result<Self> {
        Ok(Self::Oscillator(OscillatorSpec::new(omegas)?))
    }

    /// Mean energy of the thermal state at inverse temperature `lambda`.
    fn energy(&self, lambda: f64) -> f64 {
        match self {
            Self::Spectrum(e) => {
                let w: Vec<f64> = e.iter().map(|x| (-lambda * x).exp()).collect();
                let z: f64 = w.iter().sum();
                e.iter().zip(&w).map(|(x, p)| x * p).sum::<f64>() / z
            }
            Self::Oscillator(o) => o.omegas.iter().map(|w| w / (lambda * w).exp_m1()).sum(),
        }
    }

    fn entropy_at(&self, lambda: f64) -> f64 {
        match self {
            Self::Spectrum(e) => {
                let w: Vec<f64> = e.iter().map(|x| (-lambda * x).exp()).collect();
                let z: f64 = w.iter().sum();
                let mean = e.iter().zip(&w).map(|(x, p)| x * p).sum::<f64>() / z;
                lambda * mean + z.ln()
            }
            Self::Oscillator(o) => o.omegas.iter().map(|w| g_unchecked(1.0 / (lambda * w).exp_m1())).sum(),
        }
    }

    fn ground_entropy(&self) -> f64 {
        match self {
            Self::Spectrum(e) => (e.iter().filter(|&&x| x == 0.0).count() as f64).ln(),
            Self::Oscillator(_) => 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GibbsSolution {
    /// Inverse temperature; `+inf` at `E = 0`, `0` once the spectrum saturates.
    pub lambda: f64,
    /// `F_H(E)`.
    pub entropy: f64,
}

/// Maximal entropy at mean energy at most `energy`, attained by a Gibbs state.
/// For a finite spectrum and `energy` at or above its mean the maximally
/// mixed state is admissible and the value saturates at `ln d`.
pub fn gibbs_solve(h: &HamiltonianSpec, energy: f64) -> Result<GibbsSolution> {
    if !(energy >= 0.0 && energy.is_finite()) {
        return Err(Error::InvalidArgument(format!("energy {energy} outside [0, inf)")));
    }
    if energy == 0.0 {
        return Ok(GibbsSolution { lambda: f64::INFINITY, entropy: h.ground_entropy() });
    }
    if let HamiltonianSpec::Spectrum(e) = h {
        let mean = e.iter().sum::<f64>() / e.len() as f64;
        if energy >= mean {
            return Ok(GibbsSolution { lambda: 0.0, entropy: (e.len() as f64).ln() });
        }
    }
    // energy(lambda) decreases in lambda; bracket in log lambda
    let mut lo = 0.0f64;
    while h.energy(lo.exp()) < energy {
        lo -= 4.0;
        if lo < -700.0 {
            return Err(Error::InvalidArgument(format!("energy {energy} not attainable")));
        }
    }
    let mut hi = 0.0f64;
    while h.energy(hi.exp()) > energy {
        hi += 4.0;
        if hi > 700.0 {
            return Err(Error::InvalidArgument(format!("energy {energy} below numerical range")));
        }
    }
    let (mut a, mut b) = (lo, hi);
    for _ in 0..400 {
        let mid = 0.5 * (a + b);
        let em = h.energy(mid.exp());
        if (em - energy).abs() <= GIBBS_REL_TOL * energy || mid == a || mid == b {
            a = mid;
            b = mid;
            break;
        }
        if em > energy {
            a = mid;
        } else {
            b = mid;
        }
    }
    let lambda = (0.5 * (a + b)).exp();
    Ok(GibbsSolution { lambda, entropy: h.entropy_at(lambda) })
}

/// `F_H(E)`.
pub fn entropy_ceiling(h: &HamiltonianSpec, energy: f64) -> Result<f64> {
    Ok(gibbs_solve(h, energy)?.entropy)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GMinReport {
    pub value: f64,
    /// Grid point where `F_H(E') / sqrt(E')` peaked.
    pub argmax: f64,
    /// True when the peak sits at `E_max`, so the envelope may be
    /// underestimated by the truncation of the supremum.
    pub at_truncation: bool,
}

/// `sqrt(E) * sup_{E <= E' <= E_max} F_H(E') / sqrt(E')` on a geometric grid.
pub fn g_min(h: &HamiltonianSpec, energy: f64, e_max: f64) -> Result<GMinReport> {
    g_min_with_grid(h, energy, e_max, GMIN_GRID)
}

pub fn g_min_with_grid(h: &HamiltonianSpec, energy: f64, e_max: f64, points: usize) -> Result<GMinReport> {
    if !(energy > 0.0 && e_max >= energy && e_max.is_finite()) || points == 0 {
        return Err(Error::InvalidArgument(format!("need 0 < E <= E_max, got E {energy}, E_max {e_max}")));
    }
    let grid: Vec<f64> = geomspace(energy, e_max, points).iter().map(|e| e.ln()).collect();
    // the grid maximum is refined so that nearby energies, whose grids
    // differ, still see the same peak
    let neg_ratio = |u: f64| match entropy_ceiling(h, u.exp()) {
        Ok(f) => -f / (0.5 * u).exp(),
        Err(_) => f64::INFINITY,
    };
    let (u, v) = grid_then_golden(&grid, GMIN_REFINE_ITERS, neg_ratio);
    if !v.is_finite() {
        entropy_ceiling(h, energy)?;
        return Err(Error::InvalidArgument(format!("F_H undefined on [{energy}, {e_max}]")));
    }
    let last = *grid.last().expect("non-empty grid");
    Ok(GMinReport {
        value: -v * energy.sqrt(),
        argmax: u.exp(),
        at_truncation: points > 1 && u >= grid[points - 2] + 0.5 * (last - grid[points - 2]),
    })
}

/// Upper end of the supremum in [`g_min_envelope`], relative to `max(E, 1)`.
pub const GMIN_SPAN: f64 = 1e6;

/// `G_min` as a function, truncating each supremum at `GMIN_SPAN max(E, 1)`.
/// At `E = 0` it returns `F_H(0)`, the smallest value compatible with
/// `G >= F_H`.
pub fn g_min_envelope(h: &HamiltonianSpec) -> impl Fn(f64) -> f64 + '_ {
    move |e: f64| {
        let r = if e == 0.0 {
            entropy_ceiling(h, 0.0)
        } else {
            g_min(h, e, GMIN_SPAN * e.max(1.0)).map(|r| r.value)
        };
        r.unwrap_or(f64::NAN)
    }
}

/// `l (ln((E + 2 E_0) / (l E_*)) + 1)`, an admissible envelope for oscillators.
pub fn g_oscillator(spec: &OscillatorSpec, energy: f64) -> f64 {
    let l = spec.modes() as f64;
    l * (((energy + 2.0 * spec.e0()) / (l * spec.e_star())).ln() + 1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundVariant {
    Bipartite,
    Multipartite,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundRequest {
    /// Trace distance `||rho - sigma||_1 / 2`.
    pub epsilon: f64,
    pub energy: f64,
    /// Integer with `ln d0 > G(0)`; only the bipartite envelope form uses it.
    pub d0: Option<u64>,
    pub parties: usize,
    /// Number of constrained parties, `m - 1` or `m`.
    pub s: usize,
    pub variant: BoundVariant,
}

impl BoundRequest {
    pub fn bipartite(epsilon: f64, energy: f64, d0: Option<u64>) -> Self {
        Self { epsilon, energy, d0, parties: 2, s: 1, variant: BoundVariant::Bipartite }
    }

    pub fn multipartite(epsilon: f64, energy: f64, parties: usize, s: usize) -> Self {
        Self { epsilon, energy, d0: None, parties, s, variant: BoundVariant::Multipartite }
    }

    fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(Error::InvalidArgument(format!("epsilon {} outside (0, 1]", self.epsilon)));
        }
        if !(self.energy > 0.0 && self.energy.is_finite()) {
            return Err(Error::InvalidArgument(format!("energy {} must be positive", self.energy)));
        }
        if self.parties < 2 {
            return Err(Error::InvalidArgument(format!("need at least 2 parties, got {}", self.parties)));
        }
        if self.s + 1 != self.parties && self.s != self.parties {
            return Err(Error::InvalidArgument(format!(
                "s must be m - 1 or m, got s = {} with m = {}",
                self.s, self.parties
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundValue {
    pub value: f64,
    pub t_star: f64,
}

/// Smallest `E` with `G(E) >= target`, `+inf` if `G` stays below it.
fn g_inverse(g: &dyn Fn(f64) -> f64, target: f64) -> f64 {
    let mut hi = 1.0;
    while g(hi) < target {
        hi *= 2.0;
        if hi > 1e300 {
            return f64::INFINITY;
        }
    }
    // bisects until the bracket collapses to adjacent floats
    bisect(0.0, hi, 2000, |e| g(e) < target).1
}

fn minimize_over_t(t_max: f64, f: impl Fn(f64) -> f64) -> BoundValue {
    let grid: Vec<f64> = geomspace(T_GRID_SPAN, 1.0, T_GRID).iter().map(|u| u.ln()).collect();
    let (u, value) = grid_then_golden(&grid, GOLDEN_ITERS, |u| f(t_max * u.exp()));
    BoundValue { value, t_star: t_max * u.exp() }
}

/// The bracket of the bipartite bound at a given `t`.
pub fn bipartite_objective(epsilon: f64, energy: f64, g: &dyn Fn(f64) -> f64, constant: f64, t: f64) -> f64 {
    let et = epsilon * t;
    epsilon * (1.0 + 4.0 * t) * (g(energy / (et * et)) + constant + std::f64::consts::LN_2)
        + 2.0 * g_unchecked(et)
        + g_unchecked(epsilon * (1.0 + 2.0 * t))
}

/// Infimum over `t in (0, t_max]` of [`bipartite_objective`].
pub fn bipartite_bound_with(
    epsilon: f64,
    energy: f64,
    g: &dyn Fn(f64) -> f64,
    constant: f64,
    t_max: f64,
) -> BoundValue {
    minimize_over_t(t_max, |t| bipartite_objective(epsilon, energy, g, constant, t))
}

/// Bipartite bound with envelope `G`, constant `1/d0` and
/// `T = min(1, sqrt(E / G^{-1}(ln d0))) / eps`.
pub fn bipartite_bound(req: &BoundRequest, g: &dyn Fn(f64) -> f64) -> Result<BoundValue> {
    req.validate()?;
    let d0 = req.d0.ok_or_else(|| Error::InvalidArgument("bipartite bound needs d0".into()))?;
    let ln_d0 = (d0 as f64).ln();
    if !(d0 >= 1 && ln_d0 > g(0.0)) {
        return Err(Error::InvalidArgument(format!("ln d0 = {ln_d0} must exceed G(0) = {}", g(0.0))));
    }
    let ginv = g_inverse(g, ln_d0);
    let t_max = (req.energy / ginv).sqrt().min(1.0) / req.epsilon;
    Ok(bipartite_bound_with(req.epsilon, req.energy, g, 1.0 / d0 as f64, t_max))
}

/// Oscillator form: envelope [`g_oscillator`], constant `e^{-l}` and
/// `T_* = min(1, sqrt(E / E_0)) / eps`.
pub fn bipartite_bound_oscillator(req: &BoundRequest, spec: &OscillatorSpec) -> Result<BoundValue> {
    req.validate()?;
    let g = |e: f64| g_oscillator(spec, e);
    let l = spec.modes() as f64;
    let t_max = (req.energy / spec.e0()).sqrt().min(1.0) / req.epsilon;
    Ok(bipartite_bound_with(req.epsilon, req.energy, &g, (-l).exp(), t_max))
}

/// `((m-1)/s) sqrt(2 eps) F_{H[s]}(sE/eps) + g(sqrt(2 eps))` with
/// `F_{H[s]}(x) = s F_H(x/s)` for identical parties.
pub fn multipartite_bound_sqrt(req: &BoundRequest, f_h: &dyn Fn(f64) -> Result<f64>) -> Result<f64> {
    req.validate()?;
    let (m, s) = (req.parties as f64, req.s as f64);
    let r = (2.0 * req.epsilon).sqrt();
    let f_s = s * f_h(req.energy / req.epsilon)?;
    Ok((m - 1.0) / s * r * f_s + g_unchecked(r))
}

/// The bracket of the `t`-form multipartite bound.
pub fn multipartite_objective(req: &BoundRequest, g: &dyn Fn(f64) -> f64, t: f64) -> f64 {
    let (eps, e) = (req.epsilon, req.energy);
    let (m, s) = (req.parties as f64, req.s as f64);
    let et = eps * t;
    let a = eps + et * et;
    let b = (2.0 * et).sqrt();
    (m - 1.0) * (a * g(s * e / (et * et)) + 2.0 * b * g(e / et)) + g_unchecked(a) + 2.0 * g_unchecked(b)
}

/// Infimum over `t in (0, 1/eps)` of [`multipartite_objective`].
pub fn multipartite_bound_t(req: &BoundRequest, g: &dyn Fn(f64) -> f64) -> Result<BoundValue> {
    req.validate()?;
    let t_max = (1.0 - 1e-12) / req.epsilon;
    Ok(minimize_over_t(t_max, |t| multipartite_objective(req, g, t)))
}
