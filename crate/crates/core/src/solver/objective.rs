//! Smooth convex objectives over density operators.

use crate::entropy::{log_trace_exp_with_gibbs, relative_entropy_eig};
use crate::error::Result;
use crate::opcore::{eig_hermitian, EigenSystem, HermitianOp, LogDerivative, DEFAULT_CUTOFF};

pub(crate) trait Objective {
    /// `+inf` outside the domain.
    fn value(&self, x: &HermitianOp) -> f64;
    fn value_grad(&self, x: &HermitianOp) -> Result<(f64, HermitianOp)>;
}

/// `sigma -> Tr rho (ln rho - ln sigma)`, i.e. `D(rho || sigma) + 1 - Tr sigma`
/// for a state `rho`. On unit-trace `sigma` this is the relative entropy;
/// on sub-normalized `sigma` it is the Rains objective.
pub(crate) struct RelEntObjective {
    rho: HermitianOp,
    rho_eig: EigenSystem,
}

impl RelEntObjective {
    pub fn new(rho: &HermitianOp) -> Self {
        Self { rho: rho.clone(), rho_eig: eig_hermitian(rho) }
    }

    pub fn value_eig(&self, eig: &EigenSystem) -> f64 {
        match relative_entropy_eig(&self.rho_eig, eig) {
            Ok(r) => match r.value.finite() {
                Some(v) => v + self.rho.trace() - eig.values.iter().sum::<f64>(),
                None => f64::INFINITY,
            },
            Err(_) => f64::INFINITY,
        }
    }
}

impl Objective for RelEntObjective {
    fn value(&self, x: &HermitianOp) -> f64 {
        self.value_eig(&eig_hermitian(x))
    }

    /// Gradient `-Gamma_sigma(rho)`.
    fn value_grad(&self, x: &HermitianOp) -> Result<(f64, HermitianOp)> {
        let eig = eig_hermitian(x);
        let f = self.value_eig(&eig);
        let ld = LogDerivative::from_eigen(eig, DEFAULT_CUTOFF)?;
        Ok((f, -&ld.apply_lenient(&self.rho)))
    }
}

/// `xi -> -ln Tr exp(ln xi + X)`, convex by concavity of the log-trace-exp.
pub(crate) struct NegLogTraceExp {
    pub x: HermitianOp,
}

impl Objective for NegLogTraceExp {
    fn value(&self, xi: &HermitianOp) -> f64 {
        match crate::entropy::log_trace_exp(xi, &self.x) {
            Ok(v) => -v,
            Err(_) => f64::INFINITY,
        }
    }

    /// Gradient `-Gamma_xi(W)` with `W = e^L / Tr e^L`.
    fn value_grad(&self, xi: &HermitianOp) -> Result<(f64, HermitianOp)> {
        let (v, w) = log_trace_exp_with_gibbs(xi, &self.x)?;
        let ld = LogDerivative::new(xi, DEFAULT_CUTOFF)?;
        Ok((-v, -&ld.apply_lenient(&w)))
    }
}
