//! Eigensolvers for the pencil `A u = lambda M u`: Rayleigh quotient
//! iteration, the three-grid warm-started variant used for multilevel
//! differences, and shift-invert implicitly restarted Arnoldi.

mod arnoldi;
pub(crate) mod dense;
mod rqi;
mod tgrqi;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;

pub use arnoldi::arnoldi_smallest;
pub use rqi::{coarse_initial_guess, rqi, rqi_from_guess, InitialGuess};
pub use tgrqi::{tg_rqi, TgRqiOutput, TG_EPS_STOP};

/// Arnoldi subspace dimensions by level, clamped at the last entry.
pub const NCV_BY_LEVEL: [usize; 5] = [20, 40, 70, 70, 100];

#[derive(Debug, Clone, PartialEq)]
pub struct SolverSettings<T> {
    pub eps_stop: T,
    pub max_iters: usize,
    pub ncv: usize,
    pub warmup_iters: usize,
    pub max_restarts: usize,
    /// Compute left eigenvectors in `arnoldi_smallest`.
    pub left_vectors: bool,
}

impl<T: Real> Default for SolverSettings<T> {
    fn default() -> Self {
        Self {
            eps_stop: T::lit(1e-12),
            max_iters: 1000,
            ncv: NCV_BY_LEVEL[0],
            warmup_iters: 10,
            max_restarts: 300,
            left_vectors: false,
        }
    }
}

impl<T: Real> SolverSettings<T> {
    /// Defaults with the Arnoldi subspace size for `level`.
    pub fn for_level(level: usize) -> Self {
        Self { ncv: NCV_BY_LEVEL[level.min(NCV_BY_LEVEL.len() - 1)], ..Self::default() }
    }

    pub fn with_eps(mut self, eps: T) -> Self {
        self.eps_stop = eps;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps_stop > T::zero()) {
            return Err(Error::InvalidSettings(format!("eps_stop must be positive, got {}", self.eps_stop)));
        }
        if self.ncv < 4 {
            return Err(Error::InvalidSettings(format!("ncv must be at least 4, got {}", self.ncv)));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidSettings("max_iters must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenResult<T> {
    pub lambda: Complex<T>,
    /// Unit 2-norm right eigenvector on the interior nodes.
    pub right_vec: Vec<Complex<T>>,
    /// Unit 2-norm left (adjoint) eigenvector, when computed.
    pub left_vec: Option<Vec<Complex<T>>>,
    pub iterations: usize,
    pub linear_solves: usize,
    pub wall_time: f64,
    pub converged: bool,
    /// `||A x - lambda M x||_2` for the returned unit vector.
    pub residual: T,
    /// Deterministic operation count (factorizations, solves, products).
    pub flops: u64,
    /// The converged value moved more than 50% away from the initial guess.
    pub misconvergence_risk: bool,
    /// Eigenvalue iterates, starting with the initial guess.
    pub history: Vec<Complex<T>>,
}

/// True when the smallest-magnitude eigenvalue is not real, i.e. the
/// discretization has lost the real simple principal eigenvalue.
pub fn detect_instability<T: Real>(spectrum: &[EigenResult<T>]) -> bool {
    spectrum
        .iter()
        .min_by(|a, b| a.lambda.norm().partial_cmp(&b.lambda.norm()).unwrap_or(std::cmp::Ordering::Equal))
        .is_some_and(|e| e.lambda.im.abs() > T::lit(1e-8) * e.lambda.norm())
}
