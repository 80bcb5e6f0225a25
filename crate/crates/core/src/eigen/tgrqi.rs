//! Three-grid RQI: the coarsest-level eigenpair is interpolated up the
//! hierarchy and refined by a few RQI steps on levels `l-1` and `l`.

use num_complex::Complex;

use super::rqi::{coarse_initial_guess, rqi, rqi_from_guess};
use super::{EigenResult, SolverSettings};
use crate::assembly::AssembledSystem;
use crate::error::{Error, Result};
use crate::mesh::{prolongate, Mesh};
use crate::scalar::{Field, Real};

/// Stopping tolerance of every RQI call inside [`tg_rqi`].
pub const TG_EPS_STOP: f64 = 1e-10;

/// Fine-level RQI iteration count above which a sample is flagged.
const FINE_ITERATION_FLAG: usize = 3;

#[derive(Debug, Clone)]
pub struct TgRqiOutput<T> {
    pub lambda_fine: Complex<T>,
    pub lambda_coarse: Complex<T>,
    /// `lambda_fine - lambda_coarse`.
    pub difference: Complex<T>,
    pub coarsest: EigenResult<T>,
    /// `None` when level `l-1` is the coarsest level.
    pub middle: Option<EigenResult<T>>,
    pub fine: EigenResult<T>,
    /// Total deterministic operation count including the warm-up.
    pub flops: u64,
    /// Fine-level RQI needed more than three iterations.
    pub slow_fine: bool,
}

impl<T: Real> TgRqiOutput<T> {
    /// RQI iterations on the coarsest, middle and fine levels.
    pub fn iterations(&self) -> [usize; 3] {
        [
            self.coarsest.iterations,
            self.middle.as_ref().map_or(0, |m| m.iterations),
            self.fine.iterations,
        ]
    }
}

/// Computes `lambda_l - lambda_{l-1}` from systems on the coarsest level,
/// level `l-1` and level `l`, all assembled for the same sample. When
/// `l = 1` the first two entries describe the same level and the middle
/// solve is skipped.
pub fn tg_rqi<T>(
    systems: [&AssembledSystem<T>; 3],
    meshes: [&Mesh<T>; 3],
    settings: &SolverSettings<T>,
) -> Result<TgRqiOutput<T>>
where
    T: Real + Field<Real = T>,
    Complex<T>: Field<Real = T>,
{
    for (s, m) in systems.iter().zip(&meshes) {
        if s.n() != m.n_interior() {
            return Err(Error::DimensionMismatch { expected: m.n_interior(), got: s.n() });
        }
    }
    let [s0, s1, s2] = systems;
    let [m0, m1, m2] = meshes;
    if !(m0.level() <= m1.level() && m1.level() < m2.level()) {
        return Err(Error::InvalidInput("tg_rqi levels must satisfy 0 <= l-1 < l".into()));
    }
    let two_grid = m0.level() == m1.level();
    if two_grid && s0.t != s1.t {
        return Err(Error::InvalidInput("coarsest and middle systems differ on the same level".into()));
    }
    let tg = settings.clone().with_eps(T::lit(TG_EPS_STOP).max(settings.eps_stop));

    let guess = coarse_initial_guess(s0, &tg)?;
    let mut flops = guess.flops;
    let coarsest = rqi_from_guess(s0, &guess, &tg)?;
    flops += coarsest.flops;

    let (middle, base) = if two_grid {
        (None, &coarsest)
    } else {
        let eta = prolongate(m0, m1, &coarsest.right_vec)?;
        let xi = prolongate(m0, m1, left(&coarsest))?;
        let r = rqi(s1, &eta, &xi, coarsest.lambda, &tg)?;
        flops += r.flops;
        (Some(r), &coarsest)
    };
    let base = middle.as_ref().unwrap_or(base);

    let eta = prolongate(m1, m2, &base.right_vec)?;
    let xi = prolongate(m1, m2, left(base))?;
    let fine = rqi(s2, &eta, &xi, base.lambda, &tg)?;
    flops += fine.flops;
    let slow_fine = fine.iterations > FINE_ITERATION_FLAG;
    if slow_fine {
        log::debug!("fine-level RQI needed {} iterations", fine.iterations);
    }

    Ok(TgRqiOutput {
        lambda_fine: fine.lambda,
        lambda_coarse: base.lambda,
        difference: fine.lambda - base.lambda,
        coarsest,
        middle,
        fine,
        flops,
        slow_fine,
    })
}

fn left<T>(r: &EigenResult<T>) -> &[Complex<T>] {
    r.left_vec.as_deref().unwrap_or(&r.right_vec)
}
