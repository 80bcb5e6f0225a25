//! Two-sided Rayleigh quotient iteration and the inverse-iteration warm-up
//! that produces its starting pair on the coarsest level.

use std::time::Instant;

use num_complex::Complex;

use super::{EigenResult, SolverSettings};
use crate::assembly::AssembledSystem;
use crate::error::{Error, Result};
use crate::lu::SparseLu;
use crate::scalar::{dot_conj, norm2, normalize, Field, Real};

/// Relative jump from the initial guess that raises the misconvergence flag.
const JUMP_WARNING: f64 = 0.5;

/// Iteration budget of real RQI before [`rqi_from_guess`] switches to
/// complex arithmetic.
const REAL_ATTEMPT_ITERS: usize = 20;

/// Imaginary offset, relative to the guess, of the complex restart shift.
const COMPLEX_SHIFT: f64 = 1e-2;

/// Starting data for RQI: right and left vectors with a Rayleigh quotient.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialGuess<T> {
    pub eta: Vec<T>,
    pub xi: Vec<T>,
    pub lambda: T,
    pub linear_solves: usize,
    pub flops: u64,
}

/// Residual `||A x - lambda M x||_2` with the pencil applied in `F`.
pub(crate) fn pencil_residual<T, F>(sys: &AssembledSystem<T>, x: &[F], lambda: F) -> T
where
    T: Real + Field<Real = T>,
    F: Field<Real = T>,
{
    let n = sys.n();
    let mut ax = vec![F::zero(); n];
    let mut mx = vec![F::zero(); n];
    sys.a.apply(x, &mut ax);
    sys.m.apply(x, &mut mx);
    let r: Vec<F> = ax.iter().zip(&mx).map(|(&a, &m)| a - lambda * m).collect();
    norm2(&r)
}

fn check_len<F>(n: usize, v: &[F]) -> Result<()> {
    if v.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: v.len() });
    }
    Ok(())
}

/// Inverse iteration with shift zero on the pencil and its adjoint. Stops
/// after `warmup_iters` steps or once the Rayleigh quotient moves by less
/// than 10% between steps.
pub fn coarse_initial_guess<T>(sys: &AssembledSystem<T>, settings: &SolverSettings<T>) -> Result<InitialGuess<T>>
where
    T: Real + Field<Real = T>,
{
    settings.validate()?;
    let n = sys.n();
    let lu = SparseLu::factorize(&sys.a, &sys.ordering)?;
    let mut flops = lu.flops();
    let mut eta = vec![T::one(); n];
    let mut xi = vec![T::one(); n];
    normalize(&mut eta);
    normalize(&mut xi);
    let mut lambda = T::nan();
    let mut solves = 0;
    let mut tmp = vec![T::zero(); n];
    let mut ax = vec![T::zero(); n];
    for _ in 0..settings.warmup_iters.max(1) {
        sys.m.apply(&eta, &mut tmp);
        lu.solve_in_place(&mut tmp);
        std::mem::swap(&mut eta, &mut tmp);
        sys.m.apply_transpose(&xi, &mut tmp);
        lu.solve_adjoint_in_place(&mut tmp);
        std::mem::swap(&mut xi, &mut tmp);
        solves += 2;
        flops += 2 * lu.solve_flops() + 4 * sys.m.nnz() as u64;
        normalize(&mut eta);
        normalize(&mut xi);

        sys.a.apply(&eta, &mut ax);
        sys.m.apply(&eta, &mut tmp);
        flops += 2 * (sys.a.nnz() + sys.m.nnz()) as u64;
        let next = dot_conj(&xi, &ax) / dot_conj(&xi, &tmp);
        if !next.is_finite() {
            return Err(Error::NotConverged { iterations: solves / 2, residual: f64::NAN });
        }
        let settled = (next - lambda).abs() < T::lit(0.1) * next.abs();
        lambda = next;
        if settled {
            break;
        }
    }
    Ok(InitialGuess { eta, xi, lambda, linear_solves: solves, flops })
}

/// RQI from a warm-up guess. A real iteration cannot reach a complex pair,
/// so when it does not settle within a few steps the iteration restarts in
/// complex arithmetic with a shift moved off the real axis.
pub fn rqi_from_guess<T>(sys: &AssembledSystem<T>, guess: &InitialGuess<T>, settings: &SolverSettings<T>) -> Result<EigenResult<T>>
where
    T: Real + Field<Real = T>,
    Complex<T>: Field<Real = T>,
{
    let real = SolverSettings { max_iters: settings.max_iters.min(REAL_ATTEMPT_ITERS), ..settings.clone() };
    match rqi(sys, &guess.eta, &guess.xi, guess.lambda, &real) {
        Err(Error::NotConverged { iterations, residual }) if settings.max_iters > real.max_iters => {
            log::debug!("real RQI stalled after {iterations} iterations (residual {residual:e}); restarting in complex arithmetic");
            let lift = |v: &[T]| v.iter().map(|&x| Complex::new(x, T::zero())).collect::<Vec<_>>();
            let shift = Complex::new(guess.lambda, guess.lambda * T::lit(COMPLEX_SHIFT));
            rqi(sys, &lift(&guess.eta), &lift(&guess.xi), shift, settings)
        }
        other => other,
    }
}

/// Rayleigh quotient iteration on the pencil. Runs in real arithmetic when
/// every input is real and in complex arithmetic otherwise.
pub fn rqi<T, F>(
    sys: &AssembledSystem<T>,
    eta0: &[F],
    xi0: &[F],
    lambda0: F,
    settings: &SolverSettings<T>,
) -> Result<EigenResult<T>>
where
    T: Real + Field<Real = T>,
    F: Field<Real = T>,
    Complex<T>: Field<Real = T>,
{
    settings.validate()?;
    check_len(sys.n(), eta0)?;
    check_len(sys.n(), xi0)?;
    let as_real = |v: &[F]| -> Option<Vec<T>> { v.iter().map(|x| T::from_complex(x.to_complex())).collect() };
    if let (Some(e), Some(x), Some(l)) = (as_real(eta0), as_real(xi0), T::from_complex(lambda0.to_complex())) {
        rqi_core(sys, e, x, l, settings)
    } else {
        let c = |v: &[F]| v.iter().map(|x| x.to_complex()).collect::<Vec<Complex<T>>>();
        rqi_core(sys, c(eta0), c(xi0), lambda0.to_complex(), settings)
    }
}

fn rqi_core<T, F>(
    sys: &AssembledSystem<T>,
    mut eta: Vec<F>,
    mut xi: Vec<F>,
    lambda0: F,
    settings: &SolverSettings<T>,
) -> Result<EigenResult<T>>
where
    T: Real + Field<Real = T>,
    F: Field<Real = T>,
{
    let start = Instant::now();
    let n = sys.n();
    if normalize(&mut eta) == T::zero() || normalize(&mut xi) == T::zero() {
        return Err(Error::InvalidInput("RQI starting vectors must be nonzero".into()));
    }
    // Complex products cost four real ones.
    let mult: u64 = if F::from_complex(Complex::new(T::zero(), T::one())).is_some() { 4 } else { 1 };
    let mut lambda = lambda0;
    let mut history = vec![lambda0.to_complex()];
    let mut flops = 0u64;
    let mut solves = 0usize;
    let mut residual = T::infinity();
    let mut converged = false;
    let mut iterations = 0;
    let mut av = vec![F::zero(); n];
    let mut mv = vec![F::zero(); n];
    let minus_one = F::from_real(-T::one());

    while iterations < settings.max_iters {
        iterations += 1;
        let k = sys.m.combine(lambda, &sys.a, minus_one);
        let lu = SparseLu::factorize(&k, &sys.ordering)?;
        lu.solve_in_place(&mut eta);
        lu.solve_adjoint_in_place(&mut xi);
        solves += 2;
        flops += mult * (lu.flops() + 2 * lu.solve_flops() + k.nnz() as u64);
        if !norm2(&eta).is_finite() || !norm2(&xi).is_finite() {
            return Err(Error::NotConverged { iterations, residual: f64::NAN });
        }
        normalize(&mut eta);
        normalize(&mut xi);

        sys.a.apply(&eta, &mut av);
        sys.m.apply(&eta, &mut mv);
        let den = dot_conj(&xi, &mv);
        if den.modulus() == T::zero() {
            return Err(Error::NotConverged { iterations, residual: residual.as_f64() });
        }
        lambda = dot_conj(&xi, &av) / den;
        let r: Vec<F> = av.iter().zip(&mv).map(|(&a, &m)| a - lambda * m).collect();
        residual = norm2(&r);
        flops += mult * (4 * (sys.a.nnz() + sys.m.nnz()) as u64 + 10 * n as u64);
        history.push(lambda.to_complex());
        // A near-singular factorization means the shift sits on an eigenvalue;
        // the solve direction is still the eigenvector, so only the residual decides.
        if residual <= settings.eps_stop {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NotConverged { iterations, residual: residual.as_f64() });
    }

    let l0 = lambda0.to_complex();
    let jump = (lambda.to_complex() - l0).norm();
    let risk = jump > T::lit(JUMP_WARNING) * l0.norm();
    if risk {
        log::warn!(
            "RQI moved from {} to {}: possible convergence to a non-principal eigenvalue",
            l0,
            lambda.to_complex()
        );
    }

    Ok(EigenResult {
        lambda: lambda.to_complex(),
        right_vec: eta.iter().map(|x| x.to_complex()).collect(),
        left_vec: Some(xi.iter().map(|x| x.to_complex()).collect()),
        iterations,
        linear_solves: solves,
        wall_time: start.elapsed().as_secs_f64(),
        converged,
        residual,
        flops,
        misconvergence_risk: risk,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble, Discretization};
    use crate::fields::{center_grid, FieldConfig, SampleVector, VelocityField};
    use crate::mesh::build_mesh;
    use crate::sparse::{ColumnOrdering, SparseOperator};
    use std::sync::Arc;

    fn diag_system() -> AssembledSystem<f64> {
        let a = SparseOperator::from_triplets(2, &[(0, 0, 2.0), (1, 1, 1.0)]).unwrap();
        AssembledSystem {
            a,
            m: SparseOperator::identity(2),
            kind: Discretization::Galerkin,
            t: 0.0,
            mesh_level: 0,
            h: 1.0,
            flops: 0,
            ordering: Arc::new(ColumnOrdering::natural(2)),
        }
    }

    #[test]
    fn diagonal_pencil() {
        let sys = diag_system();
        let v = [1.0, 1.0];
        let r = rqi(&sys, &v, &v, 0.9, &SolverSettings::default()).unwrap();
        assert!((r.lambda.re - 1.0).abs() < 1e-14);
        assert!(r.right_vec[0].norm() < 1e-12);
        assert!((r.right_vec[1].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identity_pencil_warmup() {
        let mut sys = diag_system();
        sys.a = SparseOperator::identity(2);
        let g = coarse_initial_guess(&sys, &SolverSettings::default()).unwrap();
        assert!((g.lambda - 1.0).abs() < 1e-15);
    }

    #[test]
    fn complex_start_reaches_same_value() {
        let mesh = build_mesh(0, 0.125_f64).unwrap();
        let cfg = FieldConfig::new(center_grid(1, 1), 12.5, VelocityField::Constant([20.0, 0.0])).unwrap();
        let sys = assemble(&mesh, &cfg, &SampleVector::zeros(1), Discretization::Supg, 1.0).unwrap();
        let s = SolverSettings::default();
        let g = coarse_initial_guess(&sys, &s).unwrap();
        let real = rqi(&sys, &g.eta, &g.xi, g.lambda, &s).unwrap();
        let ce: Vec<Complex<f64>> = g.eta.iter().map(|&x| Complex::new(x, 0.0)).collect();
        let cx: Vec<Complex<f64>> = g.xi.iter().map(|&x| Complex::new(x, 0.0)).collect();
        let cplx = rqi(&sys, &ce, &cx, Complex::new(g.lambda, 1e-3), &s).unwrap();
        assert!((real.lambda - cplx.lambda).norm() < 1e-9 * real.lambda.norm());
        assert!(cplx.lambda.im.abs() < 1e-9);
        assert!(real.residual <= 1e-12);
    }

    #[test]
    fn rejects_zero_start() {
        let sys = diag_system();
        assert!(rqi(&sys, &[0.0, 0.0], &[1.0, 0.0], 1.0, &SolverSettings::default()).is_err());
        assert!(rqi(&sys, &[1.0], &[1.0, 0.0], 1.0, &SolverSettings::default()).is_err());
    }
}
