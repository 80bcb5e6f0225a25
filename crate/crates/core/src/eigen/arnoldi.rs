//! Shift-invert implicitly restarted Arnoldi for the eigenvalues of smallest
//! magnitude. The operator is `A^{-1} M`; `A` is real and factorized once,
//! and complex Krylov vectors are pushed through it one part at a time.

use std::time::Instant;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::dense::{hessenberg_eigen, shifted_qr_sweep, Dense};
use super::rqi::pencil_residual;
use super::{EigenResult, SolverSettings};
use crate::assembly::AssembledSystem;
use crate::error::{Error, Result};
use crate::lu::SparseLu;
use crate::scalar::{dot_conj, norm2, normalize, Field, Real};

const START_SEED: u64 = 0x6172_6e6f_6c64_6921;

struct ShiftInvert<'a, T: Real + Field<Real = T>> {
    sys: &'a AssembledSystem<T>,
    lu: SparseLu<T>,
    solves: usize,
    flops: u64,
}

impl<T: Real + Field<Real = T>> ShiftInvert<'_, T> {
    fn apply(&mut self, v: &[Complex<T>]) -> Vec<Complex<T>> {
        let n = v.len();
        let mut out = vec![Complex::new(T::zero(), T::zero()); n];
        let mut part = vec![T::zero(); n];
        let mut mv = vec![T::zero(); n];
        for imag in [false, true] {
            for (p, z) in part.iter_mut().zip(v) {
                *p = if imag { z.im } else { z.re };
            }
            if part.iter().all(|&x| x == T::zero()) {
                continue;
            }
            self.sys.m.apply(&part, &mut mv);
            self.lu.solve_in_place(&mut mv);
            self.solves += 1;
            self.flops += self.lu.solve_flops() + 2 * self.sys.m.nnz() as u64;
            for (o, &x) in out.iter_mut().zip(&mv) {
                if imag {
                    o.im = x;
                } else {
                    o.re = x;
                }
            }
        }
        out
    }
}

fn axpy<T: Real>(y: &mut [Complex<T>], alpha: Complex<T>, x: &[Complex<T>]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi = *yi + alpha * xi;
    }
}

/// Orthogonalizes `w` against `basis` by modified Gram-Schmidt with one
/// extra pass when the norm drops by more than `1/sqrt(2)`. Returns the
/// projection coefficients and the remaining norm.
fn orthogonalize<T>(basis: &[Vec<Complex<T>>], w: &mut [Complex<T>]) -> (Vec<Complex<T>>, T)
where
    T: Real,
    Complex<T>: Field<Real = T>,
{
    let before = norm2(w);
    let mut h: Vec<Complex<T>> = basis
        .iter()
        .map(|v| {
            let c = dot_conj(v, w);
            axpy(w, -c, v);
            c
        })
        .collect();
    let mut after = norm2(w);
    if after < before * T::FRAC_1_SQRT_2() {
        for (v, hi) in basis.iter().zip(h.iter_mut()) {
            let c = dot_conj(v, w);
            axpy(w, -c, v);
            *hi += c;
        }
        after = norm2(w);
    }
    (h, after)
}

/// Pseudo-random unit vector orthogonal to `basis`, used at start-up and
/// after an invariant subspace has been found.
fn fresh_direction<T>(basis: &[Vec<Complex<T>>], n: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Complex<T>>>
where
    T: Real,
    Complex<T>: Field<Real = T>,
{
    for _ in 0..8 {
        let mut w: Vec<Complex<T>> = (0..n).map(|_| Complex::new(T::lit(rng.gen::<f64>() - 0.5), T::zero())).collect();
        normalize(&mut w);
        let (_, nrm) = orthogonalize(basis, &mut w);
        let (_, nrm2) = orthogonalize(basis, &mut w);
        if nrm2 > T::lit(1e-3) * nrm.max(T::min_positive_value()) && nrm2 > T::zero() {
            normalize(&mut w);
            return Ok(w);
        }
    }
    Err(Error::NotConverged { iterations: 0, residual: f64::NAN })
}

/// Bound on `||A||_2` from the one- and infinity-norms.
fn two_norm_bound<T: Real + Field<Real = T>>(sys: &AssembledSystem<T>) -> T {
    let a = &sys.a;
    let n = a.n();
    let mut col = vec![T::zero(); n];
    let mut row_max = T::zero();
    for r in 0..n {
        let mut s = T::zero();
        for k in a.row_ptr()[r]..a.row_ptr()[r + 1] {
            let v = a.values()[k].abs();
            s += v;
            col[a.col_idx()[k]] = col[a.col_idx()[k]] + v;
        }
        row_max = row_max.max(s);
    }
    let col_max = col.into_iter().fold(T::zero(), T::max);
    (row_max * col_max).sqrt()
}

/// The `k` eigenvalues of smallest magnitude of the pencil, sorted by
/// magnitude, each with a unit right eigenvector.
pub fn arnoldi_smallest<T>(sys: &AssembledSystem<T>, k: usize, settings: &SolverSettings<T>) -> Result<Vec<EigenResult<T>>>
where
    T: Real + Field<Real = T>,
    Complex<T>: Field<Real = T>,
{
    settings.validate()?;
    let start = Instant::now();
    let n = sys.n();
    // One extra wanted value keeps conjugate partners of the k-th together.
    let k_int = k + 1;
    let m = (n.saturating_sub(1)).min(settings.ncv.max(2 * k + 1));
    if k == 0 || k_int + 1 > m {
        return Err(Error::InvalidSettings(format!(
            "arnoldi needs 1 <= k and k + 2 <= ncv < n (k = {k}, ncv = {m}, n = {n})"
        )));
    }
    let lu = SparseLu::factorize(&sys.a, &sys.ordering)?;
    if lu.is_near_singular() {
        return Err(Error::NearSingular { pivot: lu.min_pivot().as_f64(), threshold: f64::NAN });
    }
    let mut op = ShiftInvert { sys, flops: lu.flops(), lu, solves: 0 };
    let a_norm = two_norm_bound(sys);
    let keep = (k_int + (m - k_int) / 2).min(m - 1);

    let mut rng = ChaCha8Rng::seed_from_u64(START_SEED);
    let zero = Complex::new(T::zero(), T::zero());
    let mut v: Vec<Vec<Complex<T>>> = Vec::with_capacity(m + 1);
    v.push(fresh_direction(&[], n, &mut rng)?);
    let mut h = Dense::zeros(m + 1);
    let mut j0 = 0;

    for restart in 0..=settings.max_restarts {
        for j in j0..m {
            let mut w = op.apply(&v[j]);
            let (coef, beta) = orthogonalize(&v[..=j], &mut w);
            op.flops += 8 * (2 * (j as u64 + 1) * n as u64);
            for (i, c) in coef.into_iter().enumerate() {
                h.set(i, j, c);
            }
            let scale = h.at(j, j).norm().max(T::min_positive_value());
            v.truncate(j + 1);
            if beta <= T::epsilon() * scale {
                h.set(j + 1, j, zero);
                v.push(fresh_direction(&v, n, &mut rng)?);
            } else {
                let inv = beta.recip();
                w.iter_mut().for_each(|x| *x = x.scale(inv));
                h.set(j + 1, j, Complex::new(beta, T::zero()));
                v.push(w);
            }
        }

        let hm = h.leading(m);
        let (theta, y) = hessenberg_eigen(&hm)?;
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| theta[b].norm().partial_cmp(&theta[a].norm()).unwrap_or(std::cmp::Ordering::Equal));
        let beta = h.at(m, m - 1).norm();
        let wanted = &order[..k];
        let estimates_ok = wanted
            .iter()
            .all(|&i| beta * y.at(m - 1, i).norm() * a_norm <= settings.eps_stop * theta[i].norm());

        if estimates_ok {
            let mut results = Vec::with_capacity(k);
            let mut all_ok = true;
            for &i in wanted {
                let mut x = vec![zero; n];
                for (jj, vj) in v[..m].iter().enumerate() {
                    axpy(&mut x, y.at(jj, i), vj);
                }
                normalize(&mut x);
                let lambda = theta[i].inv();
                let residual = pencil_residual(sys, &x, lambda);
                all_ok &= residual <= settings.eps_stop;
                results.push((lambda, x, residual));
            }
            if all_ok {
                return finish(sys, results, restart + 1, op.solves, op.flops, start, settings);
            }
        }

        // Implicit restart: exact shifts at the least wanted Ritz values.
        let mut hc = hm;
        let mut q = Dense::identity(m);
        for &i in &order[keep..] {
            shifted_qr_sweep(&mut hc, Some(&mut q), 0, m - 1, theta[i]);
        }
        let mut nv: Vec<Vec<Complex<T>>> = Vec::with_capacity(m + 1);
        for c in 0..=keep {
            let mut x = vec![zero; n];
            for (jj, vj) in v[..m].iter().enumerate() {
                let coef = q.at(jj, c);
                if coef != zero {
                    axpy(&mut x, coef, vj);
                }
            }
            nv.push(x);
        }
        op.flops += 8 * ((keep as u64 + 1) * m as u64 * n as u64);
        let mut r = nv.pop().expect("restart vector");
        r.iter_mut().for_each(|x| *x *= hc.at(keep, keep - 1));
        axpy(&mut r, h.at(m, m - 1) * q.at(m - 1, keep - 1), &v[m]);
        let (corr, rnorm) = orthogonalize(&nv, &mut r);

        h = Dense::zeros(m + 1);
        for i in 0..keep {
            for jj in 0..keep {
                h.set(i, jj, hc.at(i, jj));
            }
        }
        // Fold the reorthogonalization coefficients into the last column.
        for (i, c) in corr.into_iter().enumerate() {
            let cur = h.at(i, keep - 1);
            h.set(i, keep - 1, cur + c);
        }
        v = nv;
        if rnorm <= T::epsilon() * a_norm.max(T::one()) * T::lit(1e-3) {
            h.set(keep, keep - 1, zero);
            v.push(fresh_direction(&v, n, &mut rng)?);
        } else {
            r.iter_mut().for_each(|x| *x = x.scale(rnorm.recip()));
            h.set(keep, keep - 1, Complex::new(rnorm, T::zero()));
            v.push(r);
        }
        j0 = keep;
    }
    Err(Error::NotConverged { iterations: settings.max_restarts, residual: f64::NAN })
}

fn finish<T>(
    sys: &AssembledSystem<T>,
    mut found: Vec<(Complex<T>, Vec<Complex<T>>, T)>,
    iterations: usize,
    solves: usize,
    flops: u64,
    start: Instant,
    settings: &SolverSettings<T>,
) -> Result<Vec<EigenResult<T>>>
where
    T: Real + Field<Real = T>,
    Complex<T>: Field<Real = T>,
{
    found.sort_by(|a, b| {
        a.0.norm()
            .partial_cmp(&b.0.norm())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.0.im.partial_cmp(&b.0.im).unwrap_or(std::cmp::Ordering::Equal))
    });
    let wall = start.elapsed().as_secs_f64();
    found
        .into_iter()
        .map(|(lambda, x, residual)| {
            let left_vec = if settings.left_vectors { Some(left_vector(sys, lambda)?) } else { None };
            Ok(EigenResult {
                lambda,
                right_vec: x,
                left_vec,
                iterations,
                linear_solves: solves,
                wall_time: wall,
                converged: true,
                residual,
                flops,
                misconvergence_risk: false,
                history: vec![lambda],
            })
        })
        .collect()
}

/// Left eigenvector at a converged eigenvalue by two steps of adjoint
/// inverse iteration with the eigenvalue itself as shift.
fn left_vector<T>(sys: &AssembledSystem<T>, lambda: Complex<T>) -> Result<Vec<Complex<T>>>
where
    T: Real + Field<Real = T>,
    Complex<T>: Field<Real = T>,
{
    let k = sys.m.combine(lambda, &sys.a, Complex::new(-T::one(), T::zero()));
    let lu = SparseLu::factorize(&k, &sys.ordering)?;
    let mut xi = vec![Complex::new(T::one(), T::zero()); sys.n()];
    for _ in 0..2 {
        lu.solve_adjoint_in_place(&mut xi);
        normalize(&mut xi);
    }
    Ok(xi)
}
