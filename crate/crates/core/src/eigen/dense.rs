//! Small dense complex kernels for the Arnoldi projection: Hessenberg QR
//! iteration to Schur form, triangular eigenvectors and Givens sweeps.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Row-major square complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Dense<T> {
    pub n: usize,
    pub a: Vec<Complex<T>>,
}

impl<T: Real> Dense<T> {
    pub fn zeros(n: usize) -> Self {
        Self { n, a: vec![Complex::new(T::zero(), T::zero()); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.a[i * n + i] = Complex::new(T::one(), T::zero());
        }
        m
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> Complex<T> {
        self.a[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex<T>) {
        self.a[i * self.n + j] = v;
    }

    /// Leading `k` by `k` block.
    pub fn leading(&self, k: usize) -> Self {
        let mut m = Self::zeros(k);
        for i in 0..k {
            for j in 0..k {
                m.set(i, j, self.at(i, j));
            }
        }
        m
    }
}

/// Plane rotation `[c s; -conj(s) c]` with real `c`, mapping `(a, b)` to `(r, 0)`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Givens<T> {
    c: T,
    s: Complex<T>,
}

impl<T: Real> Givens<T> {
    pub fn new(a: Complex<T>, b: Complex<T>) -> Self {
        let (na, nb) = (a.norm(), b.norm());
        if nb == T::zero() {
            return Self { c: T::one(), s: Complex::new(T::zero(), T::zero()) };
        }
        if na == T::zero() {
            return Self { c: T::zero(), s: b.conj() / nb };
        }
        let rho = na.hypot(nb);
        Self { c: na / rho, s: (a / na) * b.conj() / rho }
    }

    /// Rows `i`, `i + 1` of `m` over columns `cols`.
    pub fn apply_rows(&self, m: &mut Dense<T>, i: usize, cols: std::ops::Range<usize>) {
        let n = m.n;
        for j in cols {
            let (x, y) = (m.a[i * n + j], m.a[(i + 1) * n + j]);
            m.a[i * n + j] = x.scale(self.c) + self.s * y;
            m.a[(i + 1) * n + j] = -self.s.conj() * x + y.scale(self.c);
        }
    }

    /// Columns `j`, `j + 1` of `m` over rows `rows`, multiplied by the adjoint rotation.
    pub fn apply_cols_adjoint(&self, m: &mut Dense<T>, j: usize, rows: std::ops::Range<usize>) {
        let n = m.n;
        for i in rows {
            let (x, y) = (m.a[i * n + j], m.a[i * n + j + 1]);
            m.a[i * n + j] = x.scale(self.c) + self.s.conj() * y;
            m.a[i * n + j + 1] = -self.s * x + y.scale(self.c);
        }
    }
}

/// One explicitly shifted QR sweep `H <- Q^H H Q` on the active block
/// `lo..=hi` of an upper Hessenberg matrix, accumulating `Q` into `z`.
/// Rows and columns outside the block are updated so that the full matrix
/// stays similar to the original.
pub(crate) fn shifted_qr_sweep<T: Real>(
    h: &mut Dense<T>,
    z: Option<&mut Dense<T>>,
    lo: usize,
    hi: usize,
    mu: Complex<T>,
) -> Vec<Givens<T>> {
    let n = h.n;
    for i in lo..=hi {
        let v = h.at(i, i) - mu;
        h.set(i, i, v);
    }
    let mut rots = Vec::with_capacity(hi - lo);
    for k in lo..hi {
        let g = Givens::new(h.at(k, k), h.at(k + 1, k));
        g.apply_rows(h, k, k..n);
        h.set(k + 1, k, Complex::new(T::zero(), T::zero()));
        rots.push(g);
    }
    for (off, g) in rots.iter().enumerate() {
        let k = lo + off;
        g.apply_cols_adjoint(h, k, 0..(k + 2).min(hi + 1));
    }
    if let Some(z) = z {
        for (off, g) in rots.iter().enumerate() {
            g.apply_cols_adjoint(z, lo + off, 0..z.n);
        }
    }
    for i in lo..=hi {
        let v = h.at(i, i) + mu;
        h.set(i, i, v);
    }
    rots
}

/// Eigenvalue of the trailing 2x2 block closest to its last diagonal entry.
fn wilkinson_shift<T: Real>(h: &Dense<T>, hi: usize) -> Complex<T> {
    let a = h.at(hi - 1, hi - 1);
    let b = h.at(hi - 1, hi);
    let c = h.at(hi, hi - 1);
    let d = h.at(hi, hi);
    let half = T::lit(0.5);
    let tr = (a + d).scale(half);
    let disc = ((a - d).scale(half).powi(2) + b * c).sqrt();
    let (l1, l2) = (tr + disc, tr - disc);
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// Reduces the upper Hessenberg `h` to upper triangular Schur form in place
/// and accumulates the unitary factor into `z` (`H_in = Z T Z^H`).
pub(crate) fn hessenberg_schur<T: Real>(h: &mut Dense<T>, z: &mut Dense<T>) -> Result<()> {
    let n = h.n;
    if n == 0 {
        return Ok(());
    }
    let eps = T::epsilon();
    let mut hi = n - 1;
    let mut iters_since_deflation = 0usize;
    let mut total = 0usize;
    let max_total = 60 * n.max(4);
    while hi > 0 {
        let mut lo = hi;
        while lo > 0 {
            let sub = h.at(lo, lo - 1).norm();
            let diag = h.at(lo, lo).norm() + h.at(lo - 1, lo - 1).norm();
            let diag = if diag == T::zero() { T::one() } else { diag };
            if sub <= eps * diag {
                h.set(lo, lo - 1, Complex::new(T::zero(), T::zero()));
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            hi -= 1;
            iters_since_deflation = 0;
            continue;
        }
        total += 1;
        iters_since_deflation += 1;
        if total > max_total {
            return Err(Error::NotConverged { iterations: total, residual: h.at(hi, hi - 1).norm().as_f64() });
        }
        let mu = if iters_since_deflation % 11 == 10 {
            let s = h.at(hi, hi - 1).norm() + if hi >= 2 { h.at(hi - 1, hi - 2).norm() } else { T::zero() };
            h.at(hi, hi) + Complex::new(s * T::lit(0.75), s * T::lit(0.4))
        } else {
            wilkinson_shift(h, hi)
        };
        shifted_qr_sweep(h, Some(z), lo, hi, mu);
    }
    Ok(())
}

/// Eigenvalues and unit right eigenvectors (columns of the returned matrix)
/// of the upper Hessenberg `h`.
pub(crate) fn hessenberg_eigen<T: Real>(h: &Dense<T>) -> Result<(Vec<Complex<T>>, Dense<T>)> {
    let n = h.n;
    let mut t = h.clone();
    let mut z = Dense::identity(n);
    hessenberg_schur(&mut t, &mut z)?;
    let lambda: Vec<Complex<T>> = (0..n).map(|i| t.at(i, i)).collect();
    let tnorm = t.a.iter().fold(T::zero(), |m, v| m.max(v.norm()));
    let small = T::epsilon() * tnorm.max(T::min_positive_value());

    let mut vecs = Dense::zeros(n);
    let mut x = vec![Complex::new(T::zero(), T::zero()); n];
    for i in 0..n {
        x.iter_mut().for_each(|v| *v = Complex::new(T::zero(), T::zero()));
        x[i] = Complex::new(T::one(), T::zero());
        for j in (0..i).rev() {
            let mut s = Complex::new(T::zero(), T::zero());
            for l in j + 1..=i {
                s = s + t.at(j, l) * x[l];
            }
            let mut d = t.at(j, j) - lambda[i];
            if d.norm() < small {
                d = Complex::new(small, T::zero());
            }
            x[j] = -s / d;
        }
        let mut y = vec![Complex::new(T::zero(), T::zero()); n];
        for (r, yr) in y.iter_mut().enumerate() {
            for l in 0..=i {
                *yr = *yr + z.at(r, l) * x[l];
            }
        }
        let nrm = y.iter().fold(T::zero(), |acc, v| acc.hypot(v.norm()));
        for (r, yr) in y.iter().enumerate() {
            vecs.set(r, i, *yr / nrm);
        }
    }
    Ok((lambda, vecs))
}
