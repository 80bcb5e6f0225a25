//! Sparse LU factorisation with partial pivoting.
//!
//! Left-looking (Gilbert-Peierls) elimination: column `k` of the permuted
//! matrix is obtained from a sparse triangular solve with the columns of `L`
//! computed so far, whose nonzero pattern is found by depth-first search.
//! Columns are visited in a caller-supplied fill-reducing order; rows are
//! chosen by threshold partial pivoting with a preference for the diagonal.

use num_traits::{Float, One, Zero};

use crate::error::{Error, Result};
use crate::scalar::{Field, Real};
use crate::sparse::{ColumnOrdering, SparseOperator};

const NONE: usize = usize::MAX;
/// Diagonal pivot accepted when within this factor of the column maximum.
const PIVOT_TOLERANCE: f64 = 0.1;
/// Pivots below this multiple of `max |K_ij|` are flagged as near-singular.
pub const SINGULARITY_THRESHOLD: f64 = 1e-14;

/// `P K Q = L U` with unit lower triangular `L`.
#[derive(Debug, Clone)]
pub struct SparseLu<F: Field> {
    n: usize,
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<F>,
    up: Vec<usize>,
    ui: Vec<usize>,
    ux: Vec<F>,
    pinv: Vec<usize>,
    q: Vec<usize>,
    near_singular: bool,
    min_pivot: F::Real,
    flops: u64,
}

impl<F: Field> SparseLu<F> {
    /// Factorises `k`. Pivots smaller than `1e-14 max|k|` are replaced by
    /// that threshold (keeping their phase) and reported through
    /// [`SparseLu::is_near_singular`]; the factorisation itself never fails.
    pub fn factorize(k: &SparseOperator<F>, ordering: &ColumnOrdering) -> Result<Self> {
        let n = k.n();
        if ordering.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: ordering.len() });
        }
        // CSC of k: the CSR arrays of its transpose.
        let kt = k.transpose();
        let (cp, ci, cx) = (kt.row_ptr(), kt.col_idx(), kt.values());

        let threshold = k.max_abs() * F::Real::lit(SINGULARITY_THRESHOLD);
        let tol = F::Real::lit(PIVOT_TOLERANCE);
        let q = ordering.perm().to_vec();

        let mut lu = SparseLu {
            n,
            lp: Vec::with_capacity(n + 1),
            li: Vec::with_capacity(4 * k.nnz()),
            lx: Vec::with_capacity(4 * k.nnz()),
            up: Vec::with_capacity(n + 1),
            ui: Vec::with_capacity(4 * k.nnz()),
            ux: Vec::with_capacity(4 * k.nnz()),
            pinv: vec![NONE; n],
            q,
            near_singular: false,
            min_pivot: F::Real::infinity(),
            flops: 0,
        };

        let mut x = vec![F::zero(); n];
        let mut xi = vec![0usize; n];
        let mut stack = vec![0usize; n];
        let mut pstack = vec![0usize; n];
        let mut mark = vec![NONE; n];
        let mut next_free_row = 0usize;

        for step in 0..n {
            lu.lp.push(lu.li.len());
            lu.up.push(lu.ui.len());
            let col = lu.q[step];

            let rows = &ci[cp[col]..cp[col + 1]];
            let top = lu.reach(rows, step, &mut xi, &mut stack, &mut pstack, &mut mark);

            for &i in &xi[top..] {
                x[i] = F::zero();
            }
            for p in cp[col]..cp[col + 1] {
                x[ci[p]] = cx[p];
            }
            for px in top..n {
                let j = xi[px];
                let jcol = lu.pinv[j];
                if jcol == NONE {
                    continue;
                }
                let xj = x[j];
                let (a, b) = (lu.lp[jcol] + 1, lu.lp[jcol + 1]);
                for p in a..b {
                    x[lu.li[p]] -= lu.lx[p] * xj;
                }
                lu.flops += (b - a) as u64;
            }

            let mut ipiv = NONE;
            let mut amax = -F::Real::one();
            for &i in &xi[top..] {
                if lu.pinv[i] == NONE {
                    let t = x[i].modulus();
                    if t > amax {
                        amax = t;
                        ipiv = i;
                    }
                } else {
                    lu.ui.push(lu.pinv[i]);
                    lu.ux.push(x[i]);
                }
            }
            if ipiv == NONE {
                // Structurally empty column: pivot on any unused row.
                while lu.pinv[next_free_row] != NONE {
                    next_free_row += 1;
                }
                ipiv = next_free_row;
                x[ipiv] = F::zero();
                amax = F::Real::zero();
            }
            if lu.pinv[col] == NONE && mark[col] == step && x[col].modulus() >= amax * tol {
                ipiv = col;
            }

            let mut pivot = x[ipiv];
            let pmod = pivot.modulus();
            if pmod < lu.min_pivot {
                lu.min_pivot = pmod;
            }
            if pmod < threshold || pmod == F::Real::zero() {
                lu.near_singular = true;
                let floor = if threshold > F::Real::zero() { threshold } else { F::Real::min_positive_value() };
                pivot = if pmod > F::Real::zero() { pivot.scale(floor / pmod) } else { F::from_real(floor) };
            }

            lu.ui.push(step);
            lu.ux.push(pivot);
            lu.pinv[ipiv] = step;
            lu.li.push(ipiv);
            lu.lx.push(F::one());
            for &i in &xi[top..] {
                if lu.pinv[i] == NONE {
                    lu.li.push(i);
                    lu.lx.push(x[i] / pivot);
                }
                x[i] = F::zero();
            }
            x[ipiv] = F::zero();
        }
        lu.lp.push(lu.li.len());
        lu.up.push(lu.ui.len());
        for r in &mut lu.li {
            *r = lu.pinv[*r];
        }
        Ok(lu)
    }

    /// Nonzero pattern of `L \ K(:, col)` in topological order, written to
    /// `xi[top..]`. Nodes are original row indices.
    fn reach(
        &self,
        rows: &[usize],
        step: usize,
        xi: &mut [usize],
        stack: &mut [usize],
        pstack: &mut [usize],
        mark: &mut [usize],
    ) -> usize {
        let mut top = self.n;
        for &start in rows {
            if mark[start] == step {
                continue;
            }
            let mut head = 0usize;
            stack[0] = start;
            loop {
                let j = stack[head];
                let jcol = self.pinv[j];
                if mark[j] != step {
                    mark[j] = step;
                    pstack[head] = if jcol == NONE { 0 } else { self.lp[jcol] };
                }
                let end = if jcol == NONE { 0 } else { self.lp[jcol + 1] };
                let mut descended = false;
                let mut p = pstack[head];
                while p < end {
                    let i = self.li[p];
                    p += 1;
                    if mark[i] != step {
                        pstack[head] = p;
                        head += 1;
                        stack[head] = i;
                        descended = true;
                        break;
                    }
                }
                if !descended {
                    top -= 1;
                    xi[top] = j;
                    if head == 0 {
                        break;
                    }
                    head -= 1;
                }
            }
        }
        top
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_near_singular(&self) -> bool {
        self.near_singular
    }

    /// Smallest pivot magnitude encountered before any perturbation.
    pub fn min_pivot(&self) -> F::Real {
        self.min_pivot
    }

    /// Multiply-add count of the factorisation.
    pub fn flops(&self) -> u64 {
        self.flops
    }

    /// Multiply-add count of one triangular solve pair.
    pub fn solve_flops(&self) -> u64 {
        (self.li.len() + self.ui.len()) as u64
    }

    pub fn nnz(&self) -> usize {
        self.li.len() + self.ui.len()
    }

    /// Solves `K x = b` in place.
    pub fn solve_in_place(&self, b: &mut [F]) {
        let n = self.n;
        assert_eq!(b.len(), n, "rhs dimension");
        let mut y = vec![F::zero(); n];
        for i in 0..n {
            y[self.pinv[i]] = b[i];
        }
        for j in 0..n {
            let yj = y[j];
            if yj != F::zero() {
                for p in self.lp[j] + 1..self.lp[j + 1] {
                    y[self.li[p]] -= self.lx[p] * yj;
                }
            }
        }
        for j in (0..n).rev() {
            let d = self.up[j + 1] - 1;
            y[j] /= self.ux[d];
            let yj = y[j];
            if yj != F::zero() {
                for p in self.up[j]..d {
                    y[self.ui[p]] -= self.ux[p] * yj;
                }
            }
        }
        for k in 0..n {
            b[self.q[k]] = y[k];
        }
    }

    /// Solves `K^H x = b` in place.
    pub fn solve_adjoint_in_place(&self, b: &mut [F]) {
        let n = self.n;
        assert_eq!(b.len(), n, "rhs dimension");
        let mut z: Vec<F> = (0..n).map(|k| b[self.q[k]]).collect();
        for j in 0..n {
            let d = self.up[j + 1] - 1;
            let mut s = z[j];
            for p in self.up[j]..d {
                s -= self.ux[p].conj() * z[self.ui[p]];
            }
            z[j] = s / self.ux[d].conj();
        }
        for j in (0..n).rev() {
            let mut s = z[j];
            for p in self.lp[j] + 1..self.lp[j + 1] {
                s -= self.lx[p].conj() * z[self.li[p]];
            }
            z[j] = s;
        }
        for i in 0..n {
            b[i] = z[self.pinv[i]];
        }
    }
}

/// Solves `K x = b` with a nested-dissection ordering of `K`'s pattern.
/// Returns [`Error::NearSingular`] when a pivot falls below
/// `1e-14 max|K_ij|`.
pub fn linear_solve<F: Field>(k: &SparseOperator<F>, b: &[F]) -> Result<Vec<F>> {
    if b.len() != k.n() {
        return Err(Error::DimensionMismatch { expected: k.n(), got: b.len() });
    }
    let ordering = ColumnOrdering::nested_dissection(k.n(), k.row_ptr(), k.col_idx());
    let lu = SparseLu::factorize(k, &ordering)?;
    if lu.is_near_singular() {
        return Err(Error::NearSingular {
            pivot: lu.min_pivot().as_f64(),
            threshold: (k.max_abs() * F::Real::lit(SINGULARITY_THRESHOLD)).as_f64(),
        });
    }
    let mut x = b.to_vec();
    lu.solve_in_place(&mut x);
    Ok(x)
}
