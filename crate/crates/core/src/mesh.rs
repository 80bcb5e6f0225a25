//! Uniform triangulations of the unit square and nodal transfer between
//! nested levels.
//!
//! Level `l` of a hierarchy rooted at `h0 = 2^-k` has `2^(k+l)` cells per
//! side. Every cell is cut along its bottom-left to top-right diagonal, and
//! nodes are numbered lexicographically by `(y, x)`.

use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::scalar::{Field, Real};
use crate::sparse::{AssemblyPattern, ColumnOrdering};

#[derive(Debug)]
pub struct Mesh<T: Real> {
    level: usize,
    log2_inv_h0: u32,
    cells: usize,
    h: T,
    nodes: Vec<[T; 2]>,
    triangles: Vec<[usize; 3]>,
    interior: Vec<usize>,
    interior_of: Vec<Option<usize>>,
    pattern: OnceLock<Arc<AssemblyPattern>>,
    ordering: OnceLock<Arc<ColumnOrdering>>,
}

/// Builds the uniform mesh on level `level` of the hierarchy with coarsest
/// width `h0`.
pub fn build_mesh<T: Real>(level: usize, h0: T) -> Result<Mesh<T>> {
    let k = log2_inverse_width(h0)?;
    let exp = k as usize + level;
    if exp > 20 {
        return Err(Error::InvalidMeshWidth(h0.as_f64() * 0.5f64.powi(level as i32)));
    }
    let cells = 1usize << exp;
    let n_side = cells + 1;
    let h = T::one() / T::lit(cells as f64);

    let mut nodes = Vec::with_capacity(n_side * n_side);
    for j in 0..n_side {
        for i in 0..n_side {
            nodes.push([T::lit(i as f64) * h, T::lit(j as f64) * h]);
        }
    }

    let mut triangles = Vec::with_capacity(2 * cells * cells);
    for j in 0..cells {
        for i in 0..cells {
            let v00 = j * n_side + i;
            let v10 = v00 + 1;
            let v01 = v00 + n_side;
            let v11 = v01 + 1;
            triangles.push([v00, v10, v11]);
            triangles.push([v00, v11, v01]);
        }
    }

    let mut interior = Vec::with_capacity((cells - 1) * (cells - 1));
    let mut interior_of = vec![None; n_side * n_side];
    for j in 1..cells {
        for i in 1..cells {
            let g = j * n_side + i;
            interior_of[g] = Some(interior.len());
            interior.push(g);
        }
    }

    Ok(Mesh {
        level,
        log2_inv_h0: k,
        cells,
        h,
        nodes,
        triangles,
        interior,
        interior_of,
        pattern: OnceLock::new(),
        ordering: OnceLock::new(),
    })
}

/// Returns `k` for `h0 = 2^-k`, `k >= 1`.
fn log2_inverse_width<T: Real>(h0: T) -> Result<u32> {
    let x = h0.as_f64();
    if !(x > 0.0 && x <= 0.5) {
        return Err(Error::InvalidMeshWidth(x));
    }
    let k = (-x.log2()).round();
    if !(1.0..=20.0).contains(&k) || 0.5f64.powi(k as i32) != x {
        return Err(Error::InvalidMeshWidth(x));
    }
    Ok(k as u32)
}

impl<T: Real> Mesh<T> {
    pub fn level(&self) -> usize {
        self.level
    }

    /// Mesh width `h = h0 2^-level`.
    pub fn h(&self) -> T {
        self.h
    }

    /// Cells per side, `1/h`.
    pub fn cells_per_side(&self) -> usize {
        self.cells
    }

    pub fn n_side(&self) -> usize {
        self.cells + 1
    }

    /// `k` such that the hierarchy root has width `2^-k`.
    pub fn root_exponent(&self) -> u32 {
        self.log2_inv_h0
    }

    pub fn nodes(&self) -> &[[T; 2]] {
        &self.nodes
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    /// Number of interior (free) nodes, `(1/h - 1)^2`.
    pub fn n_interior(&self) -> usize {
        self.interior.len()
    }

    /// Global node index of each interior degree of freedom.
    pub fn interior_nodes(&self) -> &[usize] {
        &self.interior
    }

    /// Interior index of a global node, `None` on the Dirichlet boundary.
    pub fn interior_index(&self, global: usize) -> Option<usize> {
        self.interior_of[global]
    }

    /// Signed area of a triangle.
    pub fn signed_area(&self, tri: usize) -> T {
        let [a, b, c] = self.triangles[tri].map(|v| self.nodes[v]);
        let two = T::lit(2.0);
        ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])) / two
    }

    pub fn centroid(&self, tri: usize) -> [T; 2] {
        let [a, b, c] = self.triangles[tri].map(|v| self.nodes[v]);
        let three = T::lit(3.0);
        [(a[0] + b[0] + c[0]) / three, (a[1] + b[1] + c[1]) / three]
    }

    /// Nodal values of `f` at the interior nodes.
    pub fn interpolate<F: Fn([T; 2]) -> T>(&self, f: F) -> Vec<T> {
        self.interior.iter().map(|&g| f(self.nodes[g])).collect()
    }

    /// Sparsity pattern of interior-node couplings with the element-to-slot
    /// scatter map, built on first use.
    pub fn pattern(&self) -> Arc<AssemblyPattern> {
        self.pattern
            .get_or_init(|| Arc::new(AssemblyPattern::new(self)))
            .clone()
    }

    /// Fill-reducing ordering of the interior pattern, built on first use.
    pub fn ordering(&self) -> Arc<ColumnOrdering> {
        self.ordering
            .get_or_init(|| {
                let p = self.pattern();
                Arc::new(ColumnOrdering::nested_dissection(
                    self.n_interior(),
                    p.row_ptr(),
                    p.col_idx(),
                ))
            })
            .clone()
    }
}

/// Evaluates the piecewise-linear interpolant of the coarse interior vector
/// `v` at the interior nodes of `fine`. Boundary values are zero.
pub fn prolongate<T: Real, F: Field<Real = T>>(
    coarse: &Mesh<T>,
    fine: &Mesh<T>,
    v: &[F],
) -> Result<Vec<F>> {
    if v.len() != coarse.n_interior() {
        return Err(Error::DimensionMismatch {
            expected: coarse.n_interior(),
            got: v.len(),
        });
    }
    let (cc, cf) = (coarse.cells, fine.cells);
    if cf < cc || cf % cc != 0 || !(cf / cc).is_power_of_two() {
        return Err(Error::InvalidInput(format!(
            "meshes with {cc} and {cf} cells per side are not nested"
        )));
    }
    let r = cf / cc;
    let inv_r = T::one() / T::lit(r as f64);
    let n_side_c = cc + 1;
    let coarse_value = |i: usize, j: usize| -> F {
        coarse
            .interior_of
            .get(j * n_side_c + i)
            .copied()
            .flatten()
            .map_or(F::zero(), |k| v[k])
    };

    let n_side_f = cf + 1;
    let out = fine
        .interior
        .iter()
        .map(|&g| {
            let (gi, gj) = (g % n_side_f, g / n_side_f);
            let (i, a) = (gi / r, gi % r);
            let (j, b) = (gj / r, gj % r);
            if a == 0 && b == 0 {
                return coarse_value(i, j);
            }
            let xi = T::lit(a as f64) * inv_r;
            let eta = T::lit(b as f64) * inv_r;
            let v00 = coarse_value(i, j);
            let v11 = coarse_value(i + 1, j + 1);
            if a >= b {
                let v10 = coarse_value(i + 1, j);
                v00.scale(T::one() - xi) + v10.scale(xi - eta) + v11.scale(eta)
            } else {
                let v01 = coarse_value(i, j + 1);
                v00.scale(T::one() - eta) + v11.scale(xi) + v01.scale(eta - xi)
            }
        })
        .collect();
    Ok(out)
}
