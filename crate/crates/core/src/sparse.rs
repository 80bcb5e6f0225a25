//! Compressed sparse row operators, the finite element sparsity pattern, and
//! a graph nested-dissection ordering for the direct solver.

use std::io::Write;

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::scalar::{Field, Real};

/// Square sparse matrix in compressed sparse row layout with sorted, unique
/// column indices in every row.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator<F> {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<F>,
}

impl<F: Field> SparseOperator<F> {
    pub fn new(n: usize, row_ptr: Vec<usize>, col_idx: Vec<usize>, values: Vec<F>) -> Result<Self> {
        if row_ptr.len() != n + 1 || row_ptr[0] != 0 || row_ptr[n] != col_idx.len() {
            return Err(Error::InvalidInput("malformed CSR row pointer".into()));
        }
        if values.len() != col_idx.len() {
            return Err(Error::DimensionMismatch { expected: col_idx.len(), got: values.len() });
        }
        for r in 0..n {
            let row = &col_idx[row_ptr[r]..row_ptr[r + 1]];
            if row.windows(2).any(|w| w[0] >= w[1]) || row.iter().any(|&c| c >= n) {
                return Err(Error::InvalidInput(format!("row {r} has unsorted or out-of-range columns")));
            }
        }
        Ok(Self { n, row_ptr, col_idx, values })
    }

    /// Builds from `(row, col, value)` triplets, summing duplicates.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, F)]) -> Result<Self> {
        let mut rows: Vec<Vec<(usize, F)>> = vec![Vec::new(); n];
        for &(r, c, v) in triplets {
            if r >= n || c >= n {
                return Err(Error::InvalidInput(format!("entry ({r}, {c}) outside {n}x{n}")));
            }
            rows[r].push((c, v));
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            for (c, v) in row {
                if col_idx.len() > *row_ptr.last().unwrap() && *col_idx.last().unwrap() == c {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(c);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Ok(Self { n, row_ptr, col_idx, values })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![F::one(); n],
        }
    }

    /// Matrix with the given pattern and all-zero values.
    pub(crate) fn zeros_like_pattern(n: usize, row_ptr: Vec<usize>, col_idx: Vec<usize>) -> Self {
        let nnz = col_idx.len();
        Self { n, row_ptr, col_idx, values: vec![F::zero(); nnz] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[F] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [F] {
        &mut self.values
    }

    pub fn get(&self, r: usize, c: usize) -> F {
        let row = &self.col_idx[self.row_ptr[r]..self.row_ptr[r + 1]];
        row.binary_search(&c)
            .map_or(F::zero(), |k| self.values[self.row_ptr[r] + k])
    }

    pub fn max_abs(&self) -> F::Real {
        self.values
            .iter()
            .fold(<F::Real as num_traits::Zero>::zero(), |m, v| if v.modulus() > m { v.modulus() } else { m })
    }

    pub fn matvec(&self, x: &[F]) -> Vec<F> {
        assert_eq!(x.len(), self.n, "matvec dimension");
        (0..self.n)
            .map(|r| {
                (self.row_ptr[r]..self.row_ptr[r + 1])
                    .fold(F::zero(), |acc, k| acc + self.values[k] * x[self.col_idx[k]])
            })
            .collect()
    }

    /// `y = A^H x`.
    pub fn matvec_adjoint(&self, x: &[F]) -> Vec<F> {
        assert_eq!(x.len(), self.n, "matvec dimension");
        let mut y = vec![F::zero(); self.n];
        for r in 0..self.n {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                y[self.col_idx[k]] += self.values[k].conj() * x[r];
            }
        }
        y
    }

    pub fn transpose(&self) -> Self {
        let mut count = vec![0usize; self.n + 1];
        for &c in &self.col_idx {
            count[c + 1] += 1;
        }
        for i in 0..self.n {
            count[i + 1] += count[i];
        }
        let row_ptr = count.clone();
        let mut next = count;
        let mut col_idx = vec![0; self.nnz()];
        let mut values = vec![F::zero(); self.nnz()];
        for r in 0..self.n {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.col_idx[k];
                col_idx[next[c]] = r;
                values[next[c]] = self.values[k];
                next[c] += 1;
            }
        }
        Self { n: self.n, row_ptr, col_idx, values }
    }

    /// Row-major dense copy; intended for small diagnostic problems.
    pub fn to_dense(&self) -> Vec<Vec<F>> {
        let mut d = vec![vec![F::zero(); self.n]; self.n];
        for r in 0..self.n {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                d[r][self.col_idx[k]] = self.values[k];
            }
        }
        d
    }

    pub fn same_pattern(&self, other: &Self) -> bool {
        self.n == other.n && self.row_ptr == other.row_ptr && self.col_idx == other.col_idx
    }
}

impl<T: Real + Field<Real = T>> SparseOperator<T> {
    /// `y = A x` for a real matrix acting on a vector over any field.
    pub fn apply<G: Field<Real = T>>(&self, x: &[G], y: &mut [G]) {
        assert_eq!(x.len(), self.n, "apply dimension");
        for r in 0..self.n {
            let mut acc = G::zero();
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += x[self.col_idx[k]].scale(self.values[k]);
            }
            y[r] = acc;
        }
    }

    /// `y = A^T x` (the adjoint of a real matrix).
    pub fn apply_transpose<G: Field<Real = T>>(&self, x: &[G], y: &mut [G]) {
        assert_eq!(x.len(), self.n, "apply dimension");
        y.iter_mut().for_each(|v| *v = G::zero());
        for r in 0..self.n {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                y[self.col_idx[k]] += x[r].scale(self.values[k]);
            }
        }
    }

    /// `alpha * self + beta * other` over the field `G`. Both operands must
    /// share one sparsity pattern.
    pub fn combine<G: Field<Real = T>>(&self, alpha: G, other: &Self, beta: G) -> SparseOperator<G> {
        assert!(self.same_pattern(other), "combine requires identical patterns");
        SparseOperator {
            n: self.n,
            row_ptr: self.row_ptr.clone(),
            col_idx: self.col_idx.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| alpha.scale(a) + beta.scale(b))
                .collect(),
        }
    }

    /// Largest entry of `|A - A^T|`.
    pub fn asymmetry(&self) -> T {
        let t = self.transpose();
        let mut m = T::zero();
        for r in 0..self.n {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let d = (self.values[k] - t.get(r, self.col_idx[k])).abs();
                m = m.max(d);
            }
        }
        m
    }

    /// Writes the matrix in Matrix Market coordinate format (1-based).
    pub fn write_matrix_market<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(w, "{} {} {}", self.n, self.n, self.nnz())?;
        for r in 0..self.n {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                writeln!(w, "{} {} {:.16e}", r + 1, self.col_idx[k] + 1, self.values[k])?;
            }
        }
        Ok(())
    }
}

/// Sparsity pattern of P1 couplings between the degrees of freedom of a mesh,
/// with the CSR slot of every element-local coupling.
#[derive(Debug)]
pub struct AssemblyPattern {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    /// Per triangle, row-major 3x3 local-to-CSR slots; `usize::MAX` where
    /// either node is not a degree of freedom.
    slots: Vec<[usize; 9]>,
}

impl AssemblyPattern {
    /// Pattern over the interior (Dirichlet-eliminated) nodes.
    pub fn new<T: Real>(mesh: &Mesh<T>) -> Self {
        Self::with_dofs(mesh, mesh.n_interior(), |g| mesh.interior_index(g))
    }

    /// Pattern over all mesh nodes, boundary included.
    pub fn unconstrained<T: Real>(mesh: &Mesh<T>) -> Self {
        Self::with_dofs(mesh, mesh.nodes().len(), Some)
    }

    fn with_dofs<T: Real>(mesh: &Mesh<T>, n: usize, dof: impl Fn(usize) -> Option<usize>) -> Self {
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n];
        let local: Vec<[Option<usize>; 3]> =
            mesh.triangles().iter().map(|t| t.map(&dof)).collect();
        for d in &local {
            for a in d.iter().flatten() {
                for b in d.iter().flatten() {
                    rows[*a].push(*b);
                }
            }
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for row in &mut rows {
            row.sort_unstable();
            row.dedup();
            col_idx.extend_from_slice(row);
            row_ptr.push(col_idx.len());
        }
        let slots = local
            .iter()
            .map(|d| {
                let mut s = [usize::MAX; 9];
                for (i, a) in d.iter().enumerate() {
                    for (j, b) in d.iter().enumerate() {
                        if let (Some(a), Some(b)) = (a, b) {
                            let row = &col_idx[row_ptr[*a]..row_ptr[*a + 1]];
                            s[3 * i + j] = row_ptr[*a] + row.binary_search(b).expect("pattern entry");
                        }
                    }
                }
                s
            })
            .collect();
        Self { n, row_ptr, col_idx, slots }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn slots(&self, tri: usize) -> &[usize; 9] {
        &self.slots[tri]
    }

    pub fn zero_operator<F: Field>(&self) -> SparseOperator<F> {
        SparseOperator::zeros_like_pattern(self.n, self.row_ptr.clone(), self.col_idx.clone())
    }
}

/// Symmetric fill-reducing permutation: `perm[k]` is the original index
/// eliminated in step `k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnOrdering {
    perm: Vec<usize>,
}

const DISSECTION_LEAF: usize = 48;

impl ColumnOrdering {
    pub fn natural(n: usize) -> Self {
        Self { perm: (0..n).collect() }
    }

    pub fn from_perm(perm: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; perm.len()];
        for &p in &perm {
            if p >= perm.len() || std::mem::replace(&mut seen[p], true) {
                return Err(Error::InvalidInput("ordering is not a permutation".into()));
            }
        }
        Ok(Self { perm })
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    /// Nested dissection of the graph of `A + A^T` (diagonal ignored), with
    /// level-structure separators from pseudo-peripheral nodes.
    pub fn nested_dissection(n: usize, row_ptr: &[usize], col_idx: &[usize]) -> Self {
        let adj = symmetric_adjacency(n, row_ptr, col_idx);
        let mut nd = Dissector {
            adj: &adj,
            region: vec![0; n],
            next_region: 1,
            level: vec![usize::MAX; n],
            order: Vec::with_capacity(n),
        };
        let all: Vec<usize> = (0..n).collect();
        nd.dissect(all);
        debug_assert_eq!(nd.order.len(), n);
        Self { perm: nd.order }
    }
}

fn symmetric_adjacency(n: usize, row_ptr: &[usize], col_idx: &[usize]) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); n];
    for r in 0..n {
        for &c in &col_idx[row_ptr[r]..row_ptr[r + 1]] {
            if c != r {
                adj[r].push(c);
                adj[c].push(r);
            }
        }
    }
    for a in &mut adj {
        a.sort_unstable();
        a.dedup();
    }
    adj
}

struct Dissector<'a> {
    adj: &'a [Vec<usize>],
    region: Vec<usize>,
    next_region: usize,
    level: Vec<usize>,
    order: Vec<usize>,
}

impl Dissector<'_> {
    fn claim(&mut self, nodes: &[usize]) -> usize {
        let id = self.next_region;
        self.next_region += 1;
        for &v in nodes {
            self.region[v] = id;
        }
        id
    }

    /// Breadth-first level structure of the component of `root` inside
    /// region `id`.
    fn levels(&mut self, root: usize, id: usize) -> Vec<Vec<usize>> {
        let mut levels = vec![vec![root]];
        self.level[root] = 0;
        let mut visited = vec![root];
        loop {
            let mut next = Vec::new();
            for &v in levels.last().unwrap() {
                for &w in &self.adj[v] {
                    if self.region[w] == id && self.level[w] == usize::MAX {
                        self.level[w] = levels.len();
                        next.push(w);
                        visited.push(w);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            levels.push(next);
        }
        for v in visited {
            self.level[v] = usize::MAX;
        }
        levels
    }

    fn dissect(&mut self, nodes: Vec<usize>) {
        if nodes.len() <= DISSECTION_LEAF {
            self.order.extend(nodes);
            return;
        }
        let id = self.claim(&nodes);

        let mut levels = self.levels(nodes[0], id);
        let count: usize = levels.iter().map(Vec::len).sum();
        if count < nodes.len() {
            // Disconnected: order each component independently.
            let first: Vec<usize> = levels.concat();
            let mut in_first = first.clone();
            in_first.sort_unstable();
            let rest: Vec<usize> = nodes
                .iter()
                .copied()
                .filter(|v| in_first.binary_search(v).is_err())
                .collect();
            self.dissect(first);
            self.dissect(rest);
            return;
        }

        // Pseudo-peripheral root.
        for _ in 0..8 {
            let last = levels.last().unwrap();
            let cand = *last
                .iter()
                .min_by_key(|&&v| (self.adj[v].iter().filter(|&&w| self.region[w] == id).count(), v))
                .unwrap();
            let trial = self.levels(cand, id);
            if trial.len() <= levels.len() {
                break;
            }
            levels = trial;
        }

        if levels.len() < 3 {
            self.order.extend(nodes);
            return;
        }
        let half = nodes.len() / 2;
        let mut acc = 0;
        let mut mid = 1;
        for (i, l) in levels.iter().enumerate() {
            acc += l.len();
            if acc >= half {
                mid = i.clamp(1, levels.len() - 2);
                break;
            }
        }
        let separator = levels[mid].clone();
        let part_a: Vec<usize> = levels[..mid].concat();
        let part_b: Vec<usize> = levels[mid + 1..].concat();
        self.dissect(part_a);
        self.dissect(part_b);
        self.order.extend(separator);
    }
}
