#![allow(dead_code)]

use mlmc_eig::assembly::AssembledSystem;
use mlmc_eig::fields::{center_grid, FieldConfig, VelocityField};
use mlmc_eig::mesh::Mesh;
use nalgebra::{Complex, DMatrix, Matrix3};

pub fn case1() -> FieldConfig<f64> {
    FieldConfig::on_grid(5, 5, 12.5, VelocityField::Constant([20.0, 0.0])).unwrap()
}

pub fn case2() -> FieldConfig<f64> {
    FieldConfig::on_grid(5, 5, 12.5, VelocityField::Constant([50.0, 0.0])).unwrap()
}

pub fn case3(grid: usize) -> FieldConfig<f64> {
    FieldConfig::new(center_grid(grid, grid), 12.5, VelocityField::Stream { centers: center_grid(grid, grid) }).unwrap()
}

/// Conductivity fixed to one: a single kernel center driven by a zero sample.
pub fn unit_kappa(a: [f64; 2]) -> FieldConfig<f64> {
    FieldConfig::new(vec![[0.5, 0.5]], 12.5, VelocityField::Constant(a)).unwrap()
}

pub fn dense_pair(sys: &AssembledSystem<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = sys.n();
    (DMatrix::from_fn(n, n, |i, j| sys.a.get(i, j)), DMatrix::from_fn(n, n, |i, j| sys.m.get(i, j)))
}

/// All generalized eigenvalues of `(A, M)`, sorted by magnitude.
pub fn dense_eigenvalues(a: &DMatrix<f64>, m: &DMatrix<f64>) -> Vec<Complex<f64>> {
    let op = m.clone().lu().solve(a).expect("mass matrix is invertible");
    let mut ev: Vec<Complex<f64>> = op.complex_eigenvalues().iter().copied().collect();
    ev.sort_by(|x, y| x.norm().total_cmp(&y.norm()).then(x.im.total_cmp(&y.im)));
    ev
}

pub fn dense_smallest(sys: &AssembledSystem<f64>) -> Complex<f64> {
    let (a, m) = dense_pair(sys);
    dense_eigenvalues(&a, &m)[0]
}

/// Element-by-element P1 assembly on all nodes from barycentric gradients,
/// with coefficients supplied per triangle centroid. Returns the interior
/// blocks of the stiffness-plus-convection matrix and the mass matrix for
/// the Galerkin form.
pub fn reference_galerkin<K, V>(mesh: &Mesh<f64>, kappa: K, vel: V) -> (DMatrix<f64>, DMatrix<f64>)
where
    K: Fn([f64; 2]) -> f64,
    V: Fn([f64; 2]) -> [f64; 2],
{
    let nodes = mesh.nodes();
    let n_all = nodes.len();
    let mut a = DMatrix::zeros(n_all, n_all);
    let mut m = DMatrix::zeros(n_all, n_all);
    for tri in mesh.triangles() {
        let p = tri.map(|v| nodes[v]);
        let b = Matrix3::new(1.0, p[0][0], p[0][1], 1.0, p[1][0], p[1][1], 1.0, p[2][0], p[2][1]);
        let area = b.determinant().abs() / 2.0;
        let coef = b.try_inverse().unwrap();
        let grad = |k: usize| [coef[(1, k)], coef[(2, k)]];
        let c = [(p[0][0] + p[1][0] + p[2][0]) / 3.0, (p[0][1] + p[1][1] + p[2][1]) / 3.0];
        let (kc, vc) = (kappa(c), vel(c));
        for i in 0..3 {
            for j in 0..3 {
                let (gi, gj) = (grad(i), grad(j));
                let stiff = kc * (gi[0] * gj[0] + gi[1] * gj[1]) * area;
                let conv = (vc[0] * gj[0] + vc[1] * gj[1]) * area / 3.0;
                a[(tri[i], tri[j])] += stiff + conv;
                m[(tri[i], tri[j])] += area / if i == j { 6.0 } else { 12.0 };
            }
        }
    }
    let inner = mesh.interior_nodes();
    let pick = |x: &DMatrix<f64>| DMatrix::from_fn(inner.len(), inner.len(), |i, j| x[(inner[i], inner[j])]);
    (pick(&a), pick(&m))
}

/// Least-squares slope of `log y` against `log x`.
pub fn slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}
