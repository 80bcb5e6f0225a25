//! P1 finite element assembly of the generalized eigenproblem `A u = lambda M u`
//! for the Galerkin and SUPG discretizations, with homotopy-scaled convection.
//!
//! Coefficients are evaluated once per triangle at the centroid. Dirichlet
//! nodes are eliminated, so operators act on interior degrees of freedom. The
//! SUPG element size is the triangle diameter.

use std::fmt;
use std::sync::Arc;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::fields::{kappa_unchecked, velocity_unchecked, FieldConfig, SampleVector};
use crate::mesh::Mesh;
use crate::scalar::{Field, Real};
use crate::sparse::{AssemblyPattern, ColumnOrdering, SparseOperator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Discretization {
    Galerkin,
    Supg,
}

impl fmt::Display for Discretization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Discretization::Galerkin => "galerkin",
            Discretization::Supg => "supg",
        })
    }
}

impl FromStr for Discretization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "galerkin" => Ok(Discretization::Galerkin),
            "supg" => Ok(Discretization::Supg),
            other => Err(Error::Config(format!("unknown discretization '{other}'"))),
        }
    }
}

/// The pencil `(A, M)` on the interior nodes of one mesh level.
#[derive(Debug, Clone)]
pub struct AssembledSystem<T> {
    pub a: SparseOperator<T>,
    pub m: SparseOperator<T>,
    pub kind: Discretization,
    pub t: T,
    pub mesh_level: usize,
    pub h: T,
    /// Nominal floating-point work spent in assembly.
    pub flops: u64,
    /// Fill-reducing ordering shared by every factorization of this pencil.
    pub ordering: Arc<ColumnOrdering>,
}

impl<T> AssembledSystem<T> {
    pub fn n(&self) -> usize
    where
        T: Field,
    {
        self.a.n()
    }
}

/// Mesh Peclet number `|a| h / (2 kappa)` at `x`.
pub fn peclet<T: Real>(h_elem: T, x: [T; 2], cfg: &FieldConfig<T>, omega: &SampleVector<T>) -> Result<T> {
    check(cfg, omega)?;
    let k = kappa_unchecked(cfg, omega.as_slice(), x);
    let a = velocity_unchecked(cfg, omega.as_slice(), x)?;
    Ok(peclet_local(h_elem, k, a))
}

/// SUPG stabilization parameter at `x` for the effective velocity `t a`.
pub fn tau<T: Real>(h_elem: T, x: [T; 2], cfg: &FieldConfig<T>, omega: &SampleVector<T>, t: T) -> Result<T> {
    check(cfg, omega)?;
    let k = kappa_unchecked(cfg, omega.as_slice(), x);
    let a = velocity_unchecked(cfg, omega.as_slice(), x)?;
    Ok(tau_local(h_elem, k, [t * a[0], t * a[1]]))
}

fn peclet_local<T: Real>(h: T, kappa: T, a: [T; 2]) -> T {
    a[0].hypot(a[1]) * h / (T::lit(2.0) * kappa)
}

fn tau_local<T: Real>(h: T, kappa: T, a_eff: [T; 2]) -> T {
    if peclet_local(h, kappa, a_eff) >= T::one() {
        h / (T::lit(2.0) * a_eff[0].hypot(a_eff[1]))
    } else {
        h * h / (T::lit(12.0) * kappa)
    }
}

fn diameter<T: Real>(p: [[T; 2]; 3]) -> T {
    let edge = |a: [T; 2], b: [T; 2]| (a[0] - b[0]).hypot(a[1] - b[1]);
    edge(p[0], p[1]).max(edge(p[1], p[2])).max(edge(p[2], p[0]))
}

fn check<T: Real>(cfg: &FieldConfig<T>, omega: &SampleVector<T>) -> Result<()> {
    if omega.len() != cfg.dim() {
        return Err(Error::DimensionMismatch { expected: cfg.dim(), got: omega.len() });
    }
    Ok(())
}

/// Assembles the interior pencil for sample `omega` with homotopy parameter `t`.
pub fn assemble<T: Real + Field<Real = T>>(
    mesh: &Mesh<T>,
    cfg: &FieldConfig<T>,
    omega: &SampleVector<T>,
    kind: Discretization,
    t: T,
) -> Result<AssembledSystem<T>> {
    assemble_on(mesh, &mesh.pattern(), mesh.ordering(), cfg, omega, kind, t)
}

/// Same as [`assemble`] but keeps the boundary nodes as degrees of freedom.
pub fn assemble_unconstrained<T: Real + Field<Real = T>>(
    mesh: &Mesh<T>,
    cfg: &FieldConfig<T>,
    omega: &SampleVector<T>,
    kind: Discretization,
    t: T,
) -> Result<AssembledSystem<T>> {
    let pattern = AssemblyPattern::unconstrained(mesh);
    let ordering = ColumnOrdering::nested_dissection(pattern.n(), pattern.row_ptr(), pattern.col_idx());
    assemble_on(mesh, &pattern, Arc::new(ordering), cfg, omega, kind, t)
}

fn assemble_on<T: Real + Field<Real = T>>(
    mesh: &Mesh<T>,
    pattern: &AssemblyPattern,
    ordering: Arc<ColumnOrdering>,
    cfg: &FieldConfig<T>,
    omega: &SampleVector<T>,
    kind: Discretization,
    t: T,
) -> Result<AssembledSystem<T>> {
    check(cfg, omega)?;
    if !(t >= T::zero() && t <= T::one()) {
        return Err(Error::InvalidInput(format!("homotopy parameter {t} outside [0, 1]")));
    }
    let w = omega.as_slice();
    let h = mesh.h();
    let mut a_op = pattern.zero_operator::<T>();
    let mut m_op = pattern.zero_operator::<T>();
    let nodes = mesh.nodes();
    let (third, twelfth) = (T::one() / T::lit(3.0), T::one() / T::lit(12.0));

    for (e, tri) in mesh.triangles().iter().enumerate() {
        let slots = pattern.slots(e);
        if slots.iter().all(|&s| s == usize::MAX) {
            continue;
        }
        let [p0, p1, p2] = tri.map(|v| nodes[v]);
        let det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
        let area = det * T::lit(0.5);
        let grads = [
            [(p1[1] - p2[1]) / det, (p2[0] - p1[0]) / det],
            [(p2[1] - p0[1]) / det, (p0[0] - p2[0]) / det],
            [(p0[1] - p1[1]) / det, (p1[0] - p0[0]) / det],
        ];
        let c = mesh.centroid(e);
        let kappa = kappa_unchecked(cfg, w, c);
        let vel = velocity_unchecked(cfg, w, c)?;
        let a_eff = [t * vel[0], t * vel[1]];
        let a_dot: [T; 3] = grads.map(|g| a_eff[0] * g[0] + a_eff[1] * g[1]);
        let tau_e = match kind {
            Discretization::Galerkin => T::zero(),
            Discretization::Supg => tau_local(diameter([p0, p1, p2]), kappa, a_eff),
        };

        let av = a_op.values_mut();
        for i in 0..3 {
            for j in 0..3 {
                let s = slots[3 * i + j];
                if s == usize::MAX {
                    continue;
                }
                let stiff = kappa * area * (grads[i][0] * grads[j][0] + grads[i][1] * grads[j][1]);
                let conv = a_dot[j] * area * third;
                let stab = tau_e * a_dot[j] * a_dot[i] * area;
                av[s] += stiff + conv + stab;
            }
        }
        let mv = m_op.values_mut();
        for i in 0..3 {
            for j in 0..3 {
                let s = slots[3 * i + j];
                if s == usize::MAX {
                    continue;
                }
                let mass = if i == j { area * twelfth * T::lit(2.0) } else { area * twelfth };
                mv[s] += mass + tau_e * a_dot[i] * area * third;
            }
        }
    }

    let per_tri = 60 + 40 * cfg.dim() as u64;
    Ok(AssembledSystem {
        a: a_op,
        m: m_op,
        kind,
        t,
        mesh_level: mesh.level(),
        h,
        flops: per_tri * mesh.triangles().len() as u64,
        ordering,
    })
}
