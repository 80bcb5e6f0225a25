//! Multilevel Monte Carlo and quasi-Monte Carlo estimation of the smallest
//! eigenvalue of a stochastic convection-diffusion operator on the unit square.
//!
//! The numerical core is generic over the real scalar type (`f32` or `f64`);
//! the aliases below fix it to `f64`.

pub mod assembly;
pub mod eigen;
pub mod error;
pub mod estimators;
pub mod fields;
pub mod lu;
pub mod mesh;
pub mod report;
pub mod sampling;
pub mod scalar;
pub mod sparse;

#[doc(hidden)]
pub mod cli;

pub use error::{Error, Result};
pub use num_complex::Complex;

pub type Mesh64 = mesh::Mesh<f64>;
pub type Mesh32 = mesh::Mesh<f32>;
pub type FieldConfig64 = fields::FieldConfig<f64>;
pub type FieldConfig32 = fields::FieldConfig<f32>;
pub type SampleVector64 = fields::SampleVector<f64>;
pub type SparseOperator64 = sparse::SparseOperator<f64>;
pub type SparseOperator32 = sparse::SparseOperator<f32>;
pub type AssembledSystem64 = assembly::AssembledSystem<f64>;
pub type AssembledSystem32 = assembly::AssembledSystem<f32>;
pub type EigenResult64 = eigen::EigenResult<f64>;
pub type EigenResult32 = eigen::EigenResult<f32>;
pub type SolverSettings64 = eigen::SolverSettings<f64>;
pub type C64 = Complex<f64>;
