use thiserror::Error;

/// Errors raised by the discretisation, solver and estimator layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("coarsest mesh width {0} is not of the form 2^-k with k >= 1")]
    InvalidMeshWidth(f64),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid field configuration: {0}")]
    InvalidField(String),

    #[error("velocity gradient is singular at ({x}, {y}): point coincides with a kernel center")]
    SingularPoint { x: f64, y: f64 },

    #[error("matrix is numerically singular (pivot {pivot:e} below threshold {threshold:e})")]
    NearSingular { pivot: f64, threshold: f64 },

    #[error("eigensolver did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("invalid solver settings: {0}")]
    InvalidSettings(String),

    #[error("sample {index} on level {level} failed: {source}")]
    Sample {
        level: usize,
        index: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("rate fitting needs at least {needed} levels, got {got}")]
    InsufficientLevels { needed: usize, got: usize },

    #[error("bias target not met with the maximum of {max_level} levels (|Y_L| = {last_mean:e})")]
    BiasNotMet { max_level: usize, last_mean: f64 },

    #[error("Galerkin discretisation unstable on the coarsest level: {unstable} of {probes} probe samples have a complex smallest eigenvalue")]
    GalerkinUnstable { unstable: usize, probes: usize },

    #[error("estimate {0} is not strictly positive")]
    NonPositiveEstimate(f64),

    #[error("invalid lattice rule: {0}")]
    InvalidLattice(String),

    #[error("invalid estimator input: {0}")]
    InvalidInput(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable identifier, used in CLI error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidMeshWidth(_) => "invalid_mesh_width",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::InvalidField(_) => "invalid_field",
            Error::SingularPoint { .. } => "singular_point",
            Error::NearSingular { .. } => "near_singular",
            Error::NotConverged { .. } => "not_converged",
            Error::InvalidSettings(_) => "invalid_settings",
            Error::Sample { .. } => "sample_failed",
            Error::InsufficientLevels { .. } => "insufficient_levels",
            Error::BiasNotMet { .. } => "bias_not_met",
            Error::GalerkinUnstable { .. } => "galerkin_unstable",
            Error::NonPositiveEstimate(_) => "non_positive_estimate",
            Error::InvalidLattice(_) => "invalid_lattice",
            Error::InvalidInput(_) => "invalid_input",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
