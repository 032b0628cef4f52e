use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("point outside domain in dimension {dimension}: {value} not in [{lower}, {upper}]")]
    DomainViolation {
        dimension: usize,
        value: f64,
        lower: f64,
        upper: f64,
    },

    #[error("resource cap exceeded: {what} requires {requested}, cap is {cap}")]
    ResourceCap {
        what: &'static str,
        requested: usize,
        cap: usize,
    },

    #[error("koopman assembly failed: non-finite dynamics at quadrature node {node:?}")]
    Assembly { node: Vec<f64> },

    #[error("eigendecomposition failed: {0}")]
    Decomposition(String),

    #[error("spectral propagation left an imaginary residue of {residue:e} (relative)")]
    SpectralConsistency { residue: f64 },

    #[error("singular geometry: {0}")]
    SingularGeometry(String),

    #[error("element inversion failed: {0}")]
    Inversion(String),

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("propagation failed: {0}")]
    Propagation(String),

    #[error("integration failed at t = {last_good_time}: {reason}")]
    Integration { last_good_time: f64, reason: String },

    #[error("integration cancelled at t = {0}")]
    Cancelled(f64),

    #[error("no lambert solution: {0}")]
    NoSolution(String),

    #[error("lambert iteration did not converge after {iterations} iterations; last bracket {trace:?}")]
    SolverNonConvergence { iterations: usize, trace: Vec<f64> },

    #[error("invalid residual at the initial guess ({0}); try a different initial velocity")]
    Seed(String),

    #[error("model mismatch: {0}")]
    ModelMismatch(String),

    #[error("model serialization: {0}")]
    Serialization(String),
}
