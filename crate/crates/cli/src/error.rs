use std::fmt;
use std::path::Path;

use koopman_lambert::Error;

/// Failure classes, each with its own process exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    NonConvergence(String),
    ResourceCap(String),
    Failure(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::NonConvergence(_) => 3,
            CliError::ResourceCap(_) => 4,
            CliError::Failure(_) => 1,
        }
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        CliError::Failure(format!("{}: {err}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::NonConvergence(m) => write!(f, "not converged: {m}"),
            CliError::ResourceCap(m) => write!(f, "resource cap: {m}"),
            CliError::Failure(m) => write!(f, "error: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(err: Error) -> Self {
        let msg = err.to_string();
        match err {
            Error::ResourceCap { .. } => CliError::ResourceCap(msg),
            Error::InvalidArgument(_)
            | Error::DegenerateGeometry(_)
            | Error::ModelMismatch(_)
            | Error::DomainViolation { .. } => CliError::Usage(msg),
            Error::SolverNonConvergence { .. }
            | Error::NoSolution(_)
            | Error::Seed(_)
            | Error::Propagation(_)
            | Error::SingularGeometry(_)
            | Error::Inversion(_) => CliError::NonConvergence(msg),
            _ => CliError::Failure(msg),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(err: csv::Error) -> Self {
        CliError::Failure(format!("csv: {err}"))
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
