use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(
        "invalid misclassification rates r0={r0}, r1={r1}: need r0 >= 0, r1 >= 0 and r0 + r1 < 1"
    )]
    InvalidRates { r0: f64, r1: f64 },

    #[error("equilibrium iteration did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("covariate cell {0} contains no pairs")]
    EmptyCell(usize),

    #[error("degenerate variance estimate (min eigenvalue {min_eigenvalue:.3e}, condition number {condition:.3e})")]
    DegenerateVariance { min_eigenvalue: f64, condition: f64 },

    #[error("no grid point was accepted")]
    EmptySet,

    #[error("{failed} of {total} replications failed")]
    ReplicationFailures { failed: usize, total: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NonConvergence { .. }
            | Error::EmptyCell(_)
            | Error::DegenerateVariance { .. }
            | Error::EmptySet
            | Error::ReplicationFailures { .. } => 3,
            _ => 2,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
