use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Matrix or vector shapes that do not fit together.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A Cholesky pivot fell at or below the positive-definiteness tolerance.
    #[error("matrix is not positive definite: pivot {index} = {value:e}")]
    Singular { index: usize, value: f64 },

    /// An input violates a documented invariant.
    #[error("invalid input: {0}")]
    Invalid(String),

    /// The requested target cannot be reached on the admissible domain.
    #[error("no solution: {0}")]
    NoSolution(String),

    /// A sample had an indicator with zero variance even after resampling.
    #[error("degenerate sample: indicator {indicator} has zero variance")]
    DegenerateSample { indicator: usize },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
