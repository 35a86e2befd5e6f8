use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration vector outside the open unit disk.
    #[error("point {point:?} lies outside the open unit disk (|R|^2 = {norm2})")]
    Domain { point: [f64; 2], norm2: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("shape mismatch: expected {expected} values, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("time step {dt} violates the CFL bound (courant number {courant:.4} > 1)")]
    StepSize { dt: f64, courant: f64 },

    #[error("scheme produced a negative density {value:e} in cell {cell}")]
    SchemeViolation { cell: usize, value: f64 },

    #[error("no convergence after {iterations} iterations (last change {last_change:e})")]
    Convergence { iterations: usize, last_change: f64 },

    #[error("non-finite value encountered in {0}")]
    NumericalDomain(&'static str),

    #[error("path {path}: boundary rejection budget exhausted")]
    BdStep { path: usize },

    #[error("format error: {0}")]
    Format(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Whether this error comes from a numerical failure rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::StepSize { .. }
                | Error::SchemeViolation { .. }
                | Error::Convergence { .. }
                | Error::NumericalDomain(_)
                | Error::BdStep { .. }
        )
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
