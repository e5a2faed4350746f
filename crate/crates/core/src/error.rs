use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("a Chebyshev grid needs at least degree 1, got {0}")]
    DegenerateGrid(usize),

    #[error("point {0} lies outside the normalized interval [-1, 1]")]
    OutOfDomain(f64),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("dimension mismatch: expected {expected_rows}x{expected_cols}, got {rows}x{cols}")]
    DimensionMismatch {
        expected_rows: usize,
        expected_cols: usize,
        rows: usize,
        cols: usize,
    },

    #[error("unsupported derivative order {0} (only 1 and 2 are available)")]
    UnsupportedOrder(usize),

    #[error("invalid micromodulus: {0}")]
    InvalidKernel(String),

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("invalid solver options: {0}")]
    InvalidOptions(String),

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("inner Newmark iteration did not converge after {sweeps} sweeps (last update {last_update:e})")]
    InnerIteration { sweeps: usize, last_update: f64 },

    #[error("relative error is undefined: the numerical solution is identically zero")]
    ZeroDenominator,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
