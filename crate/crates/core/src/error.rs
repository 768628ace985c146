use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the numerical kernels.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("degenerate metric at grid point ({i}, {j}): det g = {detg:e}")]
    DegenerateMetric { i: usize, j: usize, detg: f64 },
    #[error("umbilic degeneracy at grid point ({i}, {j}): |A0|^2 = {a0sq:e}")]
    UmbilicDegeneracy { i: usize, j: usize, a0sq: f64 },
    #[error("surface does not lie on the unit sphere (max deviation {deviation:e})")]
    AmbientMismatch { deviation: f64 },
    #[error("inversion center within {distance:e} of the surface at grid point ({i}, {j})")]
    InversionCenterOnSurface { i: usize, j: usize, distance: f64 },
    #[error("stereographic pole within {distance:e} of the surface")]
    PoleOnSurface { distance: f64 },
    #[error("irregular curve at sample {index}: |gamma'| = {speed:e}")]
    IrregularCurve { index: usize, speed: f64 },
    #[error("non-finite value encountered")]
    NonFinite,
    #[error("time {time} is not on the stored step schedule")]
    ScheduleMismatch { time: f64 },
}

/// Errors raised while reading configuration or writing outputs.
#[derive(Debug, Error)]
pub enum IoError {
    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("invalid value for `{key}`: {reason}")]
    Validation { key: String, reason: String },
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Numerical(#[from] Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
