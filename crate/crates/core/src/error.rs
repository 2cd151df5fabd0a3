use thiserror::Error;

/// Errors produced by the geometry, energy and combinatorics routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("stereographic chart is singular at its pole")]
    Pole,

    #[error("self-intersecting torus of revolution: R = {major} must exceed r = {minor}")]
    SelfIntersecting { major: f64, minor: f64 },

    #[error("under-determined curvature fit at vertex {vertex}: {neighbors} independent neighbors")]
    UnderDeterminedFit { vertex: usize, neighbors: usize },

    #[error("point lies outside the tubular neighborhood (|s| = {norm}, limit {limit})")]
    OutOfTube { norm: f64, limit: f64 },

    #[error("degenerate conformal image: |Q| = {0:e}")]
    DegenerateImage(f64),

    #[error("euclidean ball centered at the origin has no well-defined cap center")]
    AmbiguousCenter,

    #[error("inconsistent curvature data: {0}")]
    InconsistentCurvature(String),

    #[error("optimizer stalled after {iterations} iterations: {reason}")]
    OptimizerStall { iterations: usize, reason: String },

    #[error("mesh format error at line {line}: {msg}")]
    Format { line: usize, msg: String },

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
