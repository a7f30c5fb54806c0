use thiserror::Error;

use crate::square::DiagMatrix;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("grid side {0} is not a power of two >= 2")]
    InvalidGrid(usize),

    #[error("grid mismatch: {left} vs {right}")]
    GridMismatch { left: usize, right: usize },

    #[error("grid cannot resolve the construction: {0}")]
    Resolution(String),

    #[error("invalid laminate parameters: {0}")]
    InvalidSpec(String),

    #[error("refinement generation {requested} does not follow current generation {current}")]
    WrongGeneration { current: usize, requested: usize },

    #[error("{0} lies outside the rank-one convex hull")]
    NotInHull(DiagMatrix),

    #[error("{0} is a well; the construction is degenerate")]
    DatumInK(DiagMatrix),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("insufficient data: need at least {need} records, got {got}")]
    InsufficientData { need: usize, got: usize },

    #[error("invalid bootstrap parameters: {0}")]
    InvalidParams(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Stable machine-readable tag, used by the CLI for exit reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidGrid(_) => "invalid-grid",
            Error::GridMismatch { .. } => "grid-mismatch",
            Error::Resolution(_) => "resolution",
            Error::InvalidSpec(_) => "invalid-spec",
            Error::WrongGeneration { .. } => "wrong-generation",
            Error::NotInHull(_) => "not-in-hull",
            Error::DatumInK(_) => "datum-in-k",
            Error::Unsupported(_) => "unsupported",
            Error::Domain(_) => "domain",
            Error::InsufficientData { .. } => "insufficient-data",
            Error::InvalidParams(_) => "invalid-params",
            Error::Parse(_) => "parse",
        }
    }
}
