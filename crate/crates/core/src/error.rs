use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("integer overflow in lattice arithmetic")]
    Overflow,
    #[error("lattice: {0}")]
    Lattice(String),
    #[error("generator mismatch: {0}")]
    GeneratorMismatch(String),
    #[error("symbolic expression: {0}")]
    Symbolic(String),
    #[error("not transversal: {0}")]
    NotTransversal(String),
    #[error("point is off the model manifold: {0}")]
    OffManifold(String),
    #[error("degree overflow: degree {degree} has no successor below {top}")]
    DegreeOverflow { degree: usize, top: usize },
    #[error("not equivariant: {0}")]
    NotEquivariant(String),
    #[error("form is not basic: {0}")]
    NotBasic(String),
    #[error("infinite fixed set: {0}")]
    InfiniteFixedSet(String),
    #[error("non-transverse fixed orbit {orbit}: {detail}")]
    NonTransverse { orbit: String, detail: String },
    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
}

impl Error {
    /// Transversality failures, which gate every right-hand-side evaluation.
    pub fn is_transversality_failure(&self) -> bool {
        matches!(self, Error::NonTransverse { .. } | Error::InfiniteFixedSet(_) | Error::NotTransversal(_))
    }
}
