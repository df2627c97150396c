use thiserror::Error;

use crate::groups::GroupElement;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid group spec: {0}")]
    InvalidSpec(String),

    #[error("element {element:?} does not match group {spec}")]
    Shape { spec: String, element: Vec<i64> },

    #[error("group mismatch: {0} vs {1}")]
    SpecMismatch(String, String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid coefficient: {0}")]
    Coefficient(String),

    #[error("d∘d ≠ 0: composite d^{next}∘d^{degree} has nonzero entry ({row}, {col})", next = .degree + 1)]
    NotACocomplex { degree: usize, row: usize, col: usize },

    #[error("not a chain map at degree {degree}: entry ({row}, {col}) of f∘d − d′∘f is nonzero")]
    NotAChainMap { degree: usize, row: usize, col: usize },

    #[error("matrix is not self-adjoint: entry ({row}, {col})")]
    NotSelfAdjoint { row: usize, col: usize },

    #[error("operator is not positive: compression eigenvalue {0}")]
    NotPositive(f64),

    #[error("quotient level {level} does not separate {first:?} and {second:?}; raise the level")]
    SupportCollision { level: u64, first: GroupElement, second: GroupElement },

    #[error("compression dimension {dim} exceeds cap {cap}")]
    CapExceeded { dim: usize, cap: usize },

    #[error("non-finite matrix entry at ({0}, {1})")]
    NonFinite(usize, usize),

    #[error("zero operator: no eigenvalue above the kernel threshold {0:e}")]
    ZeroOperator(f64),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("matrix is singular")]
    Singular,

    #[error("not in unit-product form: {0}")]
    NotUnitProduct(String),

    #[error("mapping cone is not acyclic in degree {degree} (kernel dimension {dim})")]
    NotAcyclic { degree: usize, dim: f64 },

    #[error("invalid schedule: {0}")]
    Schedule(String),

    #[error("grid {0} is below the minimum of 64 points per dimension")]
    GridTooSmall(usize),

    #[error("polynomial is identically zero")]
    ZeroPolynomial,

    #[error("parse error: {0}")]
    Parse(String),
}

/// Coarse classification used for process exit codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorClass {
    Input,
    Resource,
    Numerical,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::CapExceeded { .. } => ErrorClass::Resource,
            Error::NotPositive(_)
            | Error::NonFinite(..)
            | Error::ZeroOperator(_)
            | Error::Numerical(_)
            | Error::Singular
            | Error::NotAcyclic { .. } => ErrorClass::Numerical,
            _ => ErrorClass::Input,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
