use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("expected a rank-one matrix, found rank {0}")]
    Rank(usize),

    #[error("not a basis: {0}")]
    Basis(String),

    #[error("matrix is singular")]
    Singular,

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("contract violated: {0}")]
    Contract(String),

    #[error("infeasible dimensions: {0}")]
    Dimension(String),

    /// A computed result contradicts an identity the library relies on.
    #[error("internal inconsistency: {0}")]
    Inconsistency(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("parse error: {0}")]
    Parse(String),
}
