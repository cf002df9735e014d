//! Error type shared by every module; variants map onto CLI exit codes.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed structural data: inconsistent dimensions, bad block sizes.
    #[error("structure: {0}")]
    Structure(String),

    /// An axiom check failed beyond tolerance (not a *-homomorphism, Gram not
    /// positive, contraction norm exceeded, covariance violated).
    #[error("validation: {0}")]
    Validation(String),

    /// Operation precondition not met (e.g. asking for a model of a
    /// representation that is not completely noncoisometric).
    #[error("precondition: {0}")]
    Precondition(String),

    /// A verdict that cannot be settled at the chosen truncation level.
    #[error("undecided at level {level}: {what}")]
    Undecided { level: usize, what: String },

    /// Input file or JSON payload could not be parsed.
    #[error("parse: {0}")]
    Parse(String),

    /// Requested computation exceeds the configured size budget.
    #[error("resource: {0}")]
    Resource(String),

    /// Internal numerical failure (factorization did not converge, etc).
    #[error("numerical: {0}")]
    Numerical(String),
}

impl Error {
    /// Process exit code for the CLI: 2 validation/precondition/structure,
    /// 3 parse, 4 undecided.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse(_) => 3,
            Error::Undecided { .. } => 4,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
