use thiserror::Error;

use crate::dynamic::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("shape mismatch in {context}: expected {expected}, found {found}")]
    Shape {
        context: String,
        expected: String,
        found: String,
    },

    #[error("eigensolver did not converge for {0}")]
    NoConvergence(String),

    #[error("singular block: smallest |eigenvalue| {min_abs_eig:e} below threshold")]
    SingularBlock { min_abs_eig: f64 },

    #[error("{what} is not positive semidefinite (min eigenvalue {min_eig:e})")]
    NotPsd { what: String, min_eig: f64 },

    #[error("{what} is not positive definite (min eigenvalue {min_eig:e})")]
    NotPositiveDefinite { what: String, min_eig: f64 },

    #[error("malformed input: {0}")]
    Malformed(String),

    #[error("invalid problem: {}", .0.join("; "))]
    InvalidProblem(Vec<String>),

    #[error("information structure is not partially nested ({} violation(s))", .0.len())]
    NotPartiallyNested(Vec<Violation>),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("unsupported policy: {0}")]
    UnsupportedPolicy(String),
}

impl Error {
    pub(crate) fn shape(
        context: impl Into<String>,
        expected: impl std::fmt::Display,
        found: impl std::fmt::Display,
    ) -> Self {
        Error::Shape {
            context: context.into(),
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }
}
