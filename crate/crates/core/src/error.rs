use thiserror::Error;

use crate::trajectory::Trajectory;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    /// A parameter violates an operation's precondition.
    #[error("invalid {name}: {reason}")]
    Domain { name: &'static str, reason: String },

    #[error("scheme {scheme} unsupported for model `{model}`: {reason}")]
    UnsupportedScheme {
        scheme: &'static str,
        model: String,
        reason: &'static str,
    },

    #[error("model `{model}` does not support {what}")]
    UnsupportedModel { model: String, what: &'static str },

    #[error("path lattice too large: {levels}^{interior} = {size} paths exceeds limit {limit}")]
    Capacity {
        levels: usize,
        interior: usize,
        size: f64,
        limit: u64,
    },

    #[error("infeasible constraint: {0}")]
    Infeasible(String),

    #[error("path has {nodes} nodes; at least one interior node is required")]
    NoInteriorNodes { nodes: usize },

    #[error("optimizer did not converge after {iterations} iterations (|grad|_inf = {gradient_norm:e})")]
    NonConvergence {
        iterations: usize,
        gradient_norm: f64,
        last: Box<Trajectory>,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("propagator singular: {0}")]
    Singular(String),
}

impl Error {
    pub(crate) fn domain(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Domain {
            name,
            reason: reason.into(),
        }
    }

    /// True for errors caused by invalid inputs rather than numerical failure.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            Error::NonConvergence { .. } | Error::NonFinite(_) | Error::Singular(_)
        )
    }
}
