//! Error taxonomy.
//!
//! Three failure classes cover the whole crate: invalid arguments (rejected
//! before any numerical work), domain errors of closed-form evaluations
//! (kernel evaluated where it is not finite), and convergence failures of the
//! quadrature engine, which carry the partial result so callers can report
//! it instead of discarding the spent budget.

use crate::quadrature::EvalResult;
use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Input violates a type invariant or a precondition; nothing was computed.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A closed-form expression was evaluated at a point where it is not finite.
    #[error("domain error: {0}")]
    Domain(String),

    /// The integration budget ran out before the tolerance was met. The best
    /// estimate so far is attached.
    #[error("quadrature did not converge ({context}): value so far {}, error estimate {} after {} evaluations", partial.value, partial.error_estimate, partial.n_evals)]
    ConvergenceFailure {
        partial: EvalResult,
        context: String,
    },

    /// Monte Carlo sampler failure: a rejection loop exceeded its iteration
    /// cap or a sample produced a non-finite value.
    #[error("sampler error: {0}")]
    Sampler(String),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// The partial estimate attached to a convergence failure, if any.
    pub fn partial_result(&self) -> Option<&EvalResult> {
        match self {
            Error::ConvergenceFailure { partial, .. } => Some(partial),
            _ => None,
        }
    }
}
