//! Error taxonomy shared across the crate.

use thiserror::Error;

/// Errors raised by the laboratory's operations.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied argument violates a precondition.
    #[error("input error: {0}")]
    InvalidInput(String),

    /// A vector or matrix has the wrong size for the requested operation.
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    /// A model constructor received a configuration without a valid solution.
    #[error("model error: {0}")]
    Model(String),

    /// A deterministic integrator was asked to step a stochastic model.
    #[error("wrong integrator: {0}")]
    WrongIntegrator(String),

    /// An operation was called on an object in an unusable state.
    #[error("state error: {0}")]
    State(String),

    /// The excitation level could not be reached within the draw budget.
    #[error(
        "excitation error: lambda_min reached {best:.3e} after {draws} draws (target {target:.3e})"
    )]
    Excitation {
        best: f64,
        draws: usize,
        target: f64,
    },

    /// A simulated quantity left the representable range.
    #[error("divergence at t = {t}: {what}")]
    Divergence { t: f64, what: String },

    /// The operation needs information the model does not carry.
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
