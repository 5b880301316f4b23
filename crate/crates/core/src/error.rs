//! Shared error type for the whole crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Parameters outside their admissible range (e.g. sigma*d outside (1, 2)).
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// A stated precondition of an operation was violated.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// The ODE integrator could not continue.
    #[error("integration failed at rho = {rho}: {reason}")]
    Integration { rho: f64, reason: String },

    /// Least-squares or envelope fit failed.
    #[error("fit failed: {0}")]
    Fit(String),

    /// Argument outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Requested radius lies beyond the stored profile; the oscillatory far
    /// field is never extrapolated.
    #[error("rho = {rho} beyond stored profile (rho_max = {rho_max}); extrapolation refused")]
    Extrapolation { rho: f64, rho_max: f64 },

    /// The profile does not reach far enough for the requested grid.
    #[error("profile covers rho <= {available} but rho = {required} is required")]
    Coverage { required: f64, available: f64 },

    /// The PDE solution left the representable range. Expected near the
    /// collapse time; carries the time and amplitude at detection.
    #[error("blowup detected at t = {t}: max|psi| = {max_abs}")]
    BlowupDetected { t: f64, max_abs: f64 },

    /// L^p norm requested at an exponent where it diverges.
    #[error("L^{p} norm diverges: p <= p* = {p_star}")]
    NormDivergence { p: f64, p_star: f64 },

    /// Banded linear solve hit a vanishing pivot.
    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    /// Bad solver or tool configuration.
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
