//! Crate-wide error type.

use thiserror::Error;

/// Errors shared by the ODE, PDE, and analysis layers.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument left the admissible domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Wave speed equal to the particle speed; the slow/fast decomposition
    /// degenerates at |c| = 1.
    #[error("singular wave speed c = {0}: |c| must differ from 1")]
    SingularSpeed(f64),

    /// Wave speed in {-1, 0, 1}, excluded from equilibrium classification.
    #[error("degenerate wave speed c = {0}: c must avoid -1, 0, 1")]
    DegenerateSpeed(f64),

    /// Nonpositive diffusion where the diffusive traveling-wave system is
    /// evaluated; a appears in denominators.
    #[error("diffusion a = {0} must be positive (use the hyperbolic system for a = 0)")]
    SingularPerturbation(f64),

    /// Invalid or inconsistent configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// Adaptive step control drove the step size below the minimum.
    #[error("integration stiffness at t = {t}: step size {h} underflowed")]
    Stiffness { t: f64, h: f64 },

    /// Not enough samples to carry out a fit or measurement.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// The PDE solver detected an invalid state (lost positivity, front at
    /// the boundary, non-finite values).
    #[error("solver instability: {0}")]
    Instability(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
