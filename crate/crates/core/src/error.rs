//! Error type shared by all modules.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, GmeError>;

#[derive(Debug, Clone, Error)]
pub enum GmeError {
    #[error("hamiltonian matrix is not symmetric (relative asymmetry {asymmetry:.3e})")]
    NonHermitianInput { asymmetry: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("covariance diverged at t = {time:.6e} (max entry {entry:.3e} exceeds {threshold:.1e})")]
    DivergenceDetected { time: f64, entry: f64, threshold: f64 },

    #[error("no steady state within t = {max_time:.3e} (residual {residual:.3e})")]
    NoConvergence { max_time: f64, residual: f64 },

    #[error(
        "antisqueezed variance is unbounded (epsilon = 0 at or below the critical angle); \
         squeezed variance = {v_squeezed}"
    )]
    AntisqueezingUnbounded { v_squeezed: f64 },

    #[error("unconditional dynamics has no steady state (effective damping rate {rate:.3e} <= 0)")]
    UnstableRegime { rate: f64 },

    #[error("feedback dynamics unstable (effective damping rate {rate:.3e} <= 0)")]
    FeedbackUnstable { rate: f64 },

    #[error("no feedback gain stabilizes this configuration: {0}")]
    NotStabilizable(String),

    #[error("EPR reduction requires symmetric parameters: {0}")]
    AsymmetricParams(String),

    #[error("closed forms require phi = 0 (got phi = {0})")]
    UnsupportedPhase(f64),
}
