//! Gaussian moment evolution for bosonic modes coupled to a 1D light field.
//!
//! The crate is organized around a generic engine ([`engine`], [`system`])
//! that evolves the first and second moments of Gaussian states under
//! quadratic Hamiltonians, linear jump operators, and continuous homodyne
//! monitoring of a subset of the decay channels. On top of it sit
//!
//! * [`single_mode`] — one oscillator probed by light: closed-form
//!   conditional/unconditional steady-state variances and the
//!   optical-depth calibration `g = d γ`,
//! * [`cascaded`] — two oscillators coupled sequentially to the same
//!   field, their EPR-mode reduction and the entanglement criterion,
//! * [`optimizer`] — optimal interaction angles, stability boundaries,
//!   critical occupations and scaling laws,
//! * [`feedback`] — photocurrent feedback that reproduces the conditional
//!   variances in an unconditional steady state,
//! * [`sweep`] — tabular results for parameter sweeps.
//!
//! All quantities are expressed in shot-noise units: simultaneously the
//! variance of a vacuum quadrature and the diagonal of the engine's
//! covariance matrix are 1.

pub mod cascaded;
pub mod engine;
pub mod error;
pub mod feedback;
pub mod optimizer;
pub mod single_mode;
pub mod sweep;
pub mod system;

pub use error::{GmeError, Result};
pub use system::{build_matrices, DriftDiffusion, GaussianState, SystemSpec};
