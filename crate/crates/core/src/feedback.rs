//! Hamiltonian feedback proportional to the homodyne photocurrents.
//!
//! Feeding the current of the `sqrt(g(1-eps))` detector back through
//! `F_1 = xi_1 P` and the current of the `sqrt(g eps)` detector through
//! `F_2 = xi_2 X` turns the conditional dynamics into an unconditional
//! master equation with modified jump operators `sqrt(g(1-eps)) s - i F_1`,
//! `sqrt(g eps) s - F_2` and the feedback Hamiltonian
//! `(1/2)[{sqrt(g(1-eps)) F_1 + i sqrt(g eps) F_2} s + h.c.]`. The
//! variances then obey linear (Lyapunov) equations whose steady states
//! are rational in the gains; minimizing each over its gain reproduces the
//! conditional variances exactly.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{GmeError, Result};
use crate::single_mode::{InteractionParams, SteadyResult, SQRT_2};
use crate::system::SystemSpec;

/// Feedback gains on `F_1 = xi_1 P` and `F_2 = xi_2 X`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FeedbackGains {
    pub xi1: f64,
    pub xi2: f64,
}

impl FeedbackGains {
    pub fn new(xi1: f64, xi2: f64) -> Result<Self> {
        if !(xi1.is_finite() && xi2.is_finite()) {
            return Err(GmeError::InvalidParams("feedback gains must be finite".into()));
        }
        Ok(Self { xi1, xi2 })
    }
}

struct BranchCoefficients {
    /// Numerator `2 xi^2 + b xi + c`, denominator `e - f xi`.
    b: f64,
    c: f64,
    e: f64,
    f: f64,
}

fn v_branch(p: &InteractionParams) -> BranchCoefficients {
    let g = p.g();
    let (al, be) = (p.alpha(), p.beta());
    let root = (2.0 * g * (1.0 - p.epsilon)).sqrt();
    BranchCoefficients {
        b: -2.0 * be * root,
        c: p.gamma * (2.0 * p.n + 1.0) + g * be * be,
        e: p.damping_rate(),
        f: 2.0 * al * root,
    }
}

fn u_branch(p: &InteractionParams) -> BranchCoefficients {
    let g = p.g();
    let (al, be) = (p.alpha(), p.beta());
    let root = (2.0 * g * p.epsilon).sqrt();
    BranchCoefficients {
        b: -2.0 * al * root,
        c: p.gamma * (2.0 * p.n + 1.0) + g * al * al,
        e: p.damping_rate(),
        f: 2.0 * be * root,
    }
}

/// Steady state of the feedback master equation:
///
/// ```text
/// V = [gamma(2n+1) + g b^2 - 2 b xi_1 sqrt(2g(1-e)) + 2 xi_1^2]
///     / [gamma + g a b - 2 a xi_1 sqrt(2g(1-e))]
/// ```
///
/// and the analogous expression for U with `(a, b, eps) -> (b, a, 1-eps)`
/// exchanged roles. Errors when an effective damping rate is nonpositive.
pub fn feedback_steady(p: &InteractionParams, gains: &FeedbackGains) -> Result<SteadyResult> {
    p.validate()?;
    if p.phi != 0.0 {
        return Err(GmeError::UnsupportedPhase(p.phi));
    }
    let bv = v_branch(p);
    let bu = u_branch(p);
    let rate_v = bv.e - bv.f * gains.xi1;
    let rate_u = bu.e - bu.f * gains.xi2;
    if rate_v <= 0.0 {
        return Err(GmeError::FeedbackUnstable { rate: rate_v });
    }
    if rate_u <= 0.0 {
        return Err(GmeError::FeedbackUnstable { rate: rate_u });
    }
    let v = (2.0 * gains.xi1 * gains.xi1 + bv.b * gains.xi1 + bv.c) / rate_v;
    let u = (2.0 * gains.xi2 * gains.xi2 + bu.b * gains.xi2 + bu.c) / rate_u;
    Ok(SteadyResult { v_squeezed: v, u_antisqueezed: u, c_cov: 0.0, stable: true })
}

/// Minimizer of `(2 xi^2 + b xi + c)/(e - f xi)` over the stable half-line
/// `e - f xi > 0`. The stationarity condition is the quadratic
/// `2 f xi^2 - 4 e xi - (b e + c f) = 0`; the root with `e - f xi =
/// sqrt(e^2 + f(b e + c f)/2) > 0` is the constrained minimum.
fn optimal_branch_gain(br: &BranchCoefficients, label: &str) -> Result<f64> {
    if br.f == 0.0 {
        if br.e <= 0.0 {
            return Err(GmeError::NotStabilizable(format!(
                "{label}: no feedback acts on this quadrature and the bare rate {:.3e} <= 0",
                br.e
            )));
        }
        return Ok(-br.b / 4.0);
    }
    let disc = br.e * br.e + br.f * (br.b * br.e + br.c * br.f) / 2.0;
    if disc <= 0.0 {
        return Err(GmeError::NotStabilizable(format!(
            "{label}: stationarity discriminant {disc:.3e} <= 0"
        )));
    }
    Ok((br.e - disc.sqrt()) / br.f)
}

/// Gains minimizing V over xi_1 and U over xi_2. The resulting steady
/// state coincides with the conditional variances; the coincidence is a
/// theorem of the algebra (the stationarity condition reduces to the
/// conditional Riccati equation) and is asserted by the test suite rather
/// than assumed here.
pub fn optimal_gains(p: &InteractionParams) -> Result<FeedbackGains> {
    p.validate()?;
    if p.phi != 0.0 {
        return Err(GmeError::UnsupportedPhase(p.phi));
    }
    let xi1 = optimal_branch_gain(&v_branch(p), "squeezed branch")?;
    let xi2 = optimal_branch_gain(&u_branch(p), "antisqueezed branch")?;
    Ok(FeedbackGains { xi1, xi2 })
}

/// Engine spec for the feedback master equation: modified unmonitored jump
/// operators plus the feedback Hamiltonian (an XP + PX squeezing term) and
/// the thermal channels. Its unconditional steady state matches
/// [`feedback_steady`].
pub fn feedback_spec(p: &InteractionParams, gains: &FeedbackGains) -> Result<SystemSpec> {
    p.validate()?;
    if p.phi != 0.0 {
        return Err(GmeError::UnsupportedPhase(p.phi));
    }
    let g = p.g();
    let (al, be) = (p.alpha(), p.beta());
    let g1 = (g * (1.0 - p.epsilon)).sqrt();
    let g2 = (g * p.epsilon).sqrt();

    // H_fb = (1/2)(K + K^\dagger) with K = {sqrt(g1) F1 + i sqrt(g2) F2} s
    // collapses to a pure (XP + PX) term.
    let m12 = (g1 * gains.xi1 * al - g2 * gains.xi2 * be) / SQRT_2;
    let mut m = DMatrix::zeros(2, 2);
    m[(0, 1)] = m12;
    m[(1, 0)] = m12;

    let mut jumps = Vec::new();
    // sqrt(g(1-eps)) s - i xi_1 P
    if g1 != 0.0 || gains.xi1 != 0.0 {
        jumps.push(DVector::from_vec(vec![
            Complex::new(g1 * al / SQRT_2, 0.0),
            Complex::new(0.0, g1 * be / SQRT_2 - gains.xi1),
        ]));
    }
    // sqrt(g eps) s - xi_2 X
    if g2 != 0.0 || gains.xi2 != 0.0 {
        jumps.push(DVector::from_vec(vec![
            Complex::new(g2 * al / SQRT_2 - gains.xi2, 0.0),
            Complex::new(0.0, g2 * be / SQRT_2),
        ]));
    }
    let down = (p.gamma * (p.n + 1.0)).sqrt();
    jumps.push(DVector::from_vec(vec![
        Complex::new(down / SQRT_2, 0.0),
        Complex::new(0.0, down / SQRT_2),
    ]));
    if p.n > 0.0 {
        let up = (p.gamma * p.n).sqrt();
        jumps.push(DVector::from_vec(vec![
            Complex::new(up / SQRT_2, 0.0),
            Complex::new(0.0, -up / SQRT_2),
        ]));
    }
    SystemSpec::new(1, m, jumps, 0)
}
