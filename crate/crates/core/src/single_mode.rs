//! One oscillator probed by a 1D field.
//!
//! The interaction `H = sqrt(g) [alpha X x(t) + beta P p(t)]` with
//! `alpha = cos(theta)`, `beta = sin(theta)` is parameterized by the angle
//! `theta`; the transmitted light is split on a beamsplitter of
//! reflectivity `epsilon` and both outputs may be homodyne detected. The
//! probe strength is tied to the decay rate by the optical depth,
//! `g = d gamma`, and a thermal bath of occupation `n` acts on the
//! oscillator.
//!
//! Steady-state variances are expressed in shot-noise units (vacuum = 1).
//! The conditional (measurement-backed) variances satisfy
//!
//! ```text
//! dV/dt = -[gamma - g(1-2 eps) ab] V - g(1-eps) a^2 V^2 + gamma(2n+1) + g eps b^2
//! dU/dt = -[gamma + g(1-2 eps) ab] U - g eps b^2 U^2 + gamma(2n+1) + g(1-eps) a^2
//! ```
//!
//! and the unconditional ones drop the quadratic terms with
//! `dV/dt = -(gamma + g ab) V + g b^2 + gamma(2n+1)` (likewise for U with
//! `a^2` in place of `b^2`).

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{GmeError, Result};
use crate::sweep::SweepTable;
use crate::system::SystemSpec;

pub const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// Experiment knobs for the single-oscillator problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InteractionParams {
    /// Interaction angle, |theta| < pi/2.
    pub theta: f64,
    /// Beamsplitter reflectivity in [0, 1].
    pub epsilon: f64,
    /// Local-oscillator phase; the closed forms require 0.
    pub phi: f64,
    /// Optical depth, > 0.
    pub d: f64,
    /// Thermal occupation, >= 0.
    pub n: f64,
    /// Decay rate (Hz); only g/gamma = d matters for steady states.
    pub gamma: f64,
}

impl InteractionParams {
    pub fn new(theta: f64, epsilon: f64, d: f64, n: f64) -> Result<Self> {
        let p = Self { theta, epsilon, phi: 0.0, d, n, gamma: 1.0 };
        p.validate()?;
        Ok(p)
    }

    pub fn with_gamma(mut self, gamma: f64) -> Result<Self> {
        self.gamma = gamma;
        self.validate()?;
        Ok(self)
    }

    pub fn with_phi(mut self, phi: f64) -> Self {
        self.phi = phi;
        self
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = theta;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta.abs() < std::f64::consts::FRAC_PI_2) {
            return Err(GmeError::InvalidParams(format!(
                "theta = {} outside (-pi/2, pi/2)",
                self.theta
            )));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(GmeError::InvalidParams(format!(
                "epsilon = {} outside [0, 1]",
                self.epsilon
            )));
        }
        if !(self.d > 0.0 && self.d.is_finite()) {
            return Err(GmeError::InvalidParams(format!("optical depth d = {} must be > 0", self.d)));
        }
        if !(self.n >= 0.0 && self.n.is_finite()) {
            return Err(GmeError::InvalidParams(format!("occupation n = {} must be >= 0", self.n)));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(GmeError::InvalidParams(format!("gamma = {} must be > 0", self.gamma)));
        }
        if !self.phi.is_finite() {
            return Err(GmeError::InvalidParams("phi must be finite".into()));
        }
        Ok(())
    }

    /// Coupling rate `g = d gamma`.
    pub fn g(&self) -> f64 {
        self.d * self.gamma
    }

    pub fn alpha(&self) -> f64 {
        self.theta.cos()
    }

    pub fn beta(&self) -> f64 {
        self.theta.sin()
    }

    /// Effective unconditional damping rate `gamma + g alpha beta`; the
    /// dynamics has a steady state iff this is positive.
    pub fn damping_rate(&self) -> f64 {
        self.gamma + self.g() * self.alpha() * self.beta()
    }

    fn require_phi_zero(&self) -> Result<()> {
        if self.phi != 0.0 {
            return Err(GmeError::UnsupportedPhase(self.phi));
        }
        Ok(())
    }

    /// Engine spec for these knobs: probe channel(s) for `sqrt(g) s` split
    /// by `epsilon` with local-oscillator phase `phi` (monitored when
    /// `conditional`), plus thermal channels. Zero-amplitude channels are
    /// omitted.
    pub fn system_spec(&self, conditional: bool) -> SystemSpec {
        let g = self.g();
        let (al, be) = (self.alpha(), self.beta());
        let s = DVector::from_vec(vec![
            Complex::new(al / SQRT_2, 0.0),
            Complex::new(0.0, be / SQRT_2),
        ]);
        let phase = Complex::new(self.phi.cos(), self.phi.sin());
        let mut jumps = Vec::new();
        if self.epsilon < 1.0 {
            let amp = (g * (1.0 - self.epsilon)).sqrt();
            jumps.push(s.map(|z| z * phase * Complex::new(amp, 0.0)));
        }
        if self.epsilon > 0.0 {
            let amp = (g * self.epsilon).sqrt();
            jumps.push(s.map(|z| z * phase * Complex::new(0.0, amp)));
        }
        let monitored = if conditional { jumps.len() } else { 0 };
        let down = (self.gamma * (self.n + 1.0)).sqrt();
        jumps.push(DVector::from_vec(vec![
            Complex::new(down / SQRT_2, 0.0),
            Complex::new(0.0, down / SQRT_2),
        ]));
        if self.n > 0.0 {
            let up = (self.gamma * self.n).sqrt();
            jumps.push(DVector::from_vec(vec![
                Complex::new(up / SQRT_2, 0.0),
                Complex::new(0.0, -up / SQRT_2),
            ]));
        }
        SystemSpec { num_modes: 1, hamiltonian: DMatrix::zeros(2, 2), jumps, monitored }
    }
}

/// Steady-state variances in shot-noise units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyResult {
    pub v_squeezed: f64,
    pub u_antisqueezed: f64,
    pub c_cov: f64,
    pub stable: bool,
}

/// Coefficients (lambda, mu, nu) of `dv/dt = -lambda v - mu v^2 + nu` for
/// the squeezed (V) branch.
pub(crate) fn v_coefficients(p: &InteractionParams) -> (f64, f64, f64) {
    let g = p.g();
    let (al, be) = (p.alpha(), p.beta());
    (
        p.gamma - g * (1.0 - 2.0 * p.epsilon) * al * be,
        g * (1.0 - p.epsilon) * al * al,
        p.gamma * (2.0 * p.n + 1.0) + g * p.epsilon * be * be,
    )
}

/// Same for the antisqueezed (U) branch.
pub(crate) fn u_coefficients(p: &InteractionParams) -> (f64, f64, f64) {
    let g = p.g();
    let (al, be) = (p.alpha(), p.beta());
    (
        p.gamma + g * (1.0 - 2.0 * p.epsilon) * al * be,
        g * p.epsilon * be * be,
        p.gamma * (2.0 * p.n + 1.0) + g * (1.0 - p.epsilon) * al * al,
    )
}

/// Steady state of `dv/dt = -lambda v - mu v^2 + nu`. For `mu = 0` the
/// analytic limit `nu / lambda` applies and requires `lambda > 0`.
pub(crate) fn riccati_steady(lambda: f64, mu: f64, nu: f64) -> Option<f64> {
    if lambda > 0.0 {
        // Cancellation-free variant of (-l + sqrt(l^2 + 4 m n)) / (2 m);
        // also covers the mu -> 0 limit nu / lambda.
        Some(2.0 * nu / (lambda + (lambda * lambda + 4.0 * mu * nu).sqrt()))
    } else if mu > 0.0 {
        Some((-lambda + (lambda * lambda + 4.0 * mu * nu).sqrt()) / (2.0 * mu))
    } else {
        None
    }
}

/// Conditional squeezed variance; `None` only when `epsilon = 1` in the
/// dynamically unstable regime.
pub fn conditional_v(p: &InteractionParams) -> Option<f64> {
    let (l, m, n) = v_coefficients(p);
    riccati_steady(l, m, n)
}

/// Conditional antisqueezed variance; `None` when `epsilon = 0` at or below
/// the critical angle (the published `epsilon -> 0` limit equals the
/// unconditional U).
pub fn conditional_u(p: &InteractionParams) -> Option<f64> {
    let (l, m, n) = u_coefficients(p);
    riccati_steady(l, m, n)
}

/// Unconditional squeezed variance `(g b^2 + gamma(2n+1)) / (gamma + g a b)`.
pub fn unconditional_v(p: &InteractionParams) -> Option<f64> {
    let rate = p.damping_rate();
    (rate > 0.0).then(|| {
        (p.g() * p.beta().powi(2) + p.gamma * (2.0 * p.n + 1.0)) / rate
    })
}

/// Unconditional antisqueezed variance `(g a^2 + gamma(2n+1)) / (gamma + g a b)`.
pub fn unconditional_u(p: &InteractionParams) -> Option<f64> {
    let rate = p.damping_rate();
    (rate > 0.0).then(|| {
        (p.g() * p.alpha().powi(2) + p.gamma * (2.0 * p.n + 1.0)) / rate
    })
}

/// Right-hand sides of the conditional variance equations at (v, u).
pub fn conditional_rhs(v: f64, u: f64, p: &InteractionParams) -> Result<(f64, f64)> {
    p.validate()?;
    p.require_phi_zero()?;
    let (lv, mv, nv) = v_coefficients(p);
    let (lu, mu, nu) = u_coefficients(p);
    Ok((-lv * v - mv * v * v + nv, -lu * u - mu * u * u + nu))
}

/// Conditional steady state. Both branches use analytic limits at
/// `epsilon` in {0, 1}; the antisqueezed branch errors with
/// [`GmeError::AntisqueezingUnbounded`] when `epsilon = 0` at or below the
/// critical angle.
pub fn conditional_steady(p: &InteractionParams) -> Result<SteadyResult> {
    p.validate()?;
    p.require_phi_zero()?;
    let stable = p.damping_rate() > 0.0 || (p.epsilon > 0.0 && p.epsilon < 1.0);
    let v = conditional_v(p).ok_or(GmeError::UnstableRegime { rate: p.damping_rate() })?;
    let u = conditional_u(p).ok_or(GmeError::AntisqueezingUnbounded { v_squeezed: v })?;
    Ok(SteadyResult { v_squeezed: v, u_antisqueezed: u, c_cov: 0.0, stable })
}

/// Unconditional steady state; requires `gamma + g alpha beta > 0`.
pub fn unconditional_steady(p: &InteractionParams) -> Result<SteadyResult> {
    p.validate()?;
    p.require_phi_zero()?;
    let rate = p.damping_rate();
    let v = unconditional_v(p).ok_or(GmeError::UnstableRegime { rate })?;
    let u = unconditional_u(p).expect("same stability condition as v");
    Ok(SteadyResult { v_squeezed: v, u_antisqueezed: u, c_cov: 0.0, stable: true })
}

/// Tabulate `V_u`, `V_c`, `U_c` over a theta grid. Rows where the
/// unconditional dynamics is unstable are flagged rather than dropped;
/// unbounded entries are rendered as infinities.
pub fn variance_curves(theta_grid: &[f64], p: &InteractionParams) -> Result<SweepTable> {
    p.validate()?;
    p.require_phi_zero()?;
    let mut vu = Vec::with_capacity(theta_grid.len());
    let mut vc = Vec::with_capacity(theta_grid.len());
    let mut uc = Vec::with_capacity(theta_grid.len());
    let mut stable = Vec::with_capacity(theta_grid.len());
    for &theta in theta_grid {
        if theta.abs() >= std::f64::consts::FRAC_PI_2 {
            return Err(GmeError::InvalidParams(format!(
                "grid point theta = {theta} outside (-pi/2, pi/2)"
            )));
        }
        let q = p.with_theta(theta);
        vu.push(unconditional_v(&q).unwrap_or(f64::INFINITY));
        vc.push(conditional_v(&q).unwrap_or(f64::INFINITY));
        uc.push(conditional_u(&q).unwrap_or(f64::INFINITY));
        stable.push(q.damping_rate() > 0.0);
    }
    let mut table = SweepTable::new();
    table.push_floats("theta", theta_grid.to_vec());
    table.push_floats("V_u", vu);
    table.push_floats("V_c", vc);
    table.push_floats("U_c", uc);
    table.push_bools("stable", stable);
    table.validate()?;
    Ok(table)
}

/// Conditional variance after a QND pulse of extent `g tau`:
/// `V_c(tau) = 1 / (1 + g tau)`. In pulsed language `kappa^2 = d eta` with
/// `eta = gamma tau`, so `g tau = kappa^2`.
pub fn qnd_pulse_variance(g: f64, tau: f64) -> f64 {
    1.0 / (1.0 + g * tau)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn thermal_fixed_point_without_probe() {
        // g -> 0 limit via tiny d: dV at V = U = 2n+1 vanishes with d.
        let p = InteractionParams::new(0.3, 0.2, 1e-14, 1.5).unwrap();
        let (dv, du) = conditional_rhs(4.0, 4.0, &p).unwrap();
        assert_abs_diff_eq!(dv, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(du, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn qnd_rhs_is_pure_backaction() {
        // theta = 0, eps = 0: dV = -g V^2 - gamma(V - (2n+1)); with the
        // gamma terms subtracted the remainder is exactly -g V^2.
        let p = InteractionParams::new(0.0, 0.0, 5.0, 0.0).unwrap();
        for v in [0.3, 1.0, 2.5] {
            let (dv, _) = conditional_rhs(v, 1.0, &p).unwrap();
            let thermal = -p.gamma * v + p.gamma;
            assert_abs_diff_eq!(dv - thermal, -p.g() * v * v, epsilon = 1e-12);
        }
    }

    #[test]
    fn qnd_steady_state_is_riccati_root() {
        let p = InteractionParams::new(0.0, 0.0, 5.0, 0.0).unwrap();
        let v = (21.0_f64.sqrt() - 1.0) / 10.0;
        let (dv, _) = conditional_rhs(v, 1.0, &p).unwrap();
        assert_abs_diff_eq!(dv, 0.0, epsilon = 1e-12);
        let s = conditional_steady(&p).unwrap();
        assert_abs_diff_eq!(s.v_squeezed, 0.3582575695, epsilon = 1e-9);
        // Backaction heats the conjugate quadrature: U = 1 + d at epsilon 0.
        assert_abs_diff_eq!(s.u_antisqueezed, 6.0, epsilon = 1e-12);
    }

    #[test]
    fn qnd_asymptote_large_depth() {
        let p = InteractionParams::new(0.0, 0.0, 1e4, 0.0).unwrap();
        let s = conditional_steady(&p).unwrap();
        let asym = (1.0 / 1e4_f64).sqrt();
        assert!((s.v_squeezed - asym).abs() / asym < 0.01);
    }

    #[test]
    fn no_probe_limit_is_thermal() {
        let p = InteractionParams::new(0.2, 0.3, 1e-12, 1.0).unwrap();
        let s = conditional_steady(&p).unwrap();
        assert_abs_diff_eq!(s.v_squeezed, 3.0, epsilon = 1e-9);
        assert_abs_diff_eq!(s.u_antisqueezed, 3.0, epsilon = 1e-9);
    }

    #[test]
    fn unconditional_qnd_values() {
        let p = InteractionParams::new(0.0, 0.0, 5.0, 0.0).unwrap();
        let s = unconditional_steady(&p).unwrap();
        assert_abs_diff_eq!(s.v_squeezed, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s.u_antisqueezed, 6.0, epsilon = 1e-14);
    }

    #[test]
    fn unconditional_diverges_at_critical_angle() {
        let d: f64 = 5.0;
        let theta_c = -0.5 * (2.0 / d).asin();
        let near = InteractionParams::new(theta_c + 1e-9, 0.0, d, 0.0).unwrap();
        let s = unconditional_steady(&near).unwrap();
        assert!(s.v_squeezed > 1e6);
        let at = InteractionParams::new(theta_c, 0.0, d, 0.0).unwrap();
        assert!(matches!(
            unconditional_steady(&at).unwrap_err(),
            GmeError::UnstableRegime { .. }
        ));
    }

    #[test]
    fn antisqueezing_unbounded_below_critical() {
        let p = InteractionParams::new(-0.4, 0.0, 5.0, 0.0).unwrap();
        let err = conditional_steady(&p).unwrap_err();
        match err {
            GmeError::AntisqueezingUnbounded { v_squeezed } => {
                assert!(v_squeezed > 0.0 && v_squeezed < 1.0);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn epsilon_one_measures_conjugate_quadrature() {
        // Measuring only i s leaves V at its unconditional value.
        let p = InteractionParams::new(0.25, 1.0, 5.0, 0.5).unwrap();
        let s = conditional_steady(&p).unwrap();
        assert_abs_diff_eq!(
            s.v_squeezed,
            unconditional_v(&p).unwrap(),
            epsilon = 1e-12
        );
        assert!(s.u_antisqueezed < unconditional_u(&p).unwrap());
    }

    #[test]
    fn epsilon_zero_u_limit_is_unconditional() {
        let p = InteractionParams::new(0.2, 0.0, 5.0, 0.3).unwrap();
        let s = conditional_steady(&p).unwrap();
        assert_abs_diff_eq!(
            s.u_antisqueezed,
            unconditional_u(&p).unwrap(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn spec_channel_counts() {
        let p = InteractionParams::new(0.0, 0.0, 5.0, 0.0).unwrap();
        let spec = p.system_spec(true);
        assert_eq!(spec.jumps.len(), 2); // probe + one thermal channel
        assert_eq!(spec.monitored, 1);

        let p = InteractionParams::new(0.1, 0.4, 5.0, 0.7).unwrap();
        let spec = p.system_spec(true);
        assert_eq!(spec.jumps.len(), 4); // two probes + two thermal
        assert_eq!(spec.monitored, 2);
        let spec = p.system_spec(false);
        assert_eq!(spec.monitored, 0);

        let p = InteractionParams::new(0.1, 1.0, 5.0, 0.0).unwrap();
        let spec = p.system_spec(true);
        assert_eq!(spec.jumps.len(), 2); // conjugate-quadrature probe + thermal
        assert_eq!(spec.monitored, 1);
        // The single monitored channel measures i s: jump vector i*(al, i be)/sqrt(2) * sqrt(g).
        let j = &spec.jumps[0];
        assert_abs_diff_eq!(j[0].re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(j[1].im, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn phi_rejected_in_closed_forms() {
        let p = InteractionParams::new(0.0, 0.0, 5.0, 0.0).unwrap().with_phi(0.3);
        assert!(matches!(conditional_steady(&p), Err(GmeError::UnsupportedPhase(_))));
        assert!(matches!(unconditional_steady(&p), Err(GmeError::UnsupportedPhase(_))));
        assert!(matches!(conditional_rhs(1.0, 1.0, &p), Err(GmeError::UnsupportedPhase(_))));
    }

    #[test]
    fn curves_match_steady_ops_at_theta_zero() {
        let p = InteractionParams::new(0.0, 0.05, 5.0, 0.0).unwrap();
        let t = variance_curves(&[0.0], &p).unwrap();
        let c = conditional_steady(&p).unwrap();
        let u = unconditional_steady(&p).unwrap();
        assert_abs_diff_eq!(t.floats("V_c").unwrap()[0], c.v_squeezed, epsilon = 1e-14);
        assert_abs_diff_eq!(t.floats("U_c").unwrap()[0], c.u_antisqueezed, epsilon = 1e-14);
        assert_abs_diff_eq!(t.floats("V_u").unwrap()[0], u.v_squeezed, epsilon = 1e-14);
        assert!(t.bools("stable").unwrap()[0]);
    }

    #[test]
    fn curves_flag_unstable_rows_with_finite_conditional_v() {
        let p = InteractionParams::new(0.0, 0.0, 5.0, 0.0).unwrap();
        let theta_c = -0.5 * (2.0 / 5.0_f64).asin();
        let t = variance_curves(&[theta_c - 0.05, 0.0], &p).unwrap();
        assert!(!t.bools("stable").unwrap()[0]);
        assert!(t.bools("stable").unwrap()[1]);
        assert!(t.floats("V_c").unwrap()[0].is_finite());
        assert!(t.floats("U_c").unwrap()[0].is_infinite());
    }

    #[test]
    fn qnd_pulse_values() {
        assert_eq!(qnd_pulse_variance(1.0, 0.0), 1.0);
        assert_abs_diff_eq!(qnd_pulse_variance(2.0, 0.5), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(qnd_pulse_variance(1.0, 99.0), 0.01, epsilon = 1e-15);
    }

    #[test]
    fn uncertainty_product_of_steady_results() {
        for &(theta, eps, d, n) in
            &[(0.0, 0.0, 5.0, 0.0), (0.3, 0.05, 50.0, 1.0), (-0.1, 0.5, 2.0, 0.0)]
        {
            let p = InteractionParams::new(theta, eps, d, n).unwrap();
            let s = conditional_steady(&p).unwrap();
            assert!(s.v_squeezed * s.u_antisqueezed >= 1.0 - 1e-9);
        }
    }
}
