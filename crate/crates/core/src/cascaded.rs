//! Two oscillators coupled sequentially to the same 1D field.
//!
//! The cascaded master equation carries a collective jump `sqrt(g)(s1+s2)`
//! and a field-mediated interaction `-i(g/2)(s2^+ s1 - s1^+ s2)` that
//! splits into two-mode-squeezing and beam-splitter parts with weights
//! `(a2 b1 -/+ a1 b2)/2`. With counterrotating local Hamiltonians
//! `omega (a1^+ a1 - a2^+ a2)` and symmetric couplings, a rotating-wave
//! approximation factorizes the dynamics over the EPR modes
//! `X+- = (X1 +- X2)/sqrt(2)`, `P+- = (P1 +- P2)/sqrt(2)`: each EPR mode
//! obeys the single-oscillator master equation at the same optical depth
//! (the `g/2`-rate collective jumps act through operators that are
//! sqrt(2) larger than the single-mode convention, so the rates match).

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{GmeError, Result};
use crate::single_mode::SQRT_2;
use crate::system::SystemSpec;

const SYMMETRY_TOL: f64 = 1e-12;

/// Parameters of the cascaded pair. The per-mode coupling shares a single
/// strength `g` for both oscillators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CascadedParams {
    pub alpha1: f64,
    pub beta1: f64,
    pub alpha2: f64,
    pub beta2: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub n1: f64,
    pub n2: f64,
    /// Coupling rate (Hz), equal for both modes.
    pub g: f64,
    /// Counterrotation frequency (Hz).
    pub omega: f64,
    pub epsilon: f64,
    pub phi: f64,
    pub rwa: bool,
}

impl CascadedParams {
    /// Fully symmetric configuration with `alpha = cos(theta)`,
    /// `beta = sin(theta)`.
    pub fn symmetric(
        theta: f64,
        epsilon: f64,
        g: f64,
        gamma: f64,
        n: f64,
        omega: f64,
    ) -> Result<Self> {
        let p = Self {
            alpha1: theta.cos(),
            beta1: theta.sin(),
            alpha2: theta.cos(),
            beta2: theta.sin(),
            gamma1: gamma,
            gamma2: gamma,
            n1: n,
            n2: n,
            g,
            omega,
            epsilon,
            phi: 0.0,
            rwa: false,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_rwa(mut self, rwa: bool) -> Self {
        self.rwa = rwa;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.g > 0.0 && self.g.is_finite()) {
            return Err(GmeError::InvalidParams(format!("g = {} must be > 0", self.g)));
        }
        if !(self.gamma1 > 0.0 && self.gamma2 > 0.0) {
            return Err(GmeError::InvalidParams("decay rates must be > 0".into()));
        }
        if !(self.n1 >= 0.0 && self.n2 >= 0.0) {
            return Err(GmeError::InvalidParams("occupations must be >= 0".into()));
        }
        if !(self.omega >= 0.0) {
            return Err(GmeError::InvalidParams("omega must be >= 0".into()));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(GmeError::InvalidParams(format!(
                "epsilon = {} outside [0, 1]",
                self.epsilon
            )));
        }
        Ok(())
    }

    /// The rotating-wave reduction needs `g, gamma_i n_i << omega`; this
    /// reports whether the conventional `rate/omega > 0.1` warning
    /// threshold is exceeded.
    pub fn rwa_questionable(&self) -> bool {
        let rate = self.g.max(self.gamma1 * self.n1).max(self.gamma2 * self.n2);
        self.omega <= 0.0 || rate / self.omega > 0.1
    }

    pub fn symmetry_defect(&self) -> f64 {
        (self.alpha1 - self.alpha2)
            .abs()
            .max((self.beta1 - self.beta2).abs())
            .max((self.gamma1 - self.gamma2).abs())
            .max((self.n1 - self.n2).abs())
    }
}

/// Weights of the field-mediated interaction
/// `-i(g/2)[ c_tms (a1 a2 - a1^+ a2^+)/1 + c_bs (a1 a2^+ - a1^+ a2) ]`:
/// returns `(c_tms, c_bs) = ((g/2)(a2 b1 - a1 b2)/2, (g/2)(a2 b1 + a1 b2)/2)`.
pub fn mediated_coefficients(p: &CascadedParams) -> (f64, f64) {
    let half_g = p.g / 2.0;
    (
        half_g * (p.alpha2 * p.beta1 - p.alpha1 * p.beta2) / 2.0,
        half_g * (p.alpha2 * p.beta1 + p.alpha1 * p.beta2) / 2.0,
    )
}

fn thermal_channels(jumps: &mut Vec<DVector<Complex<f64>>>, dim: usize, offset: usize, gamma: f64, n: f64) {
    let mut down = DVector::zeros(dim);
    let amp = (gamma * (n + 1.0)).sqrt();
    down[offset] = Complex::new(amp / SQRT_2, 0.0);
    down[offset + 1] = Complex::new(0.0, amp / SQRT_2);
    jumps.push(down);
    if n > 0.0 {
        let mut up = DVector::zeros(dim);
        let amp = (gamma * n).sqrt();
        up[offset] = Complex::new(amp / SQRT_2, 0.0);
        up[offset + 1] = Complex::new(0.0, -amp / SQRT_2);
        jumps.push(up);
    }
}

/// Full (lab-frame, no RWA) cascaded spec over `(X1, P1, X2, P2)`:
/// counterrotating local Hamiltonians, the mediated interaction, one
/// collective jump `sqrt(g)(s1 + s2)` split by `epsilon` (monitored when
/// `conditional`), and four thermal channels.
pub fn make_cascaded_spec(p: &CascadedParams, conditional: bool) -> Result<SystemSpec> {
    p.validate()?;
    let mut m = DMatrix::zeros(4, 4);
    m[(0, 0)] = p.omega;
    m[(1, 1)] = p.omega;
    m[(2, 2)] = -p.omega;
    m[(3, 3)] = -p.omega;
    // Mediated interaction (g/2)[a2 b1 P1 X2 - a1 b2 X1 P2].
    m[(1, 2)] = p.g / 2.0 * p.alpha2 * p.beta1;
    m[(2, 1)] = m[(1, 2)];
    m[(0, 3)] = -p.g / 2.0 * p.alpha1 * p.beta2;
    m[(3, 0)] = m[(0, 3)];

    let collective = DVector::from_vec(vec![
        Complex::new(p.alpha1 / SQRT_2, 0.0),
        Complex::new(0.0, p.beta1 / SQRT_2),
        Complex::new(p.alpha2 / SQRT_2, 0.0),
        Complex::new(0.0, p.beta2 / SQRT_2),
    ]);
    let phase = Complex::new(p.phi.cos(), p.phi.sin());
    let mut jumps = Vec::new();
    if p.epsilon < 1.0 {
        let amp = (p.g * (1.0 - p.epsilon)).sqrt();
        jumps.push(collective.map(|z| z * phase * Complex::new(amp, 0.0)));
    }
    if p.epsilon > 0.0 {
        let amp = (p.g * p.epsilon).sqrt();
        jumps.push(collective.map(|z| z * phase * Complex::new(0.0, amp)));
    }
    let monitored = if conditional { jumps.len() } else { 0 };
    thermal_channels(&mut jumps, 4, 0, p.gamma1, p.n1);
    thermal_channels(&mut jumps, 4, 2, p.gamma2, p.n2);
    SystemSpec::new(2, m, jumps, monitored)
}

/// Single-mode specs for the two EPR modes under the rotating-wave
/// approximation, valid for fully symmetric parameters.
///
/// The `+` mode carries `g/2`-rate jumps through `alpha X+ + i beta P+`
/// and the `-` mode through `alpha P- - i beta X-` (quadrature roles
/// exchanged), each split by `epsilon` into the sideband detector pair,
/// plus thermal channels on `a+-`.
pub fn make_rwa_epr_specs(p: &CascadedParams, conditional: bool) -> Result<(SystemSpec, SystemSpec)> {
    p.validate()?;
    let defect = p.symmetry_defect();
    if defect > SYMMETRY_TOL {
        return Err(GmeError::AsymmetricParams(format!(
            "parameter mismatch {defect:.3e} exceeds {SYMMETRY_TOL:.0e}"
        )));
    }
    let (al, be) = (p.alpha1, p.beta1);
    let phase = Complex::new(p.phi.cos(), p.phi.sin());
    // alpha X+ + i beta P+ over (X+, P+)
    let plus_op = DVector::from_vec(vec![Complex::new(al, 0.0), Complex::new(0.0, be)]);
    // alpha P- - i beta X- over (X-, P-)
    let minus_op = DVector::from_vec(vec![Complex::new(0.0, -be), Complex::new(al, 0.0)]);

    let build = |op: &DVector<Complex<f64>>| -> Result<SystemSpec> {
        let mut jumps = Vec::new();
        if p.epsilon < 1.0 {
            let amp = (p.g * (1.0 - p.epsilon) / 2.0).sqrt();
            jumps.push(op.map(|z| z * phase * Complex::new(amp, 0.0)));
        }
        if p.epsilon > 0.0 {
            let amp = (p.g * p.epsilon / 2.0).sqrt();
            jumps.push(op.map(|z| z * phase * Complex::new(0.0, amp)));
        }
        let monitored = if conditional { jumps.len() } else { 0 };
        thermal_channels(&mut jumps, 2, 0, p.gamma1, p.n1);
        SystemSpec::new(1, DMatrix::zeros(2, 2), jumps, monitored)
    };
    Ok((build(&plus_op)?, build(&minus_op)?))
}

/// Joint four-quadrature assembly of the two RWA EPR specs, ordered
/// `(X+, P+, X-, P-)`; by construction the two blocks never couple.
pub fn make_rwa_joint_spec(p: &CascadedParams, conditional: bool) -> Result<SystemSpec> {
    let (plus, minus) = make_rwa_epr_specs(p, conditional)?;
    let dim = 4;
    let mut jumps = Vec::new();
    let embed = |j: &DVector<Complex<f64>>, off: usize| {
        let mut v = DVector::zeros(dim);
        v[off] = j[0];
        v[off + 1] = j[1];
        v
    };
    // Keep all monitored channels first.
    for j in plus.jumps.iter().take(plus.monitored) {
        jumps.push(embed(j, 0));
    }
    for j in minus.jumps.iter().take(minus.monitored) {
        jumps.push(embed(j, 2));
    }
    let monitored = jumps.len();
    for j in plus.jumps.iter().skip(plus.monitored) {
        jumps.push(embed(j, 0));
    }
    for j in minus.jumps.iter().skip(minus.monitored) {
        jumps.push(embed(j, 2));
    }
    SystemSpec::new(2, DMatrix::zeros(dim, dim), jumps, monitored)
}

/// Orthogonal symplectic change of basis from `(X1, P1, X2, P2)` to
/// `(X+, P+, X-, P-)`.
pub fn epr_basis_matrix() -> DMatrix<f64> {
    let r = 1.0 / SQRT_2;
    DMatrix::from_row_slice(4, 4, &[
        r, 0.0, r, 0.0, //
        0.0, r, 0.0, r, //
        r, 0.0, -r, 0.0, //
        0.0, r, 0.0, -r,
    ])
}

/// Transform a joint 4x4 covariance to EPR coordinates and return the
/// `(plus, minus, cross)` blocks.
pub fn epr_transform(joint: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>, DMatrix<f64>)> {
    if joint.nrows() != 4 || joint.ncols() != 4 {
        return Err(GmeError::DimensionMismatch(format!(
            "joint covariance is {}x{}, expected 4x4",
            joint.nrows(),
            joint.ncols()
        )));
    }
    let asym = (joint - joint.transpose()).amax();
    if asym > 1e-10 * joint.amax().max(1.0) {
        return Err(GmeError::InvalidParams(format!("joint covariance asymmetry {asym:.3e}")));
    }
    let t = epr_basis_matrix();
    let g = &t * joint * t.transpose();
    let plus = g.view((0, 0), (2, 2)).into_owned();
    let minus = g.view((2, 2), (2, 2)).into_owned();
    let cross = g.view((0, 2), (2, 2)).into_owned();
    Ok((plus, minus, cross))
}

/// EPR sum `Var(X+) + Var(P-)` in shot-noise units and the entanglement
/// verdict `epr_sum < 2` (boundary exclusive).
pub fn entanglement_criterion(plus: &DMatrix<f64>, minus: &DMatrix<f64>) -> (f64, bool) {
    let epr_sum = plus[(0, 0)] + minus[(1, 1)];
    (epr_sum, epr_sum < 2.0)
}
