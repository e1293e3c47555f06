//! System specifications and the drift/diffusion data derived from them.
//!
//! A [`SystemSpec`] holds the quadratic Hamiltonian `H = (1/2) r^T M r` over
//! the quadrature vector `r = (X_1, P_1, ..., X_a, P_a)`, a list of linear
//! jump operators `J_i = r^T j_i` given by complex vectors `j_i`, and the
//! number `c` of monitored channels (the first `c` jumps are homodyne
//! detected). [`build_matrices`] turns this into the real matrices that
//! drive the moment equations:
//!
//! ```text
//! Q = sigma (M + R)      R = -(i/2) sum_i (j_i* j_i^T - h.c.)
//! P = 2 sigma S sigma^T  S = (1/2)  sum_i (j_i* j_i^T + h.c.)
//! A_k = (j_k + j_k*)/2   B_k = -i (j_k - j_k*)/2      (k <= c)
//! ```

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{GmeError, Result};

/// Relative tolerance for the Hamiltonian symmetry check.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Tolerance on the imaginary residue of the derived real matrices.
pub const IMAG_RESIDUE_TOL: f64 = 1e-12;
/// Physicality tolerance: min eig(Gamma + i sigma) >= -PHYSICALITY_TOL.
pub const PHYSICALITY_TOL: f64 = 1e-9;

/// A multimode Gaussian open system.
#[derive(Debug, Clone)]
pub struct SystemSpec {
    /// Number of bosonic modes `a`.
    pub num_modes: usize,
    /// Real symmetric `2a x 2a` Hamiltonian matrix (Hz).
    pub hamiltonian: DMatrix<f64>,
    /// Complex `2a`-vectors defining the jump operators (Hz^(1/2)).
    pub jumps: Vec<DVector<Complex<f64>>>,
    /// The first `monitored` jump channels are homodyne detected.
    pub monitored: usize,
}

impl SystemSpec {
    pub fn new(
        num_modes: usize,
        hamiltonian: DMatrix<f64>,
        jumps: Vec<DVector<Complex<f64>>>,
        monitored: usize,
    ) -> Result<Self> {
        let spec = Self { num_modes, hamiltonian, jumps, monitored };
        spec.validate()?;
        Ok(spec)
    }

    pub fn dim(&self) -> usize {
        2 * self.num_modes
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_modes == 0 {
            return Err(GmeError::InvalidParams("num_modes must be positive".into()));
        }
        let dim = self.dim();
        if self.hamiltonian.nrows() != dim || self.hamiltonian.ncols() != dim {
            return Err(GmeError::DimensionMismatch(format!(
                "hamiltonian is {}x{}, expected {dim}x{dim}",
                self.hamiltonian.nrows(),
                self.hamiltonian.ncols(),
            )));
        }
        let scale = self.hamiltonian.amax().max(1.0);
        let asym = (&self.hamiltonian - self.hamiltonian.transpose()).amax() / scale;
        if asym > SYMMETRY_TOL {
            return Err(GmeError::NonHermitianInput { asymmetry: asym });
        }
        for (i, j) in self.jumps.iter().enumerate() {
            if j.len() != dim {
                return Err(GmeError::DimensionMismatch(format!(
                    "jump vector {i} has length {}, expected {dim}",
                    j.len()
                )));
            }
        }
        if self.monitored > self.jumps.len() {
            return Err(GmeError::InvalidParams(format!(
                "monitored count {} exceeds number of jump channels {}",
                self.monitored,
                self.jumps.len()
            )));
        }
        Ok(())
    }

    /// Largest rate (Hz) appearing in the spec; sets the default time step.
    pub fn max_rate(&self) -> f64 {
        let h = self.hamiltonian.amax();
        let j = self
            .jumps
            .iter()
            .map(|j| j.iter().map(|z| z.norm_sqr()).sum::<f64>())
            .fold(0.0, f64::max);
        h.max(j).max(1e-300)
    }
}

/// Displacement vector and symmetric covariance matrix of a Gaussian state.
///
/// `covariance[(i, j)] = <r_i r_j + r_j r_i> - 2 <r_i><r_j>`, so the vacuum
/// covariance is the identity.
#[derive(Debug, Clone)]
pub struct GaussianState {
    pub displacement: DVector<f64>,
    pub covariance: DMatrix<f64>,
}

impl GaussianState {
    pub fn new(displacement: DVector<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        let state = Self { displacement, covariance };
        state.validate()?;
        Ok(state)
    }

    /// Vacuum state of `num_modes` modes.
    pub fn vacuum(num_modes: usize) -> Self {
        let dim = 2 * num_modes;
        Self { displacement: DVector::zeros(dim), covariance: DMatrix::identity(dim, dim) }
    }

    pub fn validate(&self) -> Result<()> {
        let dim = self.displacement.len();
        if dim == 0 || dim % 2 != 0 {
            return Err(GmeError::DimensionMismatch(format!(
                "displacement length {dim} is not a positive even number"
            )));
        }
        if self.covariance.nrows() != dim || self.covariance.ncols() != dim {
            return Err(GmeError::DimensionMismatch(format!(
                "covariance is {}x{}, expected {dim}x{dim}",
                self.covariance.nrows(),
                self.covariance.ncols()
            )));
        }
        let asym = (&self.covariance - self.covariance.transpose()).amax();
        if asym > 1e-10 * self.covariance.amax().max(1.0) {
            return Err(GmeError::InvalidParams(format!(
                "covariance asymmetry {asym:.3e} exceeds tolerance"
            )));
        }
        let defect = physicality_defect(&self.covariance);
        if defect > PHYSICALITY_TOL {
            return Err(GmeError::InvalidParams(format!(
                "covariance violates Gamma + i sigma >= 0 by {defect:.3e}"
            )));
        }
        Ok(())
    }
}

/// Real matrices driving the moment equations, with the per-channel
/// measurement vectors kept separate so multi-channel monitoring sums
/// rank-one updates.
#[derive(Debug, Clone)]
pub struct DriftDiffusion {
    pub drift: DMatrix<f64>,
    pub diffusion: DMatrix<f64>,
    pub meas_a: Vec<DVector<f64>>,
    pub meas_b: Vec<DVector<f64>>,
    pub symplectic: DMatrix<f64>,
}

/// The symplectic form for `a` modes: block-diagonal [[0, 1], [-1, 0]].
pub fn symplectic_form(num_modes: usize) -> DMatrix<f64> {
    let dim = 2 * num_modes;
    let mut s = DMatrix::zeros(dim, dim);
    for m in 0..num_modes {
        s[(2 * m, 2 * m + 1)] = 1.0;
        s[(2 * m + 1, 2 * m)] = -1.0;
    }
    s
}

/// By how much `gamma + i sigma >= 0` fails: `max(0, -min_eig)`.
pub fn physicality_defect(gamma: &DMatrix<f64>) -> f64 {
    let dim = gamma.nrows();
    let sigma = symplectic_form(dim / 2);
    let m = DMatrix::from_fn(dim, dim, |i, j| Complex::new(gamma[(i, j)], sigma[(i, j)]));
    let eigs = m.symmetric_eigenvalues();
    let min = eigs.iter().cloned().fold(f64::INFINITY, f64::min);
    (-min).max(0.0)
}

/// Derive drift, diffusion, and measurement data from a system spec.
pub fn build_matrices(spec: &SystemSpec) -> Result<DriftDiffusion> {
    spec.validate()?;
    let dim = spec.dim();
    let sigma = symplectic_form(spec.num_modes);

    // R = -(i/2) sum (j* j^T - h.c.) and S = (1/2) sum (j* j^T + h.c.);
    // with h.c. the elementwise conjugate both are real by construction,
    // but the contract asks us to assert the residue.
    let mut r_sum: DMatrix<Complex<f64>> = DMatrix::zeros(dim, dim);
    let mut s_sum: DMatrix<Complex<f64>> = DMatrix::zeros(dim, dim);
    let half_i = Complex::new(0.0, 0.5);
    for j in &spec.jumps {
        let outer = j.map(|z| z.conj()) * j.transpose();
        let conj = outer.map(|z| z.conj());
        r_sum += (&outer - &conj).map(|z| -half_i * z);
        s_sum += (&outer + &conj).map(|z| 0.5 * z);
    }
    let scale = spec.max_rate().max(1.0);
    let residue = r_sum.iter().chain(s_sum.iter()).map(|z| z.im.abs()).fold(0.0, f64::max);
    if residue > IMAG_RESIDUE_TOL * scale {
        return Err(GmeError::InvalidParams(format!(
            "imaginary residue {residue:.3e} in drift/diffusion construction"
        )));
    }
    let r = r_sum.map(|z| z.re);
    let s = s_sum.map(|z| z.re);

    let drift = &sigma * (&spec.hamiltonian + r);
    let diffusion = 2.0 * (&sigma * s * sigma.transpose());

    let mut meas_a = Vec::with_capacity(spec.monitored);
    let mut meas_b = Vec::with_capacity(spec.monitored);
    for j in spec.jumps.iter().take(spec.monitored) {
        meas_a.push(j.map(|z| z.re));
        meas_b.push(j.map(|z| z.im));
    }

    Ok(DriftDiffusion { drift, diffusion, meas_a, meas_b, symplectic: sigma })
}
