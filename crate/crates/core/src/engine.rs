//! Moment evolution: deterministic covariance dynamics and stochastic
//! displacement trajectories.
//!
//! The covariance obeys the matrix Riccati equation
//!
//! ```text
//! dGamma/dt = (Q + 2 sigma sum_k B_k A_k^T) Gamma
//!           + Gamma (Q^T + 2 sum_k A_k B_k^T sigma^T)
//!           + (P - 2 sigma sum_k B_k B_k^T sigma^T)
//!           - 2 Gamma (sum_k A_k A_k^T) Gamma
//! ```
//!
//! when the monitored channels are conditioned on, and the plain Lyapunov
//! form `Q Gamma + Gamma Q^T + P` otherwise. The displacement follows
//! `ds = Q s dt + sum_k (Gamma A_k - sigma B_k) dW_k`.
//!
//! Covariances are integrated with a fixed-step classical Runge-Kutta
//! scheme, displacements with Euler-Maruyama. Fixed points of the RK4 map
//! coincide with zeros of the right-hand side, so steady states are set by
//! the stopping tolerance, not the step size.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{GmeError, Result};
use crate::system::{build_matrices, DriftDiffusion, GaussianState, SystemSpec};

/// Any covariance entry beyond this magnitude signals dynamical instability.
pub const DIVERGENCE_THRESHOLD: f64 = 1e9;
/// Default relative tolerance on the steady-state residual.
pub const DEFAULT_STEADY_TOL: f64 = 1e-12;

/// Precomputed right-hand side of the covariance equation.
///
/// `q_eff`, `p_eff` fold the measurement drift/noise corrections in; the
/// rank-one monitoring updates are summed over channels.
#[derive(Debug, Clone)]
pub struct RiccatiOperator {
    q_eff: DMatrix<f64>,
    p_eff: DMatrix<f64>,
    /// `sum_k A_k A_k^T`; `None` for unconditional evolution.
    a_outer: Option<DMatrix<f64>>,
    dim: usize,
}

impl RiccatiOperator {
    pub fn new(dd: &DriftDiffusion, conditional: bool) -> Self {
        let dim = dd.drift.nrows();
        let monitored = conditional && !dd.meas_a.is_empty();
        if !monitored {
            return Self { q_eff: dd.drift.clone(), p_eff: dd.diffusion.clone(), a_outer: None, dim };
        }
        let mut ba = DMatrix::zeros(dim, dim);
        let mut bb = DMatrix::zeros(dim, dim);
        let mut aa = DMatrix::zeros(dim, dim);
        for (a, b) in dd.meas_a.iter().zip(&dd.meas_b) {
            ba += b * a.transpose();
            bb += b * b.transpose();
            aa += a * a.transpose();
        }
        let sigma = &dd.symplectic;
        let q_eff = &dd.drift + 2.0 * (sigma * ba);
        let p_eff = &dd.diffusion - 2.0 * (sigma * bb * sigma.transpose());
        Self { q_eff, p_eff, a_outer: Some(aa), dim }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Symmetrized time derivative of `gamma`, written into `out`.
    fn rhs_into(&self, gamma: &DMatrix<f64>, work: &mut Workspace, out: &mut DMatrix<f64>) {
        self.q_eff.mul_to(gamma, &mut work.t1);
        if let Some(aa) = &self.a_outer {
            gamma.mul_to(aa, &mut work.t2);
            work.t2.mul_to(gamma, &mut work.t3);
        }
        let n = self.dim;
        for i in 0..n {
            for j in 0..n {
                let mut v = work.t1[(i, j)] + work.t1[(j, i)] + self.p_eff[(i, j)];
                if self.a_outer.is_some() {
                    v -= work.t3[(i, j)] + work.t3[(j, i)];
                }
                out[(i, j)] = v;
            }
        }
    }

    pub fn rhs(&self, gamma: &DMatrix<f64>) -> DMatrix<f64> {
        let mut work = Workspace::new(self.dim);
        let mut out = DMatrix::zeros(self.dim, self.dim);
        self.rhs_into(gamma, &mut work, &mut out);
        out
    }
}

struct Workspace {
    t1: DMatrix<f64>,
    t2: DMatrix<f64>,
    t3: DMatrix<f64>,
    k1: DMatrix<f64>,
    k2: DMatrix<f64>,
    k3: DMatrix<f64>,
    k4: DMatrix<f64>,
    stage: DMatrix<f64>,
}

impl Workspace {
    fn new(dim: usize) -> Self {
        let z = || DMatrix::zeros(dim, dim);
        Self { t1: z(), t2: z(), t3: z(), k1: z(), k2: z(), k3: z(), k4: z(), stage: z() }
    }
}

/// One classical Runge-Kutta step; returns the max-norm of the derivative
/// at the initial point (used for convergence checks).
fn rk4_step(op: &RiccatiOperator, gamma: &mut DMatrix<f64>, dt: f64, work: &mut Workspace) -> f64 {
    let dim = op.dim;
    // k1
    let mut k1 = std::mem::replace(&mut work.k1, DMatrix::zeros(0, 0));
    op.rhs_into(gamma, work, &mut k1);
    let residual = k1.amax();
    // k2
    let mut stage = std::mem::replace(&mut work.stage, DMatrix::zeros(0, 0));
    stage.copy_from(gamma);
    stage.zip_apply(&k1, |s, k| *s += 0.5 * dt * k);
    let mut k2 = std::mem::replace(&mut work.k2, DMatrix::zeros(0, 0));
    op.rhs_into(&stage, work, &mut k2);
    // k3
    stage.copy_from(gamma);
    stage.zip_apply(&k2, |s, k| *s += 0.5 * dt * k);
    let mut k3 = std::mem::replace(&mut work.k3, DMatrix::zeros(0, 0));
    op.rhs_into(&stage, work, &mut k3);
    // k4
    stage.copy_from(gamma);
    stage.zip_apply(&k3, |s, k| *s += dt * k);
    let mut k4 = std::mem::replace(&mut work.k4, DMatrix::zeros(0, 0));
    op.rhs_into(&stage, work, &mut k4);

    let w = dt / 6.0;
    for i in 0..dim {
        for j in 0..dim {
            gamma[(i, j)] +=
                w * (k1[(i, j)] + 2.0 * k2[(i, j)] + 2.0 * k3[(i, j)] + k4[(i, j)]);
        }
    }
    work.k1 = k1;
    work.k2 = k2;
    work.k3 = k3;
    work.k4 = k4;
    work.stage = stage;
    residual
}

/// Covariance trajectory sampled at step boundaries.
#[derive(Debug, Clone)]
pub struct CovarianceTrajectory {
    pub times: Vec<f64>,
    pub covariances: Vec<DMatrix<f64>>,
}

/// Default integration step `1e-3 / max_rate`.
pub fn default_dt(spec: &SystemSpec) -> f64 {
    1e-3 / spec.max_rate()
}

/// Integrate the covariance equation from `gamma0` for `duration`, sampling
/// every step. Fails with [`GmeError::DivergenceDetected`] when an entry
/// exceeds [`DIVERGENCE_THRESHOLD`].
pub fn evolve_covariance(
    spec: &SystemSpec,
    gamma0: &DMatrix<f64>,
    duration: f64,
    dt: f64,
    conditional: bool,
) -> Result<CovarianceTrajectory> {
    if dt <= 0.0 || duration < 0.0 {
        return Err(GmeError::InvalidParams("need dt > 0 and duration >= 0".into()));
    }
    let dd = build_matrices(spec)?;
    let op = RiccatiOperator::new(&dd, conditional);
    if gamma0.nrows() != op.dim() || gamma0.ncols() != op.dim() {
        return Err(GmeError::DimensionMismatch(format!(
            "gamma0 is {}x{}, expected {}x{}",
            gamma0.nrows(),
            gamma0.ncols(),
            op.dim(),
            op.dim()
        )));
    }
    let steps = (duration / dt).round() as usize;
    let mut gamma = gamma0.clone();
    let mut work = Workspace::new(op.dim());
    let mut times = Vec::with_capacity(steps + 1);
    let mut covs = Vec::with_capacity(steps + 1);
    times.push(0.0);
    covs.push(gamma.clone());
    for k in 0..steps {
        rk4_step(&op, &mut gamma, dt, &mut work);
        let t = (k + 1) as f64 * dt;
        let entry = gamma.amax();
        if !entry.is_finite() || entry > DIVERGENCE_THRESHOLD {
            return Err(GmeError::DivergenceDetected {
                time: t,
                entry,
                threshold: DIVERGENCE_THRESHOLD,
            });
        }
        times.push(t);
        covs.push(gamma.clone());
    }
    Ok(CovarianceTrajectory { times, covariances: covs })
}

/// Steady covariance together with the residual `||dGamma/dt||_max` at the
/// returned point.
#[derive(Debug, Clone)]
pub struct SteadyCovariance {
    pub covariance: DMatrix<f64>,
    pub residual: f64,
    pub elapsed: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct SteadyOptions {
    /// Relative residual tolerance: stop when `||dGamma|| < tol * ||Gamma||`.
    pub tol: f64,
    /// Step size; `None` picks `0.1 / max_rate` (the fixed point does not
    /// depend on the step, only the stability of the iteration does).
    pub dt: Option<f64>,
    /// Give up (NoConvergence) after this much evolved time.
    pub max_time: f64,
}

impl Default for SteadyOptions {
    fn default() -> Self {
        Self { tol: DEFAULT_STEADY_TOL, dt: None, max_time: 1e3 }
    }
}

/// Long-time limit of the covariance equation starting from the vacuum.
pub fn steady_covariance(spec: &SystemSpec, conditional: bool, tol: f64) -> Result<SteadyCovariance> {
    steady_covariance_with(spec, conditional, SteadyOptions { tol, ..Default::default() })
}

pub fn steady_covariance_with(
    spec: &SystemSpec,
    conditional: bool,
    opts: SteadyOptions,
) -> Result<SteadyCovariance> {
    if opts.tol <= 0.0 {
        return Err(GmeError::InvalidParams("tol must be positive".into()));
    }
    let dd = build_matrices(spec)?;
    let op = RiccatiOperator::new(&dd, conditional);
    let dt = opts.dt.unwrap_or(0.1 / spec.max_rate());
    let mut gamma = DMatrix::identity(op.dim(), op.dim());
    let mut work = Workspace::new(op.dim());
    let mut t = 0.0;
    let mut residual = f64::INFINITY;
    while t < opts.max_time {
        residual = rk4_step(&op, &mut gamma, dt, &mut work);
        t += dt;
        let entry = gamma.amax();
        if !entry.is_finite() || entry > DIVERGENCE_THRESHOLD {
            return Err(GmeError::DivergenceDetected {
                time: t,
                entry,
                threshold: DIVERGENCE_THRESHOLD,
            });
        }
        if residual < opts.tol * entry.max(1e-300) {
            return Ok(SteadyCovariance { covariance: gamma, residual, elapsed: t });
        }
    }
    Err(GmeError::NoConvergence { max_time: opts.max_time, residual })
}

/// Sampled displacement path of a single stochastic trajectory.
#[derive(Debug, Clone)]
pub struct TrajectoryPath {
    pub times: Vec<f64>,
    pub displacements: Vec<DVector<f64>>,
}

/// Euler-Maruyama trajectory of the displacement under continuous
/// monitoring, with the conditional covariance co-integrated (RK4) at the
/// same step. Identical seeds give bit-identical paths.
pub fn simulate_trajectory(
    spec: &SystemSpec,
    state0: &GaussianState,
    duration: f64,
    dt: f64,
    seed: u64,
) -> Result<TrajectoryPath> {
    if dt <= 0.0 || duration < 0.0 {
        return Err(GmeError::InvalidParams("need dt > 0 and duration >= 0".into()));
    }
    state0.validate()?;
    let dd = build_matrices(spec)?;
    let op = RiccatiOperator::new(&dd, true);
    let dim = op.dim();
    if state0.displacement.len() != dim {
        return Err(GmeError::DimensionMismatch(format!(
            "state has dimension {}, spec has {}",
            state0.displacement.len(),
            dim
        )));
    }
    let steps = (duration / dt).round() as usize;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let sqrt_dt = dt.sqrt();
    let channels = dd.meas_a.len();

    let mut gamma = state0.covariance.clone();
    let mut s = state0.displacement.clone();
    let mut work = Workspace::new(dim);
    let mut gains: Vec<DVector<f64>> = vec![DVector::zeros(dim); channels];
    let mut times = Vec::with_capacity(steps + 1);
    let mut path = Vec::with_capacity(steps + 1);
    times.push(0.0);
    path.push(s.clone());

    // When the initial covariance is already stationary the measurement
    // gains are constant and the covariance can be frozen.
    let frozen = op.rhs(&gamma).amax() <= 1e-10 * gamma.amax().max(1.0);
    if frozen {
        for (k, gain) in gains.iter_mut().enumerate() {
            measurement_gain(&gamma, &dd, k, gain);
        }
    }

    let mut snew = DVector::zeros(dim);
    for step in 0..steps {
        if !frozen {
            for (k, gain) in gains.iter_mut().enumerate() {
                measurement_gain(&gamma, &dd, k, gain);
            }
        }
        // s <- s + Q s dt + sum_k gain_k dW_k
        dd.drift.mul_to(&s, &mut snew);
        snew *= dt;
        snew += &s;
        for gain in &gains {
            let dw: f64 = <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)
                * sqrt_dt;
            snew.axpy(dw, gain, 1.0);
        }
        std::mem::swap(&mut s, &mut snew);
        if !frozen {
            rk4_step(&op, &mut gamma, dt, &mut work);
        }
        let t = (step + 1) as f64 * dt;
        let m = s.amax().max(gamma.amax());
        if !m.is_finite() || m > DIVERGENCE_THRESHOLD {
            return Err(GmeError::DivergenceDetected {
                time: t,
                entry: m,
                threshold: DIVERGENCE_THRESHOLD,
            });
        }
        times.push(t);
        path.push(s.clone());
    }
    Ok(TrajectoryPath { times, displacements: path })
}

/// Final displacements of an ensemble of trajectories with consecutive
/// seeds, without storing intermediate samples.
pub fn simulate_ensemble_final(
    spec: &SystemSpec,
    state0: &GaussianState,
    duration: f64,
    dt: f64,
    seed0: u64,
    count: usize,
) -> Result<Vec<DVector<f64>>> {
    state0.validate()?;
    let dd = build_matrices(spec)?;
    let op = RiccatiOperator::new(&dd, true);
    let dim = op.dim();
    let steps = (duration / dt).round() as usize;
    let sqrt_dt = dt.sqrt();
    let channels = dd.meas_a.len();

    // The ensemble shares the (deterministic) covariance path: precompute
    // the measurement gains once.
    let frozen = op.rhs(&state0.covariance).amax()
        <= 1e-10 * state0.covariance.amax().max(1.0);
    let gain_path: Vec<Vec<DVector<f64>>> = if frozen {
        let mut g = vec![DVector::zeros(dim); channels];
        for (k, gain) in g.iter_mut().enumerate() {
            measurement_gain(&state0.covariance, &dd, k, gain);
        }
        vec![g]
    } else {
        let mut gamma = state0.covariance.clone();
        let mut work = Workspace::new(dim);
        let mut all = Vec::with_capacity(steps);
        for _ in 0..steps {
            let mut g = vec![DVector::zeros(dim); channels];
            for (k, gain) in g.iter_mut().enumerate() {
                measurement_gain(&gamma, &dd, k, gain);
            }
            all.push(g);
            rk4_step(&op, &mut gamma, dt, &mut work);
        }
        all
    };

    let drift = &dd.drift;
    let mut finals = Vec::with_capacity(count);
    let mut snew = DVector::zeros(dim);
    for i in 0..count {
        let mut rng = ChaCha12Rng::seed_from_u64(seed0.wrapping_add(i as u64));
        let mut s = state0.displacement.clone();
        for step in 0..steps {
            let gains = if frozen { &gain_path[0] } else { &gain_path[step] };
            drift.mul_to(&s, &mut snew);
            snew *= dt;
            snew += &s;
            for gain in gains {
                let dw: f64 =
                    <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)
                        * sqrt_dt;
                snew.axpy(dw, gain, 1.0);
            }
            std::mem::swap(&mut s, &mut snew);
        }
        finals.push(s);
    }
    Ok(finals)
}

/// `gain_k = Gamma A_k - sigma B_k`.
fn measurement_gain(gamma: &DMatrix<f64>, dd: &DriftDiffusion, k: usize, out: &mut DVector<f64>) {
    gamma.mul_to(&dd.meas_a[k], out);
    let dim = out.len();
    let sb = &dd.symplectic * &dd.meas_b[k];
    for i in 0..dim {
        out[i] -= sb[i];
    }
}

/// Convenience wrapper: symmetrized covariance derivative per the moment
/// equations (conditional keeps the monitoring terms, unconditional is the
/// plain Lyapunov form).
pub fn riccati_rhs(gamma: &DMatrix<f64>, dd: &DriftDiffusion, conditional: bool) -> DMatrix<f64> {
    RiccatiOperator::new(dd, conditional).rhs(gamma)
}
