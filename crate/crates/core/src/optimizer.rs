//! Optimal interaction angles, stability boundary, critical occupations,
//! and scaling-law helpers.
//!
//! The unconditional optimum has a closed arctan form. The conditional
//! optimum in `x = tan(theta)` is a root of the cubic stationarity
//! polynomial of the squeezed steady-state variance,
//!
//! ```text
//! 0 = 2A(1-2e) x^3 - [4(1-e)A^2 + A d (1-2e)^2 + 4e] x^2
//!     - 2(1-2e)(k - d e) x + k d (1-2e)^2
//! ```
//!
//! with `k = 2n+1`, `A = k + d e`, `e = epsilon`. (The polynomial is
//! obtained by eliminating the radical from dV/dx = 0 and can pick up a
//! spurious sign-flipped root, so candidates are ranked by evaluating the
//! objective and cross-checked against a dense scan.)

use crate::error::{GmeError, Result};
use crate::single_mode::{conditional_u, conditional_v, unconditional_u, unconditional_v, InteractionParams};

const SCAN_POINTS: usize = 20_001;
const SCAN_MARGIN: f64 = 1e-6;
/// Required agreement between the cubic root and the scan argmin.
pub const CUBIC_SCAN_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptMethod {
    ClosedForm,
    CubicRoot,
    NumericScan,
}

/// An optimal-angle result with the |dV/dtheta| residual at the optimum.
#[derive(Debug, Clone, Copy)]
pub struct OptimumReport {
    pub theta_opt: f64,
    pub v_opt: f64,
    pub u_at_opt: f64,
    pub method: OptMethod,
    pub residual: f64,
}

/// Critical interaction angle `-arcsin(2/d)/2`; `None` for `d < 2`, where
/// `gamma + g sin(2 theta)/2 > 0` for every `theta` and the unconditional
/// dynamics is stable everywhere.
pub fn theta_critical(d: f64) -> Option<f64> {
    if d >= 2.0 {
        Some(-0.5 * (2.0 / d).asin())
    } else {
        None
    }
}

/// Real roots of `c3 x^3 + c2 x^2 + c1 x + c0`, degenerating gracefully to
/// lower degrees. Roots are polished with a few Newton steps.
pub fn cubic_real_roots(c3: f64, c2: f64, c1: f64, c0: f64) -> Vec<f64> {
    let scale = c3.abs().max(c2.abs()).max(c1.abs()).max(c0.abs());
    if scale == 0.0 {
        return Vec::new();
    }
    let tiny = 1e-14 * scale;
    let mut roots = if c3.abs() <= tiny {
        if c2.abs() <= tiny {
            if c1.abs() <= tiny {
                Vec::new()
            } else {
                vec![-c0 / c1]
            }
        } else {
            let disc = c1 * c1 - 4.0 * c2 * c0;
            if disc < 0.0 {
                Vec::new()
            } else {
                let s = disc.sqrt();
                // Citardauq form for the smaller-magnitude root.
                let q = -0.5 * (c1 + s.copysign(c1));
                if q == 0.0 {
                    vec![0.0, -c1 / c2]
                } else {
                    vec![q / c2, c0 / q]
                }
            }
        }
    } else {
        // Depressed cubic t^3 + p t + q with x = t - b/3.
        let b = c2 / c3;
        let c = c1 / c3;
        let d = c0 / c3;
        let p = c - b * b / 3.0;
        let q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
        let shift = -b / 3.0;
        let disc = (q / 2.0) * (q / 2.0) + (p / 3.0) * (p / 3.0) * (p / 3.0);
        if disc > 0.0 {
            // One real root (Cardano).
            let s = disc.sqrt();
            let u = (-q / 2.0 + s).cbrt();
            let v = (-q / 2.0 - s).cbrt();
            vec![u + v + shift]
        } else {
            // Three real roots (trigonometric form).
            let m = (-p / 3.0).sqrt();
            if m == 0.0 {
                vec![shift]
            } else {
                let arg = (3.0 * q / (2.0 * p * m)).clamp(-1.0, 1.0);
                let phi = arg.acos() / 3.0;
                (0..3)
                    .map(|k| {
                        2.0 * m * (phi - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos() + shift
                    })
                    .collect()
            }
        }
    };
    for r in roots.iter_mut() {
        for _ in 0..3 {
            let f = ((c3 * *r + c2) * *r + c1) * *r + c0;
            let df = (3.0 * c3 * *r + 2.0 * c2) * *r + c1;
            if df.abs() > 0.0 {
                let step = f / df;
                if step.is_finite() {
                    *r -= step;
                }
            }
        }
    }
    roots
}

/// Stationarity cubic coefficients for the conditional squeezed variance,
/// highest degree first.
pub fn conditional_cubic_coefficients(d: f64, n: f64, epsilon: f64) -> [f64; 4] {
    let k = 2.0 * n + 1.0;
    let e = epsilon;
    let a = k + d * e;
    let one_m_2e = 1.0 - 2.0 * e;
    [
        2.0 * a * one_m_2e,
        -(4.0 * (1.0 - e) * a * a + a * d * one_m_2e * one_m_2e + 4.0 * e),
        -2.0 * one_m_2e * (k - d * e),
        k * d * one_m_2e * one_m_2e,
    ]
}

fn central_residual<F: Fn(f64) -> f64>(f: F, theta: f64) -> f64 {
    let h = 1e-6;
    ((f(theta + h) - f(theta - h)) / (2.0 * h)).abs()
}

/// Exact unconditional optimum: `theta = arctan[(sqrt(k(k+d)+1)-1)/(k+d)]`
/// with `k = 2n+1`; the optimal variance follows the exact closed line
/// `2 [d sqrt(k(k+d)+1) - d - 2k] / (d^2 - 4)` (evaluated by its limit at
/// d = 2).
pub fn theta_opt_unconditional(d: f64, n: f64) -> Result<OptimumReport> {
    if !(d > 0.0 && d.is_finite() && n >= 0.0) {
        return Err(GmeError::InvalidParams(format!("need d > 0, n >= 0 (got d={d}, n={n})")));
    }
    let k = 2.0 * n + 1.0;
    let root = (k * (k + d) + 1.0).sqrt();
    let theta = ((root - 1.0) / (k + d)).atan();
    let p = InteractionParams::new(theta, 0.0, d, n)?;
    // The exact closed line has a removable singularity at d = 2; switch to
    // the direct evaluation inside a window wide enough to dodge the
    // cancellation in (d^2 - 4).
    let v_opt = if (d - 2.0).abs() > 1e-4 {
        2.0 * (d * root - d - 2.0 * k) / (d * d - 4.0)
    } else {
        unconditional_v(&p).expect("optimum lies in the stable region")
    };
    let u_at_opt = unconditional_u(&p).expect("optimum lies in the stable region");
    let vu = |t: f64| unconditional_v(&p.with_theta(t)).unwrap_or(f64::INFINITY);
    Ok(OptimumReport {
        theta_opt: theta,
        v_opt,
        u_at_opt,
        method: OptMethod::ClosedForm,
        residual: central_residual(vu, theta),
    })
}

fn scan_argmin<F: Fn(f64) -> f64>(f: &F) -> f64 {
    let lo = -std::f64::consts::FRAC_PI_2 + SCAN_MARGIN;
    let hi = std::f64::consts::FRAC_PI_2 - SCAN_MARGIN;
    let step = (hi - lo) / (SCAN_POINTS - 1) as f64;
    let mut best_i = 0;
    let mut best = f64::INFINITY;
    for i in 0..SCAN_POINTS {
        let v = f(lo + i as f64 * step);
        if v < best {
            best = v;
            best_i = i;
        }
    }
    let a = lo + step * best_i.saturating_sub(1) as f64;
    let b = (lo + step * (best_i + 1) as f64).min(hi);
    golden_min(f, a, b)
}

fn golden_min<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64) -> f64 {
    let inv_phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..120 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
        if (b - a).abs() < 1e-13 {
            break;
        }
    }
    0.5 * (a + b)
}

/// Conditional optimum: proper cubic root selected by direct objective
/// evaluation, cross-validated against a dense scan. Falls back to the
/// scan (never fails silently) when the cubic has no usable root or the
/// two disagree beyond [`CUBIC_SCAN_TOL`].
pub fn theta_opt_conditional(d: f64, n: f64, epsilon: f64) -> Result<OptimumReport> {
    if !(d > 0.0 && d.is_finite() && n >= 0.0 && (0.0..1.0).contains(&epsilon)) {
        return Err(GmeError::InvalidParams(format!(
            "need d > 0, n >= 0, epsilon in [0, 1) (got d={d}, n={n}, epsilon={epsilon})"
        )));
    }
    let base = InteractionParams::new(0.0, epsilon, d, n)?;
    let objective = |t: f64| conditional_v(&base.with_theta(t)).unwrap_or(f64::INFINITY);

    let [c3, c2, c1, c0] = conditional_cubic_coefficients(d, n, epsilon);
    let cubic_best = cubic_real_roots(c3, c2, c1, c0)
        .into_iter()
        .map(|x| x.atan())
        .map(|t| (t, objective(t)))
        .filter(|(_, v)| v.is_finite())
        .min_by(|a, b| a.1.total_cmp(&b.1));

    let theta_scan = scan_argmin(&objective);
    let (theta, method) = match cubic_best {
        Some((t, _)) if (t - theta_scan).abs() <= CUBIC_SCAN_TOL => (t, OptMethod::CubicRoot),
        _ => (theta_scan, OptMethod::NumericScan),
    };
    let at = base.with_theta(theta);
    Ok(OptimumReport {
        theta_opt: theta,
        v_opt: conditional_v(&at).unwrap_or(f64::INFINITY),
        u_at_opt: conditional_u(&at).unwrap_or(f64::INFINITY),
        method,
        residual: central_residual(objective, theta),
    })
}

/// Scan argmin alone, for cross-validation in tests.
pub fn theta_opt_conditional_scan(d: f64, n: f64, epsilon: f64) -> Result<f64> {
    let base = InteractionParams::new(0.0, epsilon, d, n)?;
    let objective = |t: f64| conditional_v(&base.with_theta(t)).unwrap_or(f64::INFINITY);
    Ok(scan_argmin(&objective))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CriticalKind {
    /// Largest n with unconditional squeezing, `d (sqrt(2) - 1) / 4` (exact).
    Unconditional,
    /// Largest n with conditional squeezing over all angles (epsilon = 0).
    Conditional,
    /// Same, restricted to the unconditionally stable region theta > theta_c.
    ConditionalStable,
}

/// A critical occupation: the bisection (or exact) value, with the
/// published asymptotic series reported alongside for comparison where one
/// exists.
#[derive(Debug, Clone, Copy)]
pub struct CriticalOccupation {
    pub value: f64,
    pub series: Option<f64>,
}

fn min_conditional_v(d: f64, n: f64, theta_lo: Option<f64>) -> f64 {
    let base = InteractionParams { theta: 0.0, epsilon: 0.0, phi: 0.0, d, n, gamma: 1.0 };
    let objective = |t: f64| conditional_v(&base.with_theta(t)).unwrap_or(f64::INFINITY);
    let unconstrained = match theta_opt_conditional(d, n, 0.0) {
        Ok(r) => r.theta_opt,
        Err(_) => scan_argmin(&objective),
    };
    match theta_lo {
        Some(lo) if unconstrained < lo => objective(lo),
        _ => objective(unconstrained),
    }
}

/// Critical thermal occupation for the requested squeezing notion.
///
/// The conditional kinds are defined by the implementable root of
/// `min_theta V(theta; d, n) = 1` in `n` (bisection to 1e-9); the series
/// quoted alongside are not used as ground truth.
pub fn critical_occupation(d: f64, kind: CriticalKind) -> Result<CriticalOccupation> {
    if !(d > 0.0 && d.is_finite()) {
        return Err(GmeError::InvalidParams(format!("need d > 0 (got {d})")));
    }
    match kind {
        CriticalKind::Unconditional => Ok(CriticalOccupation {
            value: d * (2.0_f64.sqrt() - 1.0) / 4.0,
            series: None,
        }),
        CriticalKind::Conditional | CriticalKind::ConditionalStable => {
            let theta_lo = match kind {
                CriticalKind::ConditionalStable => theta_critical(d),
                _ => None,
            };
            let f = |n: f64| min_conditional_v(d, n, theta_lo) - 1.0;
            if f(0.0) >= 0.0 {
                // No squeezing even at n = 0 (cannot happen for d > 0, but
                // keep the root-finder honest).
                return Ok(CriticalOccupation { value: 0.0, series: None });
            }
            let mut hi = d.max(1.0);
            let mut guard = 0;
            while f(hi) < 0.0 {
                hi *= 2.0;
                guard += 1;
                if guard > 60 {
                    return Err(GmeError::NoConvergence { max_time: hi, residual: f(hi) });
                }
            }
            let mut lo = 0.0;
            while hi - lo > 1e-9 {
                let mid = 0.5 * (lo + hi);
                if f(mid) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let value = 0.5 * (lo + hi);
            let series = match kind {
                CriticalKind::Conditional => Some(5.0 * d / 8.0 - 3.0 / (80.0 * d)),
                CriticalKind::ConditionalStable => Some(0.5 + d / 2.0 - 7.0 / (16.0 * d)),
                CriticalKind::Unconditional => None,
            };
            Ok(CriticalOccupation { value, series })
        }
    }
}

/// Crossover optical depth `d* = (2n+1)/epsilon` up to which the
/// feedback-stabilized conditional squeezing keeps its 1/d scaling; the
/// antisqueezing there is `U_c(d*) ~ sqrt(2)/epsilon`.
pub fn d_star(n: f64, epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon <= 1.0 && n >= 0.0) {
        return Err(GmeError::InvalidParams(format!(
            "need epsilon in (0, 1], n >= 0 (got epsilon={epsilon}, n={n})"
        )));
    }
    Ok((2.0 * n + 1.0) / epsilon)
}
