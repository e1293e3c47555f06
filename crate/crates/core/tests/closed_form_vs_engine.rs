//! The generic moment engine must reproduce the closed-form steady states
//! over the standard parameter grid, conditionally and unconditionally.

use gme_core::engine::{steady_covariance, steady_covariance_with, SteadyOptions};
use gme_core::single_mode::{
    conditional_steady, unconditional_steady, InteractionParams,
};
use gme_core::system::physicality_defect;

const GRID_THETA: [f64; 5] = [-0.6, -0.3, 0.0, 0.3, 0.6];
const GRID_D: [f64; 4] = [2.0, 5.0, 50.0, 500.0];
const GRID_N: [f64; 2] = [0.0, 1.0];
const GRID_EPS: [f64; 3] = [0.0, 0.05, 0.5];

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

#[test]
fn conditional_steady_matches_engine_on_grid() {
    let mut cases = 0;
    for theta in GRID_THETA {
        for d in GRID_D {
            for n in GRID_N {
                for eps in GRID_EPS {
                    let p = InteractionParams::new(theta, eps, d, n).unwrap();
                    // Skip configurations whose antisqueezed branch has no
                    // steady state (epsilon = 0 at or below the critical
                    // angle): the engine covariance diverges there.
                    let Ok(closed) = conditional_steady(&p) else { continue };
                    let spec = p.system_spec(true);
                    let out = steady_covariance(&spec, true, 1e-13)
                        .unwrap_or_else(|e| panic!("engine failed at {p:?}: {e}"));
                    let g = &out.covariance;
                    assert!(
                        rel_err(g[(0, 0)], closed.v_squeezed) < 1e-8,
                        "V mismatch at {p:?}: engine {} vs closed {}",
                        g[(0, 0)],
                        closed.v_squeezed
                    );
                    assert!(
                        rel_err(g[(1, 1)], closed.u_antisqueezed) < 1e-8,
                        "U mismatch at {p:?}: engine {} vs closed {}",
                        g[(1, 1)],
                        closed.u_antisqueezed
                    );
                    assert!(g[(0, 1)].abs() < 1e-8, "cross covariance at {p:?}");
                    assert!(physicality_defect(g) < 1e-9);
                    cases += 1;
                }
            }
        }
    }
    assert!(cases >= 100, "expected a substantial stable grid, got {cases}");
}

#[test]
fn unconditional_steady_matches_engine_on_grid() {
    for theta in GRID_THETA {
        for d in GRID_D {
            for n in GRID_N {
                let p = InteractionParams::new(theta, 0.0, d, n).unwrap();
                let Ok(closed) = unconditional_steady(&p) else { continue };
                let spec = p.system_spec(false);
                let out = steady_covariance(&spec, false, 1e-13).unwrap();
                let g = &out.covariance;
                assert!(rel_err(g[(0, 0)], closed.v_squeezed) < 1e-8);
                assert!(rel_err(g[(1, 1)], closed.u_antisqueezed) < 1e-8);
                assert!(g[(0, 1)].abs() < 1e-8);
            }
        }
    }
}

/// Conditioning can only sharpen a Gaussian state: every diagonal entry of
/// the conditional steady covariance is bounded by the unconditional one.
#[test]
fn conditional_never_exceeds_unconditional() {
    for theta in GRID_THETA {
        for d in [2.0, 5.0, 50.0] {
            for eps in GRID_EPS {
                let p = InteractionParams::new(theta, eps, d, 0.5).unwrap();
                if p.damping_rate() <= 0.0 {
                    continue;
                }
                let cond = steady_covariance(&p.system_spec(true), true, 1e-12).unwrap();
                let unc = steady_covariance(&p.system_spec(false), false, 1e-12).unwrap();
                for i in 0..2 {
                    assert!(
                        cond.covariance[(i, i)] <= unc.covariance[(i, i)] + 1e-9,
                        "monitoring increased entry {i} at {p:?}"
                    );
                }
            }
        }
    }
}

/// phi enters only through the engine: a quarter-wave local-oscillator
/// phase swaps which light quadrature is detected, so phi = pi/2 at
/// epsilon = 0 reproduces the epsilon = 1 steady state at phi = 0.
#[test]
fn quarter_wave_phase_swaps_detectors() {
    let p0 = InteractionParams::new(0.25, 0.0, 5.0, 0.3)
        .unwrap()
        .with_phi(std::f64::consts::FRAC_PI_2);
    let p1 = InteractionParams::new(0.25, 1.0, 5.0, 0.3).unwrap();
    let a = steady_covariance(&p0.system_spec(true), true, 1e-13).unwrap();
    let b = steady_covariance(&p1.system_spec(true), true, 1e-13).unwrap();
    assert!((&a.covariance - &b.covariance).amax() < 1e-9);
}

/// Divergence detection brackets the stability boundary.
#[test]
fn unconditional_stability_boundary() {
    let d = 5.0;
    let theta_c = -0.5 * (2.0_f64 / d).asin();
    let below = InteractionParams::new(theta_c - 0.01, 0.0, d, 0.0).unwrap();
    let err = steady_covariance_with(
        &below.system_spec(false),
        false,
        SteadyOptions { max_time: 3e3, ..Default::default() },
    )
    .unwrap_err();
    assert!(matches!(err, gme_core::GmeError::DivergenceDetected { .. }));

    let above = InteractionParams::new(theta_c + 0.01, 0.0, d, 0.0).unwrap();
    let out = steady_covariance_with(
        &above.system_spec(false),
        false,
        SteadyOptions { max_time: 3e3, ..Default::default() },
    )
    .unwrap();
    let closed = unconditional_steady(&above).unwrap();
    assert!(rel_err(out.covariance[(0, 0)], closed.v_squeezed) < 1e-7);
}
