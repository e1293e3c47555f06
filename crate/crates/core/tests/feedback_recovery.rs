//! Feedback closes the loop: optimal gains reproduce the conditional
//! variances in an unconditional steady state, and the feedback master
//! equation fed through the engine agrees with the closed forms.

use gme_core::engine::{steady_covariance, steady_covariance_with, SteadyOptions};
use gme_core::feedback::{feedback_spec, feedback_steady, optimal_gains, FeedbackGains};
use gme_core::single_mode::{conditional_steady, InteractionParams};

const GRID_THETA: [f64; 5] = [-0.6, -0.3, 0.0, 0.3, 0.6];
const GRID_D: [f64; 3] = [2.0, 5.0, 50.0];
const GRID_EPS: [f64; 3] = [0.01, 0.05, 0.5];

#[test]
fn optimal_gains_recover_conditional_over_grid() {
    for theta in GRID_THETA {
        for d in GRID_D {
            for eps in GRID_EPS {
                for n in [0.0, 1.0] {
                    let p = InteractionParams::new(theta, eps, d, n).unwrap();
                    let gains = optimal_gains(&p).unwrap();
                    let fb = feedback_steady(&p, &gains).unwrap();
                    let c = conditional_steady(&p).unwrap();
                    assert!(
                        (fb.v_squeezed - c.v_squeezed).abs() < 1e-8,
                        "V at {p:?}: {} vs {}",
                        fb.v_squeezed,
                        c.v_squeezed
                    );
                    assert!(
                        (fb.u_antisqueezed - c.u_antisqueezed).abs() < 1e-8,
                        "U at {p:?}: {} vs {}",
                        fb.u_antisqueezed,
                        c.u_antisqueezed
                    );
                }
            }
        }
    }
}

#[test]
fn engine_steady_state_of_feedback_spec_matches_closed_forms() {
    for &(theta, eps, d, n) in &[
        (0.0, 0.05, 5.0, 0.0),
        (-0.3, 0.05, 5.0, 0.0),
        (-0.6, 0.01, 50.0, 1.0),
        (0.3, 0.5, 2.0, 0.5),
    ] {
        let p = InteractionParams::new(theta, eps, d, n).unwrap();
        let gains = optimal_gains(&p).unwrap();
        let spec = feedback_spec(&p, &gains).unwrap();
        let out = steady_covariance(&spec, false, 1e-13).unwrap();
        let fb = feedback_steady(&p, &gains).unwrap();
        assert!(
            (out.covariance[(0, 0)] - fb.v_squeezed).abs() < 1e-8,
            "engine V at {p:?}"
        );
        assert!(
            (out.covariance[(1, 1)] - fb.u_antisqueezed).abs() < 1e-8,
            "engine U at {p:?}"
        );
        assert!(out.covariance[(0, 1)].abs() < 1e-8);
    }
}

/// Arbitrary (non-optimal) stable gains must also agree between the
/// Lyapunov closed forms and the engine.
#[test]
fn engine_matches_closed_forms_for_generic_gains() {
    let p = InteractionParams::new(0.2, 0.3, 5.0, 0.4).unwrap();
    for &(xi1, xi2) in &[(0.1, -0.1), (-0.5, 0.3), (0.0, 0.8)] {
        let gains = FeedbackGains::new(xi1, xi2).unwrap();
        let Ok(fb) = feedback_steady(&p, &gains) else { continue };
        let spec = feedback_spec(&p, &gains).unwrap();
        let out = steady_covariance(&spec, false, 1e-13).unwrap();
        assert!((out.covariance[(0, 0)] - fb.v_squeezed).abs() < 1e-9);
        assert!((out.covariance[(1, 1)] - fb.u_antisqueezed).abs() < 1e-9);
    }
}

/// With both detectors in play the feedback stabilizes every interaction
/// angle on the grid, including the unconditionally unstable region, e.g.
/// the pure two-mode-squeezing point theta = -pi/4.
#[test]
fn feedback_stabilizes_below_critical_angle() {
    let d = 5.0;
    let theta_c = -0.5 * (2.0_f64 / d).asin();
    for theta in [-std::f64::consts::FRAC_PI_4, theta_c - 0.05, -1.2] {
        let p = InteractionParams::new(theta, 0.05, d, 0.0).unwrap();
        assert!(p.damping_rate() <= 0.0 || theta > theta_c);
        let gains = optimal_gains(&p).unwrap();
        let spec = feedback_spec(&p, &gains).unwrap();
        let out = steady_covariance_with(
            &spec,
            false,
            SteadyOptions { tol: 1e-12, ..Default::default() },
        )
        .unwrap();
        let c = conditional_steady(&p).unwrap();
        assert!((out.covariance[(0, 0)] - c.v_squeezed).abs() < 1e-8);
        assert!((out.covariance[(1, 1)] - c.u_antisqueezed).abs() < 1e-8);
    }
}
