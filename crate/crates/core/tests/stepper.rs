use std::f64::consts::PI;
use std::sync::Arc;

use qhd_core::fields::{make_initial_data, InitSpec};
use qhd_core::{integrate, Field, Grid, ModelKind, ModelParams, PlasmaState, Scheme, SchemeSpec};

fn grid(n: usize) -> Arc<Grid> {
    Grid::new(n, 2.0 * PI).unwrap()
}

fn final_state(s0: &PlasmaState, kind: ModelKind, p: &ModelParams, scheme: Scheme, dt: f64, t: f64) -> PlasmaState {
    let spec = SchemeSpec::new(scheme, dt, t);
    integrate(s0, kind, p, &spec, &[]).unwrap().states.pop().unwrap()
}

fn observed_order(s0: &PlasmaState, kind: ModelKind, p: &ModelParams, scheme: Scheme, dt: f64, t: f64) -> f64 {
    let reference = final_state(s0, kind, p, scheme, dt / 8.0, t);
    let e1 = final_state(s0, kind, p, scheme, dt, t).max_abs_diff(&reference);
    let e2 = final_state(s0, kind, p, scheme, dt / 2.0, t).max_abs_diff(&reference);
    let e4 = final_state(s0, kind, p, scheme, dt / 4.0, t).max_abs_diff(&reference);
    // Richardson-corrected slope: the dt/8 reference carries its own error.
    let r = (e1 - e2) / (e2 - e4);
    r.log2()
}

#[test]
fn erk4_is_fourth_order() {
    let g = grid(32);
    let p = ModelParams { epsilon: 0.1, ..ModelParams::default() };
    let s0 = make_initial_data(&InitSpec::single_mode(1e-3, 1), &p, &g).unwrap();
    let order = observed_order(&s0, ModelKind::QhdUnscaled, &p, Scheme::Erk4, 0.1, 2.0);
    assert!(order >= 3.9, "observed order {order}");
}

#[test]
fn implicit_schemes_are_second_order() {
    let g = grid(32);
    let p = ModelParams { epsilon: 0.3, ..ModelParams::default() };
    let s0 = make_initial_data(&InitSpec { amplitude: 0.05, velocity_amplitude: 0.05, ..InitSpec::default() }, &p, &g).unwrap();
    for scheme in [Scheme::ImexBohm, Scheme::ExpRelaxImex] {
        for kind in [ModelKind::QhdUnscaled, ModelKind::Qdd] {
            let order = observed_order(&s0, kind, &p, scheme, 0.02, 1.0);
            assert!(order > 1.8, "{scheme} {kind}: observed order {order}");
        }
    }
}

#[test]
fn implicit_schemes_agree_with_erk4_on_non_stiff_points() {
    let g = grid(32);
    let p = ModelParams { epsilon: 0.1, tau: 1.0, ..ModelParams::default() };
    let s0 = make_initial_data(&InitSpec::default(), &p, &g).unwrap();
    for kind in [ModelKind::QhdUnscaled, ModelKind::Hd, ModelKind::Qdd, ModelKind::Dd] {
        let reference = final_state(&s0, kind, &p, Scheme::Erk4, 1e-3, 1.0);
        for scheme in [Scheme::ImexBohm, Scheme::ExpRelaxImex] {
            let s = final_state(&s0, kind, &p, scheme, 1e-3, 1.0);
            let d = s.max_abs_diff(&reference);
            assert!(d <= 1e-7, "{kind} {scheme}: {d:e}");
        }
    }
}

#[test]
fn mass_and_neutrality_are_conserved() {
    let g = grid(64);
    let p = ModelParams {
        epsilon: 0.2,
        tau: 0.5,
        rho_a_star: 1.2,
        rho_b_star: 0.8,
        c_star: 0.4,
        gamma_a: 5.0 / 3.0,
        ..ModelParams::default()
    };
    let s0 = make_initial_data(&InitSpec { amplitude: 0.02, velocity_amplitude: 0.02, ..InitSpec::default() }, &p, &g).unwrap();
    let mass0 = [s0.carrier_a.mass(), s0.carrier_b.mass()];
    for kind in ModelKind::ALL {
        for scheme in Scheme::ALL {
            let dt = if scheme == Scheme::Erk4 { 5e-4 } else { 2e-3 };
            let spec = SchemeSpec::new(scheme, dt, 1.0);
            let times: Vec<f64> = (1..=10).map(|i| 0.1 * i as f64).collect();
            let rec = integrate(&s0, kind, &p, &spec, &times).unwrap_or_else(|e| panic!("{kind} {scheme}: {e}"));
            for s in &rec.states {
                for (m0, m) in mass0.iter().zip([s.carrier_a.mass(), s.carrier_b.mass()]) {
                    assert!(((m - m0) / m0).abs() <= 1e-10, "{kind} {scheme}: mass drift {:e}", (m - m0) / m0);
                }
                assert!(s.neutrality_residual(&p).abs() <= 1e-10);
            }
        }
    }
}

#[test]
fn sampling_does_not_perturb_the_solution() {
    let g = grid(32);
    let p = ModelParams::default();
    let s0 = make_initial_data(&InitSpec::default(), &p, &g).unwrap();
    for scheme in Scheme::ALL {
        let spec = SchemeSpec::new(scheme, 0.01, 1.0);
        let dense = integrate(&s0, ModelKind::QhdUnscaled, &p, &spec, &[0.0, 0.5, 1.0]).unwrap();
        let sparse = integrate(&s0, ModelKind::QhdUnscaled, &p, &spec, &[1.0]).unwrap();
        let d = dense.states[2].max_abs_diff(&sparse.states[0]);
        assert!(d <= 1e-12, "{scheme}: {d:e}");
    }
}

#[test]
fn steady_state_does_not_drift() {
    let g = grid(64);
    let p = ModelParams { epsilon: 0.5, tau: 0.1, ..ModelParams::default() };
    let s0 = PlasmaState::steady(&g, &p);
    for kind in ModelKind::ALL {
        for scheme in Scheme::ALL {
            let spec = SchemeSpec::new(scheme, 1e-4, 0.1);
            let rec = integrate(&s0, kind, &p, &spec, &[]).unwrap();
            assert_eq!(rec.steps, 1000);
            let d = rec.states[0].max_abs_diff(&s0);
            assert!(d <= 1e-10, "{kind} {scheme}: {d:e}");
        }
    }
}

#[test]
fn velocity_relaxes_at_the_linear_rate() {
    // Negligible pressure, ε = 0 and identical carriers, so E = 0.
    let g = grid(32);
    let tau = 0.25;
    let p = ModelParams { epsilon: 0.0, tau, k_a: 1e-12, k_b: 1e-12, ..ModelParams::default() };
    let u = Field::from_fn(&g, |x| 1e-3 * x.sin());
    let mut s0 = PlasmaState::steady(&g, &p);
    s0.carrier_a.u = u.clone();
    s0.carrier_b.u = u;
    let u0 = 1e-3;
    for scheme in Scheme::ALL {
        let spec = SchemeSpec::new(scheme, 1e-2, 1.0);
        let times: Vec<f64> = (1..=10).map(|i| 0.1 * i as f64).collect();
        let rec = integrate(&s0, ModelKind::QhdUnscaled, &p, &spec, &times).unwrap();
        for s in &rec.states {
            let bound = u0 * (-s.time / tau).exp() * 1.05;
            assert!(s.carrier_a.u.max_abs() <= bound, "{scheme} t = {}", s.time);
        }
    }
}

#[test]
fn exponential_scheme_handles_stiff_relaxation() {
    let g = grid(32);
    let tau = 1e-3;
    let p = ModelParams { epsilon: 0.1, tau, ..ModelParams::default() };
    let init = InitSpec { velocity_amplitude: 0.1, ..InitSpec::default() };
    let s0 = make_initial_data(&init, &p, &g).unwrap();
    let dt = 10.0 * tau * tau;
    let t_end = 200.0 * dt;
    let spec = SchemeSpec::new(Scheme::ExpRelaxImex, dt, t_end);
    let times: Vec<f64> = (1..=4).map(|i| 50.0 * dt * i as f64).collect();
    let rec = integrate(&s0, ModelKind::QhdScaled, &p, &spec, &times).unwrap();
    assert!(rec.states.iter().all(|s| s.is_finite()));
    let umax: Vec<f64> = rec.states.iter().map(|s| s.carrier_a.u.max_abs()).collect();
    assert!(umax.iter().all(|&u| u < 0.1 * s0.carrier_a.u.max_abs()), "{umax:?}");
    // After the initial layer the velocity is slaved to the drift-diffusion flux.
    let qdd = final_state(&s0, ModelKind::Qdd, &p, Scheme::ImexBohm, dt, t_end);
    let last = &rec.states[3];
    for (a, b) in [(&last.carrier_a.psi, &qdd.carrier_a.psi), (&last.carrier_a.u, &qdd.carrier_a.u)] {
        let d = a.max_abs_diff(b);
        assert!(d < 1e-4, "{d:e}");
    }
}

#[test]
fn erk4_refuses_stiff_relaxation() {
    let g = grid(32);
    let p = ModelParams { tau: 1e-3, ..ModelParams::default() };
    let s0 = make_initial_data(&InitSpec::default(), &p, &g).unwrap();
    let spec = SchemeSpec::new(Scheme::Erk4, 1e-5, 1e-3);
    let err = integrate(&s0, ModelKind::QhdScaled, &p, &spec, &[]).unwrap_err();
    assert_eq!(err.kind(), "time step too large");
}
