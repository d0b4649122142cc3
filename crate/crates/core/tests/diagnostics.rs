use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use qhd_core::diagnostics::{measure_dispersion, sobolev_norm, wave_residual, EnergyMonitor};
use qhd_core::fields::{make_initial_data, InitSpec};
use qhd_core::{integrate, integrate_observed, Field, Grid, ModelKind, ModelParams, Scheme, SchemeSpec};

fn grid(n: usize) -> Arc<Grid> {
    Grid::new(n, 2.0 * PI).unwrap()
}

/// Trapezoid quadrature of `|f^{(j)}|²` on a fine grid, with derivatives of
/// `exp(cos x)` written out by hand.
fn exp_cos_h3_oracle() -> f64 {
    let n = 4096;
    let h = 2.0 * PI / n as f64;
    (0..n)
        .map(|i| {
            let x = i as f64 * h;
            let (s, c) = x.sin_cos();
            let e = c.exp();
            let d1 = -s * e;
            let d2 = (s * s - c) * e;
            let d3 = (s + 3.0 * s * c - s.powi(3)) * e;
            (e * e + d1 * d1 + d2 * d2 + d3 * d3) * h
        })
        .sum::<f64>()
        .sqrt()
}

#[test]
fn sobolev_norm_against_fine_quadrature() {
    let g = grid(64);
    let f = Field::from_fn(&g, |x| x.cos().exp());
    let got = sobolev_norm(&f, 3).unwrap();
    let want = exp_cos_h3_oracle();
    assert!(((got - want) / want).abs() < 1e-6, "{got} vs {want}");
    let norms: Vec<f64> = (0..=4).map(|k| sobolev_norm(&f, k).unwrap()).collect();
    assert!(norms.windows(2).all(|w| w[1] >= w[0]));
}

#[test]
fn energy_stays_bounded_on_small_data() {
    let g = grid(32);
    let p = ModelParams { epsilon: 0.1, tau: 1.0, ..ModelParams::default() };
    let s0 = make_initial_data(&InitSpec::default(), &p, &g).unwrap();
    let spec = SchemeSpec::new(Scheme::ImexBohm, 0.01, 10.0);
    let mut monitor = EnergyMonitor::new(&p, 10);
    integrate_observed(&s0, ModelKind::QhdUnscaled, &p, &spec, &[], &mut |s| monitor.observe(s)).unwrap();
    let summary = monitor.finish().unwrap();
    let ratio = summary.boundedness_ratio();
    println!("max E1 / E1(0) = {ratio}, c = {}", summary.dissipation_constant);
    assert!(ratio <= 2.0, "{ratio}");
    assert!(summary.e2_integral.is_finite() && summary.dissipation_constant > 0.0);
    for r in &summary.reports {
        assert!(r.e1 >= 0.0 && r.e2 >= 0.0);
        assert!(((r.mass_a - s0.carrier_a.mass()) / s0.carrier_a.mass()).abs() <= 1e-10);
        assert!(r.neutrality_residual.abs() <= 1e-10);
    }
}

fn residual_at(n: usize, kind: ModelKind, p: &ModelParams, probe: &ModelParams) -> f64 {
    let g = grid(n);
    let init = InitSpec { amplitude: 0.05, velocity_amplitude: 0.05, ..InitSpec::default() };
    let s0 = make_initial_data(&init, p, &g).unwrap();
    let dt = 0.25 * g.dx();
    let steps = (0.5 / dt).round();
    let t_end = steps * dt;
    let spec = SchemeSpec::new(Scheme::Erk4, dt, t_end);
    let times = [t_end - 2.0 * dt, t_end - dt, t_end];
    let rec = integrate(&s0, kind, p, &spec, &times).unwrap();
    let (a, b) = wave_residual(&rec.states, kind, probe).unwrap();
    a.max_abs().max(b.max_abs())
}

#[test]
fn wave_residual_drops_under_refinement() {
    let p = ModelParams { epsilon: 0.1, tau: 1.0, ..ModelParams::default() };
    let coarse = residual_at(128, ModelKind::QhdUnscaled, &p, &p);
    let fine = residual_at(256, ModelKind::QhdUnscaled, &p, &p);
    println!("residual n=128: {coarse:e}, n=256: {fine:e}");
    assert!(coarse / fine >= 10.0, "{coarse:e} → {fine:e}");
}

#[test]
fn wave_residual_detects_a_wrong_planck_constant() {
    let hd = ModelParams { epsilon: 0.0, ..ModelParams::default() };
    let right = residual_at(64, ModelKind::Hd, &hd, &hd);
    let wrong = residual_at(64, ModelKind::Hd, &hd, &hd.with_epsilon(0.5));
    println!("HD residual: right ε {right:e}, wrong ε {wrong:e}");
    assert!(wrong > 100.0 * right);
}

/// Eigenvalues of the linearization about the steady state for one mode,
/// in the variables (w_a, w_b, ∂t w_a, ∂t w_b) of the unscaled system.
fn linear_eigenvalues(p: &ModelParams, k: f64) -> Vec<nalgebra::Complex<f64>> {
    let mut m = DMatrix::<f64>::zeros(4, 4);
    let rho = [p.rho_a_star, p.rho_b_star];
    let gamma = [p.gamma_a, p.gamma_b];
    let kk = [p.k_a, p.k_b];
    let mut stiff = DMatrix::<f64>::zeros(2, 2);
    for i in 0..2 {
        let dp = kk[i] * gamma[i] * rho[i].powf(gamma[i] - 1.0);
        stiff[(i, i)] = dp * k * k + p.epsilon.powi(2) * k.powi(4) / 4.0 + rho[i] / p.lambda.powi(2);
    }
    let off = -(rho[0] * rho[1]).sqrt() / p.lambda.powi(2);
    stiff[(0, 1)] = off;
    stiff[(1, 0)] = off;
    for i in 0..2 {
        m[(i, 2 + i)] = 1.0;
        m[(2 + i, 2 + i)] = -1.0 / p.tau;
        for j in 0..2 {
            m[(2 + i, j)] = -stiff[(i, j)];
        }
    }
    m.complex_eigenvalues().iter().copied().collect()
}

#[test]
fn dispersion_matches_the_linearization() {
    for (eps, tau, k) in [(0.1, 0.5, 1usize), (0.3, 2.0, 2)] {
        let p = ModelParams { epsilon: eps, tau, ..ModelParams::default() };
        let g = grid(32);
        let s0 = make_initial_data(&InitSpec::single_mode(1e-6, k), &p, &g).unwrap();
        let h = 0.05;
        let times: Vec<f64> = (0..120).map(|i| h * i as f64).collect();
        let spec = SchemeSpec::new(Scheme::Erk4, 0.01, *times.last().unwrap());
        let rec = integrate(&s0, ModelKind::QhdUnscaled, &p, &spec, &times).unwrap();
        let (omega, sigma) = measure_dispersion(&rec, k).unwrap();
        // The neutral mode excites the eigenpair of the scalar relation
        // λ² + λ/τ + P′k² + ε²k⁴/4 = 0.
        let stiff = 2.0 * (k * k) as f64 + 0.25 * eps * eps * (k as f64).powi(4);
        let eig = linear_eigenvalues(&p, k as f64);
        let hit = eig
            .iter()
            .filter(|&&z| (z * z + z / tau + stiff).norm() < 1e-8)
            .max_by(|a, b| a.im.total_cmp(&b.im))
            .expect("neutral branch among the eigenvalues");
        println!("ε={eps} τ={tau} k={k}: fit ({omega}, {sigma}) oracle ({}, {})", hit.im, -hit.re);
        assert!(((omega - hit.im) / hit.im).abs() < 0.01);
        assert!(((sigma + hit.re) / hit.re).abs() < 0.01);
    }
}
