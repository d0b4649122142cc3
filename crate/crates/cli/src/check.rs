//! Built-in invariant suite behind `qhd check`. Each entry runs in well under
//! a second on a small grid.

use std::f64::consts::PI;
use std::sync::Arc;

use qhd_core::diagnostics::EnergyMonitor;
use qhd_core::fields::{make_initial_data, InitSpec, PerturbedCarriers};
use qhd_core::limits::{apply_diffusion_scaling, code_path_equivalence, ScalingDirection};
use qhd_core::{integrate, integrate_observed, solve_efield, Field, Grid, ModelKind, ModelParams, PlasmaState, Scheme, SchemeSpec};

use crate::output::fmt_f64;

#[derive(Debug, Clone)]
pub struct CheckRow {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
}

fn row(name: &str, value: Result<f64, qhd_core::Error>, threshold: f64) -> CheckRow {
    let value = value.unwrap_or(f64::INFINITY);
    CheckRow { name: name.into(), value, threshold, passed: value <= threshold }
}

fn grid(n: usize) -> Arc<Grid> {
    Grid::new(n, 2.0 * PI).expect("valid grid")
}

fn steady_drift() -> Result<f64, qhd_core::Error> {
    let g = grid(32);
    let p = ModelParams::default();
    let s0 = PlasmaState::steady(&g, &p);
    let mut worst = 0.0_f64;
    for kind in ModelKind::ALL {
        for scheme in Scheme::ALL {
            let rec = integrate(&s0, kind, &p, &SchemeSpec::new(scheme, 1e-3, 0.1), &[])?;
            worst = worst.max(rec.states[0].max_abs_diff(&s0));
        }
    }
    Ok(worst)
}

fn conservation() -> Result<f64, qhd_core::Error> {
    let g = grid(64);
    let p = ModelParams::default();
    let init = InitSpec { amplitude: 0.02, velocity_amplitude: 0.02, carriers: PerturbedCarriers::AOnly, ..InitSpec::default() };
    let s0 = make_initial_data(&init, &p, &g)?;
    let m0 = [s0.carrier_a.mass(), s0.carrier_b.mass()];
    let mut worst = 0.0_f64;
    let times: Vec<f64> = (1..=5).map(|i| 0.2 * i as f64).collect();
    let rec = integrate(&s0, ModelKind::QhdUnscaled, &p, &SchemeSpec::new(Scheme::ImexBohm, 0.01, 1.0), &times)?;
    for s in &rec.states {
        for (m, m0) in [s.carrier_a.mass(), s.carrier_b.mass()].iter().zip(m0) {
            worst = worst.max(((m - m0) / m0).abs());
        }
        worst = worst.max(s.neutrality_residual(&p).abs());
    }
    Ok(worst)
}

fn poisson_cosine() -> Result<f64, qhd_core::Error> {
    let g = grid(64);
    let p = ModelParams { lambda: 0.5, ..ModelParams::default() };
    let rho_a = Field::from_fn(&g, |x| 1.0 + 0.3 * (2.0 * x).cos());
    let rho_b = Field::constant(&g, 1.0);
    let e = solve_efield(&rho_a, &rho_b, &p)?;
    // λ² E′ = 0.3 cos 2x  ⇒  E = 0.3 sin 2x / (2 λ²).
    let exact = Field::from_fn(&g, |x| 0.3 * (2.0 * x).sin() / (2.0 * 0.25));
    Ok(e.max_abs_diff(&exact))
}

fn classical_equivalence() -> Result<f64, qhd_core::Error> {
    let g = grid(32);
    let init = InitSpec { amplitude: 0.05, velocity_amplitude: 0.05, ..InitSpec::default() };
    let (hd, dd) = code_path_equivalence(&ModelParams::default(), &init, &g, &SchemeSpec::new(Scheme::ImexBohm, 0.01, 0.5), &[0.25, 0.5])?;
    Ok(hd.max(dd))
}

fn scaling_round_trip() -> Result<f64, qhd_core::Error> {
    let g = grid(32);
    let p = ModelParams { tau: 0.3, ..ModelParams::default() };
    let s0 = make_initial_data(&InitSpec::default(), &p, &g)?;
    let rec = integrate(&s0, ModelKind::QhdUnscaled, &p, &SchemeSpec::new(Scheme::ImexBohm, 0.01, 0.2), &[0.1, 0.2])?;
    let fwd = apply_diffusion_scaling(&rec, p.tau, ScalingDirection::Forward);
    let back = apply_diffusion_scaling(&fwd, p.tau, ScalingDirection::Inverse);
    let states = back.states.iter().zip(&rec.states).map(|(a, b)| a.max_abs_diff(b));
    let times = back.times.iter().zip(&rec.times).map(|(a, b)| (a - b).abs());
    Ok(states.chain(times).fold(0.0, f64::max))
}

fn energy_ratio() -> Result<f64, qhd_core::Error> {
    let g = grid(32);
    let p = ModelParams::default();
    let s0 = make_initial_data(&InitSpec::default(), &p, &g)?;
    let mut monitor = EnergyMonitor::new(&p, 10);
    integrate_observed(&s0, ModelKind::QhdUnscaled, &p, &SchemeSpec::new(Scheme::ImexBohm, 0.01, 2.0), &[], &mut |s| {
        monitor.observe(s)
    })?;
    Ok(monitor.finish()?.boundedness_ratio())
}

pub fn run_checks() -> Vec<CheckRow> {
    vec![
        row("steady state preserved (all models, all schemes)", steady_drift(), 1e-10),
        row("mass and neutrality conserved", conservation(), 1e-10),
        row("Poisson cosine solution", poisson_cosine(), 1e-12),
        row("QHD(ε=0) ≡ HD and QDD(ε=0) ≡ DD", classical_equivalence(), 1e-11),
        row("diffusion scaling round trip", scaling_round_trip(), 1e-14),
        row("max E1 / E1(0)", energy_ratio(), 2.0),
    ]
}

pub fn render(rows: &[CheckRow]) -> String {
    let width = rows.iter().map(|r| r.name.chars().count()).max().unwrap_or(0);
    let mut out = String::new();
    for r in rows {
        let pad = width - r.name.chars().count();
        out.push_str(&format!(
            "{}{}  {}  value {}  threshold {}\n",
            r.name,
            " ".repeat(pad),
            if r.passed { "PASS" } else { "FAIL" },
            fmt_f64(r.value),
            fmt_f64(r.threshold)
        ));
    }
    out
}
