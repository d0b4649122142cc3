//! Discrete Sobolev norms, the energy functionals `E₁`/`E₂` with the smallness
//! aggregate `δ_T`, the fourth-order wave-equation residual and dispersion
//! fitting.
//!
//! Homogeneous norms on `u` and `E` are taken as full `H^k` norms on the
//! periodic domain. Derivatives beyond order 4 are formed spectrally, which
//! equals composing `derivative` calls.

use nalgebra::{Matrix2, Matrix4, Vector2, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{perturbation, PlasmaState};
use crate::grid::Field;
use crate::models::ModelKind;
use crate::params::{Carrier, ModelParams};
use crate::stepper::TrajectoryRecord;

/// `‖D^j f‖²` for `j = 0..=max_order`, via Parseval.
fn derivative_norms_sq(f: &Field, max_order: usize) -> Vec<f64> {
    let g = f.grid();
    let hat = g.fft(f.values());
    let scale = g.length() / (g.n() as f64).powi(2);
    (0..=max_order)
        .map(|order| {
            hat.iter()
                .enumerate()
                .map(|(j, c)| {
                    let sym = if order == 0 { Complex64::new(1.0, 0.0) } else { g.derivative_symbol(j, order) };
                    sym.norm_sqr() * c.norm_sqr()
                })
                .sum::<f64>()
                * scale
        })
        .collect()
}

fn partial_sum(v: &[f64], k: usize) -> f64 {
    v[..=k].iter().sum()
}

/// `(Σ_{j≤k} ‖D^j f‖²_{L²})^{1/2}` with `‖f‖²_{L²} = dx Σ f²`.
pub fn sobolev_norm(f: &Field, k: usize) -> Result<f64> {
    if k > 4 {
        return Err(Error::InvalidSobolevIndex(k));
    }
    Ok(partial_sum(&derivative_norms_sq(f, k), k).sqrt())
}

/// Values of the energy functionals at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Energies {
    e1: f64,
    e2: f64,
    /// Max-in-time part of `δ_T` at this instant.
    delta_max_term: f64,
    /// Integrand of the time-integrated part of `δ_T`.
    delta_rate: f64,
}

fn energies(s: &PlasmaState, w_t: [&Field; 2], p: &ModelParams) -> Energies {
    let tau = p.tau;
    let eps2 = p.epsilon * p.epsilon;
    let view = perturbation(s, p);
    let mut out = Energies { e1: 0.0, e2: 0.0, delta_max_term: 0.0, delta_rate: 0.0 };
    for (i, c) in Carrier::BOTH.into_iter().enumerate() {
        let w = derivative_norms_sq(view.w(c), 6);
        let wt = derivative_norms_sq(w_t[i], 4);
        let u = derivative_norms_sq(&s.carrier(c).u, 5);
        out.e1 += partial_sum(&w, 4)
            + (tau + eps2) * w[5]
            + tau * eps2 * w[6]
            + tau.powi(2) * partial_sum(&wt, 3)
            + tau.powi(3) * wt[4]
            + tau.powi(2) * partial_sum(&u, 4)
            + tau.powi(3) * u[5];
        out.e2 += (partial_sum(&w, 5) - w[0])
            + eps2 * w[6]
            + partial_sum(&wt, 3)
            + tau * wt[4]
            + partial_sum(&u, 4)
            + tau * u[5];
        out.delta_max_term += partial_sum(&w, 4) + tau.powi(2) * partial_sum(&wt, 3) + tau.powi(2) * partial_sum(&u, 4);
        out.delta_rate += partial_sum(&u, 3) + partial_sum(&w, 5);
    }
    let e = derivative_norms_sq(&s.efield, 5);
    out.e1 += partial_sum(&e, 5);
    out.e2 += partial_sum(&e, 5);
    out.delta_rate += partial_sum(&e, 2);
    out
}

fn backward_rates(s: &PlasmaState, s_prev: &PlasmaState, p: &ModelParams, dt: f64) -> Result<[Field; 2]> {
    if !(dt > 0.0) {
        return Err(Error::InvalidInput(format!("dt must be > 0, got {dt}")));
    }
    if !s.grid().same(s_prev.grid()) {
        return Err(Error::GridMismatch);
    }
    let (w, w_prev) = (perturbation(s, p), perturbation(s_prev, p));
    let rate = |c| w.w(c).zip_map(w_prev.w(c), |a, b| (a - b) / dt);
    Ok([rate(Carrier::A), rate(Carrier::B)])
}

/// `E₁` at `s`, with `w_t ≈ (w − w_prev)/dt`.
pub fn energy_e1(s: &PlasmaState, s_prev: &PlasmaState, p: &ModelParams, dt: f64) -> Result<f64> {
    let [a, b] = backward_rates(s, s_prev, p, dt)?;
    Ok(energies(s, [&a, &b], p).e1)
}

/// `E₂` at `s`, with `w_t ≈ (w − w_prev)/dt`.
pub fn energy_e2(s: &PlasmaState, s_prev: &PlasmaState, p: &ModelParams, dt: f64) -> Result<f64> {
    let [a, b] = backward_rates(s, s_prev, p, dt)?;
    Ok(energies(s, [&a, &b], p).e2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub t: f64,
    pub e1: f64,
    pub e2: f64,
    /// `δ_T` accumulated up to `t`.
    pub delta_quantity: f64,
    pub mass_a: f64,
    pub mass_b: f64,
    pub neutrality_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergySummary {
    pub reports: Vec<EnergyReport>,
    pub e1_initial: f64,
    pub e1_max: f64,
    /// Trapezoid rule for `∫ E₂ dt` over the whole run.
    pub e2_integral: f64,
    pub delta_t: f64,
    /// `∫E₂ / E₁(0)`.
    pub dissipation_constant: f64,
}

impl EnergySummary {
    /// `max_t E₁(t) / E₁(0)`.
    pub fn boundedness_ratio(&self) -> f64 {
        self.e1_max / self.e1_initial
    }
}

/// Step observer accumulating energy diagnostics. Time derivatives are
/// centered at interior steps and one-sided at the two ends.
#[derive(Debug)]
pub struct EnergyMonitor {
    params: ModelParams,
    record_every: usize,
    window: Vec<PlasmaState>,
    evaluated: usize,
    reports: Vec<EnergyReport>,
    e1_initial: Option<f64>,
    e1_max: f64,
    e2_integral: f64,
    delta_max: f64,
    delta_integral: f64,
    previous: Option<(f64, Energies)>,
    error: Option<Error>,
}

impl EnergyMonitor {
    /// Keeps a report at every `record_every`-th step and at the last one.
    pub fn new(p: &ModelParams, record_every: usize) -> Self {
        EnergyMonitor {
            params: p.clone(),
            record_every: record_every.max(1),
            window: Vec::with_capacity(3),
            evaluated: 0,
            reports: Vec::new(),
            e1_initial: None,
            e1_max: 0.0,
            e2_integral: 0.0,
            delta_max: 0.0,
            delta_integral: 0.0,
            previous: None,
            error: None,
        }
    }

    pub fn observe(&mut self, s: &PlasmaState) {
        if self.error.is_some() {
            return;
        }
        self.window.push(s.clone());
        match self.window.len() {
            2 if self.evaluated == 0 => self.evaluate(0, 0, 1, false),
            3 => {
                self.evaluate(1, 0, 2, false);
                self.window.remove(0);
            }
            _ => {}
        }
    }

    pub fn finish(mut self) -> Result<EnergySummary> {
        if let Some(e) = self.error.take() {
            return Err(e);
        }
        match self.window.len() {
            0 => return Err(Error::InvalidInput("no states observed".into())),
            1 => self.evaluate(0, 0, 0, true),
            n => self.evaluate(n - 1, n - 2, n - 1, true),
        }
        if let Some(e) = self.error.take() {
            return Err(e);
        }
        let e1_initial = self.e1_initial.unwrap_or(0.0);
        let delta_t = self.delta_max + self.delta_integral;
        Ok(EnergySummary {
            reports: self.reports,
            e1_initial,
            e1_max: self.e1_max,
            e2_integral: self.e2_integral,
            delta_t,
            dissipation_constant: self.e2_integral / e1_initial,
        })
    }

    fn evaluate(&mut self, at: usize, lo: usize, hi: usize, last: bool) {
        let p = &self.params;
        let s = &self.window[at];
        let rates = if lo == hi {
            [Field::zeros(s.grid()), Field::zeros(s.grid())]
        } else {
            let dt = self.window[hi].time - self.window[lo].time;
            match backward_rates(&self.window[hi], &self.window[lo], p, dt) {
                Ok(r) => r,
                Err(e) => {
                    self.error = Some(e);
                    return;
                }
            }
        };
        let en = energies(s, [&rates[0], &rates[1]], p);
        let t = s.time;
        if let Some((t0, prev)) = self.previous {
            let h = t - t0;
            self.e2_integral += 0.5 * h * (prev.e2 + en.e2);
            self.delta_integral += 0.5 * h * (prev.delta_rate + en.delta_rate);
        }
        self.delta_max = self.delta_max.max(en.delta_max_term);
        self.e1_initial.get_or_insert(en.e1);
        self.e1_max = self.e1_max.max(en.e1);
        if self.evaluated % self.record_every == 0 || last {
            self.reports.push(EnergyReport {
                t,
                e1: en.e1,
                e2: en.e2,
                delta_quantity: self.delta_max + self.delta_integral,
                mass_a: s.carrier_a.mass(),
                mass_b: s.carrier_b.mass(),
                neutrality_residual: s.neutrality_residual(p),
            });
        }
        self.previous = Some((t, en));
        self.evaluated += 1;
    }
}

/// `∂tψ` from the continuity equation, `−∂x(ψ²u)/(2ψ)`.
fn psi_rate(s: &PlasmaState, c: Carrier) -> Field {
    let st = s.carrier(c);
    let flux_x = st.momentum().spectral_derivative(1);
    flux_x.zip_map(&st.psi, |f, v| -0.5 * f / v)
}

/// Pointwise residual of the fourth-order wave equation satisfied by each `ψ_i`,
///
/// `c_i(ψ_tt + ψ_t²/ψ − (ψ²u²)_xx/(2ψ)) + c_d ψ_t + (ε²/4)(ψ_xxxx − ψ_xx²/ψ)
///  + q(ψ²E)_x/(2ψ) − P(ψ²)_xx/(2ψ)`,
///
/// evaluated at the middle of three equispaced snapshots. `(c_i, c_d)` is
/// `(1, 1/τ)` for unscaled kinds, `(τ², 1)` for the diffusion-scaled kind and
/// `(0, 1)` for drift-diffusion kinds. `ε` is taken from `p` as given, so a
/// mismatched value shows up in the residual. `ψ_tt` uses the fourth-order
/// Hermite combination of values and continuity-equation rates.
pub fn wave_residual(window: &[PlasmaState], kind: ModelKind, p: &ModelParams) -> Result<(Field, Field)> {
    let [prev, mid, next] = window else {
        return Err(Error::InvalidInput(format!("need 3 snapshots, got {}", window.len())));
    };
    let h = mid.time - prev.time;
    if !(h > 0.0) || ((next.time - mid.time) - h).abs() > 1e-9 * h {
        return Err(Error::InvalidInput("snapshots must be equispaced in time".into()));
    }
    let (c_i, c_d) = if kind.is_parabolic() {
        (0.0, 1.0)
    } else {
        let (wf, wd) = kind.velocity_weights(p);
        (1.0 / wf, wd / wf)
    };
    let eps2 = p.epsilon * p.epsilon;
    let residual = |c: Carrier| -> Field {
        let psi = &mid.carrier(c).psi;
        let u = &mid.carrier(c).u;
        let rate_prev = psi_rate(prev, c);
        let rate_next = psi_rate(next, c);
        let psi_t = psi_rate(mid, c);
        let values = next.carrier(c).psi.zip_map(&prev.carrier(c).psi, |a, b| a + b);
        let psi_tt = values
            .zip_map(psi, |s, v| 2.0 * (s - 2.0 * v) / (h * h))
            .zip_map(&rate_next.zip_map(&rate_prev, |a, b| a - b), |a, d| a - d / (2.0 * h));
        let rho = psi.map(|v| v * v);
        let inertia_flux = (&rho * &(u * u)).spectral_derivative(2);
        let psi_xx = psi.spectral_derivative(2);
        let psi_xxxx = psi.spectral_derivative(4);
        let q = c.charge();
        let field_term = (&rho * &mid.efield).spectral_derivative(1);
        let pressure_xx = rho.map(|r| p.pressure(c, r)).spectral_derivative(2);
        let n = psi.values().len();
        let vals: Vec<f64> = (0..n)
            .map(|j| {
                let v = psi.values()[j];
                let pt = psi_t.values()[j];
                c_i * (psi_tt.values()[j] + pt * pt / v - inertia_flux.values()[j] / (2.0 * v))
                    + c_d * pt
                    + 0.25 * eps2 * (psi_xxxx.values()[j] - psi_xx.values()[j].powi(2) / v)
                    + q * field_term.values()[j] / (2.0 * v)
                    - pressure_xx.values()[j] / (2.0 * v)
            })
            .collect();
        Field::new(psi.grid(), vals).unwrap_or_else(|_| Field::constant(psi.grid(), f64::NAN))
    };
    let (a, b) = (residual(Carrier::A), residual(Carrier::B));
    if !a.is_finite() || !b.is_finite() {
        return Err(Error::NonFinite);
    }
    Ok((a, b))
}

/// Damped-sinusoid fit `A e^{−σt} cos(ωt + φ)` of the mode-`k` coefficient of
/// `w_a`, projected on its initial phase. Returns `(ω, σ)`; an overdamped
/// signal gives `ω = 0` and the slowest decay rate.
pub fn measure_dispersion(traj: &TrajectoryRecord, mode_k: usize) -> Result<(f64, f64)> {
    let states = &traj.states;
    if states.len() < 8 {
        return Err(Error::FitFailure(format!("need at least 8 samples, got {}", states.len())));
    }
    let g = states[0].grid();
    if mode_k == 0 || mode_k > g.dealias_cutoff() {
        return Err(Error::InvalidInput(format!("mode {mode_k} outside 1..={}", g.dealias_cutoff())));
    }
    let h = states[1].time - states[0].time;
    if !(h > 0.0) || states.windows(2).any(|w| ((w[1].time - w[0].time) - h).abs() > 1e-9 * h) {
        return Err(Error::FitFailure("samples must be equispaced".into()));
    }
    // Mode k ≥ 1 of w_a equals that of ψ_a.
    let coeff = |s: &PlasmaState| g.fft(s.carrier_a.psi.values())[mode_k] / g.n() as f64;
    let c0 = coeff(&states[0]);
    let peak = states.iter().map(|s| coeff(s).norm()).fold(0.0, f64::max);
    if !(peak >= 1e-13) {
        return Err(Error::FitFailure(format!("mode amplitude {peak:e} below 1e-13")));
    }
    let phase = if c0.norm() > 0.0 { c0.conj() / c0.norm() } else { Complex64::new(1.0, 0.0) };
    let t0 = states[0].time;
    let ts: Vec<f64> = states.iter().map(|s| s.time - t0).collect();
    let ys: Vec<f64> = states.iter().map(|s| (coeff(s) * phase).re).collect();

    // Linear prediction y[n+2] = a y[n+1] + b y[n].
    let mut ata = Matrix2::zeros();
    let mut atb = Vector2::zeros();
    for w in ys.windows(3) {
        let row = Vector2::new(w[1], w[0]);
        ata += row * row.transpose();
        atb += row * w[2];
    }
    let coef = ata
        .lu()
        .solve(&atb)
        .ok_or_else(|| Error::FitFailure("singular linear-prediction system".into()))?;
    let (a, b) = (coef[0], coef[1]);
    let disc = a * a + 4.0 * b;
    if disc >= 0.0 {
        let roots = [(a + disc.sqrt()) / 2.0, (a - disc.sqrt()) / 2.0];
        let slowest = roots.iter().map(|r| r.abs()).fold(0.0, f64::max);
        if !(slowest > 0.0) {
            return Err(Error::FitFailure("signal vanishes".into()));
        }
        return Ok((0.0, -slowest.ln() / h));
    }
    let z = Complex64::new(a / 2.0, (-disc).sqrt() / 2.0);
    let lambda = z.ln() / h;
    let (mut sigma, mut omega) = (-lambda.re, lambda.im.abs());

    // Amplitude and phase for fixed (σ, ω), then Gauss–Newton on all four.
    let mut m = Matrix2::zeros();
    let mut r = Vector2::zeros();
    for (&t, &y) in ts.iter().zip(&ys) {
        let d = (-sigma * t).exp();
        let row = Vector2::new(d * (omega * t).cos(), -d * (omega * t).sin());
        m += row * row.transpose();
        r += row * y;
    }
    let cs = m.lu().solve(&r).ok_or_else(|| Error::FitFailure("singular amplitude system".into()))?;
    let mut amp = cs[0].hypot(cs[1]);
    let mut phi = cs[1].atan2(cs[0]);
    for _ in 0..50 {
        let mut jtj = Matrix4::zeros();
        let mut jtr = Vector4::zeros();
        for (&t, &y) in ts.iter().zip(&ys) {
            let d = (-sigma * t).exp();
            let (sn, cn) = (omega * t + phi).sin_cos();
            let model = amp * d * cn;
            let grad = Vector4::new(d * cn, -t * model, -amp * d * sn * t, -amp * d * sn);
            jtj += grad * grad.transpose();
            jtr += grad * (y - model);
        }
        let Some(delta) = jtj.lu().solve(&jtr) else { break };
        amp += delta[0];
        sigma += delta[1];
        omega += delta[2];
        phi += delta[3];
        if delta[1].abs().max(delta[2].abs()) < 1e-14 * (1.0 + omega.abs() + sigma.abs()) {
            break;
        }
    }
    if !(sigma.is_finite() && omega.is_finite()) {
        return Err(Error::FitFailure("Gauss–Newton diverged".into()));
    }
    Ok((omega.abs(), sigma))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{make_initial_data, InitSpec};
    use crate::grid::Grid;
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn grid(n: usize) -> Arc<Grid> {
        Grid::new(n, 2.0 * PI).unwrap()
    }

    #[test]
    fn norms_of_zero_and_sine() {
        let g = grid(64);
        for k in 0..=4 {
            assert_eq!(sobolev_norm(&Field::zeros(&g), k).unwrap(), 0.0);
        }
        let s = Field::from_fn(&g, f64::sin);
        assert!((sobolev_norm(&s, 0).unwrap() - PI.sqrt()).abs() < 1e-13);
        assert!((sobolev_norm(&s, 1).unwrap() - (2.0 * PI).sqrt()).abs() < 1e-13);
        assert!(sobolev_norm(&s, 5).is_err());
    }

    #[test]
    fn parseval_matches_direct_derivatives() {
        let g = grid(64);
        let f = Field::from_fn(&g, |x| (x.cos()).exp());
        let norms = derivative_norms_sq(&f, 4);
        for order in 1..=4 {
            let d = f.derivative(order).unwrap().l2_norm().powi(2);
            assert!((norms[order] - d).abs() < 1e-12 * d.max(1.0), "order {order}");
        }
    }

    #[test]
    fn energies_vanish_at_rest() {
        let g = grid(32);
        let p = ModelParams::default();
        let s = PlasmaState::steady(&g, &p);
        assert_eq!(energy_e1(&s, &s, &p, 0.1).unwrap(), 0.0);
        assert_eq!(energy_e2(&s, &s, &p, 0.1).unwrap(), 0.0);
        let (a, b) = wave_residual(
            &[s.clone(), PlasmaState { time: 0.1, ..s.clone() }, PlasmaState { time: 0.2, ..s }],
            ModelKind::QhdUnscaled,
            &p,
        )
        .unwrap();
        assert!(a.max_abs() < 1e-12 && b.max_abs() < 1e-12);
    }

    #[test]
    fn e1_is_quadratic_in_amplitude() {
        let g = grid(32);
        let p = ModelParams::default();
        let e = |amp: f64| {
            let init = InitSpec { amplitude: amp, velocity_amplitude: amp, ..InitSpec::default() };
            let s = make_initial_data(&init, &p, &g).unwrap();
            energy_e1(&s, &s, &p, 0.1).unwrap()
        };
        let ratio = e(2e-4) / e(1e-4);
        assert!((ratio - 4.0).abs() < 0.04, "{ratio}");
    }

    #[test]
    fn wave_residual_needs_three_equispaced_states() {
        let g = grid(16);
        let p = ModelParams::default();
        let s = PlasmaState::steady(&g, &p);
        assert!(wave_residual(&[s.clone(), s.clone()], ModelKind::Hd, &p).is_err());
        let skew = [s.clone(), PlasmaState { time: 0.1, ..s.clone() }, PlasmaState { time: 0.3, ..s }];
        assert!(wave_residual(&skew, ModelKind::Hd, &p).is_err());
    }

    #[test]
    fn fit_recovers_a_synthetic_damped_cosine() {
        let g = grid(16);
        let p = ModelParams::default();
        let (omega, sigma) = (1.3, 0.4);
        let states: Vec<PlasmaState> = (0..40)
            .map(|i| {
                let t = 0.1 * i as f64;
                let amp = 1e-4 * (-sigma * t).exp() * (omega * t + 0.3).cos();
                let mut s = PlasmaState::steady(&g, &p);
                s.carrier_a.psi = Field::from_fn(&g, |x| 1.0 + amp * (2.0 * x).cos());
                s.time = t;
                s
            })
            .collect();
        let traj = TrajectoryRecord { times: states.iter().map(|s| s.time).collect(), states, steps: 0 };
        let (w, s) = measure_dispersion(&traj, 2).unwrap();
        assert!((w - omega).abs() < 1e-8 && (s - sigma).abs() < 1e-8, "{w} {s}");
    }

    #[test]
    fn fit_rejects_silent_modes() {
        let g = grid(16);
        let p = ModelParams::default();
        let states: Vec<PlasmaState> = (0..10)
            .map(|i| PlasmaState { time: i as f64, ..PlasmaState::steady(&g, &p) })
            .collect();
        let traj = TrajectoryRecord { times: states.iter().map(|s| s.time).collect(), states, steps: 0 };
        assert!(matches!(measure_dispersion(&traj, 1), Err(Error::FitFailure(_))));
    }
}
