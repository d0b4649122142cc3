//! Time integration for all model kinds.
//!
//! Every scheme splits the tendency as `F(U) = M U + N(U)` where `M` is the
//! linearization about the steady state (see [`linear`]) and `N` the
//! remainder. ERK4 ignores the split; the other two schemes treat `M`
//! implicitly or exponentially in wavenumber space.

mod linear;

use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{CarrierState, PlasmaState};
use crate::grid::{Field, Grid};
use crate::models::{self, ModelKind, Tendency};
use crate::params::{Carrier, ModelParams};
use crate::poisson::{solve_efield, solve_efield_projected};

use linear::{apply_blocks, LinearOperator, Propagators, ARS_GAMMA};

/// Stability constant of classical RK4 along the imaginary and negative real axes.
const RK4_STABILITY_RADIUS: f64 = 2.78;

/// A step whose length is within this fraction of `dt` uses `dt` itself.
const LANDING_SLACK: f64 = 1e-9;

const MAX_CACHED_PROPAGATORS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scheme {
    #[serde(rename = "ERK4")]
    Erk4,
    #[serde(rename = "IMEX_BOHM")]
    ImexBohm,
    #[serde(rename = "EXP_RELAX_IMEX")]
    ExpRelaxImex,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Erk4, Scheme::ImexBohm, Scheme::ExpRelaxImex];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Erk4 => "ERK4",
            Scheme::ImexBohm => "IMEX_BOHM",
            Scheme::ExpRelaxImex => "EXP_RELAX_IMEX",
        }
    }

    /// Nominal temporal order.
    pub fn order(self) -> u32 {
        match self {
            Scheme::Erk4 => 4,
            Scheme::ImexBohm | Scheme::ExpRelaxImex => 2,
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Scheme {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Scheme::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown scheme {s:?} (expected ERK4, IMEX_BOHM or EXP_RELAX_IMEX)"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeSpec {
    pub scheme: Scheme,
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "default_cfl_guard")]
    pub cfl_guard: f64,
    /// Minimum allowed `ψ`; `None` means `1e-8·√ρ_min*`.
    #[serde(default)]
    pub positivity_floor: Option<f64>,
}

fn default_cfl_guard() -> f64 {
    0.9
}

impl SchemeSpec {
    pub fn new(scheme: Scheme, dt: f64, t_end: f64) -> Self {
        SchemeSpec { scheme, dt, t_end, cfl_guard: default_cfl_guard(), positivity_floor: None }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidScheme(m));
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return bad(format!("dt must be > 0, got {}", self.dt));
        }
        if !self.t_end.is_finite() || !(self.t_end == 0.0 || self.t_end >= self.dt) {
            return bad(format!("t_end must be 0 or ≥ dt, got {}", self.t_end));
        }
        if !(self.cfl_guard > 0.0 && self.cfl_guard <= 1.0) {
            return bad(format!("cfl_guard must lie in (0, 1], got {}", self.cfl_guard));
        }
        if let Some(f) = self.positivity_floor {
            if !(f >= 0.0) || !f.is_finite() {
                return bad(format!("positivity_floor must be ≥ 0, got {f}"));
            }
        }
        Ok(())
    }

    pub fn floor(&self, p: &ModelParams) -> f64 {
        self.positivity_floor
            .unwrap_or_else(|| 1e-8 * p.rho_a_star.min(p.rho_b_star).sqrt())
    }
}

/// Snapshots at the requested sample times.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub states: Vec<PlasmaState>,
    /// Number of time steps taken.
    pub steps: usize,
}

impl TrajectoryRecord {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<&PlasmaState> {
        self.states.last()
    }

    /// Snapshot whose time is closest to `t`.
    pub fn nearest(&self, t: f64) -> Option<&PlasmaState> {
        self.states
            .iter()
            .min_by(|a, b| (a.time - t).abs().total_cmp(&(b.time - t).abs()))
    }
}

type Vars = Vec<Vec<f64>>;
type Spectral = Vec<Vec<Complex64>>;

/// Reusable integrator for one `(kind, params, grid)` triple.
#[derive(Debug)]
pub struct Stepper {
    kind: ModelKind,
    params: ModelParams,
    spec: SchemeSpec,
    grid: Arc<Grid>,
    op: LinearOperator,
    cache: HashMap<u64, Arc<Propagators>>,
    floor: f64,
}

impl Stepper {
    pub fn new(kind: ModelKind, p: &ModelParams, spec: &SchemeSpec, grid: &Arc<Grid>) -> Result<Self> {
        p.validate()?;
        spec.validate()?;
        Ok(Stepper {
            kind,
            params: p.clone(),
            spec: spec.clone(),
            grid: grid.clone(),
            op: LinearOperator::new(kind, p, grid),
            cache: HashMap::new(),
            floor: spec.floor(p),
        })
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn spec(&self) -> &SchemeSpec {
        &self.spec
    }

    /// Largest admissible step at state `s` before the guard factor, and the
    /// constraint that binds.
    pub fn stability_limit(&self, s: &PlasmaState) -> (f64, &'static str) {
        let umax = if self.kind.is_parabolic() {
            0.0
        } else {
            s.carrier_a.u.max_abs().max(s.carrier_b.u.max_abs())
        };
        let advective = if umax > 0.0 { self.grid.dx() / umax } else { f64::INFINITY };
        if self.spec.scheme != Scheme::Erk4 {
            return (advective, "advective CFL");
        }
        let k_cut = 2.0 * std::f64::consts::PI / self.grid.length() * self.grid.dealias_cutoff() as f64;
        let rate = self.op.spectral_radius + umax * k_cut;
        let dispersive = if rate > 0.0 { RK4_STABILITY_RADIUS / rate } else { f64::INFINITY };
        if dispersive < advective {
            (dispersive, "explicit dispersive CFL")
        } else {
            (advective, "advective CFL")
        }
    }

    /// Advances `s` by `dt`.
    pub fn step(&mut self, s: &PlasmaState, dt: f64) -> Result<PlasmaState> {
        if !s.grid().same(&self.grid) {
            return Err(Error::GridMismatch);
        }
        let (limit, reason) = self.stability_limit(s);
        let limit = self.spec.cfl_guard * limit;
        if dt > limit {
            return Err(Error::StepTooLarge { dt, limit, reason });
        }
        let t_new = s.time + dt;
        let u0 = self.to_vars(s);
        let next = match self.spec.scheme {
            Scheme::Erk4 => self.erk4(&u0, dt),
            Scheme::ImexBohm => self.ars222(&u0, dt),
            Scheme::ExpRelaxImex => self.etd2(&u0, dt),
        }
        .map_err(|e| e.at_time(t_new))?;
        let next = self.project_mass(s, next);
        self.finish(next, t_new)
    }

    /// Rescales each `ψ_i` so that `⟨ψ_i²⟩` matches the start of the step.
    /// The Madelung form conserves mass only semi-discretely; the Runge–Kutta
    /// stages do not preserve the quadratic invariant exactly.
    fn project_mass(&self, s: &PlasmaState, mut vars: Vars) -> Vars {
        if self.kind.is_parabolic() {
            return vars;
        }
        let base = self.base();
        for (i, c) in Carrier::BOTH.into_iter().enumerate() {
            let target = s.carrier(c).mass();
            let n = vars[i].len() as f64;
            let mass = vars[i].iter().map(|w| (w + base[i]).powi(2)).sum::<f64>() / n;
            let factor = (target / mass).sqrt();
            if factor.is_finite() && factor > 0.0 {
                for w in vars[i].iter_mut() {
                    *w = (*w + base[i]) * factor - base[i];
                }
            }
        }
        vars
    }

    fn base(&self) -> [f64; 2] {
        if self.kind.is_parabolic() {
            [self.params.rho_a_star, self.params.rho_b_star]
        } else {
            [self.params.psi_star(Carrier::A), self.params.psi_star(Carrier::B)]
        }
    }

    /// Deviation variables: `(ψ − √ρ*, u)` per carrier, or `ρ − ρ*` for
    /// parabolic kinds.
    fn to_vars(&self, s: &PlasmaState) -> Vars {
        let base = self.base();
        let a = &s.carrier_a;
        let b = &s.carrier_b;
        if self.kind.is_parabolic() {
            let r = |c: &CarrierState, b0: f64| c.psi.values().iter().map(|v| v * v - b0).collect();
            vec![r(a, base[0]), r(b, base[1])]
        } else {
            let w = |c: &CarrierState, b0: f64| c.psi.values().iter().map(|v| v - b0).collect();
            vec![w(a, base[0]), w(b, base[1]), a.u.values().to_vec(), b.u.values().to_vec()]
        }
    }

    fn carrier_fields(&self, vars: &Vars) -> Result<[Field; 2]> {
        let base = self.base();
        let mut out = Vec::with_capacity(2);
        for i in 0..2 {
            let v: Vec<f64> = vars[i].iter().map(|x| x + base[i]).collect();
            let min = v.iter().copied().fold(f64::INFINITY, f64::min);
            if !v.iter().all(|x| x.is_finite()) {
                let max = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
                return Err(Error::Blowup { time: f64::NAN, max });
            }
            if !(min > 0.0) {
                return Err(Error::VacuumBreach { min: if self.kind.is_parabolic() { min.max(0.0).sqrt() } else { min }, time: None });
            }
            let psi = if self.kind.is_parabolic() { v.into_iter().map(f64::sqrt).collect() } else { v };
            out.push(Field::from_raw(&self.grid, psi));
        }
        let b = out.pop().unwrap();
        let a = out.pop().unwrap();
        Ok([a, b])
    }

    fn assemble(&self, vars: &Vars, time: f64, stage: bool) -> Result<PlasmaState> {
        let [psi_a, psi_b] = self.carrier_fields(vars)?;
        let (u_a, u_b) = if self.kind.is_parabolic() {
            (Field::zeros(&self.grid), Field::zeros(&self.grid))
        } else {
            (Field::from_raw(&self.grid, vars[2].clone()), Field::from_raw(&self.grid, vars[3].clone()))
        };
        let a = CarrierState { psi: psi_a, u: u_a };
        let b = CarrierState { psi: psi_b, u: u_b };
        let efield = if stage {
            solve_efield_projected(&a.density(), &b.density(), &self.params)?
        } else {
            solve_efield(&a.density(), &b.density(), &self.params)?
        };
        Ok(PlasmaState { carrier_a: a, carrier_b: b, efield, time })
    }

    fn tendency(&self, vars: &Vars) -> Result<Vars> {
        let s = self.assemble(vars, 0.0, true)?;
        Ok(match models::rhs(&s, self.kind, &self.params)? {
            Tendency::Hyperbolic { a, b } => vec![
                a.d_psi.into_values(),
                b.d_psi.into_values(),
                a.d_u.into_values(),
                b.d_u.into_values(),
            ],
            Tendency::Parabolic { d_rho_a, d_rho_b } => vec![d_rho_a.into_values(), d_rho_b.into_values()],
        })
    }

    fn finish(&self, vars: Vars, time: f64) -> Result<PlasmaState> {
        let mut s = self.assemble(&vars, time, false).map_err(|e| e.at_time(time))?;
        let min = s.carrier_a.psi.min().min(s.carrier_b.psi.min());
        if min < self.floor {
            return Err(Error::VacuumBreach { min, time: Some(time) });
        }
        if self.kind.is_parabolic() {
            let eps = self.kind.effective_epsilon(&self.params);
            for c in Carrier::BOTH {
                let rho = s.carrier(c).density();
                let flux = models::drift_flux(&rho, &s.efield, c, eps, &self.params);
                let u = flux.zip_map(&rho, |j, r| j / r);
                match c {
                    Carrier::A => s.carrier_a.u = u,
                    Carrier::B => s.carrier_b.u = u,
                }
            }
        }
        if !s.is_finite() {
            let max = s.fields().iter().map(|f| f.max_abs()).fold(0.0, f64::max);
            return Err(Error::Blowup { time, max });
        }
        Ok(s)
    }

    fn is_velocity(&self, i: usize) -> bool {
        !self.kind.is_parabolic() && i >= 2
    }

    /// FFT of each variable; velocities are rotated to `v̂ = −i·sgn(k)·û`.
    fn forward(&self, vars: &Vars) -> Spectral {
        vars.iter()
            .enumerate()
            .map(|(i, v)| {
                let mut hat = self.grid.fft(v);
                if self.is_velocity(i) {
                    for (h, s) in hat.iter_mut().zip(&self.op.signs) {
                        *h *= Complex64::new(0.0, -s);
                    }
                }
                hat
            })
            .collect()
    }

    fn inverse(&self, spec: Spectral) -> Vars {
        spec.into_iter()
            .enumerate()
            .map(|(i, mut hat)| {
                if self.is_velocity(i) {
                    for (h, s) in hat.iter_mut().zip(&self.op.signs) {
                        *h *= Complex64::new(0.0, *s);
                    }
                }
                self.grid.ifft(hat)
            })
            .collect()
    }

    /// Nonlinear remainder `N(U) = F(U) − M U` in spectral form.
    fn remainder(&self, u: &Spectral) -> Result<Spectral> {
        let f = self.forward(&self.tendency(&self.inverse(u.clone()))?);
        let mu = self.op.apply(u);
        Ok(f.into_iter().zip(mu).map(|(a, b)| sub(&a, &b)).collect())
    }

    fn propagators(&mut self, dt: f64) -> Arc<Propagators> {
        let key = dt.to_bits();
        if let Some(p) = self.cache.get(&key) {
            return p.clone();
        }
        let p = Arc::new(match self.spec.scheme {
            Scheme::ImexBohm => Propagators::imex(&self.op, dt),
            _ => Propagators::exponential(&self.op, dt),
        });
        if self.cache.len() >= MAX_CACHED_PROPAGATORS {
            let nominal = self.spec.dt.to_bits();
            self.cache.retain(|k, _| *k == nominal);
        }
        self.cache.insert(key, p.clone());
        p
    }

    fn erk4(&self, u0: &Vars, dt: f64) -> Result<Vars> {
        let k1 = self.tendency(u0)?;
        let k2 = self.tendency(&axpy(u0, 0.5 * dt, &k1))?;
        let k3 = self.tendency(&axpy(u0, 0.5 * dt, &k2))?;
        let k4 = self.tendency(&axpy(u0, dt, &k3))?;
        Ok(u0
            .iter()
            .enumerate()
            .map(|(i, u)| {
                u.iter()
                    .enumerate()
                    .map(|(j, v)| v + dt / 6.0 * (k1[i][j] + 2.0 * k2[i][j] + 2.0 * k3[i][j] + k4[i][j]))
                    .collect()
            })
            .collect())
    }

    /// ARS(2,2,2): L-stable two-stage IMEX with the whole linear block implicit.
    fn ars222(&mut self, u0: &Vars, dt: f64) -> Result<Vars> {
        let props = self.propagators(dt);
        let Propagators::Imex { solve } = props.as_ref() else { unreachable!() };
        let d = self.op.dim;
        let g = ARS_GAMMA;
        let delta = 1.0 - 1.0 / (2.0 * g);

        let u = self.forward(u0);
        let n1 = self.remainder(&u)?;
        let u2 = apply_blocks(solve, d, &combine(&[(1.0, &u), (dt * g, &n1)]));
        let n2 = self.remainder(&u2)?;
        let mu2 = self.op.apply(&u2);
        let rhs = combine(&[(1.0, &u), (dt * (1.0 - g), &mu2), (dt * delta, &n1), (dt * (1.0 - delta), &n2)]);
        let u3 = apply_blocks(solve, d, &rhs);
        Ok(self.inverse(u3))
    }

    /// Second-order exponential time differencing (Cox–Matthews ETD2RK).
    fn etd2(&mut self, u0: &Vars, dt: f64) -> Result<Vars> {
        let props = self.propagators(dt);
        let Propagators::Exponential { exp, phi1, phi2 } = props.as_ref() else { unreachable!() };
        let d = self.op.dim;

        let u = self.forward(u0);
        let n0 = self.remainder(&u)?;
        let a = combine(&[
            (1.0, &apply_blocks(exp, d, &u)),
            (dt, &apply_blocks(phi1, d, &n0)),
        ]);
        let na = self.remainder(&a)?;
        let diff = combine(&[(1.0, &na), (-1.0, &n0)]);
        let next = combine(&[(1.0, &a), (dt, &apply_blocks(phi2, d, &diff))]);
        Ok(self.inverse(next))
    }
}

fn axpy(u: &Vars, a: f64, k: &Vars) -> Vars {
    u.iter()
        .zip(k)
        .map(|(x, y)| x.iter().zip(y).map(|(x, y)| x + a * y).collect())
        .collect()
}

fn sub(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn combine(terms: &[(f64, &Spectral)]) -> Spectral {
    let (c0, first) = terms[0];
    let mut out: Spectral = first.iter().map(|v| v.iter().map(|z| z * c0).collect()).collect();
    for (c, t) in &terms[1..] {
        for (o, v) in out.iter_mut().zip(t.iter()) {
            for (a, b) in o.iter_mut().zip(v) {
                *a += b * c;
            }
        }
    }
    out
}

/// One step of length `spec.dt`.
pub fn step(s: &PlasmaState, kind: ModelKind, p: &ModelParams, spec: &SchemeSpec) -> Result<PlasmaState> {
    Stepper::new(kind, p, spec, s.grid())?.step(s, spec.dt)
}

/// Runs from `s0` to `s0.time + spec.t_end`, recording snapshots at the
/// absolute `sample_times` (default: the final time only).
pub fn integrate(
    s0: &PlasmaState,
    kind: ModelKind,
    p: &ModelParams,
    spec: &SchemeSpec,
    sample_times: &[f64],
) -> Result<TrajectoryRecord> {
    integrate_observed(s0, kind, p, spec, sample_times, &mut |_| {})
}

/// As [`integrate`], calling `observer` on `s0` and after every step.
pub fn integrate_observed(
    s0: &PlasmaState,
    kind: ModelKind,
    p: &ModelParams,
    spec: &SchemeSpec,
    sample_times: &[f64],
    observer: &mut dyn FnMut(&PlasmaState),
) -> Result<TrajectoryRecord> {
    let mut stepper = Stepper::new(kind, p, spec, s0.grid())?;
    let t0 = s0.time;
    let t_end = t0 + spec.t_end;
    let slack = 1e-12 * t_end.abs().max(1.0);
    let samples: Vec<f64> = if sample_times.is_empty() { vec![t_end] } else { sample_times.to_vec() };
    for (i, &t) in samples.iter().enumerate() {
        if !(t >= t0 - slack && t <= t_end + slack) {
            return Err(Error::InvalidScheme(format!("sample time {t} outside [{t0}, {t_end}]")));
        }
        if i > 0 && !(t > samples[i - 1]) {
            return Err(Error::InvalidScheme("sample times must be strictly increasing".into()));
        }
    }

    let dt = spec.dt;
    let mut s = s0.clone();
    observer(&s);
    let mut record = TrajectoryRecord { times: Vec::new(), states: Vec::new(), steps: 0 };
    for &target in &samples {
        let start = s.time;
        let span = target - start;
        if span > slack {
            let nsteps = ((span / dt) - LANDING_SLACK).ceil().max(1.0) as usize;
            for i in 0..nsteps {
                let last = i + 1 == nsteps;
                let h = if last {
                    let rem = span - (nsteps - 1) as f64 * dt;
                    if (rem - dt).abs() <= LANDING_SLACK * dt { dt } else { rem }
                } else {
                    dt
                };
                s = stepper.step(&s, h)?;
                s.time = if last { target } else { start + (i + 1) as f64 * dt };
                record.steps += 1;
                observer(&s);
            }
        }
        let mut snap = s.clone();
        snap.time = target;
        record.times.push(target);
        record.states.push(snap);
    }
    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{make_initial_data, InitSpec};
    use std::f64::consts::PI;

    fn grid(n: usize) -> Arc<Grid> {
        Grid::new(n, 2.0 * PI).unwrap()
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in Scheme::ALL {
            assert_eq!(s.name().parse::<Scheme>().unwrap(), s);
            let json = serde_json::to_string(&s).unwrap();
            assert_eq!(json, format!("\"{}\"", s.name()));
        }
    }

    #[test]
    fn spec_validation() {
        assert!(SchemeSpec::new(Scheme::Erk4, 0.0, 1.0).validate().is_err());
        assert!(SchemeSpec::new(Scheme::Erk4, 0.1, 0.05).validate().is_err());
        assert!(SchemeSpec::new(Scheme::Erk4, 0.1, 0.0).validate().is_ok());
        let mut s = SchemeSpec::new(Scheme::Erk4, 0.1, 1.0);
        s.cfl_guard = 1.5;
        assert!(s.validate().is_err());
        assert_eq!(SchemeSpec::new(Scheme::Erk4, 0.1, 1.0).floor(&ModelParams::default()), 1e-8);
    }

    #[test]
    fn steady_state_is_fixed_for_every_scheme_and_kind() {
        let g = grid(32);
        let p = ModelParams::default();
        let s0 = PlasmaState::steady(&g, &p);
        for kind in ModelKind::ALL {
            for scheme in Scheme::ALL {
                let spec = SchemeSpec::new(scheme, 1e-3, 1.0);
                let s1 = step(&s0, kind, &p, &spec).unwrap();
                assert!(s1.max_abs_diff(&s0) < 1e-13, "{kind} {scheme}: {}", s1.max_abs_diff(&s0));
                assert_eq!(s1.time, 1e-3);
            }
        }
    }

    #[test]
    fn erk4_refuses_steps_beyond_the_dispersive_limit() {
        let g = grid(64);
        let p = ModelParams { epsilon: 1.0, ..ModelParams::default() };
        let s0 = PlasmaState::steady(&g, &p);
        let spec = SchemeSpec::new(Scheme::Erk4, 0.5, 1.0);
        let err = step(&s0, ModelKind::QhdUnscaled, &p, &spec).unwrap_err();
        assert!(matches!(err, Error::StepTooLarge { reason: "explicit dispersive CFL", .. }), "{err}");
        let spec = SchemeSpec::new(Scheme::ImexBohm, 0.5, 1.0);
        assert!(step(&s0, ModelKind::QhdUnscaled, &p, &spec).is_ok());
    }

    #[test]
    fn advective_limit_binds_implicit_schemes() {
        let g = grid(32);
        let p = ModelParams::default();
        let mut s0 = PlasmaState::steady(&g, &p);
        s0.carrier_a.u = Field::constant(&g, 10.0);
        let spec = SchemeSpec::new(Scheme::ExpRelaxImex, 0.1, 1.0);
        let err = step(&s0, ModelKind::QhdUnscaled, &p, &spec).unwrap_err();
        assert!(matches!(err, Error::StepTooLarge { reason: "advective CFL", .. }));
    }

    #[test]
    fn zero_horizon_returns_initial_state() {
        let g = grid(16);
        let p = ModelParams::default();
        let s0 = make_initial_data(&InitSpec::default(), &p, &g).unwrap();
        let rec = integrate(&s0, ModelKind::Hd, &p, &SchemeSpec::new(Scheme::Erk4, 0.01, 0.0), &[]).unwrap();
        assert_eq!(rec.len(), 1);
        assert_eq!(rec.states[0], s0);
        assert_eq!(rec.steps, 0);
    }

    #[test]
    fn landing_on_sample_times() {
        let g = grid(16);
        let p = ModelParams::default();
        let s0 = make_initial_data(&InitSpec::default(), &p, &g).unwrap();
        let spec = SchemeSpec::new(Scheme::ImexBohm, 0.03, 0.1);
        let rec = integrate(&s0, ModelKind::QhdUnscaled, &p, &spec, &[0.0, 0.05, 0.1]).unwrap();
        assert_eq!(rec.times, vec![0.0, 0.05, 0.1]);
        assert_eq!(rec.states[2].time, 0.1);
        assert_eq!(rec.steps, 4);
    }

    #[test]
    fn rejects_unordered_samples() {
        let g = grid(16);
        let p = ModelParams::default();
        let s0 = PlasmaState::steady(&g, &p);
        let spec = SchemeSpec::new(Scheme::Erk4, 0.01, 0.1);
        assert!(integrate(&s0, ModelKind::Hd, &p, &spec, &[0.05, 0.02]).is_err());
        assert!(integrate(&s0, ModelKind::Hd, &p, &spec, &[0.2]).is_err());
    }

    #[test]
    fn floor_crossing_is_reported_with_time() {
        let g = grid(32);
        let p = ModelParams::default();
        let psi = Field::from_fn(&g, |x| 1.0 + 0.05 * x.cos());
        let u = Field::from_fn(&g, |x| -0.8 * x.sin());
        let a = CarrierState::new(psi.clone(), u.clone()).unwrap();
        let b = CarrierState::new(psi, u).unwrap();
        let s0 = PlasmaState::from_carriers(a, b, &p, 0.0).unwrap();
        let mut spec = SchemeSpec::new(Scheme::ImexBohm, 1e-3, 2.0);
        spec.positivity_floor = Some(0.9);
        let err = integrate(&s0, ModelKind::Hd, &p, &spec, &[]).unwrap_err();
        assert_eq!(err.kind(), "vacuum breach", "{err}");
        let t = err.time().unwrap();
        assert!(t > 0.1 && t < 2.0, "{t}");
    }
}
