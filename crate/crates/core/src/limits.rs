//! Convergence studies for the three singular limits: semiclassical
//! (`ε → 0`, reference HD), relaxation (`τ → 0` at fixed `ε`, reference QDD)
//! and combined (`(ε, τ) → 0`, reference DD).
//!
//! Every member and the reference share the grid, scheme and density
//! perturbation. Relaxation and combined members start from `(ρ₀, u₀/τ)`.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::diagnostics::sobolev_norm;
use crate::error::{Error, Result};
use crate::fields::{make_initial_data, InitScaling, InitSpec, PlasmaState};
use crate::grid::{Field, Grid};
use crate::models::ModelKind;
use crate::params::{Carrier, ModelParams};
use crate::stepper::{integrate, SchemeSpec, TrajectoryRecord};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScalingDirection {
    Forward,
    Inverse,
}

/// Maps between unscaled and diffusion-scaled variables,
/// `(ρ^τ, u^τ, E^τ)(x, t) = (ρ, u/τ, E)(x, t/τ)`.
pub fn apply_diffusion_scaling(traj: &TrajectoryRecord, tau: f64, direction: ScalingDirection) -> TrajectoryRecord {
    let (u_factor, t_factor) = match direction {
        ScalingDirection::Forward => (1.0 / tau, tau),
        ScalingDirection::Inverse => (tau, 1.0 / tau),
    };
    let states = traj
        .states
        .iter()
        .map(|s| {
            let mut out = s.clone();
            out.carrier_a.u = s.carrier_a.u.scale(u_factor);
            out.carrier_b.u = s.carrier_b.u.scale(u_factor);
            out.time = s.time * t_factor;
            out
        })
        .collect();
    TrajectoryRecord {
        times: traj.times.iter().map(|t| t * t_factor).collect(),
        states,
        steps: traj.steps,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepKind {
    Semiclassical,
    Relaxation,
    Combined,
}

impl SweepKind {
    pub fn name(self) -> &'static str {
        match self {
            SweepKind::Semiclassical => "semiclassical",
            SweepKind::Relaxation => "relaxation",
            SweepKind::Combined => "combined",
        }
    }

    pub fn reference(self) -> ModelKind {
        match self {
            SweepKind::Semiclassical => ModelKind::Hd,
            SweepKind::Relaxation => ModelKind::Qdd,
            SweepKind::Combined => ModelKind::Dd,
        }
    }

    pub fn member_kind(self) -> ModelKind {
        match self {
            SweepKind::Semiclassical => ModelKind::QhdUnscaled,
            SweepKind::Relaxation | SweepKind::Combined => ModelKind::QhdScaled,
        }
    }

    pub fn default_t_min(self) -> f64 {
        match self {
            SweepKind::Semiclassical => 0.0,
            SweepKind::Relaxation | SweepKind::Combined => 0.5,
        }
    }
}

impl std::str::FromStr for SweepKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        [SweepKind::Semiclassical, SweepKind::Relaxation, SweepKind::Combined]
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown sweep kind {s:?} (expected semiclassical, relaxation or combined)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LadderPoint {
    pub epsilon: f64,
    pub tau: f64,
}

/// Orders of the discrete Sobolev norms used for errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormSelector {
    pub density_order: usize,
    pub efield_order: usize,
    /// Also measure velocity errors (semiclassical only; the parabolic
    /// references carry a derived drift velocity).
    pub velocity: bool,
}

impl Default for NormSelector {
    fn default() -> Self {
        NormSelector { density_order: 2, efield_order: 1, velocity: true }
    }
}

/// Frozen values of the two one-parameter slices of the combined sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SliceSpec {
    pub epsilon: f64,
    pub tau: f64,
}

impl Default for SliceSpec {
    fn default() -> Self {
        SliceSpec { epsilon: 0.05, tau: 0.2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub kind: SweepKind,
    pub ladder: Vec<LadderPoint>,
    pub reference: ModelKind,
    pub norms: NormSelector,
    pub t_min: f64,
    /// Spacing of the error samples in `[t_min, T]`.
    pub sample_interval: f64,
    pub params: ModelParams,
    pub init: InitSpec,
    pub scheme: SchemeSpec,
    pub n: usize,
    pub length: f64,
    /// Combined sweeps only.
    pub slices: Option<SliceSpec>,
}

impl SweepSpec {
    /// Sweep over the varying parameter `values`; the frozen parameter comes
    /// from `params`. Combined ladders take `values` as `ε` and scale `τ` by
    /// the same ratios from `params.tau`.
    pub fn new(
        kind: SweepKind,
        values: &[f64],
        params: ModelParams,
        init: InitSpec,
        scheme: SchemeSpec,
        n: usize,
        length: f64,
    ) -> Self {
        let ladder = values
            .iter()
            .map(|&v| match kind {
                SweepKind::Semiclassical => LadderPoint { epsilon: v, tau: params.tau },
                SweepKind::Relaxation => LadderPoint { epsilon: params.epsilon, tau: v },
                SweepKind::Combined => LadderPoint { epsilon: v, tau: params.tau * v / values[0] },
            })
            .collect();
        SweepSpec {
            kind,
            ladder,
            reference: kind.reference(),
            norms: NormSelector::default(),
            t_min: kind.default_t_min(),
            sample_interval: 0.1,
            params,
            init,
            scheme,
            n,
            length,
            slices: (kind == SweepKind::Combined).then(SliceSpec::default),
        }
    }

    /// Value the rate is fitted against: `ε` for the semiclassical sweep,
    /// `τ` otherwise.
    pub fn ladder_value(&self, point: &LadderPoint) -> f64 {
        match self.kind {
            SweepKind::Semiclassical => point.epsilon,
            _ => point.tau,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSweep(m));
        if self.ladder.len() < 4 {
            return bad("ladder requires ≥ 4 points".into());
        }
        let decreasing = |v: Vec<f64>| v.iter().all(|&x| x > 0.0 && x.is_finite()) && v.windows(2).all(|w| w[1] < w[0]);
        let eps: Vec<f64> = self.ladder.iter().map(|p| p.epsilon).collect();
        let tau: Vec<f64> = self.ladder.iter().map(|p| p.tau).collect();
        let ok = match self.kind {
            SweepKind::Semiclassical => decreasing(eps),
            SweepKind::Relaxation => decreasing(tau),
            SweepKind::Combined => decreasing(eps) && decreasing(tau),
        };
        if !ok {
            return bad("ladder must be positive and decreasing".into());
        }
        if self.reference != self.kind.reference() {
            return bad(format!(
                "reference model {} does not match a {} sweep (expected {})",
                self.reference,
                self.kind.name(),
                self.kind.reference()
            ));
        }
        if !(self.t_min >= 0.0) || self.t_min > self.scheme.t_end {
            return bad(format!("t_min must lie in [0, T], got {}", self.t_min));
        }
        if !(self.sample_interval > 0.0) {
            return bad(format!("sample_interval must be > 0, got {}", self.sample_interval));
        }
        if self.norms.density_order > 4 || self.norms.efield_order > 4 {
            return Err(Error::InvalidSobolevIndex(self.norms.density_order.max(self.norms.efield_order)));
        }
        if self.init.scaling != InitScaling::Unscaled {
            return bad("the sweep applies the diffusion scaling itself; init scaling must be unscaled".into());
        }
        self.params.validate()?;
        self.init.validate()?;
        self.scheme.validate()?;
        Grid::new(self.n, self.length)?;
        Ok(())
    }

    /// Error sample times `t_min, t_min + Δ, …, T`.
    pub fn sample_times(&self) -> Vec<f64> {
        let t_end = self.scheme.t_end;
        let count = ((t_end - self.t_min) / self.sample_interval + 1e-9).floor() as usize;
        let mut times: Vec<f64> = (0..=count).map(|i| self.t_min + i as f64 * self.sample_interval).collect();
        if t_end - times.last().copied().unwrap_or(f64::NEG_INFINITY) > 1e-9 * self.sample_interval {
            times.push(t_end);
        }
        times
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorSample {
    pub t: f64,
    pub rho_a: f64,
    pub rho_b: f64,
    pub efield: f64,
    pub u_a: Option<f64>,
    pub u_b: Option<f64>,
}

/// Supremum over the window of each error column.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorSup {
    pub rho_a: f64,
    pub rho_b: f64,
    pub efield: f64,
    pub u_a: Option<f64>,
    pub u_b: Option<f64>,
}

impl ErrorSup {
    pub fn rho(&self) -> f64 {
        self.rho_a.max(self.rho_b)
    }

    fn from_samples(samples: &[ErrorSample]) -> Self {
        let max = |f: fn(&ErrorSample) -> f64| samples.iter().map(f).fold(0.0, f64::max);
        let max_opt = |f: fn(&ErrorSample) -> Option<f64>| {
            samples.iter().map(f).try_fold(0.0_f64, |m, v| v.map(|v| m.max(v)))
        };
        ErrorSup {
            rho_a: max(|s| s.rho_a),
            rho_b: max(|s| s.rho_b),
            efield: max(|s| s.efield),
            u_a: max_opt(|s| s.u_a),
            u_b: max_opt(|s| s.u_b),
        }
    }
}

/// Sup over the window of `τ² max|u_i|²` and of the `W^{3,3}` norm of `τ²|u_i|²`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct VelocityMonitor {
    pub tau2_max_u2: f64,
    pub w33_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberFailure {
    pub kind: String,
    pub time: Option<f64>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberResult {
    pub point: LadderPoint,
    pub ladder_value: f64,
    pub model: ModelKind,
    pub initial_digest: String,
    pub samples: Vec<ErrorSample>,
    pub sup: ErrorSup,
    pub velocity: VelocityMonitor,
    pub steps: usize,
    pub runtime_seconds: f64,
    pub failure: Option<MemberFailure>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub rate: f64,
    pub residual: f64,
}

/// Members of one ladder measured against one reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderReport {
    pub name: String,
    pub member_model: ModelKind,
    pub reference: ModelKind,
    pub reference_params: ModelParams,
    pub members: Vec<MemberResult>,
    pub density_rate: Option<RateFit>,
    pub efield_rate: Option<RateFit>,
    /// Set when a rate could not be fitted (zero error or too few points).
    pub rate_note: Option<String>,
    pub monotone_density: bool,
    pub monotone_efield: bool,
    /// Last over first member of `τ² max|u|²`.
    pub velocity_ratio: f64,
    pub failed: bool,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub schema_version: u32,
    pub sweep_kind: SweepKind,
    pub spec: SweepSpec,
    pub initial_data_digest: String,
    pub discretization_digest: String,
    pub main: LadderReport,
    pub slices: Vec<LadderReport>,
    pub failed: bool,
    pub runtime_seconds: f64,
}

/// Least-squares slope of `log err` against `log param`, with the RMS of the
/// fit residuals.
pub fn fit_rate(points: &[(f64, f64)]) -> Result<RateFit> {
    if points.len() < 3 {
        return Err(Error::InvalidSweep(format!("rate fit needs ≥ 3 points, got {}", points.len())));
    }
    if !points.windows(2).all(|w| w[1].0 < w[0].0) || points.iter().any(|p| !(p.0 > 0.0)) {
        return Err(Error::InvalidSweep("ladder must be positive and decreasing".into()));
    }
    if let Some(i) = points.iter().position(|p| p.1 == 0.0) {
        return Err(Error::DegenerateFit(i));
    }
    if points.iter().any(|p| !(p.1 > 0.0) || !p.1.is_finite()) {
        return Err(Error::InvalidSweep("errors must be positive and finite".into()));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let rate = sxy / sxx;
    let intercept = my - rate * mx;
    let residual = (xs.iter().zip(&ys).map(|(x, y)| (y - intercept - rate * x).powi(2)).sum::<f64>() / n).sqrt();
    Ok(RateFit { rate, residual })
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Digest of all five fields of a state, bitwise.
pub fn state_digest(s: &PlasmaState) -> String {
    let mut bytes = Vec::new();
    for f in s.fields() {
        for v in f.values() {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    sha256_hex(&bytes)
}

fn discretization_digest(spec: &SweepSpec) -> String {
    #[derive(Serialize)]
    struct Disc<'a> {
        n: usize,
        length: f64,
        scheme: &'a SchemeSpec,
        sample_times: Vec<f64>,
    }
    let disc = Disc { n: spec.n, length: spec.length, scheme: &spec.scheme, sample_times: spec.sample_times() };
    sha256_hex(&serde_json::to_vec(&disc).expect("discretization serializes"))
}

fn error_norm(a: &Field, b: &Field, order: usize) -> f64 {
    sobolev_norm(&(a - b), order).expect("order validated")
}

fn error_samples(run: &TrajectoryRecord, reference: &TrajectoryRecord, norms: &NormSelector) -> Vec<ErrorSample> {
    run.states
        .iter()
        .zip(&reference.states)
        .map(|(s, r)| {
            let rho = |st: &PlasmaState, c| st.carrier(c).density();
            let u_err = |c: Carrier| norms.velocity.then(|| error_norm(&s.carrier(c).u, &r.carrier(c).u, norms.density_order));
            ErrorSample {
                t: s.time,
                rho_a: error_norm(&rho(s, Carrier::A), &rho(r, Carrier::A), norms.density_order),
                rho_b: error_norm(&rho(s, Carrier::B), &rho(r, Carrier::B), norms.density_order),
                efield: error_norm(&s.efield, &r.efield, norms.efield_order),
                u_a: u_err(Carrier::A),
                u_b: u_err(Carrier::B),
            }
        })
        .collect()
}

/// `(Σ_{j≤3} ‖D^j f‖³_{L³})^{1/3}`.
fn w33_norm(f: &Field) -> f64 {
    let dx = f.grid().dx();
    let l3 = |g: &Field| g.values().iter().map(|v| v.abs().powi(3)).sum::<f64>() * dx;
    let mut total = l3(f);
    for order in 1..=3 {
        total += l3(&f.derivative(order).expect("order ≤ 4"));
    }
    total.cbrt()
}

fn velocity_monitor(run: &TrajectoryRecord, tau: f64) -> VelocityMonitor {
    let mut m = VelocityMonitor::default();
    for s in &run.states {
        for c in Carrier::BOTH {
            let e = s.carrier(c).u.map(|v| tau * tau * v * v);
            m.tau2_max_u2 = m.tau2_max_u2.max(e.max_abs());
            m.w33_norm = m.w33_norm.max(w33_norm(&e));
        }
    }
    m
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

struct Job {
    kind: ModelKind,
    params: ModelParams,
    init: InitSpec,
}

struct JobOutput {
    record: Result<TrajectoryRecord>,
    digest: String,
    runtime: f64,
}

fn run_job(job: &Job, spec: &SweepSpec, times: &[f64]) -> JobOutput {
    let start = Instant::now();
    let mut digest = String::new();
    let record = Grid::new(spec.n, spec.length).and_then(|g| {
        let s0 = make_initial_data(&job.init, &job.params, &g)?;
        digest = state_digest(&s0);
        integrate(&s0, job.kind, &job.params, &spec.scheme, times)
    });
    JobOutput { record, digest, runtime: start.elapsed().as_secs_f64() }
}

fn member_init(spec: &SweepSpec, kind: ModelKind, tau: f64) -> InitSpec {
    let mut init = spec.init.clone();
    if kind.is_diffusion_scaled() {
        init.scaling = InitScaling::DiffusionScaled(tau);
    }
    init
}

fn run_ladder(
    spec: &SweepSpec,
    name: &str,
    member_kind: ModelKind,
    ladder: &[LadderPoint],
    ladder_value: impl Fn(&LadderPoint) -> f64,
    reference: ModelKind,
    reference_params: ModelParams,
) -> LadderReport {
    let times = spec.sample_times();
    let mut jobs: Vec<Job> = ladder
        .iter()
        .map(|pt| {
            let params = ModelParams { epsilon: pt.epsilon, tau: pt.tau, ..spec.params.clone() };
            Job { kind: member_kind, init: member_init(spec, member_kind, pt.tau), params }
        })
        .collect();
    jobs.push(Job {
        kind: reference,
        init: member_init(spec, reference, reference_params.tau),
        params: reference_params.clone(),
    });
    let outputs: Vec<JobOutput> = jobs.par_iter().map(|j| run_job(j, spec, &times)).collect();
    let (reference_out, member_outs) = outputs.split_last().expect("reference job present");

    let mut failure = None;
    let reference_record = match &reference_out.record {
        Ok(r) => Some(r),
        Err(e) => {
            failure = Some(format!("reference {reference} failed: {e}"));
            None
        }
    };
    let mut norms = spec.norms;
    if reference.is_parabolic() || member_kind.is_parabolic() {
        norms.velocity = false;
    }

    let members: Vec<MemberResult> = ladder
        .iter()
        .zip(member_outs)
        .map(|(pt, out)| {
            let mut result = MemberResult {
                point: *pt,
                ladder_value: ladder_value(pt),
                model: member_kind,
                initial_digest: out.digest.clone(),
                samples: Vec::new(),
                sup: ErrorSup::default(),
                velocity: VelocityMonitor::default(),
                steps: 0,
                runtime_seconds: out.runtime,
                failure: None,
            };
            match (&out.record, reference_record) {
                (Ok(run), Some(r)) => {
                    result.samples = error_samples(run, r, &norms);
                    result.sup = ErrorSup::from_samples(&result.samples);
                    result.velocity = velocity_monitor(run, pt.tau);
                    result.steps = run.steps;
                }
                (Ok(run), None) => {
                    result.velocity = velocity_monitor(run, pt.tau);
                    result.steps = run.steps;
                }
                (Err(e), _) => {
                    if failure.is_none() {
                        failure = Some(format!("member ε = {}, τ = {} failed: {e}", pt.epsilon, pt.tau));
                    }
                    result.failure = Some(MemberFailure { kind: e.kind().into(), time: e.time(), message: e.to_string() });
                }
            }
            result
        })
        .collect();

    let failed = failure.is_some();
    let rho: Vec<(f64, f64)> = members.iter().map(|m| (m.ladder_value, m.sup.rho())).collect();
    let efield: Vec<(f64, f64)> = members.iter().map(|m| (m.ladder_value, m.sup.efield)).collect();
    let mut rate_note = None;
    let mut fit = |pts: &[(f64, f64)], label: &str| match fit_rate(pts) {
        Ok(f) => Some(f),
        Err(e) => {
            rate_note.get_or_insert_with(|| format!("{label}: {e}"));
            None
        }
    };
    let (density_rate, efield_rate) = if failed { (None, None) } else { (fit(&rho, "density"), fit(&efield, "efield")) };
    let col = |f: fn(&MemberResult) -> f64| members.iter().map(f).collect::<Vec<f64>>();
    let monotone_density = !failed && strictly_decreasing(&col(|m| m.sup.rho_a)) && strictly_decreasing(&col(|m| m.sup.rho_b));
    let monotone_efield = !failed && strictly_decreasing(&col(|m| m.sup.efield));
    let velocity_ratio = match (members.first(), members.last()) {
        (Some(a), Some(b)) if a.velocity.tau2_max_u2 > 0.0 => b.velocity.tau2_max_u2 / a.velocity.tau2_max_u2,
        _ => f64::NAN,
    };
    LadderReport {
        name: name.into(),
        member_model: member_kind,
        reference,
        reference_params,
        members,
        density_rate,
        efield_rate,
        rate_note,
        monotone_density,
        monotone_efield,
        velocity_ratio,
        failed,
        failure,
    }
}

fn run_sweep(spec: &SweepSpec, expected: SweepKind) -> Result<ConvergenceReport> {
    if spec.kind != expected {
        return Err(Error::InvalidSweep(format!("expected a {} sweep, got {}", expected.name(), spec.kind.name())));
    }
    spec.validate()?;
    let start = Instant::now();
    let grid = Grid::new(spec.n, spec.length)?;
    let base = make_initial_data(&spec.init, &spec.params, &grid)?;

    let first = spec.ladder[0];
    let reference_params = match spec.kind {
        SweepKind::Semiclassical => spec.params.with_epsilon(0.0).with_tau(first.tau),
        SweepKind::Relaxation => spec.params.with_epsilon(first.epsilon),
        SweepKind::Combined => spec.params.with_epsilon(0.0),
    };
    let main = run_ladder(
        spec,
        spec.kind.name(),
        spec.kind.member_kind(),
        &spec.ladder,
        |p| spec.ladder_value(p),
        spec.reference,
        reference_params,
    );

    let mut slices = Vec::new();
    if let (SweepKind::Combined, Some(slice)) = (spec.kind, spec.slices) {
        let frozen_eps: Vec<LadderPoint> = spec.ladder.iter().map(|p| LadderPoint { epsilon: slice.epsilon, tau: p.tau }).collect();
        slices.push(run_ladder(
            spec,
            "frozen_epsilon",
            ModelKind::QhdScaled,
            &frozen_eps,
            |p| p.tau,
            ModelKind::Qdd,
            spec.params.with_epsilon(slice.epsilon),
        ));
        let frozen_tau: Vec<LadderPoint> = spec.ladder.iter().map(|p| LadderPoint { epsilon: p.epsilon, tau: slice.tau }).collect();
        slices.push(run_ladder(
            spec,
            "frozen_tau",
            ModelKind::QhdScaled,
            &frozen_tau,
            |p| p.epsilon,
            ModelKind::QhdScaled,
            spec.params.with_epsilon(0.0).with_tau(slice.tau),
        ));
    }

    let failed = main.failed || slices.iter().any(|s| s.failed);
    Ok(ConvergenceReport {
        schema_version: SCHEMA_VERSION,
        sweep_kind: spec.kind,
        spec: spec.clone(),
        initial_data_digest: state_digest(&base),
        discretization_digest: discretization_digest(spec),
        main,
        slices,
        failed,
        runtime_seconds: start.elapsed().as_secs_f64(),
    })
}

pub fn run_semiclassical_sweep(spec: &SweepSpec) -> Result<ConvergenceReport> {
    run_sweep(spec, SweepKind::Semiclassical)
}

pub fn run_relaxation_sweep(spec: &SweepSpec) -> Result<ConvergenceReport> {
    run_sweep(spec, SweepKind::Relaxation)
}

pub fn run_combined_sweep(spec: &SweepSpec) -> Result<ConvergenceReport> {
    run_sweep(spec, SweepKind::Combined)
}

/// Dispatches on `spec.kind`.
pub fn run_sweep_any(spec: &SweepSpec) -> Result<ConvergenceReport> {
    run_sweep(spec, spec.kind)
}

/// Largest difference over the run between QHD at `ε = 0` and HD, and between
/// QDD at `ε = 0` and DD, on shared initial data.
pub fn code_path_equivalence(
    p: &ModelParams,
    init: &InitSpec,
    grid: &std::sync::Arc<Grid>,
    scheme: &SchemeSpec,
    sample_times: &[f64],
) -> Result<(f64, f64)> {
    let p0 = p.with_epsilon(0.0);
    let s0 = make_initial_data(init, &p0, grid)?;
    let gap = |a: ModelKind, b: ModelKind| -> Result<f64> {
        let ra = integrate(&s0, a, &p0, scheme, sample_times)?;
        let rb = integrate(&s0, b, &p0, scheme, sample_times)?;
        Ok(ra.states.iter().zip(&rb.states).map(|(x, y)| x.max_abs_diff(y)).fold(0.0, f64::max))
    };
    Ok((gap(ModelKind::QhdUnscaled, ModelKind::Hd)?, gap(ModelKind::Qdd, ModelKind::Dd)?))
}
