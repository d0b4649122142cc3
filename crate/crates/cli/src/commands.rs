//! `simulate`, `sweep` and `check`.
//!
//! Runs build their files in memory; a single writer puts them on disk.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use qhd_core::diagnostics::{EnergyMonitor, EnergySummary};
use qhd_core::fields::{make_initial_data, InitScaling};
use qhd_core::limits::{run_sweep_any, ConvergenceReport, LadderReport};
use qhd_core::{integrate_observed, Grid, ModelKind, PlasmaState, Stepper};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{OutputSpec, RunConfig, SweepConfig, Thresholds};
use crate::output::{create_dir, fmt_f64, fmt_opt, snapshot_csv, write_json, write_text, Csv};
use crate::CliError;

pub const TRAJECTORY_HEADER: [&str; 12] = [
    "t", "psi_a_l2", "u_a_l2", "psi_b_l2", "u_b_l2", "E_l2", "mass_a", "mass_b", "neutrality", "E1", "E2", "delta",
];

pub const SWEEP_HEADER: [&str; 10] = [
    "ladder_value",
    "epsilon",
    "tau",
    "err_rho_a",
    "err_rho_b",
    "err_E",
    "err_u_a",
    "err_u_b",
    "tau2_max_u2",
    "w33_tau2_u2",
];

pub const SWEEP_ERRORS_HEADER: [&str; 7] = ["ladder_value", "t", "err_rho_a", "err_rho_b", "err_E", "err_u_a", "err_u_b"];

#[derive(Debug, Clone, Serialize)]
struct SchemeAudit {
    scheme: String,
    order: u32,
    dt: f64,
    t_end: f64,
    cfl_guard: f64,
    positivity_floor: f64,
    stability_limit: f64,
    limit_reason: &'static str,
    steps: usize,
}

#[derive(Debug, Clone, Serialize)]
struct EnergyDigest {
    e1_initial: f64,
    e1_max: f64,
    boundedness_ratio: f64,
    e2_integral: f64,
    dissipation_constant: f64,
    delta_t: f64,
}

#[derive(Debug, Clone, Serialize)]
struct ErrorRecord {
    kind: &'static str,
    message: String,
    time: Option<f64>,
    last_good_time: Option<f64>,
    config_digest: String,
}

#[derive(Debug, Clone, Serialize)]
struct RunJson<'a> {
    config_digest: String,
    status: &'static str,
    config: &'a RunConfig,
    runtime_seconds: f64,
    scheme_audit: SchemeAudit,
    energy: Option<EnergyDigest>,
    max_relative_mass_drift: f64,
    max_neutrality_residual: f64,
    snapshots: Vec<String>,
    error: Option<ErrorRecord>,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub config_digest: String,
    pub steps: usize,
    pub energy: Option<EnergySummary>,
    pub max_relative_mass_drift: f64,
    pub max_neutrality_residual: f64,
    pub final_state: PlasmaState,
}

/// Files of one run, relative to its output directory.
struct Artifacts {
    files: Vec<(PathBuf, String)>,
    result: Result<RunOutcome, qhd_core::Error>,
}

struct Row {
    t: f64,
    norms: [f64; 5],
    mass: [f64; 2],
    neutrality: f64,
}

impl Row {
    fn of(s: &PlasmaState, cfg: &RunConfig) -> Self {
        let f = s.fields();
        Row {
            t: s.time,
            norms: [f[0].l2_norm(), f[1].l2_norm(), f[2].l2_norm(), f[3].l2_norm(), f[4].l2_norm()],
            mass: [s.carrier_a.mass(), s.carrier_b.mass()],
            neutrality: s.neutrality_residual(&cfg.params),
        }
    }
}

fn build_run(cfg: &RunConfig) -> Artifacts {
    let start = Instant::now();
    let digest = cfg.digest();
    let prepared = Grid::new(cfg.n, cfg.length).and_then(|g| {
        let s0 = make_initial_data(&cfg.init, &cfg.params, &g)?;
        let stepper = Stepper::new(cfg.kind, &cfg.params, &cfg.scheme, &g)?;
        Ok((s0, stepper))
    });
    let (s0, stepper) = match prepared {
        Ok(v) => v,
        Err(e) => {
            let record = ErrorRecord {
                kind: e.kind(),
                message: e.to_string(),
                time: e.time(),
                last_good_time: None,
                config_digest: digest,
            };
            return Artifacts { files: vec![(PathBuf::from("error.json"), json_text(&record))], result: Err(e) };
        }
    };
    let (stability_limit, limit_reason) = stepper.stability_limit(&s0);

    let every = cfg.output.record_every.max(1);
    let mut monitor = cfg.output.diagnostics.energy.then(|| EnergyMonitor::new(&cfg.params, every));
    let mut rows = Vec::new();
    let mut pending = None;
    let mut observed = 0usize;
    let mut last_good: Option<PlasmaState> = None;
    let result = integrate_observed(&s0, cfg.kind, &cfg.params, &cfg.scheme, &cfg.output.sample_times, &mut |s| {
        if let Some(m) = monitor.as_mut() {
            m.observe(s);
        }
        let row = Row::of(s, cfg);
        if observed % every == 0 {
            rows.push(row);
            pending = None;
        } else {
            pending = Some(row);
        }
        observed += 1;
        last_good = Some(s.clone());
    });
    rows.extend(pending);

    let energy = match monitor.map(EnergyMonitor::finish) {
        Some(Ok(summary)) => Some(summary),
        Some(Err(e)) if result.is_ok() => return Artifacts { files: Vec::new(), result: Err(e) },
        _ => None,
    };
    let by_time: HashMap<u64, &qhd_core::diagnostics::EnergyReport> =
        energy.iter().flat_map(|e| &e.reports).map(|r| (r.t.to_bits(), r)).collect();

    let mut trajectory = Csv::new(&digest, &TRAJECTORY_HEADER);
    let mass0 = [s0.carrier_a.mass(), s0.carrier_b.mass()];
    let (mut drift, mut neutrality) = (0.0_f64, 0.0_f64);
    for r in &rows {
        let e = by_time.get(&r.t.to_bits());
        let mut cells = vec![fmt_f64(r.t)];
        cells.extend(r.norms.iter().map(|&v| fmt_f64(v)));
        cells.extend(r.mass.iter().map(|&v| fmt_f64(v)));
        cells.push(fmt_f64(r.neutrality));
        cells.push(fmt_opt(e.map(|e| e.e1)));
        cells.push(fmt_opt(e.map(|e| e.e2)));
        cells.push(fmt_opt(e.map(|e| e.delta_quantity)));
        trajectory.row(cells);
        for i in 0..2 {
            drift = drift.max(((r.mass[i] - mass0[i]) / mass0[i]).abs());
        }
        neutrality = neutrality.max(r.neutrality.abs());
    }

    let mut files = vec![(PathBuf::from("trajectory.csv"), trajectory.as_str().to_owned())];
    let mut snapshots = Vec::new();
    if let (Ok(record), true) = (&result, cfg.output.diagnostics.snapshots) {
        for (i, s) in record.states.iter().enumerate() {
            let name = format!("snapshots/snapshot_{i:04}.csv");
            files.push((PathBuf::from(&name), snapshot_csv(s, &digest).as_str().to_owned()));
            snapshots.push(name);
        }
    }

    let error = result.as_ref().err().map(|e| ErrorRecord {
        kind: e.kind(),
        message: e.to_string(),
        time: e.time(),
        last_good_time: last_good.as_ref().map(|s| s.time),
        config_digest: digest.clone(),
    });
    let steps = match &result {
        Ok(r) => r.steps,
        Err(_) => observed.saturating_sub(1),
    };
    let run = RunJson {
        config_digest: digest.clone(),
        status: if error.is_some() { "failed" } else { "ok" },
        config: cfg,
        runtime_seconds: start.elapsed().as_secs_f64(),
        scheme_audit: SchemeAudit {
            scheme: cfg.scheme.scheme.name().into(),
            order: cfg.scheme.scheme.order(),
            dt: cfg.scheme.dt,
            t_end: cfg.scheme.t_end,
            cfl_guard: cfg.scheme.cfl_guard,
            positivity_floor: cfg.scheme.floor(&cfg.params),
            stability_limit,
            limit_reason,
            steps,
        },
        energy: energy.as_ref().map(|e| EnergyDigest {
            e1_initial: e.e1_initial,
            e1_max: e.e1_max,
            boundedness_ratio: e.boundedness_ratio(),
            e2_integral: e.e2_integral,
            dissipation_constant: e.dissipation_constant,
            delta_t: e.delta_t,
        }),
        max_relative_mass_drift: drift,
        max_neutrality_residual: neutrality,
        snapshots,
        error: error.clone(),
    };
    files.push((PathBuf::from("run.json"), json_text(&run)));
    if let Some(err) = &error {
        files.push((PathBuf::from("error.json"), json_text(err)));
    }

    let result = result.map(|record| RunOutcome {
        dir: cfg.output.dir.clone(),
        config_digest: digest,
        steps: record.steps,
        energy,
        max_relative_mass_drift: drift,
        max_neutrality_residual: neutrality,
        final_state: last_good.expect("observer saw the initial state"),
    });
    Artifacts { files, result }
}

fn json_text(value: &impl Serialize) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("value serializes");
    text.push('\n');
    text
}

fn write_artifacts(dir: &Path, files: &[(PathBuf, String)]) -> Result<(), CliError> {
    for (rel, text) in files {
        let path = dir.join(rel);
        if let Some(parent) = path.parent() {
            create_dir(parent)?;
        }
        write_text(&path, text)?;
    }
    Ok(())
}

/// Runs one configuration and writes `trajectory.csv`, `snapshots/*.csv`,
/// `run.json` and, on failure, `error.json`.
pub fn cmd_simulate(cfg: &RunConfig) -> Result<RunOutcome, CliError> {
    create_dir(&cfg.output.dir)?;
    let artifacts = build_run(cfg);
    write_artifacts(&cfg.output.dir, &artifacts.files)?;
    Ok(artifacts.result?)
}

#[derive(Debug, Clone, Serialize)]
pub struct MemberDigest {
    pub ladder: String,
    /// `None` for the reference run.
    pub index: Option<usize>,
    pub model: ModelKind,
    pub epsilon: f64,
    pub tau: f64,
    pub config_digest: String,
    pub initial_digest: Option<String>,
    pub artifacts: String,
    pub status: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    pub criterion: String,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReportJson {
    pub config_digest: String,
    pub passed: bool,
    pub verdicts: Vec<Verdict>,
    pub thresholds: Thresholds,
    pub member_digests: Vec<MemberDigest>,
    #[serde(flatten)]
    pub report: ConvergenceReport,
}

#[derive(Debug)]
pub struct SweepOutcome {
    pub report: SweepReportJson,
    pub dir: PathBuf,
}

fn verdicts(report: &ConvergenceReport, t: &Thresholds) -> Vec<Verdict> {
    let main = &report.main;
    let mut v = vec![
        Verdict { criterion: "all members completed".into(), passed: !report.failed },
        Verdict { criterion: "density errors strictly decrease".into(), passed: main.monotone_density },
    ];
    if t.require_efield_monotone {
        v.push(Verdict { criterion: "field errors strictly decrease".into(), passed: main.monotone_efield });
    }
    if let Some(min) = t.min_rate {
        let rate = main.density_rate.map(|r| r.rate);
        v.push(Verdict { criterion: format!("density rate ≥ {min}"), passed: rate.is_some_and(|r| r >= min) });
    }
    if let Some(max) = t.max_velocity_ratio {
        v.push(Verdict { criterion: format!("τ²max|u|² last/first ≤ {max}"), passed: main.velocity_ratio <= max });
    }
    v
}

fn ladder_csvs(l: &LadderReport, digest: &str) -> (Csv, Csv) {
    let mut table = Csv::new(digest, &SWEEP_HEADER);
    let mut long = Csv::new(digest, &SWEEP_ERRORS_HEADER);
    for m in &l.members {
        table.row([
            fmt_f64(m.ladder_value),
            fmt_f64(m.point.epsilon),
            fmt_f64(m.point.tau),
            fmt_f64(m.sup.rho_a),
            fmt_f64(m.sup.rho_b),
            fmt_f64(m.sup.efield),
            fmt_opt(m.sup.u_a),
            fmt_opt(m.sup.u_b),
            fmt_f64(m.velocity.tau2_max_u2),
            fmt_f64(m.velocity.w33_norm),
        ]);
        for s in &m.samples {
            long.row([
                fmt_f64(m.ladder_value),
                fmt_f64(s.t),
                fmt_f64(s.rho_a),
                fmt_f64(s.rho_b),
                fmt_f64(s.efield),
                fmt_opt(s.u_a),
                fmt_opt(s.u_b),
            ]);
        }
    }
    (table, long)
}

/// Run configurations reproducing every member and reference of a report.
fn member_runs(cfg: &SweepConfig, report: &ConvergenceReport) -> Vec<(String, Option<usize>, RunConfig)> {
    let spec = &cfg.spec;
    let run = |kind: ModelKind, params: qhd_core::ModelParams, dir: PathBuf| {
        let mut init = spec.init.clone();
        if kind.is_diffusion_scaled() {
            init.scaling = InitScaling::DiffusionScaled(params.tau);
        }
        RunConfig {
            kind,
            params,
            init,
            scheme: spec.scheme.clone(),
            n: spec.n,
            length: spec.length,
            output: OutputSpec { dir, sample_times: vec![spec.scheme.t_end], ..cfg.output.clone() },
        }
    };
    let mut out = Vec::new();
    for l in std::iter::once(&report.main).chain(&report.slices) {
        for (j, m) in l.members.iter().enumerate() {
            let params = qhd_core::ModelParams { epsilon: m.point.epsilon, tau: m.point.tau, ..spec.params.clone() };
            let dir = cfg.output.dir.join("members").join(format!("{}_{j}", l.name));
            out.push((l.name.clone(), Some(j), run(l.member_model, params, dir)));
        }
        let dir = cfg.output.dir.join("members").join(format!("{}_reference", l.name));
        out.push((l.name.clone(), None, run(l.reference, l.reference_params.clone(), dir)));
    }
    out
}

/// Runs a sweep on a pool of `jobs` threads (all cores when `None`) and
/// writes `sweep.csv`, `sweep_errors.csv`, per-slice tables, `report.json`
/// and per-member run artifacts under `members/`.
pub fn cmd_sweep(cfg: &SweepConfig, jobs: Option<usize>) -> Result<SweepOutcome, CliError> {
    let dir = cfg.output.dir.clone();
    create_dir(&dir)?;
    let digest = crate::config::Config::Sweep(cfg.clone()).digest();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .expect("thread pool builds");
    let report = pool.install(|| run_sweep_any(&cfg.spec))?;

    let runs = member_runs(cfg, &report);
    let built: Vec<Artifacts> = pool.install(|| runs.par_iter().map(|(_, _, rc)| build_run(rc)).collect());
    let mut member_digests = Vec::new();
    for ((ladder, index, rc), artifacts) in runs.iter().zip(&built) {
        write_artifacts(&rc.output.dir, &artifacts.files)?;
        let ladder_report = std::iter::once(&report.main).chain(&report.slices).find(|l| &l.name == ladder);
        let member = index.and_then(|j| ladder_report.map(|l| &l.members[j]));
        member_digests.push(MemberDigest {
            ladder: ladder.clone(),
            index: *index,
            model: rc.kind,
            epsilon: rc.params.epsilon,
            tau: rc.params.tau,
            config_digest: rc.digest(),
            initial_digest: member.map(|m| m.initial_digest.clone()),
            artifacts: rc.output.dir.strip_prefix(&dir).unwrap_or(&rc.output.dir).display().to_string(),
            status: match &artifacts.result {
                Ok(_) => "ok".into(),
                Err(e) => e.to_string(),
            },
        });
    }

    for l in std::iter::once(&report.main).chain(&report.slices) {
        let (table, long) = ladder_csvs(l, &digest);
        let stem = if l.name == report.main.name { "sweep".to_string() } else { format!("sweep_{}", l.name) };
        table.write(&dir.join(format!("{stem}.csv")))?;
        long.write(&dir.join(format!("{stem}_errors.csv")))?;
    }

    let verdicts = verdicts(&report, &cfg.thresholds);
    let passed = verdicts.iter().all(|v| v.passed);
    let json = SweepReportJson {
        config_digest: digest,
        passed,
        verdicts,
        thresholds: cfg.thresholds.clone(),
        member_digests,
        report,
    };
    write_json(&dir.join("report.json"), &json)?;
    if !passed {
        let failed: Vec<&str> = json.verdicts.iter().filter(|v| !v.passed).map(|v| v.criterion.as_str()).collect();
        return Err(CliError::ReportFailed(failed.join("; ")));
    }
    Ok(SweepOutcome { report: json, dir })
}

/// Runs the built-in invariant suite and prints a pass/fail table.
pub fn cmd_check() -> Result<(), CliError> {
    let rows = crate::check::run_checks();
    print!("{}", crate::check::render(&rows));
    let failed: Vec<&str> = rows.iter().filter(|r| !r.passed).map(|r| r.name.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::CheckFailed(failed.join(", ")))
    }
}
