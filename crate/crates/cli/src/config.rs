//! Sectioned TOML configuration: `[model]`, `[params]`, `[init]`, `[scheme]`,
//! `[sweep]`, `[output]`.
//!
//! A file with a `[sweep]` section describes a sweep; any other file
//! describes a single run. Only `model.kind` (runs) or `sweep.kind` and
//! `sweep.ladder` (sweeps) are required.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};

use qhd_core::fields::{InitScaling, InitSpec, PerturbedCarriers};
use qhd_core::limits::{NormSelector, SliceSpec, SweepKind, SweepSpec};
use qhd_core::{Error as CoreError, Grid, ModelKind, ModelParams, Scheme, SchemeSpec};
use serde::Serialize;
use sha2::{Digest, Sha256};
use toml::de::{DeTable, DeValue};
use toml::Spanned;

/// One configuration problem, located by key path and line.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Issue {
    pub path: String,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}: {}", self.path, self.message),
            None => write!(f, "{}: {}", self.path, self.message),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub struct ConfigError {
    pub issues: Vec<Issue>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lines: Vec<String> = self.issues.iter().map(Issue::to_string).collect();
        f.write_str(&lines.join("\n"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub energy: bool,
    pub snapshots: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputSpec {
    pub dir: PathBuf,
    /// Snapshot times; defaults to `[t_end]`.
    pub sample_times: Vec<f64>,
    /// Trajectory rows are written every this many steps (and at the end).
    pub record_every: usize,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub kind: ModelKind,
    pub params: ModelParams,
    pub init: InitSpec,
    pub scheme: SchemeSpec,
    pub n: usize,
    pub length: f64,
    pub output: OutputSpec,
}

/// Pass/fail thresholds applied to a finished sweep report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Thresholds {
    pub min_rate: Option<f64>,
    pub max_velocity_ratio: Option<f64>,
    pub require_efield_monotone: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepConfig {
    pub spec: SweepSpec,
    pub thresholds: Thresholds,
    pub output: OutputSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Config {
    Run(RunConfig),
    Sweep(SweepConfig),
}

impl Config {
    pub fn output(&self) -> &OutputSpec {
        match self {
            Config::Run(r) => &r.output,
            Config::Sweep(s) => &s.output,
        }
    }

    pub fn output_mut(&mut self) -> &mut OutputSpec {
        match self {
            Config::Run(r) => &mut r.output,
            Config::Sweep(s) => &mut s.output,
        }
    }

    /// SHA-256 of the canonical JSON of the resolved configuration, output
    /// directory excluded.
    pub fn digest(&self) -> String {
        let mut c = self.clone();
        c.output_mut().dir = PathBuf::new();
        let json = serde_json::to_vec(&c).expect("config serializes");
        hex::encode(Sha256::digest(json))
    }
}

impl RunConfig {
    pub fn digest(&self) -> String {
        Config::Run(self.clone()).digest()
    }
}

const SECTIONS: &[(&str, &[&str])] = &[
    ("model", &["kind"]),
    (
        "params",
        &["epsilon", "tau", "lambda", "gamma_a", "gamma_b", "k_a", "k_b", "rho_a_star", "rho_b_star", "c_star"],
    ),
    ("init", &["amplitude", "density_modes", "velocity_amplitude", "velocity_modes", "carriers", "scaling"]),
    ("scheme", &["name", "dt", "t_end", "cfl_guard", "positivity_floor", "n", "length"]),
    (
        "sweep",
        &[
            "kind",
            "ladder",
            "reference",
            "t_min",
            "sample_interval",
            "density_order",
            "efield_order",
            "velocity",
            "slices",
            "slice_epsilon",
            "slice_tau",
            "min_rate",
            "max_velocity_ratio",
            "require_efield_monotone",
        ],
    ),
    ("output", &["dir", "sample_times", "record_every", "diagnostics"]),
];

type Entry<'a, 'i> = (&'a Spanned<DeValue<'i>>, usize);

struct Reader<'a, 'i> {
    line_starts: Vec<usize>,
    sections: BTreeMap<&'static str, (usize, BTreeMap<String, Entry<'a, 'i>>)>,
    issues: Vec<Issue>,
}

impl<'a, 'i> Reader<'a, 'i> {
    fn new(text: &str, root: &'a DeTable<'i>) -> Self {
        let line_starts = std::iter::once(0).chain(text.match_indices('\n').map(|(i, _)| i + 1)).collect();
        let mut r = Reader { line_starts, sections: BTreeMap::new(), issues: Vec::new() };
        for (key, value) in root.iter() {
            let line = r.line_of(key.span().start);
            let name = key.get_ref().as_ref();
            let Some((section, allowed)) = SECTIONS.iter().find(|(s, _)| *s == name) else {
                r.issue(name.to_string(), Some(line), "unknown section or key");
                continue;
            };
            let Some(table) = value.get_ref().as_table() else {
                r.issue(name.to_string(), Some(line), "expected a section");
                continue;
            };
            let mut entries = BTreeMap::new();
            for (k, v) in table.iter() {
                let kname = k.get_ref().as_ref();
                let kline = r.line_of(k.span().start);
                if allowed.contains(&kname) {
                    entries.insert(kname.to_string(), (v, kline));
                } else {
                    r.issue(format!("{section}.{kname}"), Some(kline), "unknown key");
                }
            }
            r.sections.insert(section, (line, entries));
        }
        r
    }

    fn line_of(&self, offset: usize) -> usize {
        self.line_starts.partition_point(|&s| s <= offset)
    }

    fn issue(&mut self, path: String, line: Option<usize>, message: impl Into<String>) {
        self.issues.push(Issue { path, line, message: message.into() });
    }

    fn has(&self, section: &str) -> bool {
        self.sections.contains_key(section)
    }

    fn entry(&self, section: &str, key: &str) -> Option<Entry<'a, 'i>> {
        self.sections.get(section).and_then(|(_, e)| e.get(key)).copied()
    }

    fn line(&self, section: &str, key: &str) -> Option<usize> {
        self.entry(section, key).map(|e| e.1).or_else(|| self.sections.get(section).map(|s| s.0))
    }

    fn typed<T>(&mut self, section: &str, key: &str, what: &str, conv: impl Fn(&DeValue<'i>) -> Option<T>) -> Option<T> {
        let (v, line) = self.entry(section, key)?;
        let out = conv(v.get_ref());
        if out.is_none() {
            self.issue(format!("{section}.{key}"), Some(line), format!("expected {what}, found {}", v.get_ref().type_str()));
        }
        out
    }

    fn f64(&mut self, section: &str, key: &str) -> Option<f64> {
        self.typed(section, key, "a number", as_f64)
    }

    fn usize(&mut self, section: &str, key: &str) -> Option<usize> {
        self.typed(section, key, "a non-negative integer", as_usize)
    }

    fn bool(&mut self, section: &str, key: &str) -> Option<bool> {
        self.typed(section, key, "a boolean", |v| v.as_bool())
    }

    fn string(&mut self, section: &str, key: &str) -> Option<String> {
        self.typed(section, key, "a string", |v| v.as_str().map(str::to_owned))
    }

    fn f64s(&mut self, section: &str, key: &str) -> Option<Vec<f64>> {
        self.typed(section, key, "an array of numbers", |v| v.as_array()?.iter().map(|x| as_f64(x.get_ref())).collect())
    }

    fn usizes(&mut self, section: &str, key: &str) -> Option<Vec<usize>> {
        self.typed(section, key, "an array of non-negative integers", |v| {
            v.as_array()?.iter().map(|x| as_usize(x.get_ref())).collect()
        })
    }

    fn strings(&mut self, section: &str, key: &str) -> Option<Vec<String>> {
        self.typed(section, key, "an array of strings", |v| {
            v.as_array()?.iter().map(|x| x.get_ref().as_str().map(str::to_owned)).collect()
        })
    }

    /// String key parsed through `FromStr`.
    fn parsed<T: std::str::FromStr<Err = String>>(&mut self, section: &str, key: &str) -> Option<T> {
        let s = self.string(section, key)?;
        match s.parse() {
            Ok(v) => Some(v),
            Err(e) => {
                let line = self.line(section, key);
                self.issue(format!("{section}.{key}"), line, e);
                None
            }
        }
    }

    /// Records a core validation failure against the key its message names.
    fn core_error(&mut self, section: &str, err: CoreError) {
        let msg = match &err {
            CoreError::InvalidParams(m) | CoreError::InvalidInit(m) | CoreError::InvalidScheme(m) | CoreError::InvalidSweep(m) => {
                m.clone()
            }
            CoreError::InvalidGrid(m) => m.clone(),
            other => other.to_string(),
        };
        let keys = SECTIONS.iter().find(|(s, _)| *s == section).map(|(_, k)| *k).unwrap_or(&[]);
        let key = keys.iter().find(|k| msg.starts_with(*k) || msg.contains(&format!("{k} "))).copied();
        let (path, line) = match key {
            Some(k) => (format!("{section}.{k}"), self.line(section, k)),
            None => (section.to_string(), self.sections.get(section).map(|s| s.0)),
        };
        self.issue(path, line, msg);
    }
}

fn as_f64(v: &DeValue<'_>) -> Option<f64> {
    match v {
        DeValue::Float(f) => f.as_str().replace('_', "").parse().ok(),
        DeValue::Integer(i) => i64::from_str_radix(&i.as_str().replace('_', ""), i.radix()).ok().map(|x| x as f64),
        _ => None,
    }
}

fn as_usize(v: &DeValue<'_>) -> Option<usize> {
    match v {
        DeValue::Integer(i) => usize::from_str_radix(&i.as_str().replace('_', ""), i.radix()).ok(),
        _ => None,
    }
}

fn parse_carriers(s: &str) -> Result<PerturbedCarriers, String> {
    match s {
        "both" => Ok(PerturbedCarriers::Both),
        "a" | "a_only" => Ok(PerturbedCarriers::AOnly),
        "b" | "b_only" => Ok(PerturbedCarriers::BOnly),
        _ => Err(format!("unknown carrier selection {s:?} (expected both, a_only or b_only)")),
    }
}

struct Carriers(PerturbedCarriers);
impl std::str::FromStr for Carriers {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        parse_carriers(s).map(Carriers)
    }
}

#[derive(PartialEq)]
enum ScalingChoice {
    Unscaled,
    DiffusionScaled,
}
impl std::str::FromStr for ScalingChoice {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "unscaled" => Ok(ScalingChoice::Unscaled),
            "diffusion_scaled" => Ok(ScalingChoice::DiffusionScaled),
            _ => Err(format!("unknown scaling {s:?} (expected unscaled or diffusion_scaled)")),
        }
    }
}

fn read_params(r: &mut Reader) -> ModelParams {
    let mut p = ModelParams::default();
    let fields: [(&str, &mut f64); 10] = [
        ("epsilon", &mut p.epsilon),
        ("tau", &mut p.tau),
        ("lambda", &mut p.lambda),
        ("gamma_a", &mut p.gamma_a),
        ("gamma_b", &mut p.gamma_b),
        ("k_a", &mut p.k_a),
        ("k_b", &mut p.k_b),
        ("rho_a_star", &mut p.rho_a_star),
        ("rho_b_star", &mut p.rho_b_star),
        ("c_star", &mut p.c_star),
    ];
    for (key, slot) in fields {
        if let Some(v) = r.f64("params", key) {
            *slot = v;
        }
    }
    p
}

fn read_init(r: &mut Reader, tau: f64) -> InitSpec {
    let d = InitSpec::default();
    let scaling = match r.parsed::<ScalingChoice>("init", "scaling") {
        Some(ScalingChoice::DiffusionScaled) => InitScaling::DiffusionScaled(tau),
        _ => InitScaling::Unscaled,
    };
    InitSpec {
        amplitude: r.f64("init", "amplitude").unwrap_or(d.amplitude),
        density_modes: r.usizes("init", "density_modes").unwrap_or(d.density_modes),
        velocity_amplitude: r.f64("init", "velocity_amplitude").unwrap_or(d.velocity_amplitude),
        velocity_modes: r.usizes("init", "velocity_modes").unwrap_or(d.velocity_modes),
        carriers: r.parsed::<Carriers>("init", "carriers").map(|c| c.0).unwrap_or(d.carriers),
        scaling,
    }
}

fn read_scheme(r: &mut Reader, default_scheme: Scheme) -> (SchemeSpec, usize, f64) {
    let mut spec = SchemeSpec::new(
        r.parsed("scheme", "name").unwrap_or(default_scheme),
        r.f64("scheme", "dt").unwrap_or(0.01),
        r.f64("scheme", "t_end").unwrap_or(1.0),
    );
    if let Some(g) = r.f64("scheme", "cfl_guard") {
        spec.cfl_guard = g;
    }
    spec.positivity_floor = r.f64("scheme", "positivity_floor");
    let n = r.usize("scheme", "n").unwrap_or(64);
    let length = r.f64("scheme", "length").unwrap_or(2.0 * PI);
    (spec, n, length)
}

fn read_output(r: &mut Reader, t_end: f64) -> OutputSpec {
    let mut diagnostics = Diagnostics { energy: true, snapshots: true };
    if let Some(list) = r.strings("output", "diagnostics") {
        diagnostics = Diagnostics { energy: false, snapshots: false };
        for d in list {
            match d.as_str() {
                "energy" => diagnostics.energy = true,
                "snapshots" => diagnostics.snapshots = true,
                other => {
                    let line = r.line("output", "diagnostics");
                    r.issue("output.diagnostics".into(), line, format!("unknown diagnostic {other:?} (expected energy or snapshots)"));
                }
            }
        }
    }
    let record_every = r.usize("output", "record_every").unwrap_or(1);
    if record_every == 0 {
        let line = r.line("output", "record_every");
        r.issue("output.record_every".into(), line, "must be ≥ 1");
    }
    OutputSpec {
        dir: r.string("output", "dir").map(PathBuf::from).unwrap_or_else(|| PathBuf::from("output")),
        sample_times: r.f64s("output", "sample_times").unwrap_or_else(|| vec![t_end]),
        record_every,
        diagnostics,
    }
}

fn check_sample_times(r: &mut Reader, times: &[f64], t_end: f64) {
    let ok = times.iter().all(|t| (0.0..=t_end).contains(t)) && times.windows(2).all(|w| w[1] > w[0]);
    if !ok {
        let line = r.line("output", "sample_times");
        r.issue("output.sample_times".into(), line, format!("sample times must be strictly increasing within [0, {t_end}]"));
    }
}

fn read_run(r: &mut Reader) -> Option<RunConfig> {
    if r.entry("model", "kind").is_none() {
        let line = r.sections.get("model").map(|s| s.0);
        r.issue("model.kind".into(), line, "missing required key");
    }
    let kind: Option<ModelKind> = r.parsed("model", "kind");
    let params = read_params(r);
    let init = read_init(r, params.tau);
    let (scheme, n, length) = read_scheme(r, Scheme::ImexBohm);
    let output = read_output(r, scheme.t_end);
    validate_common(r, &params, &init, &scheme, n, length);
    check_sample_times(r, &output.sample_times, scheme.t_end);
    Some(RunConfig { kind: kind?, params, init, scheme, n, length, output })
}

fn validate_common(r: &mut Reader, params: &ModelParams, init: &InitSpec, scheme: &SchemeSpec, n: usize, length: f64) {
    if let Err(e) = params.validate() {
        r.core_error("params", e);
    }
    if let Err(e) = init.validate() {
        r.core_error("init", e);
    }
    if let Err(e) = scheme.validate() {
        r.core_error("scheme", e);
    }
    if let Err(e) = Grid::new(n, length) {
        r.core_error("scheme", e);
    }
}

fn read_sweep(r: &mut Reader) -> Option<SweepConfig> {
    let mut missing = Vec::new();
    for key in ["kind", "ladder"] {
        if r.entry("sweep", key).is_none() {
            missing.push(key);
        }
    }
    let section_line = r.sections.get("sweep").map(|s| s.0);
    for key in missing {
        r.issue(format!("sweep.{key}"), section_line, "missing required key");
    }
    if let Some((_, line)) = r.entry("model", "kind") {
        r.issue("model.kind".into(), Some(line), "not allowed in a sweep; the member model follows from sweep.kind");
    }
    let kind: Option<SweepKind> = r.parsed("sweep", "kind");
    let ladder = r.f64s("sweep", "ladder");
    let params = read_params(r);
    let init = read_init(r, params.tau);
    let default_scheme = match kind {
        Some(SweepKind::Semiclassical) => Scheme::ImexBohm,
        _ => Scheme::ExpRelaxImex,
    };
    let (scheme, n, length) = read_scheme(r, default_scheme);
    let output = read_output(r, scheme.t_end);
    let reference: Option<ModelKind> = r.parsed("sweep", "reference");
    let defaults = NormSelector::default();
    let norms = NormSelector {
        density_order: r.usize("sweep", "density_order").unwrap_or(defaults.density_order),
        efield_order: r.usize("sweep", "efield_order").unwrap_or(defaults.efield_order),
        velocity: r.bool("sweep", "velocity").unwrap_or(defaults.velocity),
    };
    let t_min = r.f64("sweep", "t_min");
    let sample_interval = r.f64("sweep", "sample_interval");
    let slices_on = r.bool("sweep", "slices");
    let slice_defaults = SliceSpec::default();
    let slice = SliceSpec {
        epsilon: r.f64("sweep", "slice_epsilon").unwrap_or(slice_defaults.epsilon),
        tau: r.f64("sweep", "slice_tau").unwrap_or(slice_defaults.tau),
    };
    let thresholds = Thresholds {
        min_rate: r.f64("sweep", "min_rate"),
        max_velocity_ratio: r.f64("sweep", "max_velocity_ratio"),
        require_efield_monotone: r
            .bool("sweep", "require_efield_monotone")
            .unwrap_or(kind == Some(SweepKind::Combined)),
    };
    validate_common(r, &params, &init, &scheme, n, length);
    if r.entry("output", "sample_times").is_some() {
        let line = r.line("output", "sample_times");
        r.issue("output.sample_times".into(), line, "not used by sweeps; set sweep.t_min and sweep.sample_interval");
    }
    if init.scaling != InitScaling::Unscaled {
        let line = r.line("init", "scaling");
        r.issue("init.scaling".into(), line, "sweeps apply the diffusion scaling per member; leave init unscaled");
    }

    let (kind, ladder) = (kind?, ladder?);
    if kind != SweepKind::Combined && r.entry("sweep", "slices").is_some() {
        let line = r.line("sweep", "slices");
        r.issue("sweep.slices".into(), line, "slices are only defined for combined sweeps");
    }
    if ladder.is_empty() {
        let line = r.line("sweep", "ladder");
        r.issue("sweep.ladder".into(), line, "ladder requires ≥ 4 points");
        return None;
    }
    let mut spec = SweepSpec::new(kind, &ladder, params, init, scheme, n, length);
    spec.norms = norms;
    if let Some(reference) = reference {
        spec.reference = reference;
    }
    if let Some(t) = t_min {
        spec.t_min = t;
    }
    if let Some(s) = sample_interval {
        spec.sample_interval = s;
    }
    spec.slices = match (kind, slices_on) {
        (SweepKind::Combined, Some(false)) => None,
        (SweepKind::Combined, _) => Some(slice),
        _ => None,
    };
    if let Err(e) = spec.validate() {
        let msg = e.to_string();
        let key = ["ladder", "reference", "t_min", "sample_interval", "sobolev"]
            .into_iter()
            .find(|k| msg.contains(k))
            .map(|k| if k == "sobolev" { "density_order" } else { k })
            .unwrap_or("kind");
        // Parameter, init and scheme problems were already reported above.
        if !matches!(e, CoreError::InvalidParams(_) | CoreError::InvalidInit(_) | CoreError::InvalidScheme(_) | CoreError::InvalidGrid(_)) {
            let line = r.line("sweep", key);
            let text = match e {
                CoreError::InvalidSweep(m) => m,
                other => other.to_string(),
            };
            r.issue(format!("sweep.{key}"), line, text);
        }
    }
    Some(SweepConfig { spec, thresholds, output })
}

pub fn parse_config_str(text: &str) -> Result<Config, ConfigError> {
    let root = DeTable::parse(text).map_err(|e| {
        let line = e.span().map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1);
        ConfigError { issues: vec![Issue { path: "<file>".into(), line, message: e.message().to_string() }] }
    })?;
    let mut r = Reader::new(text, root.get_ref());
    let config = if r.has("sweep") { read_sweep(&mut r).map(Config::Sweep) } else { read_run(&mut r).map(Config::Run) };
    match config {
        Some(c) if r.issues.is_empty() => Ok(c),
        _ => {
            r.issues.sort_by_key(|i| i.line.unwrap_or(0));
            Err(ConfigError { issues: r.issues })
        }
    }
}

pub fn parse_config(path: &Path) -> Result<Config, crate::CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| crate::CliError::Io { path: path.to_owned(), source })?;
    Ok(parse_config_str(&text)?)
}
