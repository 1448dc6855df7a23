//! Config-driven runs: a TOML file plus `key.path=value` overrides in, CSV
//! tables and a TOML metadata sidecar out.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cutoff::{
    classify, perturbative_cross_correlation, propagate_cutoff, resonant_frequency, CutoffModes, CutoffState,
    SigmaApprox,
};
use crate::drive::{CouplingRule, DriveConfig};
use crate::error::{Error, Result};
use crate::floquet::{dipole_expectation, propagate_c, FloquetSolution};
use crate::hilbert::QuantumState;
use crate::lattice::{default_spacing, LatticeModel, LatticeSpec};
use crate::observables::{cross_correlation, weighted_mean_q, Probe};
use crate::propagator::{
    propagate_displaced_with, propagate_fock_direct_with, scan_modes, uniform_grid, ModeRecord, ModeSet, ModelA,
    ResidualStream, RunReport, Settings,
};
use crate::spectrum::{spectrum, Window};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    ClassicalDrive,
    TwoMode,
    Backaction,
    Floquet,
    CrossCorrelation,
    ScanModes,
    CheckResiduals,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::ClassicalDrive => "simulate classical-drive",
            Command::TwoMode => "simulate two-mode",
            Command::Backaction => "simulate backaction",
            Command::Floquet => "floquet",
            Command::CrossCorrelation => "cross-correlation",
            Command::ScanModes => "scan-modes",
            Command::CheckResiduals => "check residuals",
        }
    }

    /// File stem of the outputs.
    pub fn stem(&self) -> &'static str {
        match self {
            Command::ClassicalDrive => "classical_drive",
            Command::TwoMode => "two_mode",
            Command::Backaction => "backaction",
            Command::Floquet => "floquet",
            Command::CrossCorrelation => "cross_correlation",
            Command::ScanModes => "scan_modes",
            Command::CheckResiduals => "residuals",
        }
    }

    /// Config sections a command reads.
    fn sections(&self) -> &'static [&'static str] {
        match self {
            Command::ClassicalDrive => &["omega0", "drive", "modes", "integrator", "output"],
            Command::TwoMode => &["omega0", "drive", "modes.coupling", "modes.n_max", "modes.method", "two_mode", "integrator", "output"],
            Command::Backaction => &["omega0", "drive.omega_f", "drive.omega_e", "lattice", "integrator.max_step", "output"],
            Command::Floquet => &["omega0", "floquet", "output"],
            Command::CrossCorrelation => &["omega0", "cross_correlation", "output"],
            Command::ScanModes => &["omega0", "drive", "modes.coupling", "modes.n_max", "scan", "integrator", "output"],
            Command::CheckResiduals => &["omega0", "drive", "modes", "residuals", "integrator.norm_abort", "output"],
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Displaced,
    FockDirect,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModesConfig {
    pub omegas: Vec<f64>,
    pub coupling: CouplingRule,
    pub n_max: usize,
    pub method: Method,
}

impl Default for ModesConfig {
    fn default() -> Self {
        Self { omegas: vec![10.91], coupling: CouplingRule::Sqrt { c: 0.005 }, n_max: 8, method: Method::Displaced }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TwoModeConfig {
    pub omegas: [f64; 2],
}

impl Default for TwoModeConfig {
    fn default() -> Self {
        Self { omegas: [9.91, 10.91] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorConfig {
    /// Largest RK4 step; the model's `(2π/ω_max)/200` when absent.
    pub max_step: Option<f64>,
    pub norm_abort: f64,
    pub truncation_warn: f64,
    pub dim_cap: usize,
    /// Output samples after `t = 0`.
    pub samples: usize,
    /// End of the run; the end of the pulse when absent.
    pub t_end: Option<f64>,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        let s = Settings::default();
        Self {
            max_step: None,
            norm_abort: s.norm_abort,
            truncation_warn: s.truncation_warn,
            dim_cap: s.dim_cap,
            samples: 2000,
            t_end: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LatticeConfig {
    #[serde(rename = "A")]
    pub amplitude: f64,
    pub phi: f64,
    pub couplings: [f64; 3],
    pub side: usize,
    pub spacing: f64,
    pub padding: usize,
    pub condition_cap: f64,
    pub samples: usize,
}

impl Default for LatticeConfig {
    fn default() -> Self {
        Self {
            amplitude: 12.0,
            phi: PI,
            couplings: [0.03; 3],
            side: 5,
            spacing: default_spacing(),
            padding: 1,
            condition_cap: 1e8,
            samples: 400,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FloquetConfig {
    #[serde(rename = "A")]
    pub amplitude: f64,
    pub omega: f64,
    pub cycles: usize,
    pub per_cycle: usize,
}

impl Default for FloquetConfig {
    fn default() -> Self {
        Self { amplitude: 12.0, omega: 1.0, cycles: 64, per_cycle: 64 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrossMethod {
    #[default]
    Both,
    Full,
    Perturbative,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrossConfig {
    #[serde(rename = "A")]
    pub amplitude: f64,
    pub omega: f64,
    pub coupling: f64,
    pub approx: SigmaApprox,
    pub method: CrossMethod,
    /// Harmonic orders of the mode pairs.
    pub pairs: Vec<[u32; 2]>,
    /// Put each mode on its measured line rather than at `order·ω`.
    pub lock_to_lines: bool,
    pub cycles: usize,
    pub per_cycle: usize,
}

impl Default for CrossConfig {
    fn default() -> Self {
        Self {
            amplitude: 12.0,
            omega: 1.0,
            coupling: 1e-3,
            approx: SigmaApprox::Full,
            method: CrossMethod::Both,
            pairs: vec![[4, 3], [4, 7], [8, 11], [3, 7]],
            lock_to_lines: true,
            cycles: 128,
            per_cycle: 32,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanConfig {
    pub omegas: Vec<f64>,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self { omegas: (1..=25).map(f64::from).collect() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResidualConfig {
    pub tolerance: f64,
    /// Sample spacing in units of `1/ω_max`.
    pub spacing: f64,
}

impl Default for ResidualConfig {
    fn default() -> Self {
        Self { tolerance: 1e-6, spacing: 1e-3 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub window: Window,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), window: Window::Hann }
    }
}

/// Everything a run reads. All quantities in units of `ω₀ = ħ = 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub omega0: f64,
    pub drive: DriveConfig,
    pub modes: ModesConfig,
    pub two_mode: TwoModeConfig,
    pub integrator: IntegratorConfig,
    pub lattice: LatticeConfig,
    pub floquet: FloquetConfig,
    pub cross_correlation: CrossConfig,
    pub scan: ScanConfig,
    pub residuals: ResidualConfig,
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            omega0: 1.0,
            drive: DriveConfig::default(),
            modes: ModesConfig::default(),
            two_mode: TwoModeConfig::default(),
            integrator: IntegratorConfig::default(),
            lattice: LatticeConfig::default(),
            floquet: FloquetConfig::default(),
            cross_correlation: CrossConfig::default(),
            scan: ScanConfig::default(),
            residuals: ResidualConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

/// Config as parsed, with the raw table kept to tell explicit values from defaults.
#[derive(Clone, Debug)]
pub struct LoadedConfig {
    pub config: RunConfig,
    raw: toml::Table,
}

fn toml_error(e: toml::de::Error) -> Error {
    toml_error_in(e, None)
}

/// Unknown keys are reported with their dotted path when `raw` contains them.
fn toml_error_in(e: toml::de::Error, raw: Option<&toml::Table>) -> Error {
    let msg = e.message().to_string();
    let key = msg.split('`').nth(1).filter(|_| msg.starts_with("unknown field"));
    let field = match (key, raw) {
        (Some(k), Some(t)) => locate(t, k).unwrap_or_else(|| k.to_string()),
        (Some(k), None) => k.to_string(),
        _ => "config".to_string(),
    };
    Error::Config { field, msg }
}

fn locate(table: &toml::Table, key: &str) -> Option<String> {
    if table.contains_key(key) {
        return Some(key.to_string());
    }
    table.iter().find_map(|(k, v)| match v {
        toml::Value::Table(t) => locate(t, key).map(|p| format!("{k}.{p}")),
        _ => None,
    })
}

/// Set `a.b.c = value` in `table`; `value` is read as a TOML literal, or as a
/// string when it does not parse.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (path, value) = assignment
        .split_once('=')
        .ok_or_else(|| Error::config(assignment, "override must look like key.path=value"))?;
    let path = path.trim();
    let value = value.trim();
    let parsed = format!("v = {value}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(value.to_string()));
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(Error::config(path, "empty key in override path"));
    }
    let mut cur = table;
    for k in &keys[..keys.len() - 1] {
        let entry = cur.entry(k.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| Error::config(path, format!("`{k}` is not a table")))?;
    }
    cur.insert(keys[keys.len() - 1].to_string(), parsed);
    Ok(())
}

impl LoadedConfig {
    pub fn from_str(text: &str, overrides: &[String]) -> Result<Self> {
        let mut raw: toml::Table = text.parse().map_err(toml_error)?;
        for o in overrides {
            apply_override(&mut raw, o)?;
        }
        let config: RunConfig = toml::Value::Table(raw.clone()).try_into().map_err(|e| toml_error_in(e, Some(&raw)))?;
        Ok(Self { config, raw })
    }

    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p)
                .map_err(|e| Error::config("config", format!("cannot read {}: {e}", p.display())))?,
            None => String::new(),
        };
        Self::from_str(&text, overrides)
    }

    /// Leaf keys used by `cmd` that were filled from defaults, with their values.
    pub fn applied_defaults(&self, cmd: Command) -> Vec<(String, String)> {
        let full = toml::Value::try_from(&self.config).expect("config serializes");
        let mut out = Vec::new();
        leaves(&full, "", &mut |path, v| {
            let used = cmd.sections().iter().any(|s| path == *s || path.starts_with(&format!("{s}.")));
            if used && lookup(&self.raw, path).is_none() {
                out.push((path.to_string(), v.to_string()));
            }
        });
        out
    }
}

fn leaves(v: &toml::Value, prefix: &str, f: &mut dyn FnMut(&str, &toml::Value)) {
    match v {
        toml::Value::Table(t) => {
            for (k, x) in t {
                let p = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                leaves(x, &p, f);
            }
        }
        _ => f(prefix, v),
    }
}

fn lookup<'a>(t: &'a toml::Table, path: &str) -> Option<&'a toml::Value> {
    let mut parts = path.split('.');
    let mut cur = t.get(parts.next()?)?;
    for p in parts {
        cur = cur.as_table()?.get(p)?;
    }
    Some(cur)
}

impl RunConfig {
    /// SHA-256 of the canonical TOML form.
    pub fn hash(&self) -> String {
        let text = toml::to_string(self).expect("config serializes");
        let digest = Sha256::digest(text.as_bytes());
        let mut s = String::with_capacity(64);
        for b in digest {
            let _ = write!(s, "{b:02x}");
        }
        s
    }

    fn settings(&self) -> Result<Settings> {
        let i = &self.integrator;
        if let Some(h) = i.max_step {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::config("integrator.max_step", "must be positive"));
            }
        }
        if !(i.norm_abort > 0.0) {
            return Err(Error::config("integrator.norm_abort", "must be positive"));
        }
        Ok(Settings { max_step: i.max_step, norm_abort: i.norm_abort, truncation_warn: i.truncation_warn, dim_cap: i.dim_cap })
    }

    fn grid(&self) -> Result<Vec<f64>> {
        let t_end = match (self.integrator.t_end, self.drive.support_end()) {
            (Some(t), _) => t,
            (None, Some(t)) => t,
            (None, None) => return Err(Error::config("integrator.t_end", "required for an unbounded drive")),
        };
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(Error::config("integrator.t_end", "must be positive"));
        }
        if self.integrator.samples < 1 {
            return Err(Error::config("integrator.samples", "must be at least 1"));
        }
        Ok(uniform_grid(0.0, t_end, self.integrator.samples))
    }

    fn model(&self, omegas: &[f64]) -> Result<ModelA> {
        if omegas.is_empty() {
            return Err(Error::config("modes.omegas", "at least one mode is required"));
        }
        self.modes.coupling.validate()?;
        let modes = ModeSet::from_rule(omegas, &self.modes.coupling, self.modes.n_max)
            .map_err(|e| Error::config("modes", e.to_string()))?;
        ModelA::new(self.omega0, self.drive, modes).map_err(|e| match e {
            Error::InvalidParameter(m) => Error::config("omega0", m),
            e => e,
        })
    }
}

/// One CSV cell.
#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Flag(bool),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(x) if x.is_nan() => "nan".into(),
            Cell::Num(x) => format!("{x:e}"),
            Cell::Int(k) => k.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Flag(b) => b.to_string(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    /// File name suffix, e.g. `series`.
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    fn new(name: &str, header: Vec<String>) -> Self {
        Self { name: name.into(), header, rows: Vec::new() }
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r.iter().map(Cell::render))?;
        }
        w.into_inner().map_err(|e| Error::Io(e.into_error()))
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.header.iter().position(|h| h == name)?;
        Some(
            self.rows
                .iter()
                .map(|r| match &r[k] {
                    Cell::Num(x) => *x,
                    Cell::Int(i) => *i as f64,
                    _ => f64::NAN,
                })
                .collect(),
        )
    }
}

/// Tables and headline numbers of a finished run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    pub command: Command,
    pub tables: Vec<Table>,
    pub summary: Vec<(String, toml::Value)>,
}

impl RunOutput {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn summary_value(&self, key: &str) -> Option<&toml::Value> {
        self.summary.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }
}

fn num(x: f64) -> toml::Value {
    toml::Value::Float(x)
}

fn opt(x: Option<f64>) -> f64 {
    x.unwrap_or(f64::NAN)
}

fn report_summary(r: &RunReport, out: &mut Vec<(String, toml::Value)>) {
    out.push(("step".into(), num(r.step)));
    out.push(("steps".into(), toml::Value::Integer(r.steps as i64)));
    out.push(("max_norm_drift".into(), num(r.max_norm_drift)));
    for w in &r.warnings {
        out.push((
            format!("truncation_warning_mode{}", w.mode),
            toml::Value::String(format!("top Fock level weight {:e} from t = {}", w.max_weight, w.t)),
        ));
    }
}

fn dipole_spectrum(times: &[f64], values: &[f64], window: Window) -> Result<Table> {
    let f: Vec<C64> = values.iter().map(|&x| C64::from(x)).collect();
    let s = spectrum(times, &f, window)?;
    let mut t = Table::new("spectrum", vec!["omega".into(), "amplitude".into()]);
    for (x, v) in s.freqs.iter().zip(&s.values) {
        if *x >= 0.0 {
            t.rows.push(vec![Cell::Num(*x), Cell::Num(v.norm())]);
        }
    }
    Ok(t)
}

/// Execute `cmd` with `cfg`; no files are touched.
pub fn execute(cmd: Command, cfg: &RunConfig) -> Result<RunOutput> {
    if !(cfg.omega0.is_finite() && cfg.omega0 >= 0.0) {
        return Err(Error::config("omega0", "must be finite and non-negative"));
    }
    match cmd {
        Command::ClassicalDrive => model_a(cmd, cfg, &cfg.modes.omegas),
        Command::TwoMode => model_a(cmd, cfg, &cfg.two_mode.omegas),
        Command::Backaction => backaction(cfg),
        Command::Floquet => floquet(cfg),
        Command::CrossCorrelation => cross(cfg),
        Command::ScanModes => scan(cfg),
        Command::CheckResiduals => residuals(cfg),
    }
}

fn model_a(cmd: Command, cfg: &RunConfig, omegas: &[f64]) -> Result<RunOutput> {
    let model = cfg.model(omegas)?;
    let settings = cfg.settings()?;
    let grid = cfg.grid()?;
    let nm = model.modes.len();
    let init = QuantumState::ground_vacuum(&model.modes.n_max())?;
    let mut header: Vec<String> = vec!["t".into(), "sigma_x".into(), "sigma_z".into()];
    for k in 0..nm {
        for q in ["N", "Q", "lambda_minus", "lambda_plus", "slope"] {
            header.push(format!("{q}_{k}"));
        }
    }
    for i in 0..nm {
        for j in i + 1..nm {
            header.push(format!("g2_{i}{j}"));
        }
    }
    let mut table = Table::new("series", header);
    let mut records: Vec<Vec<ModeRecord>> = vec![Vec::new(); nm];
    let mut sigma_x = Vec::with_capacity(grid.len());
    let mut probe: Option<Probe> = None;
    let couplings: Vec<f64> = model.modes.modes().iter().map(|m| m.coupling).collect();
    let observer = |t: f64, s: &QuantumState| -> Result<()> {
        if probe.is_none() {
            probe = Some(Probe::new(s)?);
        }
        let r = probe.as_ref().unwrap().read(s)?;
        let mut row = vec![Cell::Num(t), Cell::Num(r.sigma_x), Cell::Num(r.sigma_z)];
        for (k, m) in r.modes.iter().enumerate() {
            let rec = ModeRecord::new(t, *m, couplings[k], r.sigma_z);
            row.extend([
                Cell::Num(m.n),
                Cell::Num(opt(rec.q)),
                Cell::Num(rec.ellipse.lambda_minus),
                Cell::Num(rec.ellipse.lambda_plus),
                Cell::Num(opt(rec.slope)),
            ]);
            records[k].push(rec);
        }
        for i in 0..nm {
            for j in i + 1..nm {
                row.push(Cell::Num(cross_correlation(s, i, j).unwrap_or(f64::NAN)));
            }
        }
        sigma_x.push(r.sigma_x);
        table.rows.push(row);
        Ok(())
    };
    let report = match cfg.modes.method {
        Method::Displaced => propagate_displaced_with(&init, &model, &grid, &settings, observer)?,
        Method::FockDirect => propagate_fock_direct_with(&init, &model, &grid, &settings, observer)?,
    };
    let mut summary = Vec::new();
    report_summary(&report, &mut summary);
    for (k, recs) in records.iter().enumerate() {
        let moments: Vec<_> = recs.iter().map(|r| r.moments).collect();
        summary.push((format!("mean_q_{k}"), num(weighted_mean_q(&moments).unwrap_or(f64::NAN))));
        let squeezed = recs.iter().any(|r| r.ellipse.is_squeezed());
        summary.push((format!("squeezed_{k}"), toml::Value::Boolean(squeezed)));
    }
    let spec = dipole_spectrum(&grid, &sigma_x, cfg.output.window)?;
    Ok(RunOutput { command: cmd, tables: vec![table, spec], summary })
}

fn backaction(cfg: &RunConfig) -> Result<RunOutput> {
    let l = &cfg.lattice;
    let d = &cfg.drive;
    if !(d.omega_e > 0.0 && d.omega_e < d.omega_f) {
        return Err(Error::config("drive.omega_e", "the three-mode pulse needs 0 < omega_e < omega_f"));
    }
    if !l.amplitude.is_finite() {
        return Err(Error::config("lattice.A", "must be finite"));
    }
    if l.couplings.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
        return Err(Error::config("lattice.couplings", "must be finite and non-negative"));
    }
    if l.samples < 1 {
        return Err(Error::config("lattice.samples", "must be at least 1"));
    }
    let mut spec = LatticeSpec::pulse(cfg.omega0, l.amplitude, l.phi, d.omega_f, d.omega_e, l.couplings, l.side, l.spacing);
    spec.padding = l.padding;
    spec.condition_cap = l.condition_cap;
    let model = LatticeModel::new(spec).map_err(|e| match e {
        Error::InvalidParameter(m) => Error::config("lattice", m),
        e => e,
    })?;
    let init = model.ground_at_centers()?;
    let grid = uniform_grid(0.0, PI / d.omega_e, l.samples);
    let mut table = Table::new(
        "series",
        ["t", "sigma_x", "Q_resonant", "Q_side1", "Q_side2", "g3", "E_mean", "slope_sum"].map(String::from).to_vec(),
    );
    let mut sigma_x = Vec::with_capacity(grid.len());
    let mut g3_dev = 0.0f64;
    let mut last_q = f64::NAN;
    let couplings = l.couplings;
    let (drift, _) = model.evolve_with(&init, &grid, cfg.integrator.max_step, |s| {
        let r = model.observe(s)?;
        let q: Vec<f64> = r.modes.iter().map(|m| if m.is_excited() { m.mandel_q() } else { f64::NAN }).collect();
        let slope: f64 = r
            .modes
            .iter()
            .zip(couplings)
            .map(|(m, c)| m.antibunching_slope(c).unwrap_or(0.0))
            .sum();
        let g3 = r.g3.unwrap_or(f64::NAN);
        if r.g3.is_some() {
            g3_dev = g3_dev.max((g3 - 1.0).abs());
        }
        last_q = q[0];
        sigma_x.push(r.sigma_x);
        table.rows.push(
            [r.t, r.sigma_x, q[0], q[1], q[2], g3, r.e_mean, slope].into_iter().map(Cell::Num).collect(),
        );
        Ok(())
    })?;
    let summary = vec![
        ("condition".to_string(), num(model.condition)),
        ("dimension".to_string(), toml::Value::Integer(2 * model.dim() as i64)),
        ("step".to_string(), num(cfg.integrator.max_step.unwrap_or_else(|| model.default_step()))),
        ("max_norm_drift".to_string(), num(drift)),
        ("q_resonant_end".to_string(), num(last_q)),
        ("max_g3_deviation".to_string(), num(g3_dev)),
    ];
    let spec = dipole_spectrum(&grid, &sigma_x, cfg.output.window)?;
    Ok(RunOutput { command: Command::Backaction, tables: vec![table, spec], summary })
}

fn floquet(cfg: &RunConfig) -> Result<RunOutput> {
    let f = &cfg.floquet;
    if !(f.omega > 0.0) {
        return Err(Error::config("floquet.omega", "must be positive"));
    }
    if f.cycles < 1 || f.per_cycle < 2 {
        return Err(Error::config("floquet.cycles", "need at least one cycle of two samples"));
    }
    let sol = FloquetSolution::new(f.amplitude, f.omega, cfg.omega0).map_err(|e| match e {
        Error::InvalidParameter(m) => Error::config("floquet", m),
        e => e,
    })?;
    let grid = uniform_grid(0.0, f.cycles as f64 * 2.0 * PI / f.omega, f.cycles * f.per_cycle);
    let one = C64::new(1.0, 0.0);
    let series = propagate_c(&sol, (one, one), &grid, None)?;
    let dip = dipole_expectation(&sol, &series);
    let mut table = Table::new(
        "series",
        ["t", "re_c_plus", "im_c_plus", "re_c_minus", "im_c_minus", "sigma_x"].map(String::from).to_vec(),
    );
    for k in 0..grid.len() {
        let (p, m) = (series.plus[k], series.minus[k]);
        table.rows.push([grid[k], p.re, p.im, m.re, m.im, dip[k]].into_iter().map(Cell::Num).collect());
    }
    let e = &sol.energies;
    let summary = vec![
        ("xi".to_string(), num(sol.xi_transform)),
        ("xi_residual".to_string(), num(sol.xi_residual())),
        ("eps_plus".to_string(), num(e.eps_plus)),
        ("eps_minus".to_string(), num(e.eps_minus)),
        ("theta".to_string(), num(sol.theta())),
        ("delta_eps".to_string(), num(sol.delta_eps())),
        ("xi_offset".to_string(), num(sol.xi_offset())),
        ("eta".to_string(), num(sol.eta)),
        ("n_bessel".to_string(), toml::Value::Integer(sol.n_bessel as i64)),
        ("max_norm_drift".to_string(), num(series.max_norm_drift)),
    ];
    let spec = dipole_spectrum(&grid, &dip, cfg.output.window)?;
    Ok(RunOutput { command: Command::Floquet, tables: vec![table, spec], summary })
}

fn cross(cfg: &RunConfig) -> Result<RunOutput> {
    let c = &cfg.cross_correlation;
    if c.pairs.is_empty() {
        return Err(Error::config("cross_correlation.pairs", "at least one pair is required"));
    }
    for p in &c.pairs {
        if p[0] == 0 || p[1] == 0 {
            return Err(Error::config("cross_correlation.pairs", "harmonic orders start at 1"));
        }
        if p[0] % 2 == 0 && p[1] % 2 == 0 {
            return Err(Error::config("cross_correlation.pairs", format!("{p:?}: no predictor for an even–even pair")));
        }
    }
    if !(c.coupling.is_finite() && c.coupling >= 0.0) {
        return Err(Error::config("cross_correlation.coupling", "must be finite and non-negative"));
    }
    if c.cycles < 1 || c.per_cycle < 8 {
        return Err(Error::config("cross_correlation.per_cycle", "need at least 8 samples per cycle"));
    }
    let sol = FloquetSolution::new(c.amplitude, c.omega, cfg.omega0).map_err(|e| match e {
        Error::InvalidParameter(m) => Error::config("cross_correlation", m),
        e => e,
    })?;
    let grid = uniform_grid(0.0, c.cycles as f64 * 2.0 * PI / c.omega, c.cycles * c.per_cycle);
    let one = C64::new(1.0, 0.0);
    let series = propagate_c(&sol, (one, one), &grid, None)?;
    let window = cfg.output.window;
    let freq = |order: u32| -> Result<f64> {
        if c.lock_to_lines {
            resonant_frequency(&sol, &series, window, order as i64)
        } else {
            Ok(order as f64 * c.omega)
        }
    };
    let rows = c
        .pairs
        .par_iter()
        .map(|p| -> Result<Vec<Cell>> {
            let (w1, w2) = (freq(p[0])?, freq(p[1])?);
            let pert = match c.method {
                CrossMethod::Full => f64::NAN,
                _ => perturbative_cross_correlation(&sol, &series, window, w1, w2)?,
            };
            let (full, drift) = match c.method {
                CrossMethod::Perturbative => (f64::NAN, f64::NAN),
                _ => {
                    let modes = CutoffModes { omega1: w1, omega2: w2, coupling1: c.coupling, coupling2: c.coupling };
                    let tr = propagate_cutoff(&sol, &modes, c.approx, (one, one), &CutoffState::both_branches_vacuum(), &grid, None)?;
                    (tr.cross_correlation(grid.len() - 1)?, tr.max_norm_drift)
                }
            };
            let parity = |w: f64| classify(w, c.omega).map(|p| format!("{p:?}").to_lowercase()).unwrap_or_else(|_| "none".into());
            Ok(vec![
                Cell::Int(p[0] as i64),
                Cell::Int(p[1] as i64),
                Cell::Num(w1),
                Cell::Num(w2),
                Cell::Text(parity(w1)),
                Cell::Text(parity(w2)),
                Cell::Num(full),
                Cell::Num(pert),
                Cell::Num(drift),
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    let mut table = Table::new(
        "pairs",
        ["order1", "order2", "omega1", "omega2", "parity1", "parity2", "g2_full", "g2_perturbative", "norm_drift"]
            .map(String::from)
            .to_vec(),
    );
    table.rows = rows;
    let summary = vec![
        ("xi_offset".to_string(), num(sol.xi_offset())),
        ("approx".to_string(), toml::Value::String(format!("{:?}", c.approx).to_lowercase())),
    ];
    Ok(RunOutput { command: Command::CrossCorrelation, tables: vec![table], summary })
}

fn scan(cfg: &RunConfig) -> Result<RunOutput> {
    if cfg.scan.omegas.is_empty() {
        return Err(Error::config("scan.omegas", "at least one frequency is required"));
    }
    cfg.modes.coupling.validate()?;
    let probe_model = cfg.model(&cfg.scan.omegas)?;
    let settings = cfg.settings()?;
    let grid = cfg.grid()?;
    let sg = scan_modes(
        &cfg.scan.omegas,
        cfg.omega0,
        &probe_model.drive,
        &cfg.modes.coupling,
        cfg.modes.n_max,
        &grid,
        &settings,
    )?;
    let mut table = Table::new(
        "spectrogram",
        ["t", "omega", "N", "Q", "lambda_minus", "lambda_plus", "slope"].map(String::from).to_vec(),
    );
    let mut summary = Vec::new();
    for col in &sg.columns {
        for r in &col.records {
            table.rows.push(
                [r.t, col.omega, r.moments.n, opt(r.q), r.ellipse.lambda_minus, r.ellipse.lambda_plus, opt(r.slope)]
                    .into_iter()
                    .map(Cell::Num)
                    .collect(),
            );
        }
        let moments: Vec<_> = col.records.iter().map(|r| r.moments).collect();
        summary.push((format!("mean_q_omega_{}", col.omega), num(weighted_mean_q(&moments).unwrap_or(f64::NAN))));
        summary.push((format!("max_norm_drift_omega_{}", col.omega), num(col.report.max_norm_drift)));
    }
    Ok(RunOutput { command: Command::ScanModes, tables: vec![table], summary })
}

fn residuals(cfg: &RunConfig) -> Result<RunOutput> {
    let model = cfg.model(&cfg.modes.omegas)?;
    let r = &cfg.residuals;
    if !(r.spacing > 0.0 && r.tolerance > 0.0) {
        return Err(Error::config("residuals", "spacing and tolerance must be positive"));
    }
    let dt = r.spacing / model.omega_max();
    let t_end = match (cfg.integrator.t_end, cfg.drive.support_end()) {
        (Some(t), _) | (None, Some(t)) => t,
        (None, None) => return Err(Error::config("integrator.t_end", "required for an unbounded drive")),
    };
    let n = (t_end / dt).round().max(4.0) as usize;
    let grid = uniform_grid(0.0, t_end, n);
    let settings = Settings { max_step: Some(dt), norm_abort: cfg.integrator.norm_abort, ..Settings::default() };
    let init = QuantumState::ground_vacuum(&model.modes.n_max())?;
    let mut stream = ResidualStream::new(&model, r.tolerance);
    let report = match cfg.modes.method {
        Method::Displaced => propagate_displaced_with(&init, &model, &grid, &settings, |t, s| stream.push(t, s))?,
        Method::FockDirect => propagate_fock_direct_with(&init, &model, &grid, &settings, |t, s| stream.push(t, s))?,
    };
    let res = stream.finish()?;
    let mut table = Table::new(
        "equations",
        ["equation", "max_residual", "max_residual_double", "ratio", "differencing_dominated", "within_tolerance"]
            .map(String::from)
            .to_vec(),
    );
    for e in &res.equations {
        table.rows.push(vec![
            Cell::Text(e.name.clone()),
            Cell::Num(e.max_residual),
            Cell::Num(e.max_residual_double),
            Cell::Num(e.ratio),
            Cell::Flag(e.differencing_dominated),
            Cell::Flag(e.max_residual <= res.tolerance),
        ]);
    }
    let mut summary = vec![
        ("spacing".to_string(), num(res.spacing)),
        ("samples".to_string(), toml::Value::Integer(res.samples as i64)),
        ("tolerance".to_string(), num(res.tolerance)),
        ("max_residual".to_string(), num(res.max_residual())),
        ("coarse_grid".to_string(), toml::Value::Boolean(res.coarse_grid)),
    ];
    report_summary(&report, &mut summary);
    Ok(RunOutput { command: Command::CheckResiduals, tables: vec![table], summary })
}

/// Metadata sidecar: version, config hash, defaults filled in, window,
/// headline numbers and the resolved config.
pub fn metadata(loaded: &LoadedConfig, out: &RunOutput, files: &[String]) -> String {
    let mut t = toml::Table::new();
    t.insert("version".into(), VERSION.into());
    t.insert("command".into(), out.command.name().into());
    t.insert("config_hash".into(), format!("sha256:{}", loaded.config.hash()).into());
    t.insert("window".into(), loaded.config.output.window.name().into());
    t.insert("outputs".into(), toml::Value::Array(files.iter().map(|f| f.as_str().into()).collect()));
    let defaults: toml::Table = loaded
        .applied_defaults(out.command)
        .into_iter()
        .map(|(k, v)| (k, toml::Value::String(v)))
        .collect();
    t.insert("applied_defaults".into(), toml::Value::Table(defaults));
    let summary: toml::Table = out
        .summary
        .iter()
        .map(|(k, v)| match v {
            toml::Value::Float(x) if !x.is_finite() => (k.clone(), toml::Value::String(x.to_string())),
            _ => (k.clone(), v.clone()),
        })
        .collect();
    t.insert("summary".into(), toml::Value::Table(summary));
    t.insert("config".into(), toml::Value::try_from(&loaded.config).expect("config serializes"));
    toml::to_string(&t).expect("metadata serializes")
}

/// Write every table as `<stem>_<name>.csv` and the sidecar `<stem>.meta.toml`
/// under `output.dir`. Returns the written paths.
pub fn write_outputs(loaded: &LoadedConfig, out: &RunOutput) -> Result<Vec<PathBuf>> {
    let dir = &loaded.config.output.dir;
    std::fs::create_dir_all(dir)?;
    let stem = out.command.stem();
    let mut paths = Vec::new();
    let mut names = Vec::new();
    for t in &out.tables {
        let name = format!("{stem}_{}.csv", t.name);
        let p = dir.join(&name);
        std::fs::write(&p, t.to_csv()?)?;
        names.push(name);
        paths.push(p);
    }
    let meta = dir.join(format!("{stem}.meta.toml"));
    std::fs::write(&meta, metadata(loaded, out, &names))?;
    paths.push(meta);
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_and_defaults() {
        let text = "omega0 = 1.0\n[drive]\nA = 3.0\n";
        let l = LoadedConfig::from_str(text, &["floquet.A=0.001".into(), "output.window=rectangular".into()]).unwrap();
        assert_eq!(l.config.drive.amplitude, 3.0);
        assert_eq!(l.config.floquet.amplitude, 1e-3);
        assert_eq!(l.config.output.window, Window::Rectangular);
        let d: Vec<String> = l.applied_defaults(Command::Floquet).into_iter().map(|x| x.0).collect();
        assert!(d.contains(&"floquet.omega".to_string()));
        assert!(!d.contains(&"floquet.A".to_string()));
        assert!(!d.contains(&"omega0".to_string()));
        assert!(!d.iter().any(|k| k.starts_with("lattice")));
    }

    #[test]
    fn unknown_keys_name_the_field() {
        match LoadedConfig::from_str("[drive]\namplitude = 3.0\n", &[]) {
            Err(Error::Config { field, .. }) => assert_eq!(field, "drive.amplitude"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(LoadedConfig::from_str("", &["nonsense".into()]), Err(Error::Config { .. })));
    }

    #[test]
    fn hash_tracks_content() {
        let a = RunConfig::default();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.omega0 = 1.0 + 1e-15;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn cells_render_reproducibly() {
        let t = Table {
            name: "x".into(),
            header: vec!["a".into(), "b".into()],
            rows: vec![vec![Cell::Num(0.1), Cell::Num(f64::NAN)], vec![Cell::Int(3), Cell::Flag(true)]],
        };
        assert_eq!(String::from_utf8(t.to_csv().unwrap()).unwrap(), "a,b\n1e-1,nan\n3,true\n");
    }
}
