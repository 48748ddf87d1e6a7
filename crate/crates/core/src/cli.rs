//! Command-line surface of the `su11` binary.
//!
//! Every verb reads a TOML file (see `docs/` for one example per verb),
//! computes, and writes JSON or CSV to `--out` or stdout. Files are written
//! to a temporary sibling and renamed, so a failed run never leaves a
//! partial output behind.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::analytic::{self, fisher_max_value, loss_balanced_g2, visibilities};
use crate::bogoliubov;
use crate::calibration::{
    fit_transmissions_from_visibility_sweep, klyshko_calibration, recommend_strategy,
    transmissions_at_loss_balance, CalibrationError, CalibrationMethod, CalibrationResult, CountRecord,
    VisibilitySample, DEFAULT_RESIDUAL_CEILING,
};
use crate::comparison::{
    all_verdicts, asymptotic_conditional, asymptotic_unconditional, resource_ratio, singles_vs_coincidence_region,
    su2_fisher_max, su2_optimal_reflectivity, validate_su2, ComparisonError, Su2Config,
};
use crate::fock::{self, fisher_from_response, PhaseResponse, DEFAULT_CUTOFF, DEFAULT_PHI_STEP};
use crate::model::{
    validate, ClickProbabilities, FisherReport, InterferometerConfig, Observable, ValidatedConfig,
    VisibilityTriple,
};
use crate::optimize::grid_then_golden_max;
use crate::validation::{run_suite_with, Faults, Level, ValidationReport};

#[derive(Debug, Parser)]
#[command(name = "su11", version, about = "Lossy SU(1,1) interferometer models and checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Run configuration (TOML); for `calibrate`, the data file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Comma-separated engines, overriding the config file.
    #[arg(long, global = true, value_delimiter = ',', value_enum)]
    pub engines: Option<Vec<EngineName>>,

    /// Fock cutoff per mode, overriding the config file.
    #[arg(long, global = true)]
    pub cutoff: Option<usize>,

    /// Output format, overriding the config file; JSON by default, CSV for `sweep`.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate one configuration with every enabled engine.
    Probe,
    /// Sweep the second-stage gain.
    Sweep,
    /// Advantage verdicts against the SU(2) reference.
    Compare,
    /// Estimate efficiencies and transmissions from measured data.
    Calibrate,
    /// Run the cross-engine property suite.
    Validate {
        #[arg(long, value_enum, default_value_t = Level::Fast)]
        level: Level,
        /// Shorthand for `--level fast`.
        #[arg(long, conflicts_with_all = ["level", "full"])]
        fast: bool,
        /// Shorthand for `--level full`.
        #[arg(long, conflicts_with = "level")]
        full: bool,
        #[arg(long, hide = true, value_enum)]
        inject_fault: Option<InjectedFault>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum EngineName {
    Analytic,
    Bogoliubov,
    Fock,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InjectedFault {
    LossSign,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("property {module}::{name} failed; counterexample: {counterexample}")]
    Property {
        module: &'static str,
        name: &'static str,
        counterexample: String,
    },
    #[error("fit failed: residual {residual:e} above ceiling {ceiling:e}")]
    Fit { residual: f64, ceiling: f64 },
    #[error("calibration failed: {0}")]
    Calibration(CalibrationError),
    #[error("cannot write {path}: {source}")]
    Io { path: String, source: io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Property { .. } => 1,
            CliError::Config(_) | CliError::Io { .. } => 2,
            CliError::Fit { .. } | CliError::Calibration(_) => 3,
        }
    }
}

fn config_error(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

// ---------------------------------------------------------------- config file

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfigFile {
    pub interferometer: InterferometerConfig,
    #[serde(default)]
    pub su2: Su2Section,
    #[serde(default)]
    pub sweep: SweepSpec,
    #[serde(default)]
    pub engines: EngineToggles,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Su2Section {
    /// Detector efficiency of the reference SU(2); defaults to the better
    /// of `eta_a`, `eta_b`.
    pub eta_max: Option<f64>,
    /// Beam-splitter reflectivity; defaults to the optimum for the better
    /// detected port.
    pub r: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    Log,
    Linear,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSpec {
    pub g2_min: f64,
    pub g2_max: f64,
    pub points: usize,
    pub spacing: Spacing,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            g2_min: 1e-3,
            g2_max: 1.0,
            points: 200,
            spacing: Spacing::Log,
        }
    }
}

impl SweepSpec {
    /// Strictly increasing grid from `g2_min` to `g2_max`.
    pub fn grid(&self) -> Result<Vec<f64>, CliError> {
        let (lo, hi, n) = (self.g2_min, self.g2_max, self.points);
        if n < 2 {
            return Err(CliError::Config(format!("sweep needs at least 2 points, got {n}")));
        }
        if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && hi > lo) {
            return Err(CliError::Config(format!("sweep range [{lo}, {hi}] must satisfy 0 <= g2_min < g2_max")));
        }
        if self.spacing == Spacing::Log && lo <= 0.0 {
            return Err(CliError::Config("log sweep requires g2_min > 0".into()));
        }
        let last = (n - 1) as f64;
        let mut grid: Vec<f64> = (0..n)
            .map(|i| {
                let s = i as f64 / last;
                match self.spacing {
                    Spacing::Log => lo * (hi / lo).powf(s),
                    Spacing::Linear => lo + (hi - lo) * s,
                }
            })
            .collect();
        grid[n - 1] = hi;
        if grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CliError::Config("sweep grid is not strictly increasing at this resolution".into()));
        }
        Ok(grid)
    }

    /// Index of the grid point nearest `target`, on the grid's own scale.
    fn nearest(&self, grid: &[f64], target: f64) -> usize {
        let distance = |g: f64| match self.spacing {
            Spacing::Log if target > 0.0 => (g / target).ln().abs(),
            Spacing::Log => g,
            Spacing::Linear => (g - target).abs(),
        };
        let mut best = 0;
        for (i, &g) in grid.iter().enumerate() {
            if distance(g) < distance(grid[best]) {
                best = i;
            }
        }
        best
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EngineToggles {
    pub analytic: bool,
    pub bogoliubov: bool,
    pub fock: bool,
    pub cutoff: usize,
    pub phi_step: f64,
}

impl Default for EngineToggles {
    fn default() -> Self {
        Self {
            analytic: true,
            bogoliubov: true,
            fock: false,
            cutoff: DEFAULT_CUTOFF,
            phi_step: DEFAULT_PHI_STEP,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub path: Option<PathBuf>,
    pub format: Option<Format>,
}

/// Measured data for `calibrate`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationData {
    /// First-stage gain, required for the visibility fit.
    pub g1: Option<f64>,
    /// Efficiencies passed through the fit when no count records are given.
    pub eta_a: Option<f64>,
    pub eta_b: Option<f64>,
    pub residual_ceiling: Option<f64>,
    /// Gain limit for the strategy recommendation; unconstrained if absent.
    pub g2_max: Option<f64>,
    /// Count records from runs with only the second stage pumped. They are
    /// summed before inversion.
    #[serde(default)]
    pub counts: Vec<CountRecord>,
    #[serde(default)]
    pub visibility: Vec<VisibilitySample>,
    /// Singles visibilities measured at the loss-balanced gain.
    pub loss_balanced: Option<LossBalancedVisibilities>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossBalancedVisibilities {
    pub v_a: f64,
    pub v_b: f64,
}

fn read_toml<T: serde::de::DeserializeOwned>(path: Option<&Path>) -> Result<T, CliError> {
    let path = path.ok_or_else(|| CliError::Config("--config is required".into()))?;
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Parsed and validated run configuration with command-line overrides.
struct Run {
    file: RunConfigFile,
    config: ValidatedConfig,
    out: Option<PathBuf>,
    format: Option<Format>,
}

impl Run {
    fn load(cli: &Cli) -> Result<Self, CliError> {
        let mut file: RunConfigFile = read_toml(cli.config.as_deref())?;
        let config = validate(file.interferometer).map_err(config_error)?;
        if let Some(engines) = &cli.engines {
            file.engines.analytic = engines.contains(&EngineName::Analytic);
            file.engines.bogoliubov = engines.contains(&EngineName::Bogoliubov);
            file.engines.fock = engines.contains(&EngineName::Fock);
        }
        if let Some(d) = cli.cutoff {
            file.engines.cutoff = d;
        }
        if file.engines.cutoff < 2 {
            return Err(CliError::Config(format!("cutoff must be at least 2, got {}", file.engines.cutoff)));
        }
        if !(file.engines.phi_step > 0.0 && file.engines.phi_step <= 1e-2) {
            return Err(CliError::Config(format!("phi_step {} outside (0, 1e-2]", file.engines.phi_step)));
        }
        Ok(Self {
            out: cli.out.clone().or_else(|| file.output.path.clone()),
            format: cli.format.or(file.output.format),
            file,
            config,
        })
    }

    fn su2_eta_max(&self) -> Result<f64, CliError> {
        let eta = self.file.su2.eta_max.unwrap_or_else(|| self.config.eta_max());
        if (0.0..=1.0).contains(&eta) {
            Ok(eta)
        } else {
            Err(CliError::Config(format!("su2.eta_max = {eta} outside [0, 1]")))
        }
    }
}

// ---------------------------------------------------------------- output

/// Write `bytes` to `path` atomically, or to stdout.
pub fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    let io_err = |source: io::Error| CliError::Io {
        path: path.map_or_else(|| "stdout".into(), |p| p.display().to_string()),
        source,
    };
    match path {
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(bytes).and_then(|_| stdout.flush()).map_err(io_err)
        }
        Some(path) => {
            let dir = match path.parent() {
                Some(p) if !p.as_os_str().is_empty() => p,
                _ => Path::new("."),
            };
            let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
            tmp.write_all(bytes).map_err(io_err)?;
            tmp.as_file().sync_all().map_err(io_err)?;
            tmp.persist(path).map_err(|e| io_err(e.error))?;
            Ok(())
        }
    }
}

fn json_bytes(value: &impl Serialize) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("serializable report");
    bytes.push(b'\n');
    bytes
}

/// Full-precision scientific notation; the shortest form that round-trips.
fn sci(x: f64) -> String {
    format!("{x:e}")
}

fn csv_bytes(header: &[String], rows: &[Vec<String>]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(row).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

// ---------------------------------------------------------------- probe

#[derive(Debug, Serialize)]
struct EngineReport {
    click_probabilities: Option<ClickProbabilities>,
    visibilities: Option<VisibilityTriple>,
    fisher: Vec<FisherReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    errors: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    extra: Option<Value>,
}

/// Visibility of a sampled fringe `p(φ)`.
fn fringe_visibilities(p: impl Fn(Observable, f64) -> f64) -> VisibilityTriple {
    let v = |obs: Observable| {
        let (_, max) = grid_then_golden_max(|phi| p(obs, phi), 0.0, std::f64::consts::TAU, fock::PHASE_GRID_POINTS, 1e-10);
        let (_, neg_min) =
            grid_then_golden_max(|phi| -p(obs, phi), 0.0, std::f64::consts::TAU, fock::PHASE_GRID_POINTS, 1e-10);
        let (max, min) = (max, -neg_min);
        if max + min > 0.0 {
            ((max - min) / (max + min), true)
        } else {
            (0.0, false)
        }
    };
    let ((v_a, defined_a), (v_b, defined_b), (v_cc, defined_cc)) =
        (v(Observable::SinglesA), v(Observable::SinglesB), v(Observable::Coincidences));
    VisibilityTriple {
        v_a,
        v_b,
        v_cc,
        defined_a,
        defined_b,
        defined_cc,
    }
}

fn probe_analytic(config: &ValidatedConfig) -> EngineReport {
    let mut errors = Vec::new();
    let click_probabilities = analytic::click_probabilities(config).map_err(|e| errors.push(e.to_string())).ok();
    let fisher = Observable::ALL
        .iter()
        .filter_map(|&obs| analytic::fisher_report(config, obs).map_err(|e| errors.push(e.to_string())).ok())
        .collect();
    errors.dedup();
    EngineReport {
        click_probabilities,
        visibilities: Some(visibilities(config)),
        fisher,
        errors,
        extra: None,
    }
}

fn probe_bogoliubov(config: &ValidatedConfig) -> EngineReport {
    let m = bogoliubov::moments(config);
    let at = |phi: f64| bogoliubov::moments(&config.at_phase(phi).expect("finite phase"));
    let vis = fringe_visibilities(|obs, phi| {
        let m = at(phi);
        match obs {
            Observable::SinglesA => m.n_a,
            Observable::SinglesB => m.n_b,
            Observable::Coincidences => m.n_ab,
        }
    });
    EngineReport {
        click_probabilities: Some(bogoliubov::lowgain_click_probabilities(config)),
        visibilities: Some(vis),
        fisher: Vec::new(),
        errors: Vec::new(),
        extra: Some(json!({ "moments": m })),
    }
}

fn probe_fock(config: &ValidatedConfig, toggles: &EngineToggles) -> EngineReport {
    let response = match PhaseResponse::new(config, toggles.cutoff) {
        Ok(r) => r,
        Err(e) => {
            return EngineReport {
                click_probabilities: None,
                visibilities: None,
                fisher: Vec::new(),
                errors: vec![e.to_string()],
                extra: None,
            }
        }
    };
    if let Some(w) = response.truncation_warning() {
        warn!("Fock truncation at d = {} may drop probability {:e}", w.cutoff, w.leakage);
    }
    let mut errors = Vec::new();
    let fisher = Observable::ALL
        .iter()
        .filter_map(|&obs| {
            fisher_from_response(&response, config, obs, toggles.phi_step)
                .map_err(|e| errors.push(format!("{obs}: {e}")))
                .ok()
        })
        .collect();
    EngineReport {
        click_probabilities: Some(response.click_probabilities(config.phi)),
        visibilities: Some(fringe_visibilities(|obs, phi| response.probability(obs, phi))),
        fisher,
        errors,
        extra: Some(json!({
            "cutoff": response.cutoff(),
            "leakage": response.leakage(),
            "truncation_warning": response.truncation_warning(),
        })),
    }
}

fn click_delta(a: &ClickProbabilities, b: &ClickProbabilities) -> Value {
    json!({ "p_a": a.p_a - b.p_a, "p_b": a.p_b - b.p_b, "p_cc": a.p_cc - b.p_cc })
}

fn probe(cli: &Cli) -> Result<(), CliError> {
    let run = Run::load(cli)?;
    let c = &run.config;
    let toggles = &run.file.engines;
    let analytic_report = toggles.analytic.then(|| probe_analytic(c));
    let bogoliubov_report = toggles.bogoliubov.then(|| probe_bogoliubov(c));
    let fock_report = toggles.fock.then(|| probe_fock(c, toggles));

    let mut deltas = serde_json::Map::new();
    let reference = analytic_report.as_ref().and_then(|r| r.click_probabilities);
    for (name, report) in [("bogoliubov", &bogoliubov_report), ("fock", &fock_report)] {
        if let (Some(p), Some(reference)) = (report.as_ref().and_then(|r| r.click_probabilities), reference) {
            deltas.insert(format!("{name}_minus_analytic"), click_delta(&p, &reference));
        }
    }
    if let (Some(f), Some(a)) = (&fock_report, &analytic_report) {
        let rel: serde_json::Map<String, Value> = f
            .fisher
            .iter()
            .filter_map(|nr| {
                let ar = a.fisher.iter().find(|r| r.observable == nr.observable)?;
                let rel = if ar.fi_max > 0.0 { (nr.fi_max - ar.fi_max) / ar.fi_max } else { f64::NAN };
                Some((format!("fi_{}_max", nr.observable.label()), json!(rel)))
            })
            .collect();
        deltas.insert("fock_fisher_relative".into(), Value::Object(rel));
    }

    let engines = [("analytic", analytic_report), ("bogoliubov", bogoliubov_report), ("fock", fock_report)];
    match run.format.unwrap_or(Format::Json) {
        Format::Json => {
            let mut map = serde_json::Map::new();
            for (name, report) in engines {
                if let Some(r) = report {
                    map.insert(name.into(), serde_json::to_value(r).expect("serializable"));
                }
            }
            let report = json!({ "config": c.get(), "engines": map, "deltas": deltas });
            emit(run.out.as_deref(), &json_bytes(&report))
        }
        Format::Csv => {
            let mut header = vec!["engine".to_string()];
            for prefix in ["p", "V", "FI", "FI_max"] {
                header.extend(Observable::ALL.iter().map(|o| format!("{prefix}_{}", o.label())));
            }
            let rows: Vec<Vec<String>> = engines
                .iter()
                .filter_map(|(name, report)| {
                    let r = report.as_ref()?;
                    let mut row = vec![name.to_string()];
                    for obs in Observable::ALL {
                        row.push(sci(r.click_probabilities.map_or(f64::NAN, |p| p.get(obs))));
                    }
                    for obs in Observable::ALL {
                        row.push(sci(r.visibilities.map_or(f64::NAN, |v| v.get(obs).0)));
                    }
                    let fi = |obs: Observable, f: fn(&FisherReport) -> f64| {
                        sci(r.fisher.iter().find(|x| x.observable == obs).map_or(f64::NAN, f))
                    };
                    row.extend(Observable::ALL.map(|o| fi(o, |x| x.fi_at_phi)));
                    row.extend(Observable::ALL.map(|o| fi(o, |x| x.fi_max)));
                    Some(row)
                })
                .collect();
            emit(run.out.as_deref(), &csv_bytes(&header, &rows))
        }
    }
}

// ---------------------------------------------------------------- sweep

/// One grid point of a gain sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub g2: f64,
    pub p_a: f64,
    pub p_b: f64,
    pub p_cc: f64,
    pub v_a: f64,
    pub v_b: f64,
    pub v_cc: f64,
    pub fi_max: [f64; 3],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fi_num: Option<[f64; 3]>,
    pub loss_balanced: bool,
}

/// CSV header of [`SweepRow`]; the numeric FI columns appear only with the
/// Fock engine.
pub fn sweep_header(with_fock: bool) -> Vec<String> {
    let mut h: Vec<String> = ["g2", "p_A", "p_B", "p_CC", "V_A", "V_B", "V_CC", "FI_A_max", "FI_B_max", "FI_CC_max"]
        .map(String::from)
        .to_vec();
    if with_fock {
        h.extend(["FI_A_num", "FI_B_num", "FI_CC_num"].map(String::from));
    }
    h.push("loss_balanced".into());
    h
}

fn sweep_row(config: &ValidatedConfig, toggles: &EngineToggles, flagged: bool) -> SweepRow {
    // outside the low-gain regime the closed-form probabilities are not
    // defined; the FI and visibilities still are
    let p = analytic::click_probabilities(config).ok();
    let v = visibilities(config);
    let fi_num = toggles.fock.then(|| match fock::fisher_numeric_all(config, toggles.cutoff, toggles.phi_step) {
        Ok(r) => r.map(|x| x.fi_max),
        Err(e) => {
            warn!("g2 = {:e}: {e}", config.g2);
            [f64::NAN; 3]
        }
    });
    SweepRow {
        g2: config.g2,
        p_a: p.map_or(f64::NAN, |p| p.p_a),
        p_b: p.map_or(f64::NAN, |p| p.p_b),
        p_cc: p.map_or(f64::NAN, |p| p.p_cc),
        v_a: v.v_a,
        v_b: v.v_b,
        v_cc: v.v_cc,
        fi_max: Observable::ALL.map(|o| fisher_max_value(config, o)),
        fi_num,
        loss_balanced: flagged,
    }
}

/// Sweep rows in grid order. Rows are computed in parallel; the result does
/// not depend on the number of workers.
pub fn sweep_rows(config: &ValidatedConfig, spec: &SweepSpec, toggles: &EngineToggles) -> Result<Vec<SweepRow>, CliError> {
    let grid = spec.grid()?;
    let balanced = spec.nearest(&grid, loss_balanced_g2(config.g1, config.t_a, config.t_b));
    if toggles.fock {
        let worst = fock::pipeline_leakage(&config.with_g2(grid[grid.len() - 1]).map_err(config_error)?, toggles.cutoff);
        if worst > fock::LEAKAGE_WARNING_THRESHOLD {
            warn!("Fock truncation at d = {} may drop probability up to {worst:e} at the top of the sweep", toggles.cutoff);
        }
    }
    grid.par_iter()
        .enumerate()
        .map(|(i, &g2)| {
            let c = config.with_g2(g2).map_err(config_error)?;
            Ok(sweep_row(&c, toggles, i == balanced))
        })
        .collect()
}

fn sweep(cli: &Cli) -> Result<(), CliError> {
    let run = Run::load(cli)?;
    let toggles = &run.file.engines;
    let rows = sweep_rows(&run.config, &run.file.sweep, toggles)?;
    let bytes = match run.format.unwrap_or(Format::Csv) {
        Format::Json => json_bytes(&rows),
        Format::Csv => {
            let records: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    let mut rec: Vec<String> =
                        [r.g2, r.p_a, r.p_b, r.p_cc, r.v_a, r.v_b, r.v_cc].iter().map(|&x| sci(x)).collect();
                    rec.extend(r.fi_max.iter().map(|&x| sci(x)));
                    if let Some(num) = r.fi_num {
                        rec.extend(num.iter().map(|&x| sci(x)));
                    }
                    rec.push(r.loss_balanced.to_string());
                    rec
                })
                .collect();
            csv_bytes(&sweep_header(toggles.fock), &records)
        }
    };
    emit(run.out.as_deref(), &bytes)
}

// ---------------------------------------------------------------- compare

fn compare(cli: &Cli) -> Result<(), CliError> {
    let run = Run::load(cli)?;
    let c = &run.config;
    let eta_max = run.su2_eta_max()?;
    let verdicts = all_verdicts(c, eta_max);

    let regions: serde_json::Map<String, Value> = [Observable::SinglesA, Observable::SinglesB]
        .iter()
        .map(|&obs| {
            let v = match singles_vs_coincidence_region(c, obs) {
                Ok(v) => json!({ "verdict": v, "limit_only": false }),
                Err(ComparisonError::EfficiencyOne { limit }) => json!({ "verdict": limit, "limit_only": true }),
                Err(e) => json!({ "error": e.to_string() }),
            };
            (obs.to_string(), v)
        })
        .collect();

    // equal-resources SU(2) counterpart with the configured or optimal R
    let better = if c.eta_b > c.eta_a { Observable::SinglesB } else { Observable::SinglesA };
    let r = match run.file.su2.r {
        Some(r) => r,
        None => su2_optimal_reflectivity(c.t_a, c.t_b, better).unwrap_or(0.5),
    };
    let su2 = validate_su2(Su2Config::equal_resources(c.get(), r)).map_err(config_error)?;
    let su2_report = su2_fisher_max(&su2).map_err(config_error)?;

    match run.format.unwrap_or(Format::Json) {
        Format::Json => {
            let report = json!({
                "config": c.get(),
                "su2_eta_max": eta_max,
                "asymptotic_conditional": asymptotic_conditional(c.t_a, c.t_b),
                "asymptotic_unconditional": asymptotic_unconditional(c.t_a, c.t_b, c.eta_max()),
                "resource_ratio": resource_ratio(c),
                "verdicts": verdicts,
                "regions": regions,
                "su2": { "config": su2.get(), "fisher": su2_report },
            });
            emit(run.out.as_deref(), &json_bytes(&report))
        }
        Format::Csv => {
            let header = [
                "kind",
                "observable",
                "holds",
                "threshold_gain_ratio",
                "binding_condition",
                "condition_value",
                "condition_bound",
                "asymptotic_conditional",
                "asymptotic_unconditional",
            ]
            .map(String::from);
            let label = |v: &dyn erased::Label| v.label();
            let rows: Vec<Vec<String>> = verdicts
                .iter()
                .map(|v| {
                    vec![
                        label(&v.kind),
                        v.observable.to_string(),
                        v.holds.to_string(),
                        sci(v.threshold_gain_ratio.unwrap_or(f64::NAN)),
                        label(&v.binding_condition),
                        sci(v.condition_value),
                        sci(v.condition_bound),
                        v.asymptotic_conditional.to_string(),
                        v.asymptotic_unconditional.to_string(),
                    ]
                })
                .collect();
            emit(run.out.as_deref(), &csv_bytes(&header, &rows))
        }
    }
}

mod erased {
    /// serde name of a unit enum variant.
    pub trait Label {
        fn label(&self) -> String;
    }

    impl<T: serde::Serialize> Label for T {
        fn label(&self) -> String {
            match serde_json::to_value(self) {
                Ok(serde_json::Value::String(s)) => s,
                other => format!("{other:?}"),
            }
        }
    }
}

// ---------------------------------------------------------------- calibrate

fn calibration_error(e: CalibrationError) -> CliError {
    match e {
        CalibrationError::FitDiverged { residual, ceiling } => CliError::Fit { residual, ceiling },
        CalibrationError::ZeroCounts => CliError::Calibration(e),
        other => CliError::Config(other.to_string()),
    }
}

fn calibrate(cli: &Cli) -> Result<(), CliError> {
    let data: CalibrationData = read_toml(cli.config.as_deref())?;
    let out = cli.out.clone();
    let mut results: Vec<CalibrationResult> = Vec::new();

    let mut eta = (data.eta_a, data.eta_b);
    if !data.counts.is_empty() {
        let sum = |f: fn(&CountRecord) -> f64| data.counts.iter().map(f).sum::<f64>();
        let total = CountRecord::new(
            sum(CountRecord::singles_a),
            sum(CountRecord::singles_b),
            sum(CountRecord::coincidences),
            "total",
        )
        .map_err(calibration_error)?;
        let k = klyshko_calibration(&total).map_err(calibration_error)?;
        eta = (k.eta_a, k.eta_b);
        results.push(k);
    }
    if let Some(lb) = data.loss_balanced {
        for v in [lb.v_a, lb.v_b] {
            if !(0.0..=1.0).contains(&v) {
                return Err(CliError::Config(format!("loss-balanced visibility {v} outside [0, 1]")));
            }
        }
        let (t_a, t_b) = transmissions_at_loss_balance(lb.v_a, lb.v_b);
        results.push(CalibrationResult {
            eta_a: eta.0,
            eta_b: eta.1,
            t_a: Some(t_a),
            t_b: Some(t_b),
            residual: 0.0,
            method: CalibrationMethod::LossBalancedInversion,
        });
    }
    if !data.visibility.is_empty() {
        let g1 = data.g1.ok_or_else(|| CliError::Config("visibility fit needs g1".into()))?;
        let ceiling = data.residual_ceiling.unwrap_or(DEFAULT_RESIDUAL_CEILING);
        let passthrough = (eta.0.unwrap_or(1.0), eta.1.unwrap_or(1.0));
        let mut fit = fit_transmissions_from_visibility_sweep(g1, &data.visibility, passthrough, ceiling)
            .map_err(calibration_error)?;
        fit.eta_a = eta.0;
        fit.eta_b = eta.1;
        results.push(fit);
    }
    if results.is_empty() {
        return Err(CliError::Config("data file holds no counts, visibility samples or loss-balanced visibilities".into()));
    }

    // recommend once every parameter is known
    let last = results.last().expect("non-empty");
    let recommendation = match (data.g1, last.eta_a, last.eta_b, last.t_a, last.t_b) {
        (Some(g1), Some(eta_a), Some(eta_b), Some(t_a), Some(t_b)) => {
            let c = validate(
                InterferometerConfig::lossless(g1, 0.0)
                    .with_transmissions(t_a, t_b)
                    .with_efficiencies(eta_a, eta_b),
            )
            .map_err(config_error)?;
            Some(recommend_strategy(&c, data.g2_max).map_err(calibration_error)?)
        }
        _ => None,
    };

    match cli.format.unwrap_or(Format::Json) {
        Format::Json => emit(
            out.as_deref(),
            &json_bytes(&json!({ "results": results, "recommendation": recommendation })),
        ),
        Format::Csv => {
            let header = ["method", "eta_a", "eta_b", "t_a", "t_b", "residual"].map(String::from);
            let opt = |x: Option<f64>| sci(x.unwrap_or(f64::NAN));
            let rows: Vec<Vec<String>> = results
                .iter()
                .map(|r| {
                    vec![
                        erased::Label::label(&r.method),
                        opt(r.eta_a),
                        opt(r.eta_b),
                        opt(r.t_a),
                        opt(r.t_b),
                        sci(r.residual),
                    ]
                })
                .collect();
            emit(out.as_deref(), &csv_bytes(&header, &rows))
        }
    }
}

// ---------------------------------------------------------------- validate

fn report_csv(report: &ValidationReport) -> Vec<u8> {
    let header = ["module", "property", "samples", "passed", "worst", "tolerance"].map(String::from);
    let rows: Vec<Vec<String>> = report
        .outcomes
        .iter()
        .map(|o| {
            vec![
                o.module.to_string(),
                o.name.to_string(),
                o.samples.to_string(),
                o.passed.to_string(),
                sci(o.worst),
                sci(o.tolerance),
            ]
        })
        .collect();
    csv_bytes(&header, &rows)
}

fn validate_cmd(cli: &Cli, level: Level, fault: Option<InjectedFault>) -> Result<(), CliError> {
    let faults = Faults {
        loss_sign: fault == Some(InjectedFault::LossSign),
    };
    let report = run_suite_with(level, faults);
    let bytes = match cli.format.unwrap_or(Format::Json) {
        Format::Json => json_bytes(&report),
        Format::Csv => report_csv(&report),
    };
    emit(cli.out.as_deref(), &bytes)?;
    if cli.out.is_some() {
        eprint!("{}", summary(&report));
    }
    match report.first_failure() {
        None => Ok(()),
        Some(o) => Err(CliError::Property {
            module: o.module,
            name: o.name,
            counterexample: serde_json::to_string(&o.counterexample).expect("serializable"),
        }),
    }
}

/// One line per property.
pub fn summary(report: &ValidationReport) -> String {
    let mut s = String::new();
    for o in &report.outcomes {
        let _ = writeln!(s, "{} {}::{} ({} cases)", if o.passed { "ok  " } else { "FAIL" }, o.module, o.name, o.samples);
    }
    s
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Probe => probe(cli),
        Command::Sweep => sweep(cli),
        Command::Compare => compare(cli),
        Command::Calibrate => calibrate(cli),
        Command::Validate {
            level,
            fast,
            full,
            inject_fault,
        } => {
            let level = match (fast, full) {
                (true, _) => Level::Fast,
                (_, true) => Level::Full,
                _ => *level,
            };
            validate_cmd(cli, level, *inject_fault)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(lo: f64, hi: f64, points: usize, spacing: Spacing) -> SweepSpec {
        SweepSpec {
            g2_min: lo,
            g2_max: hi,
            points,
            spacing,
        }
    }

    #[test]
    fn grids_are_strictly_increasing_and_hit_both_ends() {
        for s in [spec(1e-3, 1.0, 200, Spacing::Log), spec(0.0, 0.3, 7, Spacing::Linear)] {
            let g = s.grid().unwrap();
            assert_eq!(g.len(), s.points);
            assert_eq!(g[0], s.g2_min);
            assert_eq!(g[g.len() - 1], s.g2_max);
            assert!(g.windows(2).all(|w| w[1] > w[0]));
        }
    }

    #[test]
    fn invalid_sweeps_are_config_errors() {
        for s in [
            spec(1e-3, 1.0, 1, Spacing::Log),
            spec(0.0, 1.0, 10, Spacing::Log),
            spec(0.5, 0.1, 10, Spacing::Linear),
            spec(f64::NAN, 1.0, 10, Spacing::Linear),
        ] {
            assert_eq!(s.grid().unwrap_err().exit_code(), 2);
        }
    }

    #[test]
    fn exactly_one_loss_balanced_row() {
        let c = validate(InterferometerConfig::lossless(0.05, 0.0).with_transmissions(0.2, 0.22)).unwrap();
        let toggles = EngineToggles {
            bogoliubov: false,
            ..Default::default()
        };
        let s = spec(1e-3, 1.0, 50, Spacing::Log);
        let rows = sweep_rows(&c, &s, &toggles).unwrap();
        let flagged: Vec<_> = rows.iter().filter(|r| r.loss_balanced).collect();
        assert_eq!(flagged.len(), 1);
        let target = 0.05 * (0.2f64 * 0.22).sqrt();
        let best = rows
            .iter()
            .map(|r| (r.g2 / target).ln().abs())
            .fold(f64::INFINITY, f64::min);
        assert_eq!((flagged[0].g2 / target).ln().abs(), best);
    }

    #[test]
    fn out_of_regime_probabilities_are_nan_but_fisher_is_not() {
        let c = validate(InterferometerConfig::lossless(0.05, 0.5)).unwrap();
        let row = sweep_row(&c, &EngineToggles::default(), false);
        assert!(row.p_a.is_nan());
        assert!(row.fi_max.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn scientific_formatting_round_trips() {
        for x in [0.1, 1.0 / 3.0, 2.5e-3, 0.0, 1e-300] {
            assert_eq!(sci(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(sci(f64::NAN), "NaN");
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Config("x".into()).exit_code(), 2);
        assert_eq!(CliError::Fit { residual: 1.0, ceiling: 0.05 }.exit_code(), 3);
        let p = CliError::Property {
            module: "fock",
            name: "trace_preservation",
            counterexample: "{}".into(),
        };
        assert_eq!(p.exit_code(), 1);
    }
}
