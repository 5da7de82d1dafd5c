//! Declarative experiments: JSON configs, seeded repetitions, sweeps and the
//! CSV artifacts they produce.
//!
//! All CSV files have a fixed header, a fixed column order and use Rust's
//! shortest round-trip float formatting, so identical inputs give identical
//! bytes. Only the `solve_ms_*` columns of summaries carry wall-clock data.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{mean_periodogram, periodogram, EnsembleStats, Periodogram};
use crate::controller::{num_steps, receding_horizon_run, MppiConfig, RunLog, SolverParams};
use crate::error::{Error, Result};
use crate::noise::{ColoredNoise, ColoredSpec, NoiseBatch};
use crate::samplers::SamplerConfig;
use crate::seed;
use crate::systems::{DoubleIntegrator, LaggedVehicle, LaggedVehicleParams, System};

/// Plant under control, with its initial state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemConfig {
    DoubleIntegrator {
        #[serde(default = "default_double_integrator_x0")]
        x0: Vec<f64>,
    },
    LaggedVehicle {
        #[serde(default)]
        params: LaggedVehicleParams,
        #[serde(default = "default_vehicle_x0")]
        x0: Vec<f64>,
    },
}

fn default_double_integrator_x0() -> Vec<f64> {
    vec![-9.0, 0.0]
}

fn default_vehicle_x0() -> Vec<f64> {
    vec![0.0; 6]
}

impl SystemConfig {
    pub fn build(&self) -> ExperimentSystem {
        match self {
            SystemConfig::DoubleIntegrator { .. } => ExperimentSystem::DoubleIntegrator(DoubleIntegrator),
            SystemConfig::LaggedVehicle { params, .. } => {
                ExperimentSystem::LaggedVehicle(LaggedVehicle::new(*params))
            }
        }
    }

    pub fn x0(&self) -> &[f64] {
        match self {
            SystemConfig::DoubleIntegrator { x0 } | SystemConfig::LaggedVehicle { x0, .. } => x0,
        }
    }
}

/// Enum dispatch over the built-in plants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExperimentSystem {
    DoubleIntegrator(DoubleIntegrator),
    LaggedVehicle(LaggedVehicle),
}

macro_rules! dispatch {
    ($self:ident, $s:ident => $e:expr) => {
        match $self {
            ExperimentSystem::DoubleIntegrator($s) => $e,
            ExperimentSystem::LaggedVehicle($s) => $e,
        }
    };
}

impl System for ExperimentSystem {
    fn state_dim(&self) -> usize {
        dispatch!(self, s => s.state_dim())
    }

    fn control_dim(&self) -> usize {
        dispatch!(self, s => s.control_dim())
    }

    fn step(&self, state: &mut [f64], control: &[f64], dt: f64) {
        dispatch!(self, s => s.step(state, control, dt))
    }

    fn running_cost(&self, state: &[f64]) -> f64 {
        dispatch!(self, s => s.running_cost(state))
    }

    fn terminal_cost(&self, state: &[f64]) -> f64 {
        dispatch!(self, s => s.terminal_cost(state))
    }

    fn control_bounds(&self) -> Option<Vec<(f64, f64)>> {
        dispatch!(self, s => s.control_bounds())
    }

    fn state_names(&self) -> Vec<String> {
        dispatch!(self, s => s.state_names())
    }

    fn control_names(&self) -> Vec<String> {
        dispatch!(self, s => s.control_names())
    }
}

/// One sampler under test; `label` names its output files and summary row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerEntry {
    pub label: String,
    pub sampler: SamplerConfig,
}

/// One experiment: a plant, shared solver settings and the samplers to compare.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: SystemConfig,
    pub controller: SolverParams,
    pub samplers: Vec<SamplerEntry>,
    #[serde(default = "default_duration")]
    pub duration_seconds: f64,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Length of the control window, from the start of each run, whose
    /// periodogram is reported.
    #[serde(default = "default_analysis_window")]
    pub analysis_window_seconds: f64,
}

fn default_duration() -> f64 {
    3.0
}

fn default_repetitions() -> usize {
    1
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_analysis_window() -> f64 {
    2.0
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(Error::InvalidConfig("repetitions must be at least 1".into()));
        }
        if self.samplers.is_empty() {
            return Err(Error::InvalidConfig("at least one sampler is required".into()));
        }
        let system = self.system.build();
        if self.system.x0().len() != system.state_dim() {
            return Err(Error::ShapeMismatch {
                what: "initial state",
                expected: system.state_dim(),
                actual: self.system.x0().len(),
            });
        }
        num_steps(self.duration_seconds, self.controller.dt)?;
        if !(self.analysis_window_seconds > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "analysis window must be positive, got {}",
                self.analysis_window_seconds
            )));
        }
        let mut labels: Vec<&str> = Vec::new();
        for entry in &self.samplers {
            if entry.label.is_empty() || !entry.label.chars().all(|c| c.is_ascii_alphanumeric() || "_-.".contains(c)) {
                return Err(Error::InvalidConfig(format!(
                    "sampler label `{}` must be non-empty and use only [A-Za-z0-9_.-]",
                    entry.label
                )));
            }
            if labels.contains(&entry.label.as_str()) {
                return Err(Error::InvalidConfig(format!("duplicate sampler label `{}`", entry.label)));
            }
            labels.push(&entry.label);
            if entry.sampler.control_dim() != system.control_dim() {
                return Err(Error::ShapeMismatch {
                    what: "sampler dimensions",
                    expected: system.control_dim(),
                    actual: entry.sampler.control_dim(),
                });
            }
            self.mppi_config(entry).validate()?;
        }
        Ok(())
    }

    pub fn mppi_config(&self, entry: &SamplerEntry) -> MppiConfig {
        MppiConfig::new(self.controller.clone(), entry.sampler.clone())
    }

    /// Seed of repetition `rep`; shared by all samplers so runs are paired.
    pub fn repetition_seed(&self, rep: usize) -> u64 {
        seed::derive(self.seed, rep as u64)
    }
}

/// Outcome of one repetition.
#[derive(Debug, Clone)]
pub struct RepetitionResult {
    pub rep: usize,
    pub seed: u64,
    pub log: std::result::Result<RunLog, String>,
}

/// All repetitions of one sampler.
#[derive(Debug, Clone)]
pub struct SamplerRuns {
    pub label: String,
    pub repetitions: Vec<RepetitionResult>,
}

impl SamplerRuns {
    pub fn logs(&self) -> impl Iterator<Item = &RunLog> {
        self.repetitions.iter().filter_map(|r| r.log.as_ref().ok())
    }

    pub fn costs(&self) -> Vec<f64> {
        self.logs().map(RunLog::accumulated_cost).collect()
    }

    pub fn failures(&self) -> usize {
        self.repetitions.iter().filter(|r| r.log.is_err()).count()
    }

    pub fn summary(&self) -> SummaryRow {
        let costs = EnsembleStats::from_values(self.costs()).ok();
        let solve_ms: Vec<f64> = self
            .logs()
            .flat_map(|l| l.solve_seconds.iter().map(|s| s * 1e3))
            .collect();
        let solve = EnsembleStats::from_values(solve_ms).ok();
        SummaryRow {
            sampler: self.label.clone(),
            reps_ok: self.repetitions.len() - self.failures(),
            reps_failed: self.failures(),
            cost_mean: costs.as_ref().map_or(f64::NAN, |s| s.mean),
            cost_std: costs.as_ref().map_or(f64::NAN, |s| s.std),
            solve_ms_mean: solve.as_ref().map_or(f64::NAN, |s| s.mean),
            solve_ms_std: solve.as_ref().map_or(f64::NAN, |s| s.std),
        }
    }
}

/// One row of `summary.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub sampler: String,
    pub reps_ok: usize,
    pub reps_failed: usize,
    pub cost_mean: f64,
    pub cost_std: f64,
    pub solve_ms_mean: f64,
    pub solve_ms_std: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub runs: Vec<SamplerRuns>,
}

impl ExperimentResult {
    pub fn runs_for(&self, label: &str) -> Option<&SamplerRuns> {
        self.runs.iter().find(|r| r.label == label)
    }

    pub fn summary(&self) -> Vec<SummaryRow> {
        self.runs.iter().map(SamplerRuns::summary).collect()
    }
}

/// Runs every sampler for `config.repetitions` seeded repetitions. A failing
/// repetition is recorded, not propagated.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let system = config.system.build();
    let runs = config
        .samplers
        .iter()
        .map(|entry| {
            let mppi = config.mppi_config(entry);
            let repetitions = (0..config.repetitions)
                .into_par_iter()
                .map(|rep| {
                    let seed = config.repetition_seed(rep);
                    let log = receding_horizon_run(&mppi, &system, config.system.x0(), config.duration_seconds, seed)
                        .map_err(|e| e.to_string());
                    RepetitionResult { rep, seed, log }
                })
                .collect();
            SamplerRuns {
                label: entry.label.clone(),
                repetitions,
            }
        })
        .collect();
    Ok(ExperimentResult {
        config: config.clone(),
        runs,
    })
}

/// Runs `f` on a dedicated pool of `threads` workers (`None`: rayon default).
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(Error::InvalidConfig("thread count must be positive".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidConfig(format!("cannot build thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn fmt(x: f64) -> String {
    format!("{x}")
}

/// Periodogram of each control dimension over the first `window` seconds.
pub fn control_window_periodograms(log: &RunLog, window: f64) -> Result<Vec<Periodogram>> {
    let k = ((window / log.dt).round() as usize).min(log.len());
    (0..log.control_dim)
        .map(|d| periodogram(&log.control_series(d)[..k], log.dt))
        .collect()
}

/// Writes `runlog_<label>.csv`, `psd_<label>.csv`, `summary.csv` and the
/// resolved `config.json` (with `output_dir` set to `.`) into `dir`.
pub fn write_experiment(result: &ExperimentResult, dir: &Path) -> Result<Vec<SummaryRow>> {
    create_dir(dir)?;
    let system = result.config.system.build();
    let config_path = dir.join("config.json");
    // Stored relative to itself so the file does not depend on where it was written.
    let stored = ExperimentConfig {
        output_dir: PathBuf::from("."),
        ..result.config.clone()
    };
    fs::write(&config_path, stored.to_json()? + "\n").map_err(|e| Error::io(&config_path, e))?;
    for runs in &result.runs {
        write_runlogs(runs, &system, &dir.join(format!("runlog_{}.csv", runs.label)))?;
        write_run_psd(runs, result.config.analysis_window_seconds, &dir.join(format!("psd_{}.csv", runs.label)))?;
    }
    let summary = result.summary();
    write_summary(&summary, &dir.join("summary.csv"))?;
    Ok(summary)
}

fn write_runlogs(runs: &SamplerRuns, system: &impl System, path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    let mut header = vec!["rep".to_string(), "t_seconds".to_string()];
    header.extend(system.state_names());
    header.extend(system.control_names());
    header.push("step_cost".into());
    w.write_record(&header)?;
    for r in &runs.repetitions {
        let Ok(log) = &r.log else { continue };
        for k in 0..log.len() {
            let mut row = vec![r.rep.to_string(), fmt(log.time(k))];
            row.extend(log.states[k].iter().copied().map(fmt));
            row.extend(log.controls[k].iter().copied().map(fmt));
            row.push(fmt(log.step_costs[k]));
            w.write_record(&row)?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_run_psd(runs: &SamplerRuns, window: f64, path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["rep", "dim", "frequency_hz", "power"])?;
    for r in &runs.repetitions {
        let Ok(log) = &r.log else { continue };
        let Ok(psds) = control_window_periodograms(log, window) else { continue };
        for (d, p) in psds.iter().enumerate() {
            for (f, pw) in p.frequencies.iter().zip(&p.power) {
                w.write_record([r.rep.to_string(), d.to_string(), fmt(*f), fmt(*pw)])?;
            }
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_summary(rows: &[SummaryRow], path: &Path) -> Result<()> {
    let mut w = csv_writer(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Runs an experiment and writes its artifacts to `config.output_dir`.
pub fn cmd_run(config: &ExperimentConfig) -> Result<Vec<SummaryRow>> {
    let result = run_experiment(config)?;
    write_experiment(&result, &config.output_dir)
}

/// Numeric config fields a sweep can vary.
pub const SWEEP_AXES: &[&str] = &[
    "sigma",
    "gamma",
    "f_min",
    "lambda",
    "alpha",
    "num_samples",
    "num_iterations",
    "horizon",
    "dt",
    "duration_seconds",
    "repetitions",
    "seed",
];

fn as_count(axis: &str, value: f64) -> Result<usize> {
    if value >= 0.0 && value.fract() == 0.0 && value <= u32::MAX as f64 {
        Ok(value as usize)
    } else {
        Err(Error::InvalidConfig(format!("{axis} must be a nonnegative integer, got {value}")))
    }
}

/// Copy of `base` with `axis` set to `value`. `sigma` and `gamma` apply to
/// every control dimension; `gamma` and `f_min` only touch colored samplers;
/// `dt` also updates the smooth samplers' integration step.
pub fn apply_axis(base: &ExperimentConfig, axis: &str, value: f64) -> Result<ExperimentConfig> {
    let mut c = base.clone();
    match axis {
        "sigma" => c.samplers.iter_mut().for_each(|e| e.sampler.sigma_mut().iter_mut().for_each(|s| *s = value)),
        "gamma" | "f_min" => {
            let mut touched = false;
            for e in &mut c.samplers {
                if let SamplerConfig::Colored { gamma, f_min, .. } = &mut e.sampler {
                    touched = true;
                    if axis == "gamma" {
                        gamma.iter_mut().for_each(|g| *g = value);
                    } else {
                        *f_min = Some(value);
                    }
                }
            }
            if !touched {
                return Err(Error::InvalidConfig(format!("axis `{axis}` needs at least one colored sampler")));
            }
        }
        "lambda" => c.controller.lambda = value,
        "alpha" => c.controller.alpha = value,
        "num_samples" => c.controller.num_samples = as_count(axis, value)?,
        "num_iterations" => c.controller.num_iterations = as_count(axis, value)?,
        "horizon" => c.controller.horizon = as_count(axis, value)?,
        "dt" => {
            c.controller.dt = value;
            for e in &mut c.samplers {
                if let SamplerConfig::Smooth { dt, .. } | SamplerConfig::SmoothStar { dt, .. } = &mut e.sampler {
                    *dt = value;
                }
            }
        }
        "duration_seconds" => c.duration_seconds = value,
        "repetitions" => c.repetitions = as_count(axis, value)?,
        "seed" => c.seed = as_count(axis, value)? as u64,
        other => return Err(Error::UnknownAxis(other.to_string())),
    }
    c.validate()?;
    Ok(c)
}

/// One row of `sweep_summary.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis: String,
    pub value: f64,
    #[serde(flatten)]
    pub summary: SummaryRow,
}

/// Runs `base` once per value of `axis`, each into `<output_dir>/<axis>_<value>`,
/// and writes the combined `sweep_summary.csv`.
pub fn cmd_sweep(base: &ExperimentConfig, axis: &str, values: &[f64]) -> Result<Vec<SweepRow>> {
    if !SWEEP_AXES.contains(&axis) {
        return Err(Error::UnknownAxis(axis.to_string()));
    }
    if values.is_empty() {
        return Err(Error::InvalidConfig("a sweep needs at least one value".into()));
    }
    let configs = values
        .iter()
        .map(|&v| {
            let mut c = apply_axis(base, axis, v)?;
            c.output_dir = base.output_dir.join(format!("{axis}_{v}"));
            Ok(c)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for (c, &v) in configs.iter().zip(values) {
        for summary in cmd_run(c)? {
            rows.push(SweepRow {
                axis: axis.to_string(),
                value: v,
                summary,
            });
        }
    }
    create_dir(&base.output_dir)?;
    let path = base.output_dir.join("sweep_summary.csv");
    let mut w = csv_writer(&path)?;
    w.write_record([
        "axis",
        "value",
        "sampler",
        "reps_ok",
        "reps_failed",
        "cost_mean",
        "cost_std",
        "solve_ms_mean",
        "solve_ms_std",
    ])?;
    for r in &rows {
        let s = &r.summary;
        w.write_record([
            r.axis.clone(),
            fmt(r.value),
            s.sampler.clone(),
            s.reps_ok.to_string(),
            s.reps_failed.to_string(),
            fmt(s.cost_mean),
            fmt(s.cost_std),
            fmt(s.solve_ms_mean),
            fmt(s.solve_ms_std),
        ])?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    Ok(rows)
}

/// Raw colored-noise export request.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseRequest {
    pub horizon: usize,
    /// One entry per control dimension.
    pub gamma: Vec<f64>,
    /// One entry per control dimension, or a single value for all.
    pub sigma: Vec<f64>,
    pub f_min: Option<f64>,
    pub samples: usize,
    pub seed: u64,
    /// Sample period used to label periodogram frequencies.
    pub dt: f64,
}

impl NoiseRequest {
    pub fn specs(&self) -> Result<Vec<ColoredSpec>> {
        let sigma = match self.sigma.len() {
            1 => vec![self.sigma[0]; self.gamma.len()],
            n if n == self.gamma.len() => self.sigma.clone(),
            n => {
                return Err(Error::ShapeMismatch {
                    what: "sigma entries (one per gamma, or one for all)",
                    expected: self.gamma.len(),
                    actual: n,
                })
            }
        };
        if self.gamma.is_empty() {
            return Err(Error::InvalidConfig("at least one gamma is required".into()));
        }
        self.gamma
            .iter()
            .zip(&sigma)
            .map(|(&g, &s)| match self.f_min {
                Some(f) => ColoredSpec::with_f_min(self.horizon, g, s, f),
                None => ColoredSpec::new(self.horizon, g, s),
            })
            .collect()
    }
}

/// Per-dimension statistics of an exported batch (`noise_stats.csv`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseStats {
    pub dim: usize,
    pub gamma: f64,
    pub sigma: f64,
    pub variance: f64,
    pub lag1_autocorrelation: f64,
    pub mean_abs_difference: f64,
}

/// Pooled statistics of dimension `dim` across all trajectories.
pub fn noise_stats(batch: &NoiseBatch, dim: usize) -> (f64, f64, f64) {
    let trajectories: Vec<Vec<f64>> = (0..batch.samples()).map(|m| batch.trajectory(m, dim).collect()).collect();
    let n = (batch.samples() * batch.horizon()) as f64;
    let mean = trajectories.iter().flatten().sum::<f64>() / n;
    let var = trajectories.iter().flatten().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let mut lag = 0.0;
    let mut diff = 0.0;
    let mut pairs = 0usize;
    for tr in &trajectories {
        for w in tr.windows(2) {
            lag += (w[0] - mean) * (w[1] - mean);
            diff += (w[1] - w[0]).abs();
            pairs += 1;
        }
    }
    let rho = if var > 0.0 { lag / pairs as f64 / var } else { 0.0 };
    (var, rho, diff / pairs as f64)
}

/// Writes `noise.csv` (sample_id, t, dim, value), `noise_psd.csv`
/// (dim, frequency_hz, power; ensemble-mean periodogram) and `noise_stats.csv`.
pub fn cmd_sample_noise(request: &NoiseRequest, dir: &Path) -> Result<Vec<NoiseStats>> {
    let specs = request.specs()?;
    if !(request.dt > 0.0) {
        return Err(Error::InvalidConfig(format!("dt must be positive, got {}", request.dt)));
    }
    let batch = ColoredNoise::new(specs.clone())?.sample_batch(request.samples, request.seed)?;
    create_dir(dir)?;

    let path = dir.join("noise.csv");
    let mut w = csv_writer(&path)?;
    w.write_record(["sample_id", "t", "dim", "value"])?;
    for m in 0..batch.samples() {
        for d in 0..batch.control_dim() {
            for t in 0..batch.horizon() {
                w.write_record([m.to_string(), t.to_string(), d.to_string(), fmt(batch.get(m, t, d))])?;
            }
        }
    }
    w.flush().map_err(|e| Error::io(&path, e))?;

    let path = dir.join("noise_psd.csv");
    let mut w = csv_writer(&path)?;
    w.write_record(["dim", "frequency_hz", "power"])?;
    for d in 0..batch.control_dim() {
        let psds = (0..batch.samples())
            .map(|m| periodogram(&batch.trajectory(m, d).collect::<Vec<_>>(), request.dt))
            .collect::<Result<Vec<_>>>()?;
        let mean = mean_periodogram(&psds)?;
        for (f, p) in mean.frequencies.iter().zip(&mean.power) {
            w.write_record([d.to_string(), fmt(*f), fmt(*p)])?;
        }
    }
    w.flush().map_err(|e| Error::io(&path, e))?;

    let stats: Vec<NoiseStats> = specs
        .iter()
        .enumerate()
        .map(|(d, spec)| {
            let (variance, lag1_autocorrelation, mean_abs_difference) = noise_stats(&batch, d);
            NoiseStats {
                dim: d,
                gamma: spec.gamma(),
                sigma: spec.sigma(),
                variance,
                lag1_autocorrelation,
                mean_abs_difference,
            }
        })
        .collect();
    let path = dir.join("noise_stats.csv");
    let mut w = csv_writer(&path)?;
    for s in &stats {
        w.serialize(s)?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    Ok(stats)
}

/// Metrics recomputed from a stored run log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisRow {
    pub sampler: String,
    pub reps: usize,
    pub cost_mean: f64,
    pub cost_std: f64,
    /// Mean periodogram power above `cutoff_hz` in the analysis window,
    /// averaged over repetitions and control dimensions.
    pub high_freq_power: f64,
    /// Mean over repetitions of the largest |u| in the first `peak_seconds`.
    pub peak_abs_control: f64,
}

/// Settings for [`cmd_analyze`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyzeOptions {
    pub window_seconds: f64,
    pub cutoff_hz: f64,
    pub peak_seconds: f64,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        Self {
            window_seconds: 2.0,
            cutoff_hz: 20.0,
            peak_seconds: 0.5,
        }
    }
}

/// Parses a `runlog_<label>.csv` back into one [`RunLog`] per repetition.
/// The control columns are the `control_dim` columns before `step_cost`.
pub fn read_runlogs(path: &Path, control_dim: usize) -> Result<Vec<(usize, RunLog)>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    let headers = reader.headers()?.clone();
    let width = headers.len();
    if width < 3 + control_dim || &headers[0] != "rep" || &headers[1] != "t_seconds" || &headers[width - 1] != "step_cost" {
        return Err(Error::MalformedLog(format!("{}: unexpected header {:?}", path.display(), headers)));
    }
    let state_dim = width - 3 - control_dim;
    let mut logs: Vec<(usize, RunLog)> = Vec::new();
    let mut times: Vec<f64> = Vec::new();
    for record in reader.records() {
        let record = record?;
        let parse = |i: usize| -> Result<f64> {
            record[i]
                .parse::<f64>()
                .map_err(|_| Error::MalformedLog(format!("{}: bad number `{}`", path.display(), &record[i])))
        };
        let rep: usize = record[0]
            .parse()
            .map_err(|_| Error::MalformedLog(format!("{}: bad rep `{}`", path.display(), &record[0])))?;
        let t = parse(1)?;
        if logs.last().map(|(r, _)| *r) != Some(rep) {
            logs.push((rep, RunLog::new(t, state_dim, control_dim)));
            times.clear();
        }
        times.push(t);
        let state = (2..2 + state_dim).map(parse).collect::<Result<Vec<_>>>()?;
        let control = (2 + state_dim..width - 1).map(parse).collect::<Result<Vec<_>>>()?;
        let log = &mut logs.last_mut().expect("pushed above").1;
        log.push(state, control, parse(width - 1)?);
        if times.len() == 2 {
            log.dt = times[1] - times[0];
        }
    }
    if logs.is_empty() {
        return Err(Error::MalformedLog(format!("{}: no rows", path.display())));
    }
    Ok(logs)
}

/// Recomputes per-sampler metrics from every `runlog_*.csv` in `dir` and
/// writes `analysis.csv`.
pub fn cmd_analyze(dir: &Path, options: &AnalyzeOptions) -> Result<Vec<AnalysisRow>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("runlog_") && n.ends_with(".csv"))
        })
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::MalformedLog(format!("no runlog_*.csv files in {}", dir.display())));
    }
    let config = ExperimentConfig::load(&dir.join("config.json")).ok();
    let mut rows = Vec::new();
    for path in &paths {
        let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
        let label = name.trim_start_matches("runlog_").to_string();
        let control_dim = match &config {
            Some(c) => c.system.build().control_dim(),
            None => infer_control_dim(path)?,
        };
        let logs = read_runlogs(path, control_dim)?;
        rows.push(analyze_logs(&label, logs.iter().map(|(_, l)| l), options)?);
    }
    let path = dir.join("analysis.csv");
    let mut w = csv_writer(&path)?;
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    Ok(rows)
}

/// Control dimension implied by the header of a built-in system's log.
fn infer_control_dim(path: &Path) -> Result<usize> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let headers = csv::Reader::from_reader(file).headers()?.clone();
    for sys in [SystemConfig::DoubleIntegrator { x0: default_double_integrator_x0() }, SystemConfig::LaggedVehicle { params: LaggedVehicleParams::default(), x0: default_vehicle_x0() }] {
        let s = sys.build();
        let names: Vec<String> = s.state_names().into_iter().chain(s.control_names()).collect();
        if headers.len() == names.len() + 3 && headers.iter().skip(2).zip(&names).all(|(h, n)| h == n) {
            return Ok(s.control_dim());
        }
    }
    Err(Error::MalformedLog(format!(
        "{}: cannot infer control columns without config.json",
        path.display()
    )))
}

/// Cost, high-frequency power and early peak-control metrics of a set of runs.
pub fn analyze_logs<'a>(
    label: &str,
    logs: impl IntoIterator<Item = &'a RunLog>,
    options: &AnalyzeOptions,
) -> Result<AnalysisRow> {
    let logs: Vec<&RunLog> = logs.into_iter().collect();
    let costs = EnsembleStats::from_values(logs.iter().map(|l| l.accumulated_cost()).collect())?;
    let mut hf = Vec::new();
    let mut peaks = Vec::new();
    for log in &logs {
        for p in control_window_periodograms(log, options.window_seconds)? {
            hf.push(p.mean_power_above(options.cutoff_hz).ok_or(Error::EmptyBand {
                lo: options.cutoff_hz,
                hi: 0.5 / log.dt,
            })?);
        }
        peaks.push(peak_abs_control(log, options.peak_seconds));
    }
    Ok(AnalysisRow {
        sampler: label.to_string(),
        reps: logs.len(),
        cost_mean: costs.mean,
        cost_std: costs.std,
        high_freq_power: hf.iter().sum::<f64>() / hf.len() as f64,
        peak_abs_control: peaks.iter().sum::<f64>() / peaks.len() as f64,
    })
}

/// Largest |u| over all dimensions within the first `seconds` of a run.
pub fn peak_abs_control(log: &RunLog, seconds: f64) -> f64 {
    let k = ((seconds / log.dt).round() as usize).min(log.len());
    log.controls[..k]
        .iter()
        .flatten()
        .fold(0.0f64, |acc, u| acc.max(u.abs()))
}
