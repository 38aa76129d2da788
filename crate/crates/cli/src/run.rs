//! Command execution and exit-code mapping.

use std::io;
use std::path::PathBuf;

use log::info;
use serde::Serialize;
use sweepwave::analysis::{
    compare, path_snapshots, rescale, simulate_cell, trajectory_snapshots, AnalysisError, CompareSpec, DEFAULT_EPSILON,
};
use sweepwave::limit::{run_limit, LimitError, PiecewisePath};
use sweepwave::regime::{blowup_certificate, regime_thresholds, RegimeError};
use sweepwave::sim::{run_ensemble, run_sim_with_progress, SimConfig, SimError, StopRule, TrajectorySummary};
use thiserror::Error;

use crate::config::{CommandKind, ConfigError, RunConfig, Stop};
use crate::emit::{self, Report};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NON_GENERIC: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Limit(#[from] LimitError),
    #[error(transparent)]
    Regime(#[from] RegimeError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => EXIT_USAGE,
            Self::Limit(LimitError::NonGenericParameters { .. })
            | Self::Analysis(AnalysisError::Limit(LimitError::NonGenericParameters { .. })) => EXIT_NON_GENERIC,
            Self::Limit(LimitError::InvalidParams(_) | LimitError::EmptyRun)
            | Self::Regime(RegimeError::InvalidParams(_))
            | Self::Sim(SimError::InvalidParams(_) | SimError::InvalidConfig(_))
            | Self::Analysis(AnalysisError::Params(_)) => EXIT_USAGE,
            _ => EXIT_RUNTIME,
        }
    }

    /// Offending wave of a non-generic abort.
    pub fn wave(&self) -> Option<usize> {
        match self {
            Self::Limit(LimitError::NonGenericParameters { wave, .. })
            | Self::Analysis(AnalysisError::Limit(LimitError::NonGenericParameters { wave, .. })) => Some(*wave),
            _ => None,
        }
    }
}

/// Payload of the report written when a command fails after its config
/// was resolved.
#[derive(Debug, Serialize)]
pub struct Failure {
    pub error: String,
    pub exit_code: i32,
    pub wave: Option<usize>,
}

/// Runs the command and writes its outputs; on failure writes
/// `report.json` describing the error and returns it.
pub fn execute(config: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    crate::config::ensure_out_dir(&config.out_dir)?;
    match dispatch(config) {
        Ok(files) => Ok(files),
        Err(e) => {
            let failure = Failure {
                error: e.to_string(),
                exit_code: e.exit_code(),
                wave: e.wave(),
            };
            let seed = seeded(config).then_some(config.seed);
            emit::write_json(&config.out_dir.join("report.json"), &Report::new(config, seed, failure))?;
            Err(e)
        }
    }
}

fn seeded(config: &RunConfig) -> bool {
    matches!(
        config.command,
        CommandKind::Simulate | CommandKind::Ensemble | CommandKind::Compare | CommandKind::Snapshot
    )
}

fn dispatch(c: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    match c.command {
        CommandKind::Limit => limit(c),
        CommandKind::Simulate => simulate(c),
        CommandKind::Ensemble => ensemble(c),
        CommandKind::Compare => compare_cmd(c),
        CommandKind::Regimes => regimes(c),
        CommandKind::Blowup => blowup(c),
        CommandKind::Snapshot => snapshot(c),
    }
}

fn out(c: &RunConfig, name: &str) -> PathBuf {
    c.out_dir.join(name)
}

fn build_limit(c: &RunConfig) -> Result<PiecewisePath<f64>, CliError> {
    let horizon = c.horizon.unwrap_or(0.0);
    if horizon == 0.0 {
        // nothing to construct: an eventless path still carries the initial state
        return Ok(run_limit(&c.params, 0.0, 1)?);
    }
    Ok(run_limit(&c.params, horizon, c.max_waves)?)
}

#[derive(Serialize)]
struct LimitPayload<'a> {
    truncation: sweepwave::limit::Truncation<f64>,
    end: f64,
    waves: usize,
    birth_times: Vec<sweepwave::limit::BirthTime<f64>>,
    files: &'a [PathBuf],
}

fn limit(c: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let path = build_limit(c)?;
    info!("limit path: {} waves up to s = {}", path.events.len(), path.end());
    let mut files = vec![out(c, "limit_path.csv"), out(c, "birth_times.csv")];
    emit::write_file(&files[0], |w| emit::write_limit_csv(w, &path))?;
    emit::write_file(&files[1], |w| emit::write_birth_csv(w, &path))?;
    if c.svg {
        let f = out(c, "limit.svg");
        std::fs::write(&f, emit::svg_polylines(&emit::limit_series(&path), "scaled time", "y_j"))?;
        files.push(f);
    }
    files.push(out(c, "report.json"));
    let payload = LimitPayload {
        truncation: path.truncation,
        end: path.end(),
        waves: path.events.len(),
        birth_times: path.birth_times(),
        files: &files,
    };
    emit::write_json(files.last().unwrap(), &Report::new(c, None, payload))?;
    Ok(files)
}

fn sim_config(c: &RunConfig) -> SimConfig {
    let stop = match c.stop.expect("validated") {
        Stop::Time(t) => StopRule::Time(t),
        Stop::FirstType(k) => StopRule::FirstType(k),
        Stop::Events(n) => StopRule::Events(n),
    };
    let mut cfg = SimConfig::new(c.params, stop)
        .with_seed(c.seed)
        .with_record_spacing(c.record_spacing);
    if let Some(m) = c.max_events {
        cfg = cfg.with_max_events(m);
    }
    cfg
}

fn simulate(c: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let cfg = sim_config(c);
    let mut report_every = 0u64;
    let mut progress = |p: sweepwave::sim::Progress| {
        if p.events >= report_every {
            info!("{} events, t = {}", p.events, p.t);
            report_every = p.events + 10_000_000;
        }
    };
    let traj = run_sim_with_progress(&cfg, Some(&mut progress))?;
    let max_type = c.max_type_columns.unwrap_or_else(|| traj.max_type());
    let mut files = vec![out(c, "trajectory.csv")];
    emit::write_file(&files[0], |w| emit::write_trajectory_csv(w, &traj, max_type))?;
    if c.svg {
        let r = rescale(&traj, &c.params)?;
        let series: Vec<Vec<(f64, f64)>> = r
            .y
            .iter()
            .map(|ys| r.t.iter().copied().zip(ys.iter().copied()).collect())
            .collect();
        let f = out(c, "trajectory.svg");
        std::fs::write(&f, emit::svg_polylines(&series, "scaled time", "log+ X_j / L"))?;
        files.push(f);
    }
    files.push(out(c, "report.json"));
    let summary = TrajectorySummary::from_trajectory(0, &traj);
    emit::write_json(files.last().unwrap(), &Report::new(c, Some(c.seed), summary))?;
    Ok(files)
}

#[derive(Serialize)]
struct EnsemblePayload {
    replicates: Vec<TrajectorySummary>,
    failures: Vec<(u64, String)>,
}

fn ensemble(c: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let cfg = sim_config(c).with_record_spacing(f64::INFINITY);
    let n = c.replicates.expect("validated");
    let mut payload = EnsemblePayload {
        replicates: Vec::new(),
        failures: Vec::new(),
    };
    for r in run_ensemble(&cfg, n) {
        match r.result {
            Ok(t) => payload.replicates.push(TrajectorySummary::from_trajectory(r.replicate, &t)),
            Err(e) => payload.failures.push((r.replicate, e.to_string())),
        }
    }
    info!("{} replicates, {} failed", n, payload.failures.len());
    let files = vec![out(c, "ensemble_births.csv"), out(c, "report.json")];
    emit::write_file(&files[0], |w| {
        use std::io::Write;
        writeln!(w, "replicate,k,t_k")?;
        for s in &payload.replicates {
            for (k, t) in s.first_appearance.iter().enumerate() {
                if let Some(t) = t {
                    writeln!(w, "{},{k},{}", s.replicate, emit::num(*t))?;
                }
            }
        }
        Ok(())
    })?;
    emit::write_json(&files[1], &Report::new(c, Some(c.seed), payload))?;
    Ok(files)
}

#[derive(Serialize)]
struct ComparePayload {
    report: sweepwave::analysis::ConvergenceReport,
    failed_replicates: Vec<(f64, usize)>,
}

fn compare_cmd(c: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let path = build_limit(c)?;
    let stop_type = match c.stop {
        Some(Stop::FirstType(k)) => k,
        _ => c.births.iter().copied().max().unwrap_or(1).max(1),
    };
    let windows = c.windows.clone().unwrap_or_else(|| vec![(0.2, 0.6)]);
    let spec = CompareSpec {
        types: c.types.clone(),
        windows,
        births: c.births.clone(),
        epsilon: DEFAULT_EPSILON,
    };
    let mut cells = Vec::new();
    let mut failed = Vec::new();
    for &mu in c.mu_list.as_ref().expect("validated") {
        info!("simulating mu = {mu}");
        let (cell, f) = simulate_cell(&c.params, mu, c.replicates.expect("validated"), c.seed, stop_type, c.record_spacing)?;
        failed.push((mu, f));
        cells.push(cell);
    }
    let report = compare(&cells, &path, &spec)?;
    let files = vec![out(c, "limit_path.csv"), out(c, "report.json")];
    emit::write_file(&files[0], |w| emit::write_limit_csv(w, &path))?;
    let payload = ComparePayload {
        report,
        failed_replicates: failed,
    };
    emit::write_json(&files[1], &Report::new(c, Some(c.seed), payload))?;
    Ok(files)
}

fn regimes(c: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let report = regime_thresholds(&c.params, c.max_index)?;
    let f = out(c, "report.json");
    emit::write_json(&f, &Report::new(c, None, report))?;
    Ok(vec![f])
}

fn blowup(c: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let cert = blowup_certificate(&c.params);
    let f = out(c, "report.json");
    emit::write_json(&f, &Report::new(c, None, cert))?;
    Ok(vec![f])
}

#[derive(Serialize)]
struct SnapshotPayload {
    simulated: Vec<sweepwave::analysis::Snapshot>,
    limit: Vec<sweepwave::analysis::Snapshot>,
}

fn snapshot(c: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let times = c.times.clone().expect("validated");
    let scale = c.params.log_scale().map_err(AnalysisError::Params)?;
    let last = times.iter().copied().fold(0.0, f64::max);
    let path = run_limit(&c.params, last, c.max_waves)?;
    let cfg = SimConfig::new(c.params, StopRule::Time(last * scale.time_unit))
        .with_seed(c.seed)
        .with_record_spacing(c.record_spacing);
    let cfg = match c.max_events {
        Some(m) => cfg.with_max_events(m),
        None => cfg,
    };
    let traj = sweepwave::sim::run_sim(&cfg)?;
    let raw: Vec<f64> = times.iter().map(|t| t * scale.time_unit).collect();
    let mut simulated = trajectory_snapshots(&traj, &raw)?;
    for (s, &t) in simulated.iter_mut().zip(&times) {
        s.t = t;
    }
    let limit = path_snapshots(&path, scale.log_scale, &times)?;
    let files = vec![out(c, "snapshots.csv"), out(c, "report.json")];
    let rows: Vec<(&str, &sweepwave::analysis::Snapshot)> = simulated
        .iter()
        .map(|s| ("simulated", s))
        .chain(limit.iter().map(|s| ("limit", s)))
        .collect();
    emit::write_file(&files[0], |w| emit::write_snapshot_csv(w, &rows))?;
    emit::write_json(&files[1], &Report::new(c, Some(c.seed), SnapshotPayload { simulated, limit }))?;
    Ok(files)
}
