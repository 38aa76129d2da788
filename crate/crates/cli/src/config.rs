//! Run configuration: a flat JSON object per command, overridden field by
//! field by command-line flags.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use sweepwave::params::ModelParams;
use thiserror::Error;

pub const DEFAULT_MU: f64 = 1e-3;
pub const DEFAULT_MAX_WAVES: usize = 100_000;
pub const DEFAULT_RECORD_SPACING: f64 = 1.0;
pub const DEFAULT_MAX_INDEX: usize = 10;
pub const DEFAULT_SEED: u64 = 0;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: parse error at line {line}{}: {message}", key.as_ref().map(|k| format!(", key `{k}`")).unwrap_or_default())]
    ParseError {
        path: PathBuf,
        line: usize,
        key: Option<String>,
        message: String,
    },
    #[error("missing required field `{0}`")]
    MissingField(&'static str),
    #[error("conflicting stop rules: give exactly one of {0}")]
    ConflictingStop(String),
    #[error("invalid value for `{key}`: {message}")]
    InvalidValue { key: &'static str, message: String },
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("output directory {path} is not writable: {source}")]
    OutputDir {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum CommandKind {
    Limit,
    Simulate,
    Ensemble,
    Compare,
    Regimes,
    Blowup,
    Snapshot,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Limit => "limit",
            Self::Simulate => "simulate",
            Self::Ensemble => "ensemble",
            Self::Compare => "compare",
            Self::Regimes => "regimes",
            Self::Blowup => "blowup",
            Self::Snapshot => "snapshot",
        }
    }
}

/// Every settable field. Used both for the JSON file (unknown keys are
/// rejected) and, flattened, for the command-line flags.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    /// Selective advantage γ > 0.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Initial size exponent: N(0) = ⌈μ^{−α}⌉.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Population growth rate ρ ≥ 0 [default: 0].
    #[arg(long)]
    pub rho: Option<f64>,
    /// Mutation probability μ ∈ (0, 1) [default: 0.001].
    #[arg(long)]
    pub mu: Option<f64>,
    /// Scaled-time horizon of the limit path.
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Wave budget of the limit path [default: 100000].
    #[arg(long)]
    pub max_waves: Option<usize>,
    /// Base random seed [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of replicates.
    #[arg(long)]
    pub replicates: Option<u64>,
    /// Decreasing μ grid for `compare`, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub mu_list: Option<Vec<f64>>,
    /// Scaled-time windows `lo:hi`, comma separated.
    #[arg(long, value_delimiter = ',', value_parser = parse_window)]
    pub windows: Option<Vec<(f64, f64)>>,
    /// Types whose levels `compare` checks [default: 1].
    #[arg(long, value_delimiter = ',')]
    pub types: Option<Vec<usize>>,
    /// Types whose birth times `compare` checks [default: 2,3].
    #[arg(long, value_delimiter = ',')]
    pub births: Option<Vec<usize>>,
    /// Stop the simulation at this raw time.
    #[arg(long)]
    pub stop_time: Option<f64>,
    /// Stop the simulation when this type first appears.
    #[arg(long)]
    pub stop_type: Option<usize>,
    /// Stop the simulation after this many events.
    #[arg(long)]
    pub stop_events: Option<u64>,
    /// Hard cap on simulated events.
    #[arg(long)]
    pub max_events: Option<u64>,
    /// Raw-time spacing of recorded samples [default: 1].
    #[arg(long)]
    pub record_spacing: Option<f64>,
    /// Highest type given its own trajectory CSV column.
    #[arg(long)]
    pub max_type_columns: Option<usize>,
    /// Number of regime thresholds to report [default: 10].
    #[arg(long)]
    pub max_index: Option<usize>,
    /// Scaled snapshot times, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub times: Option<Vec<f64>>,
    /// Also write an SVG rendering.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub svg: Option<bool>,
}

fn parse_window(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("expected lo:hi, got `{s}`"))?;
    let lo = a.trim().parse::<f64>().map_err(|e| e.to_string())?;
    let hi = b.trim().parse::<f64>().map_err(|e| e.to_string())?;
    Ok((lo, hi))
}

impl Settings {
    /// Field-wise `self` over `base`.
    pub fn over(self, base: Settings) -> Settings {
        macro_rules! pick {
            ($($f:ident),*) => { Settings { $($f: self.$f.or(base.$f)),* } };
        }
        pick!(
            gamma,
            alpha,
            rho,
            mu,
            horizon,
            max_waves,
            seed,
            replicates,
            mu_list,
            windows,
            types,
            births,
            stop_time,
            stop_type,
            stop_events,
            max_events,
            record_spacing,
            max_type_columns,
            max_index,
            times,
            svg
        )
    }
}

/// Resolved stop rule of a simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stop {
    Time(f64),
    FirstType(usize),
    Events(u64),
}

/// Fully resolved configuration; echoed verbatim into every report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: CommandKind,
    pub params: ModelParams<f64>,
    pub horizon: Option<f64>,
    pub max_waves: usize,
    pub seed: u64,
    pub replicates: Option<u64>,
    pub mu_list: Option<Vec<f64>>,
    pub windows: Option<Vec<(f64, f64)>>,
    pub types: Vec<usize>,
    pub births: Vec<usize>,
    pub stop: Option<Stop>,
    pub max_events: Option<u64>,
    pub record_spacing: f64,
    pub max_type_columns: Option<usize>,
    pub max_index: usize,
    pub times: Option<Vec<f64>>,
    pub svg: bool,
    pub out_dir: PathBuf,
}

/// Parses a JSON config file.
pub fn read_settings(path: &Path) -> Result<Settings, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    parse_settings(&text).map_err(|e| match e {
        ConfigError::ParseError { line, key, message, .. } => ConfigError::ParseError {
            path: path.to_path_buf(),
            line,
            key,
            message,
        },
        other => other,
    })
}

pub fn parse_settings(text: &str) -> Result<Settings, ConfigError> {
    serde_json::from_str(text).map_err(|e| {
        let message = e.to_string();
        ConfigError::ParseError {
            path: PathBuf::new(),
            line: e.line(),
            key: backticked(&message),
            message,
        }
    })
}

/// First backticked word of a serde error message, i.e. the offending key.
fn backticked(msg: &str) -> Option<String> {
    let start = msg.find('`')? + 1;
    let len = msg[start..].find('`')?;
    Some(msg[start..start + len].to_string())
}

/// Merges flags over file values, applies defaults and checks what the
/// command needs.
pub fn load_config(
    command: CommandKind,
    file: Option<&Path>,
    flags: Settings,
    out_dir: PathBuf,
) -> Result<RunConfig, ConfigError> {
    let base = match file {
        Some(p) => read_settings(p)?,
        None => Settings::default(),
    };
    resolve(command, flags.over(base), out_dir)
}

pub fn resolve(command: CommandKind, s: Settings, out_dir: PathBuf) -> Result<RunConfig, ConfigError> {
    let gamma = s.gamma.ok_or(ConfigError::MissingField("gamma"))?;
    let alpha = s.alpha.ok_or(ConfigError::MissingField("alpha"))?;
    let rho = s.rho.unwrap_or(0.0);
    let mu = s.mu.unwrap_or(DEFAULT_MU);
    let params = ModelParams::new(gamma, alpha, rho, mu).map_err(|e| ConfigError::InvalidValue {
        key: "params",
        message: e.to_string(),
    })?;

    let stops: Vec<Stop> = [
        s.stop_time.map(Stop::Time),
        s.stop_type.map(Stop::FirstType),
        s.stop_events.map(Stop::Events),
    ]
    .into_iter()
    .flatten()
    .collect();
    if stops.len() > 1 {
        return Err(ConfigError::ConflictingStop("stop_time, stop_type, stop_events".into()));
    }
    let stop = stops.first().copied();

    use CommandKind::*;
    match command {
        Limit => {
            s.horizon.ok_or(ConfigError::MissingField("horizon"))?;
        }
        Simulate | Ensemble => {
            stop.ok_or(ConfigError::MissingField("stop_time"))?;
            if command == Ensemble {
                s.replicates.ok_or(ConfigError::MissingField("replicates"))?;
            }
        }
        Compare => {
            s.horizon.ok_or(ConfigError::MissingField("horizon"))?;
            s.replicates.ok_or(ConfigError::MissingField("replicates"))?;
            let grid = s.mu_list.as_ref().ok_or(ConfigError::MissingField("mu_list"))?;
            if grid.is_empty() {
                return Err(ConfigError::MissingField("mu_list"));
            }
            if matches!(stop, Some(Stop::Time(_)) | Some(Stop::Events(_))) {
                return Err(ConfigError::ConflictingStop("stop_type (compare stops on a type)".into()));
            }
        }
        Snapshot => {
            let times = s.times.as_ref().ok_or(ConfigError::MissingField("times"))?;
            if times.is_empty() {
                return Err(ConfigError::MissingField("times"));
            }
            if stop.is_some() {
                return Err(ConfigError::ConflictingStop("none (snapshot stops at the last time)".into()));
            }
        }
        Regimes | Blowup => {}
    }
    if let Some(h) = s.horizon {
        if !(h >= 0.0) {
            return Err(ConfigError::InvalidValue {
                key: "horizon",
                message: format!("{h} is negative"),
            });
        }
    }
    let record_spacing = s.record_spacing.unwrap_or(DEFAULT_RECORD_SPACING);
    if !(record_spacing > 0.0) {
        return Err(ConfigError::InvalidValue {
            key: "record_spacing",
            message: format!("{record_spacing} is not positive"),
        });
    }
    Ok(RunConfig {
        command,
        params,
        horizon: s.horizon,
        max_waves: s.max_waves.unwrap_or(DEFAULT_MAX_WAVES),
        seed: s.seed.unwrap_or(DEFAULT_SEED),
        replicates: s.replicates,
        mu_list: s.mu_list,
        windows: s.windows,
        types: s.types.unwrap_or_else(|| vec![1]),
        births: s.births.unwrap_or_else(|| vec![2, 3]),
        stop,
        max_events: s.max_events,
        record_spacing,
        max_type_columns: s.max_type_columns,
        max_index: s.max_index.unwrap_or(DEFAULT_MAX_INDEX),
        times: s.times,
        svg: s.svg.unwrap_or(false),
        out_dir,
    })
}

/// Creates the output directory and proves it writable.
pub fn ensure_out_dir(dir: &Path) -> Result<(), ConfigError> {
    let err = |source| ConfigError::OutputDir {
        path: dir.to_path_buf(),
        source,
    };
    std::fs::create_dir_all(dir).map_err(err)?;
    let probe = dir.join(".sweepwave-write-probe");
    std::fs::write(&probe, b"").map_err(err)?;
    std::fs::remove_file(&probe).map_err(err)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flags(gamma: Option<f64>, alpha: Option<f64>) -> Settings {
        Settings {
            gamma,
            alpha,
            ..Default::default()
        }
    }

    #[test]
    fn flags_only() {
        let s = Settings {
            horizon: Some(5.0),
            rho: Some(0.0),
            ..flags(Some(0.01), Some(1.3))
        };
        let c = resolve(CommandKind::Limit, s, ".".into()).unwrap();
        assert_eq!(c.params.gamma, 0.01);
        assert_eq!(c.params.mu, DEFAULT_MU);
        assert_eq!(c.horizon, Some(5.0));
    }

    #[test]
    fn flag_beats_file() {
        let file = parse_settings(r#"{"gamma": 0.01, "alpha": 1.3, "horizon": 2}"#).unwrap();
        let merged = flags(Some(0.1), None).over(file);
        let c = resolve(CommandKind::Limit, merged, ".".into()).unwrap();
        assert_eq!(c.params.gamma, 0.1);
        assert_eq!(c.params.alpha, 1.3);
    }

    #[test]
    fn missing_alpha() {
        let s = Settings {
            horizon: Some(1.0),
            ..flags(Some(0.01), None)
        };
        assert!(matches!(
            resolve(CommandKind::Limit, s, ".".into()),
            Err(ConfigError::MissingField("alpha"))
        ));
    }

    #[test]
    fn two_stops_conflict() {
        let s = Settings {
            stop_time: Some(1.0),
            stop_type: Some(3),
            ..flags(Some(0.1), Some(1.3))
        };
        assert!(matches!(
            resolve(CommandKind::Simulate, s, ".".into()),
            Err(ConfigError::ConflictingStop(_))
        ));
    }

    #[test]
    fn parse_error_reports_line_and_key() {
        let err = parse_settings("{\n  \"gamma\": 0.1,\n  \"alhpa\": 1.3\n}").unwrap_err();
        match err {
            ConfigError::ParseError { line, key, .. } => {
                assert_eq!(line, 3);
                assert_eq!(key.as_deref(), Some("alhpa"));
            }
            e => panic!("{e:?}"),
        }
        let err = parse_settings("{\n\"gamma\": \"x\"}").unwrap_err();
        assert!(matches!(err, ConfigError::ParseError { line: 2, .. }));
    }
}
