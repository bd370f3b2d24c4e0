//! Global settings resolved from three layers: command-line flags, then a
//! TOML config file, then built-in defaults.
//!
//! The config file is flat and uses the flag names as keys:
//!
//! ```toml
//! nth = 8.0
//! omega = 20.0   # Ω/2π in MHz
//! epsilon = 1e-6
//! format = "json"
//! ```

use std::path::{Path, PathBuf};

use clap::Args;
use qbattery_core::{Error as CoreError, SystemParams};
use serde::Deserialize;

use crate::emit::Format;

/// Environment variable supplying the default worker count.
pub const THREADS_ENV: &str = "LIOUVILLE_THREADS";
pub const DEFAULT_EPSILON: f64 = 1e-8;
pub const DEFAULT_POINTS: usize = qbattery_core::dynamics::DEFAULT_POINTS;

/// Flags shared by every subcommand. Unset flags fall through to the config
/// file and then to the defaults.
#[derive(Args, Clone, Debug, Default, PartialEq)]
pub struct GlobalArgs {
    /// Decay rate |2> -> |0> in 1/us [default: 140]
    #[arg(long, global = true)]
    pub gamma20: Option<f64>,
    /// Decay rate |2> -> |1> in 1/us [default: 9]
    #[arg(long, global = true)]
    pub gamma21: Option<f64>,
    /// Decay rate |1> -> |0> in 1/us [default: 1.3e-6]
    #[arg(long, global = true)]
    pub gamma10: Option<f64>,
    /// Thermal occupation N_th [default: 4.8]
    #[arg(long, global = true)]
    pub nth: Option<f64>,
    /// Rabi frequency Omega/2pi in MHz [default: 20]
    #[arg(long, global = true)]
    pub omega: Option<f64>,
    /// Detuning delta/2pi in MHz [default: 0]
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub delta: Option<f64>,
    /// Convergence threshold on ||rho(t) - rho_ss|| [default: 1e-8]
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,
    /// Time horizon in us [default: 100/gap]
    #[arg(long, global = true)]
    pub tmax: Option<f64>,
    /// Number of output times for `propagate` [default: 2000]
    #[arg(long, global = true)]
    pub points: Option<usize>,
    /// Output file [default: stdout]
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Output format [default: csv]
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// TOML file with defaults for any of these flags
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads for sweeps [default: $LIOUVILLE_THREADS or all cores]
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

/// Contents of a config file; keys mirror the flag names.
#[derive(Deserialize, Clone, Debug, Default, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub gamma20: Option<f64>,
    pub gamma21: Option<f64>,
    pub gamma10: Option<f64>,
    pub nth: Option<f64>,
    pub omega: Option<f64>,
    pub delta: Option<f64>,
    pub epsilon: Option<f64>,
    pub tmax: Option<f64>,
    pub points: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub threads: Option<usize>,
}

impl FileConfig {
    pub fn parse(text: &str) -> Result<Self, ArgError> {
        toml::from_str(text).map_err(|e| ArgError::new("--config", e.message().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ArgError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            ArgError::new("--config", format!("cannot read {}: {e}", path.display()))
        })?;
        Self::parse(&text)
    }
}

/// A bad command-line or config value, naming the offending flag.
#[derive(Debug, Clone, PartialEq)]
pub struct ArgError {
    pub flag: &'static str,
    pub message: String,
}

impl ArgError {
    pub fn new(flag: &'static str, message: impl Into<String>) -> Self {
        ArgError {
            flag,
            message: message.into(),
        }
    }
}

impl std::fmt::Display for ArgError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.flag, self.message)
    }
}

impl std::error::Error for ArgError {}

/// Fully resolved settings.
#[derive(Clone, Debug, PartialEq)]
pub struct Settings {
    pub params: SystemParams,
    pub epsilon: f64,
    pub t_max: Option<f64>,
    pub points: usize,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub threads: usize,
}

fn flag_of(field: &str) -> &'static str {
    match field {
        "gamma20" => "--gamma20",
        "gamma21" => "--gamma21",
        "gamma10" => "--gamma10",
        "n_th" => "--nth",
        "omega_rabi" => "--omega",
        "delta" => "--delta",
        _ => "--config",
    }
}

impl Settings {
    /// Flags override the file, which overrides the defaults. The thread
    /// count additionally falls back to `LIOUVILLE_THREADS` before the
    /// machine's core count.
    pub fn resolve(flags: &GlobalArgs, file: &FileConfig) -> Result<Self, ArgError> {
        Self::resolve_with_env(flags, file, std::env::var(THREADS_ENV).ok().as_deref())
    }

    pub fn resolve_with_env(
        flags: &GlobalArgs,
        file: &FileConfig,
        env_threads: Option<&str>,
    ) -> Result<Self, ArgError> {
        let d = SystemParams::ca40();
        let mut p = d;
        p.gamma20 = flags.gamma20.or(file.gamma20).unwrap_or(d.gamma20);
        p.gamma21 = flags.gamma21.or(file.gamma21).unwrap_or(d.gamma21);
        p.gamma10 = flags.gamma10.or(file.gamma10).unwrap_or(d.gamma10);
        p.n_th = flags.nth.or(file.nth).unwrap_or(d.n_th);
        let p = p
            .with_omega_mhz(flags.omega.or(file.omega).unwrap_or(d.omega_mhz()))
            .with_delta_mhz(flags.delta.or(file.delta).unwrap_or(0.0));
        let params = p.validate().map_err(|e| match e {
            CoreError::InvalidParams { field, .. } => ArgError::new(flag_of(field), e.to_string()),
            other => ArgError::new("--config", other.to_string()),
        })?;
        let epsilon = flags.epsilon.or(file.epsilon).unwrap_or(DEFAULT_EPSILON);
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(ArgError::new("--epsilon", "must lie in (0, 1)"));
        }
        let t_max = flags.tmax.or(file.tmax);
        if let Some(t) = t_max {
            if !(t > 0.0 && t.is_finite()) {
                return Err(ArgError::new("--tmax", "must be positive"));
            }
        }
        let points = flags.points.or(file.points).unwrap_or(DEFAULT_POINTS);
        if points < 4 {
            return Err(ArgError::new("--points", "must be at least 4"));
        }
        let env_threads = match env_threads {
            Some(s) => Some(s.trim().parse::<usize>().map_err(|_| {
                ArgError::new("--threads", format!("{THREADS_ENV}=`{s}` is not a count"))
            })?),
            None => None,
        };
        let threads = flags
            .threads
            .or(file.threads)
            .or(env_threads)
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
        if threads == 0 {
            return Err(ArgError::new("--threads", "must be at least 1"));
        }
        Ok(Settings {
            params,
            epsilon,
            t_max,
            points,
            out: flags.out.clone().or_else(|| file.out.clone()),
            format: flags.format.or(file.format).unwrap_or_default(),
            threads,
        })
    }

    /// Reads `--config` if given and resolves.
    pub fn from_args(flags: &GlobalArgs) -> Result<Self, ArgError> {
        let file = match &flags.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };
        Self::resolve(flags, &file)
    }
}
