//! Command-line flags and JSON config files.
//!
//! Every configurable flag is optional. A run resolves each one as: flag if
//! given, else the `--config` file's value, else the built-in default. The
//! resolved values are echoed in the run manifest, and a manifest can be
//! passed back with `--config` to repeat the run.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use dropfit::sindy::{Salience, StateVariables};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(
    name = "dropfit",
    version,
    about = "Learn and test equations of motion for falling balls"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate drops and write trajectory CSVs.
    Simulate(SimulateArgs),
    /// Fit sparse models to trajectories.
    Fit(FitArgs),
    /// Fit across a grid of thresholds.
    Sweep(SweepArgs),
    /// Cross-drop prediction benchmark of the model templates.
    Benchmark(BenchmarkArgs),
    /// Estimate the measurement noise of each trajectory.
    NoiseEstimate(NoiseArgs),
    /// Render SVG charts from files written by the other subcommands.
    Plot(PlotArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct Common {
    /// Input trajectory CSV (ball_id, drop_id, time_s, height_m).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Directory for all outputs [default: out].
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Seed for every random stream [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Tabular output format [default: csv].
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// JSON file supplying defaults for any flag, or a previous manifest.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

impl Common {
    pub fn resolve(&mut self) {
        self.out_dir.get_or_insert_with(|| PathBuf::from("out"));
        self.seed.get_or_insert(0);
        self.format.get_or_insert(Format::Csv);
    }

    pub fn out_dir(&self) -> &Path {
        self.out_dir.as_deref().unwrap_or(Path::new("out"))
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn format(&self) -> Format {
        self.format.unwrap_or(Format::Csv)
    }

    pub fn input(&self) -> CliResult<&Path> {
        self.input
            .as_deref()
            .ok_or_else(|| CliError::Config("`input` is required".into()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StatesArg {
    /// Library over height and velocity.
    Xv,
    /// Library over velocity alone.
    V,
}

impl From<StatesArg> for StateVariables {
    fn from(s: StatesArg) -> Self {
        match s {
            StatesArg::Xv => StateVariables::HeightVelocity,
            StatesArg::V => StateVariables::Velocity,
        }
    }
}

/// Differentiation and library settings.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineArgs {
    /// Savitzky–Golay window length, odd [default: 35].
    #[arg(long)]
    pub window: Option<usize>,
    /// Polynomial library degree [default: 3].
    #[arg(long)]
    pub degree: Option<u32>,
    /// Difference the raw heights without smoothing.
    #[arg(long, num_args = 0..=1, default_missing_value = "true", require_equals = true)]
    pub raw: Option<bool>,
    /// State variables in the library [default: xv].
    #[arg(long, value_enum)]
    pub states: Option<StatesArg>,
}

impl PipelineArgs {
    pub fn resolve(&mut self) {
        self.window.get_or_insert(35);
        self.degree.get_or_insert(3);
        self.raw.get_or_insert(false);
        self.states.get_or_insert(StatesArg::Xv);
    }

    pub fn pipeline(&self) -> CliResult<dropfit::PipelineConfig> {
        let window = self.window.unwrap_or(35);
        Ok(dropfit::PipelineConfig {
            smoother: dropfit::diffsmooth::SmootherConfig::with_window(window)
                .map_err(|e| CliError::Config(format!("window: {e}")))?,
            smooth: !self.raw.unwrap_or(false),
            degree: self.degree.unwrap_or(3),
            states: self.states.unwrap_or(StatesArg::Xv).into(),
        })
    }
}

/// `--group` / `--plain`.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct ModeArgs {
    /// One support shared by all trajectories.
    #[arg(long, conflicts_with = "plain")]
    #[serde(skip)]
    pub group: bool,
    /// Independent fit per trajectory (default).
    #[arg(long)]
    #[serde(skip)]
    pub plain: bool,
    #[arg(skip)]
    #[serde(rename = "group")]
    pub grouped: Option<bool>,
}

impl ModeArgs {
    fn absorb_flags(&mut self) {
        if self.group {
            self.grouped = Some(true);
        } else if self.plain {
            self.grouped = Some(false);
        }
    }

    pub fn is_group(&self) -> bool {
        self.grouped.unwrap_or(false)
    }
}

fn parse_salience(s: &str) -> Result<Salience, String> {
    serde_json::from_value(Value::String(s.to_string())).map_err(|_| {
        format!("unknown salience `{s}`; expected l1, l2, mean-abs, median-abs or quantile25")
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Constant,
    Linear,
    Quadratic,
    /// Brown–Lawler drag on a reference ball.
    Reynolds,
    /// The five-ball linear-drag set, two drops per ball.
    Synthetic,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    /// Drag model [default: linear].
    #[arg(long, value_enum)]
    pub model: Option<ModelKind>,
    /// Gravitational acceleration, negative is down [default: -9.8].
    #[arg(long, allow_hyphen_values = true)]
    pub g: Option<f64>,
    /// Linear drag coefficient [default: -0.5].
    #[arg(long, allow_hyphen_values = true)]
    pub drag: Option<f64>,
    /// Quadratic drag coefficient [default: -0.02].
    #[arg(long, allow_hyphen_values = true)]
    pub quad: Option<f64>,
    /// Reference ball for the Reynolds model [default: tennis].
    #[arg(long)]
    pub ball: Option<String>,
    /// Initial height, m [default: 35].
    #[arg(long)]
    pub x0: Option<f64>,
    /// Initial velocity, m/s [default: 0].
    #[arg(long, allow_hyphen_values = true)]
    pub v0: Option<f64>,
    /// Sampling rate, Hz [default: 15].
    #[arg(long)]
    pub rate_hz: Option<f64>,
    /// Integration steps; samples = steps + 1 [default: 49].
    #[arg(long)]
    pub steps: Option<usize>,
    /// Drops per ball for the synthetic set [default: 2].
    #[arg(long)]
    pub drops: Option<u32>,
    /// Noise levels, m; one noisy copy of the output per level.
    #[arg(long, value_delimiter = ',')]
    pub eta: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct FitArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[command(flatten)]
    #[serde(flatten)]
    pub pipeline: PipelineArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub mode: ModeArgs,
    /// Sparsity threshold [default: 0.1].
    #[arg(long)]
    pub delta: Option<f64>,
    /// Row salience for group fits [default: l1].
    #[arg(long, value_parser = parse_salience)]
    pub salience: Option<Salience>,
    /// Solve limit for the thresholding loop [default: 20].
    #[arg(long)]
    pub max_iterations: Option<usize>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[command(flatten)]
    #[serde(flatten)]
    pub pipeline: PipelineArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub mode: ModeArgs,
    /// Thresholds to fit, comma separated [default depends on mode].
    #[arg(long, value_delimiter = ',')]
    pub deltas: Option<Vec<f64>>,
    #[arg(long, value_parser = parse_salience)]
    pub salience: Option<Salience>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchmarkArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[command(flatten)]
    #[serde(flatten)]
    pub pipeline: PipelineArgs,
    /// Noise level of the synthetic set used when no input is given
    /// [default: 0.1].
    #[arg(long, value_delimiter = ',')]
    pub eta: Option<Vec<f64>>,
    /// Samples per synthetic drop [default: 60].
    #[arg(long)]
    pub samples: Option<usize>,
    /// Cross-drop prediction horizon, s [default: 2.8].
    #[arg(long)]
    pub horizon_s: Option<f64>,
    /// Long forecast horizon, s [default: 15].
    #[arg(long)]
    pub long_horizon_s: Option<f64>,
    /// Threshold of the overfit template [default: 0.005].
    #[arg(long)]
    pub t4_threshold: Option<f64>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    /// Savitzky–Golay window length [default: 35].
    #[arg(long)]
    pub window: Option<usize>,
    /// Noisy replicates per calibration level [default: 20].
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Calibration cache file [default: <out-dir>/noise_calibration.json].
    #[arg(long)]
    pub cache: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct PlotArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    /// trajectory, loglog, error or heatmap.
    #[arg(long)]
    pub chart: Option<String>,
}

/// Reads `--config`, accepting a plain settings object or a manifest.
fn load_config(path: &Path) -> CliResult<Map<String, Value>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| CliError::format(path, e))?;
    let value = match value {
        Value::Object(mut m) if m.contains_key("tool") && m.contains_key("config") => {
            m.remove("config").unwrap_or(Value::Null)
        }
        v => v,
    };
    match value {
        Value::Object(m) => Ok(m),
        _ => Err(CliError::format(path, "config must be a JSON object")),
    }
}

/// Overlays the flags given on the command line onto the config file.
fn merge<T: Serialize + DeserializeOwned>(flags: &T, config: Option<&Path>) -> CliResult<T> {
    let mut merged = match config {
        Some(path) => load_config(path)?,
        None => Map::new(),
    };
    let given = serde_json::to_value(flags).map_err(|e| CliError::Config(e.to_string()))?;
    if let Value::Object(given) = given {
        for (k, v) in given {
            if !v.is_null() {
                merged.insert(k, v);
            }
        }
    }
    serde_json::from_value(Value::Object(merged)).map_err(|e| CliError::Config(e.to_string()))
}

macro_rules! impl_merge {
    ($($ty:ty => |$a:ident| $body:block),* $(,)?) => {$(
        impl $ty {
            /// Applies the config file under the flags.
            pub fn merged(mut self) -> CliResult<Self> {
                let config = self.common.config.take();
                {
                    let $a = &mut self;
                    $body
                }
                let mut out = merge(&self, config.as_deref())?;
                out.common.config = config;
                Ok(out)
            }
        }
    )*};
}

impl_merge! {
    SimulateArgs => |_a| {},
    FitArgs => |a| { a.mode.absorb_flags(); },
    SweepArgs => |a| { a.mode.absorb_flags(); },
    BenchmarkArgs => |_a| {},
    NoiseArgs => |_a| {},
    PlotArgs => |_a| {},
}
