//! Forecast benchmark over fixed model templates.
//!
//! For each ball, a model learned on one drop predicts the height of the
//! ball's other drop at a fixed horizon, starting from that drop's initial
//! conditions. Each model is also run out to a long horizon to expose
//! divergent fits.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diffsmooth::{compute_derivatives, SavitzkyGolay};
use crate::error::{Error, Result};
use crate::library::{evaluate_library, polynomial_terms, state_matrix};
use crate::sindy::{simulate_model, stlsq, FitConfig, Forecast, PipelineConfig, SparseModel};
use crate::trajectory::{interpolate, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TemplateId {
    /// Constant acceleration.
    T1,
    /// Constant plus linear drag.
    T2,
    /// Constant plus linear and quadratic drag.
    T3,
    /// Full cubic library with a small threshold.
    T4,
}

impl TemplateId {
    pub const ALL: [TemplateId; 4] = [
        TemplateId::T1,
        TemplateId::T2,
        TemplateId::T3,
        TemplateId::T4,
    ];

    /// Exponents over `(x, v)` of the template's library.
    pub fn exponents(self) -> Vec<[u32; 2]> {
        match self {
            TemplateId::T1 => vec![[0, 0]],
            TemplateId::T2 => vec![[0, 0], [0, 1]],
            TemplateId::T3 => vec![[0, 0], [0, 1], [0, 2]],
            TemplateId::T4 => polynomial_terms(2, 3)
                .expect("two states")
                .into_iter()
                .map(|t| [t.exponents[0], t.exponents[1]])
                .collect(),
        }
    }
}

impl fmt::Display for TemplateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl std::str::FromStr for TemplateId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "T1" => Ok(TemplateId::T1),
            "T2" => Ok(TemplateId::T2),
            "T3" => Ok(TemplateId::T3),
            "T4" => Ok(TemplateId::T4),
            _ => Err(Error::Argument(format!("unknown template `{s}`"))),
        }
    }
}

/// Where the forecast's initial velocity comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialVelocity {
    /// First value of the smoothed velocity series.
    #[default]
    Smoothed,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    /// Smoothing and differencing used for fitting and initial conditions.
    pub pipeline: PipelineConfig,
    /// Cross-drop prediction horizon, s.
    pub horizon_s: f64,
    /// Long forecast horizon, s.
    pub long_horizon_s: f64,
    pub t4_threshold: f64,
    pub initial_velocity: InitialVelocity,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            pipeline: PipelineConfig::default(),
            horizon_s: 2.8,
            long_horizon_s: 15.0,
            t4_threshold: 0.005,
            initial_velocity: InitialVelocity::Smoothed,
        }
    }
}

impl BenchmarkConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("horizon_s", self.horizon_s),
            ("long_horizon_s", self.long_horizon_s),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Argument(format!("{name} must be positive, got {v}")));
            }
        }
        FitConfig::with_threshold(self.t4_threshold).validate()?;
        self.pipeline.smoother.validate()
    }
}

/// Fits `v̇` using only the template's terms. T1–T3 use plain least squares
/// on their fixed support; T4 thresholds at `cfg.t4_threshold`.
pub fn fit_template(
    traj: &Trajectory,
    template: TemplateId,
    cfg: &BenchmarkConfig,
) -> Result<SparseModel> {
    let d = compute_derivatives(traj, cfg.pipeline.smoother, cfg.pipeline.smooth)?;
    let all = polynomial_terms(2, 3)?;
    let terms: Vec<_> = template
        .exponents()
        .iter()
        .map(|e| {
            all.iter()
                .find(|t| t.exponents == e)
                .cloned()
                .expect("template terms are cubic or lower")
        })
        .collect();
    let lib = evaluate_library(&state_matrix(&[&d.heights, &d.velocities])?, &terms)?;
    let threshold = match template {
        TemplateId::T4 => cfg.t4_threshold,
        _ => 0.0,
    };
    Ok(stlsq(
        &lib,
        &d.accelerations,
        &FitConfig::with_threshold(threshold),
    )?
    .with_names(&["x", "v"], "v'"))
}

/// Initial `(x0, v0)` of a drop under `cfg`.
pub fn initial_conditions(traj: &Trajectory, cfg: &BenchmarkConfig) -> Result<(f64, f64)> {
    let d = compute_derivatives(traj, cfg.pipeline.smoother, cfg.pipeline.smooth)?;
    let v0 = match cfg.initial_velocity {
        InitialVelocity::Smoothed => d.velocities[0],
        InitialVelocity::Zero => 0.0,
    };
    Ok((d.heights[0], v0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossDropPrediction {
    /// `None` when the forecast diverged before the horizon.
    pub predicted_height: Option<f64>,
    pub observed_height: f64,
    pub abs_error: Option<f64>,
    pub diverged: bool,
}

fn steps_for(horizon: f64, dt: f64) -> usize {
    // tolerate round-off so 2.8 s at 15 Hz is 42 steps, not 43
    (horizon / dt - 1e-9).ceil().max(1.0) as usize
}

/// Height of `other_drop` at `horizon` seconds after its first sample,
/// predicted by `model` from the drop's initial conditions.
pub fn cross_drop_prediction(
    model: &SparseModel,
    other_drop: &Trajectory,
    cfg: &BenchmarkConfig,
) -> Result<CrossDropPrediction> {
    let t0 = other_drop.times()[0];
    let observed_height = other_drop.height_at(t0 + cfg.horizon_s)?;
    let dt = other_drop.uniform_dt()?;
    let (x0, v0) = initial_conditions(other_drop, cfg)?;
    let f = simulate_model(model, x0, v0, dt, steps_for(cfg.horizon_s, dt))?;
    let predicted_height = f.height_at(cfg.horizon_s);
    Ok(CrossDropPrediction {
        predicted_height,
        observed_height,
        abs_error: predicted_height.map(|p| (p - observed_height).abs()),
        diverged: f.diverged,
    })
}

/// Runs `model` from `(x0, v0)` for `horizon` seconds on a grid of `dt`.
pub fn long_forecast(
    model: &SparseModel,
    x0: f64,
    v0: f64,
    horizon: f64,
    dt: f64,
) -> Result<Forecast> {
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::Argument(format!(
            "horizon must be positive, got {horizon}"
        )));
    }
    simulate_model(model, x0, v0, dt, steps_for(horizon, dt))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorCurve {
    /// Sample times, relative to the first sample.
    pub times: Vec<f64>,
    /// `|predicted − measured|`; shorter than `times` if the model diverged.
    pub errors: Vec<f64>,
    /// `|raw − smoothed|` heights.
    pub baseline: Vec<f64>,
}

/// Per-sample forecast error of `model` on `traj`, with the smoothing
/// residual as a noise baseline.
pub fn error_vs_time(
    model: &SparseModel,
    traj: &Trajectory,
    cfg: &BenchmarkConfig,
) -> Result<ErrorCurve> {
    let dt = traj.uniform_dt()?;
    let (x0, v0) = initial_conditions(traj, cfg)?;
    let f = simulate_model(model, x0, v0, dt, traj.len() - 1)?;
    let errors = f
        .heights
        .iter()
        .zip(traj.heights())
        .map(|(p, m)| (p - m).abs())
        .collect();
    let smoothed = SavitzkyGolay::new(cfg.pipeline.smoother)?.apply(traj.heights())?;
    let baseline = traj
        .heights()
        .iter()
        .zip(&smoothed)
        .map(|(r, s)| (r - s).abs())
        .collect();
    let t0 = traj.times()[0];
    Ok(ErrorCurve {
        times: traj.times().iter().map(|t| t - t0).collect(),
        errors,
        baseline,
    })
}

/// One (ball, training drop, template) result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkCell {
    pub ball_id: String,
    pub train_drop: u32,
    pub test_drop: u32,
    pub template: TemplateId,
    pub model: Option<SparseModel>,
    pub prediction: Option<CrossDropPrediction>,
    /// Long forecast from the test drop's initial conditions.
    pub forecast: Option<Forecast>,
    /// Failure message when the cell could not be computed.
    pub error: Option<String>,
}

impl BenchmarkCell {
    pub fn predicted_height(&self) -> Option<f64> {
        self.prediction.and_then(|p| p.predicted_height)
    }

    pub fn abs_error(&self) -> Option<f64> {
        self.prediction.and_then(|p| p.abs_error)
    }

    /// The long forecast diverged.
    pub fn diverged(&self) -> bool {
        self.forecast.as_ref().is_some_and(|f| f.diverged)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub config: BenchmarkConfig,
    /// Ordered by ball (first appearance), training drop, template.
    pub cells: Vec<BenchmarkCell>,
    /// Balls that could not be benchmarked, with the reason.
    pub missing: Vec<String>,
}

pub const REPORT_HEADER: [&str; 6] = [
    "ball_id",
    "train_drop",
    "template",
    "pred_height_m",
    "abs_error_m",
    "diverged",
];

impl BenchmarkReport {
    pub fn cells_for(&self, template: TemplateId) -> impl Iterator<Item = &BenchmarkCell> {
        self.cells.iter().filter(move |c| c.template == template)
    }

    /// Median cross-drop error of a template; diverged predictions count as
    /// infinite error.
    pub fn median_error(&self, template: TemplateId) -> Option<f64> {
        let mut errs: Vec<f64> = self
            .cells_for(template)
            .filter(|c| c.prediction.is_some())
            .map(|c| c.abs_error().unwrap_or(f64::INFINITY))
            .collect();
        if errs.is_empty() {
            return None;
        }
        errs.sort_by(f64::total_cmp);
        let n = errs.len();
        Some(if n % 2 == 1 {
            errs[n / 2]
        } else {
            0.5 * (errs[n / 2 - 1] + errs[n / 2])
        })
    }

    pub fn write_csv<W: Write>(&self, sink: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(REPORT_HEADER).map_err(io)?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for c in &self.cells {
            w.write_record([
                c.ball_id.clone(),
                c.train_drop.to_string(),
                c.template.to_string(),
                opt(c.predicted_height()),
                opt(c.abs_error()),
                c.diverged().to_string(),
            ])
            .map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn run_cell(
    train: &Trajectory,
    test: &Trajectory,
    template: TemplateId,
    cfg: &BenchmarkConfig,
) -> BenchmarkCell {
    let mut cell = BenchmarkCell {
        ball_id: train.ball_id().to_string(),
        train_drop: train.drop_id(),
        test_drop: test.drop_id(),
        template,
        model: None,
        prediction: None,
        forecast: None,
        error: None,
    };
    let result = (|| -> Result<()> {
        let model = fit_template(train, template, cfg)?;
        cell.model = Some(model.clone());
        cell.prediction = Some(cross_drop_prediction(&model, test, cfg)?);
        let (x0, v0) = initial_conditions(test, cfg)?;
        cell.forecast = Some(long_forecast(
            &model,
            x0,
            v0,
            cfg.long_horizon_s,
            test.uniform_dt()?,
        )?);
        Ok(())
    })();
    if let Err(e) = result {
        cell.error = Some(e.to_string());
    }
    cell
}

/// Benchmarks every template on every drop of every ball. Each drop is
/// scored against the ball's next drop (cyclically), so a ball with two
/// drops yields both pairings.
pub fn run_benchmark(
    trajectories: &[Trajectory],
    cfg: &BenchmarkConfig,
) -> Result<BenchmarkReport> {
    cfg.validate()?;
    let mut order: Vec<&str> = Vec::new();
    let mut by_ball: BTreeMap<&str, Vec<&Trajectory>> = BTreeMap::new();
    for t in trajectories {
        if !by_ball.contains_key(t.ball_id()) {
            order.push(t.ball_id());
        }
        by_ball.entry(t.ball_id()).or_default().push(t);
    }
    let mut jobs = Vec::new();
    let mut missing = Vec::new();
    for ball in order {
        let drops = &by_ball[ball];
        if drops.len() < 2 {
            missing.push(format!("{ball}: only one drop, no cross-drop pairing"));
            continue;
        }
        for (i, &train) in drops.iter().enumerate() {
            let test = drops[(i + 1) % drops.len()];
            for template in TemplateId::ALL {
                jobs.push((train, test, template));
            }
        }
    }
    let cells = jobs
        .par_iter()
        .map(|&(train, test, template)| run_cell(train, test, template, cfg))
        .collect();
    Ok(BenchmarkReport {
        config: *cfg,
        cells,
        missing,
    })
}

/// Heights of a forecast resampled at `times` (relative to its start).
pub fn resample(forecast: &Forecast, times: &[f64]) -> Vec<Option<f64>> {
    times
        .iter()
        .map(|&t| interpolate(&forecast.times, &forecast.heights, t).ok())
        .collect()
}
