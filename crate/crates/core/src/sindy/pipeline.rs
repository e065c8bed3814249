use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diffsmooth::{
    compute_derivatives, finite_difference, DerivativeSet, Scheme, SmootherConfig,
};
use crate::error::{Error, Result};
use crate::library::{evaluate_library, polynomial_terms_named, state_matrix, LibraryMatrix};
use crate::ode::{integrate, State};
use crate::trajectory::Trajectory;

use super::{group_stlsq, stlsq, FitConfig, GroupFitResult, SparseModel};

/// State magnitude beyond which a forecast is declared divergent.
pub const DIVERGENCE_LIMIT: f64 = 1e9;
/// RK4 substeps per data interval when simulating a learned model.
pub const MODEL_SUBSTEPS: usize = 10;

/// Which state variables feed the candidate library.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StateVariables {
    /// Library over `(x, v)`.
    #[default]
    HeightVelocity,
    /// Library over `v` alone.
    Velocity,
}

impl StateVariables {
    pub fn names(self) -> &'static [&'static str] {
        match self {
            StateVariables::HeightVelocity => &["x", "v"],
            StateVariables::Velocity => &["v"],
        }
    }
}

/// How a trajectory becomes a regression problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub smoother: SmootherConfig,
    /// Smooth heights before differencing.
    pub smooth: bool,
    pub degree: u32,
    pub states: StateVariables,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            smoother: SmootherConfig::default(),
            smooth: true,
            degree: 3,
            states: StateVariables::HeightVelocity,
        }
    }
}

/// Library, targets and the derivatives they came from.
#[derive(Debug, Clone)]
pub struct Regression {
    pub library: LibraryMatrix,
    pub targets: Vec<f64>,
    pub derivatives: DerivativeSet,
}

pub fn build_regression(traj: &Trajectory, cfg: &PipelineConfig) -> Result<Regression> {
    if cfg.smooth {
        cfg.smoother.validate()?;
    }
    let derivatives = compute_derivatives(traj, cfg.smoother, cfg.smooth)?;
    let states = match cfg.states {
        StateVariables::HeightVelocity => {
            state_matrix(&[&derivatives.heights, &derivatives.velocities])?
        }
        StateVariables::Velocity => state_matrix(&[&derivatives.velocities])?,
    };
    let terms = polynomial_terms_named(cfg.states.names(), cfg.degree)?;
    let library = evaluate_library(&states, &terms)?;
    Ok(Regression {
        library,
        targets: derivatives.accelerations.clone(),
        derivatives,
    })
}

/// Learns `v̇ = f(state)` from one trajectory; `ẋ = v` is not fit.
pub fn fit_second_order(
    traj: &Trajectory,
    pipeline: &PipelineConfig,
    fit: &FitConfig,
) -> Result<SparseModel> {
    let reg = build_regression(traj, pipeline)?;
    Ok(stlsq(&reg.library, &reg.targets, fit)?.with_names(pipeline.states.names(), "v'"))
}

/// Group-sparse version of [`fit_second_order`].
pub fn group_fit_second_order(
    trajectories: &[Trajectory],
    pipeline: &PipelineConfig,
    fit: &FitConfig,
) -> Result<GroupFitResult> {
    let regs = trajectories
        .par_iter()
        .map(|t| build_regression(t, pipeline))
        .collect::<Result<Vec<_>>>()?;
    let (libs, targets): (Vec<_>, Vec<_>) =
        regs.into_iter().map(|r| (r.library, r.targets)).unzip();
    let mut result = group_stlsq(&libs, &targets, fit)?;
    result.models = result
        .models
        .into_iter()
        .map(|m| m.with_names(pipeline.states.names(), "v'"))
        .collect();
    Ok(result)
}

/// Learns `ẏₖ = fₖ(y)` for every column of a uniformly sampled first-order
/// system. Derivatives are centered differences of the raw samples.
pub fn fit_first_order(
    columns: &[&[f64]],
    names: &[&str],
    dt: f64,
    degree: u32,
    fit: &FitConfig,
) -> Result<Vec<SparseModel>> {
    if columns.len() != names.len() {
        return Err(Error::Argument(format!(
            "{} state columns but {} names",
            columns.len(),
            names.len()
        )));
    }
    let states = state_matrix(columns)?;
    let terms = polynomial_terms_named(names, degree)?;
    let library = evaluate_library(&states, &terms)?;
    columns
        .iter()
        .zip(names)
        .map(|(col, name)| {
            let dy = finite_difference(col, dt, Scheme::Centered)?;
            Ok(stlsq(&library, &dy, fit)?.with_names(names, &format!("{name}'")))
        })
        .collect()
}

/// Simulated heights and velocities of a learned model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forecast {
    pub times: Vec<f64>,
    pub heights: Vec<f64>,
    pub velocities: Vec<f64>,
    /// The state became non-finite or exceeded [`DIVERGENCE_LIMIT`]; the
    /// series stop at the last grid point reached.
    pub diverged: bool,
}

impl Forecast {
    /// Height at time `t`, linearly interpolated. `None` past the end.
    pub fn height_at(&self, t: f64) -> Option<f64> {
        crate::trajectory::interpolate(&self.times, &self.heights, t).ok()
    }

    pub fn to_trajectory(&self, ball_id: &str, drop_id: u32) -> Result<Trajectory> {
        Trajectory::new(ball_id, drop_id, self.times.clone(), self.heights.clone())
    }
}

/// Integrates `ẋ = v`, `v̇ = model(x, v)` on the grid `k·dt`, `k = 0..=n_steps`,
/// with [`MODEL_SUBSTEPS`] RK4 steps per interval.
pub fn simulate_model(
    model: &SparseModel,
    x0: f64,
    v0: f64,
    dt: f64,
    n_steps: usize,
) -> Result<Forecast> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::Argument(format!("dt must be positive, got {dt}")));
    }
    if !x0.is_finite() || !v0.is_finite() {
        return Err(Error::Argument("initial state must be finite".into()));
    }
    let names: Vec<&str> = model.state_names().iter().map(String::as_str).collect();
    let velocity_only = match names.as_slice() {
        [_, _] => false,
        ["v"] => true,
        _ => {
            return Err(Error::Argument(format!(
                "cannot simulate a model over states {names:?}; expected (x, v) or (v)"
            )))
        }
    };
    let accel = |x: f64, v: f64| {
        if velocity_only {
            model.predict_derivative(&[v])
        } else {
            model.predict_derivative(&[x, v])
        }
    };
    let run = integrate(
        accel,
        State::new(x0, v0),
        dt,
        n_steps,
        MODEL_SUBSTEPS,
        |s| !s.is_finite() || s.max_abs() > DIVERGENCE_LIMIT,
    );
    Ok(Forecast {
        times: (0..run.states.len()).map(|k| k as f64 * dt).collect(),
        heights: run.states.iter().map(|s| s.height).collect(),
        velocities: run.states.iter().map(|s| s.velocity).collect(),
        diverged: run.stopped_at.is_some(),
    })
}
