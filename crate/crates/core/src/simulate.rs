//! Falling spheres under constant, linear, quadratic and Reynolds-dependent
//! drag.

use std::cell::Cell;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{integrate, State};
use crate::rng;
use crate::trajectory::{add_gaussian_noise, BallSpec, FluidSpec, Trajectory};

/// Upper Reynolds number of the Brown–Lawler correlation. Larger values are
/// evaluated at this bound.
pub const RE_VALIDITY_LIMIT: f64 = 2e5;

/// RK4 substeps per sample interval in [`simulate_drop`].
pub const SIM_SUBSTEPS: usize = 10;

/// Speed bound for terminal-velocity bracketing, m/s.
pub const TERMINAL_SEARCH_LIMIT: f64 = 1e3;

/// Acceleration law `v̇ = a(v)`. Heights are positive upward, so `g < 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DragModel {
    ConstantAcceleration {
        g: f64,
    },
    /// `g + coefficient·v`; a negative coefficient opposes motion.
    LinearDrag {
        g: f64,
        coefficient: f64,
    },
    /// `g + lin·v + quad·|v|·v`.
    QuadraticDrag {
        g: f64,
        lin: f64,
        quad: f64,
    },
    /// `g − sign(v)·ρv²A·C_D(Re)/(2m)` with Brown–Lawler `C_D`.
    ReynoldsDependent {
        ball: BallSpec,
        fluid: FluidSpec,
        g: f64,
    },
}

impl DragModel {
    pub fn gravity(&self) -> f64 {
        match *self {
            DragModel::ConstantAcceleration { g }
            | DragModel::LinearDrag { g, .. }
            | DragModel::QuadraticDrag { g, .. }
            | DragModel::ReynoldsDependent { g, .. } => g,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |vals: &[f64]| vals.iter().all(|v| v.is_finite());
        let ok = match self {
            DragModel::ConstantAcceleration { g } => finite(&[*g]),
            DragModel::LinearDrag { g, coefficient } => finite(&[*g, *coefficient]),
            DragModel::QuadraticDrag { g, lin, quad } => finite(&[*g, *lin, *quad]),
            DragModel::ReynoldsDependent { ball, fluid, g } => {
                ball.validate()?;
                fluid.validate()?;
                finite(&[*g])
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Argument(format!(
                "non-finite drag parameter in {self:?}"
            )))
        }
    }
}

/// `Re = ρ·speed·D/μ`.
pub fn reynolds_number(fluid: &FluidSpec, diameter: f64, speed: f64) -> Result<f64> {
    if !(diameter > 0.0) {
        return Err(Error::Argument(format!(
            "diameter must be positive, got {diameter}"
        )));
    }
    if !(speed >= 0.0) {
        return Err(Error::Argument(format!(
            "speed must be non-negative, got {speed}"
        )));
    }
    Ok(fluid.density * speed * diameter / fluid.dynamic_viscosity)
}

/// Brown–Lawler sphere drag coefficient
/// `24/Re·(1 + 0.150·Re^0.681) + 0.407/(1 + 8710/Re)`.
///
/// `re` at or above [`RE_VALIDITY_LIMIT`] is evaluated at the limit.
pub fn brown_lawler_cd(re: f64) -> Result<f64> {
    if !(re > 0.0) || re.is_nan() {
        return Err(Error::Argument(format!(
            "Reynolds number must be positive, got {re}"
        )));
    }
    let re = re.min(RE_VALIDITY_LIMIT);
    Ok(24.0 / re * (1.0 + 0.150 * re.powf(0.681)) + 0.407 / (1.0 + 8710.0 / re))
}

fn reynolds_drag(ball: &BallSpec, fluid: &FluidSpec, v: f64) -> f64 {
    if v == 0.0 {
        return 0.0;
    }
    let speed = v.abs();
    let re = fluid.density * speed * ball.diameter() / fluid.dynamic_viscosity;
    let cd = brown_lawler_cd(re).unwrap_or(f64::NAN);
    let force = 0.5 * fluid.density * speed * speed * ball.cross_section() * cd;
    -v.signum() * force / ball.mass
}

/// `v̇` for the given velocity.
pub fn drag_acceleration(model: &DragModel, v: f64) -> f64 {
    match model {
        DragModel::ConstantAcceleration { g } => *g,
        DragModel::LinearDrag { g, coefficient } => g + coefficient * v,
        DragModel::QuadraticDrag { g, lin, quad } => g + lin * v + quad * v.abs() * v,
        DragModel::ReynoldsDependent { ball, fluid, g } => g + reynolds_drag(ball, fluid, v),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SimWarning {
    /// The Reynolds number reached the correlation's validity limit and was
    /// clamped.
    DragCrisis { max_reynolds: f64 },
}

impl std::fmt::Display for SimWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SimWarning::DragCrisis { max_reynolds } => write!(
                f,
                "entered drag-crisis range (Re up to {max_reynolds:.3e}); drag coefficient clamped"
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub trajectory: Trajectory,
    pub velocities: Vec<f64>,
    /// Present for Reynolds-dependent runs.
    pub reynolds_numbers: Option<Vec<f64>>,
    pub warnings: Vec<SimWarning>,
}

impl SimResult {
    pub fn relabel(mut self, ball_id: &str, drop_id: u32) -> Result<Self> {
        self.trajectory = Trajectory::new(
            ball_id,
            drop_id,
            self.trajectory.times().to_vec(),
            self.trajectory.heights().to_vec(),
        )?;
        Ok(self)
    }

    /// Trajectory CSV plus `velocity_ms` and `reynolds` columns; `reynolds`
    /// is empty for models without a Reynolds number.
    pub fn write_csv<W: Write>(&self, sink: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record([
            "ball_id",
            "drop_id",
            "time_s",
            "height_m",
            "velocity_ms",
            "reynolds",
        ])
        .map_err(io)?;
        let t = &self.trajectory;
        for i in 0..t.len() {
            let re = self
                .reynolds_numbers
                .as_ref()
                .map(|r| r[i].to_string())
                .unwrap_or_default();
            w.write_record([
                t.ball_id().to_string(),
                t.drop_id().to_string(),
                t.times()[i].to_string(),
                t.heights()[i].to_string(),
                self.velocities[i].to_string(),
                re,
            ])
            .map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Integrates `ẋ = v`, `v̇ = drag_acceleration(v)` and samples at `k·dt`,
/// `k = 0..=n_steps`. The trajectory is labelled `sim`, drop 1.
pub fn simulate_drop(
    model: &DragModel,
    x0: f64,
    v0: f64,
    dt: f64,
    n_steps: usize,
) -> Result<SimResult> {
    model.validate()?;
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::Argument(format!("dt must be positive, got {dt}")));
    }
    if n_steps < 2 {
        return Err(Error::Argument(format!(
            "need at least 2 steps for a 3-sample trajectory, got {n_steps}"
        )));
    }
    let clamped = Cell::new(0.0_f64);
    let accel = |_x: f64, v: f64| {
        if let DragModel::ReynoldsDependent { ball, fluid, .. } = model {
            let re = fluid.density * v.abs() * ball.diameter() / fluid.dynamic_viscosity;
            if re >= RE_VALIDITY_LIMIT {
                clamped.set(clamped.get().max(re));
            }
        }
        drag_acceleration(model, v)
    };
    let run = integrate(accel, State::new(x0, v0), dt, n_steps, SIM_SUBSTEPS, |s| {
        !s.is_finite()
    });
    if let Some(step) = run.stopped_at {
        return Err(Error::Simulation {
            step,
            message: "state became non-finite".into(),
        });
    }
    let heights: Vec<f64> = run.states.iter().map(|s| s.height).collect();
    let velocities: Vec<f64> = run.states.iter().map(|s| s.velocity).collect();
    let reynolds_numbers = match model {
        DragModel::ReynoldsDependent { ball, fluid, .. } => Some(
            velocities
                .iter()
                .map(|v| reynolds_number(fluid, ball.diameter(), v.abs()))
                .collect::<Result<Vec<_>>>()?,
        ),
        _ => None,
    };
    let mut warnings = Vec::new();
    if clamped.get() > 0.0 {
        warnings.push(SimWarning::DragCrisis {
            max_reynolds: clamped.get(),
        });
    }
    Ok(SimResult {
        trajectory: Trajectory::uniform("sim", 1, 0.0, dt, heights)?,
        velocities,
        reynolds_numbers,
        warnings,
    })
}

/// Velocity at which drag balances gravity.
pub fn terminal_velocity(model: &DragModel) -> Result<f64> {
    model.validate()?;
    match *model {
        DragModel::ConstantAcceleration { .. } => {
            Err(Error::Argument("no terminal velocity without drag".into()))
        }
        DragModel::LinearDrag { g, coefficient } => {
            if coefficient == 0.0 {
                return Err(Error::Argument("no terminal velocity without drag".into()));
            }
            Ok(g / coefficient.abs())
        }
        DragModel::QuadraticDrag { lin, quad, .. } if lin == 0.0 && quad == 0.0 => {
            Err(Error::Argument("no terminal velocity without drag".into()))
        }
        _ => bisect_terminal(model),
    }
}

fn bisect_terminal(model: &DragModel) -> Result<f64> {
    let f = |v: f64| drag_acceleration(model, v);
    let g = model.gravity();
    // the root lies on the side the body accelerates towards
    let far = g.signum() * TERMINAL_SEARCH_LIMIT;
    if g == 0.0 {
        return Ok(0.0);
    }
    if f(far).signum() == f(0.0).signum() {
        return Err(Error::Search(format!(
            "no sign change of the acceleration within |v| <= {TERMINAL_SEARCH_LIMIT} m/s"
        )));
    }
    let (mut lo, mut hi) = if far < 0.0 { (far, 0.0) } else { (0.0, far) };
    let f_lo_sign = f(lo).signum();
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == f_lo_sign {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(if f(lo).abs() <= f(hi).abs() { lo } else { hi })
}

/// Drag coefficients of the five synthetic balls.
pub const SYNTHETIC_DRAG: [f64; 5] = [-0.1, -0.3, -0.3, -0.5, -0.7];

/// Recipe for the synthetic linear-drag drop set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSet {
    pub drag_coefficients: Vec<f64>,
    pub g: f64,
    pub x0: f64,
    pub rate_hz: f64,
    pub n_samples: usize,
    pub drops_per_ball: u32,
    pub eta: f64,
    pub seed: u64,
}

impl Default for SyntheticSet {
    fn default() -> Self {
        Self {
            drag_coefficients: SYNTHETIC_DRAG.to_vec(),
            g: -9.8,
            x0: 35.0,
            rate_hz: 15.0,
            n_samples: 60,
            drops_per_ball: 2,
            eta: 0.0,
            seed: 0,
        }
    }
}

impl SyntheticSet {
    /// Noisy drops labelled `ball1..`, drops `1..=drops_per_ball`. Every
    /// drop gets its own noise stream.
    pub fn generate(&self) -> Result<Vec<Trajectory>> {
        if self.n_samples < 3 {
            return Err(Error::Argument("need at least 3 samples per drop".into()));
        }
        let mut out = Vec::new();
        for (b, &d) in self.drag_coefficients.iter().enumerate() {
            let model = DragModel::LinearDrag {
                g: self.g,
                coefficient: d,
            };
            let clean =
                simulate_drop(&model, self.x0, 0.0, 1.0 / self.rate_hz, self.n_samples - 1)?;
            for drop in 1..=self.drops_per_ball {
                let idx = out.len() as u64;
                let traj = clean
                    .clone()
                    .relabel(&format!("ball{}", b + 1), drop)?
                    .trajectory;
                out.push(add_gaussian_noise(
                    &traj,
                    self.eta,
                    rng::derive_seed(self.seed, idx),
                )?);
            }
        }
        Ok(out)
    }
}

/// The simulated balls used for Reynolds-dependent experiments.
pub fn reference_balls() -> Vec<BallSpec> {
    [
        ("golf", 0.022, 0.0454),
        ("tennis", 0.033, 0.0567),
        ("whiffle", 0.036, 0.0283),
        ("baseball", 0.035, 0.1417),
        ("basketball", 0.119, 0.5103),
    ]
    .into_iter()
    .map(|(l, r, m)| BallSpec {
        label: l.into(),
        radius: r,
        mass: m,
    })
    .collect()
}
