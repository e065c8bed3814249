//! Height-versus-time samples for a single drop, plus the physical
//! descriptions of the ball and the surrounding fluid.

use std::f64::consts::PI;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Relative tolerance on the spread of sampling intervals for a trajectory to
/// count as uniformly sampled.
pub const UNIFORM_SAMPLING_TOL: f64 = 1e-9;

/// Time-stamped height samples of one ball on one drop.
///
/// Times are strictly increasing and there are at least three samples.
/// Heights may be negative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TrajectoryRepr")]
pub struct Trajectory {
    ball_id: String,
    drop_id: u32,
    times: Vec<f64>,
    heights: Vec<f64>,
}

#[derive(Deserialize)]
struct TrajectoryRepr {
    ball_id: String,
    drop_id: u32,
    times: Vec<f64>,
    heights: Vec<f64>,
}

impl TryFrom<TrajectoryRepr> for Trajectory {
    type Error = Error;

    fn try_from(r: TrajectoryRepr) -> Result<Self> {
        Trajectory::new(r.ball_id, r.drop_id, r.times, r.heights)
    }
}

impl Trajectory {
    pub fn new(
        ball_id: impl Into<String>,
        drop_id: u32,
        times: Vec<f64>,
        heights: Vec<f64>,
    ) -> Result<Self> {
        let ball_id = ball_id.into();
        if times.len() != heights.len() {
            return Err(Error::Validation(format!(
                "{ball_id}/{drop_id}: {} times but {} heights",
                times.len(),
                heights.len()
            )));
        }
        if times.len() < 3 {
            return Err(Error::Validation(format!(
                "{ball_id}/{drop_id}: need at least 3 samples, got {}",
                times.len()
            )));
        }
        if let Some(i) = times
            .iter()
            .chain(heights.iter())
            .position(|v| !v.is_finite())
        {
            return Err(Error::Validation(format!(
                "{ball_id}/{drop_id}: non-finite value at position {i}"
            )));
        }
        if let Some(i) = times.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::Validation(format!(
                "{ball_id}/{drop_id}: time {} at sample {} does not increase past {}",
                times[i + 1],
                i + 1,
                times[i]
            )));
        }
        Ok(Self {
            ball_id,
            drop_id,
            times,
            heights,
        })
    }

    /// Samples on the grid `t0 + k·dt`, `k = 0..heights.len()`.
    pub fn uniform(
        ball_id: impl Into<String>,
        drop_id: u32,
        t0: f64,
        dt: f64,
        heights: Vec<f64>,
    ) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::Argument(format!("dt must be positive, got {dt}")));
        }
        let times = (0..heights.len()).map(|k| t0 + k as f64 * dt).collect();
        Self::new(ball_id, drop_id, times, heights)
    }

    pub fn ball_id(&self) -> &str {
        &self.ball_id
    }

    pub fn drop_id(&self) -> u32 {
        self.drop_id
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn heights(&self) -> &[f64] {
        &self.heights
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.times[self.times.len() - 1] - self.times[0]
    }

    /// Same labels and times with different heights.
    pub fn with_heights(&self, heights: Vec<f64>) -> Result<Self> {
        Self::new(
            self.ball_id.clone(),
            self.drop_id,
            self.times.clone(),
            heights,
        )
    }

    /// Mean sampling interval.
    pub fn mean_dt(&self) -> f64 {
        self.duration() / (self.len() - 1) as f64
    }

    pub fn is_uniform(&self) -> bool {
        let mean = self.mean_dt();
        self.times
            .windows(2)
            .all(|w| ((w[1] - w[0]) - mean).abs() < UNIFORM_SAMPLING_TOL * mean)
    }

    /// The sampling interval, or an error when the sampling is not uniform.
    pub fn uniform_dt(&self) -> Result<f64> {
        if self.is_uniform() {
            Ok(self.mean_dt())
        } else {
            Err(Error::Validation(format!(
                "{}/{}: sampling is not uniform",
                self.ball_id, self.drop_id
            )))
        }
    }

    /// Height at time `t` by linear interpolation between samples.
    pub fn height_at(&self, t: f64) -> Result<f64> {
        interpolate(&self.times, &self.heights, t)
    }
}

/// Linear interpolation of `(xs, ys)` at `x`; `xs` must be increasing.
pub(crate) fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> Result<f64> {
    let (first, last) = (xs[0], xs[xs.len() - 1]);
    if !(x >= first && x <= last) {
        return Err(Error::OutOfRange {
            value: x,
            low: first,
            high: last,
        });
    }
    let hi = xs.partition_point(|&t| t < x).max(1);
    let (t0, t1) = (xs[hi - 1], xs[hi]);
    let w = (x - t0) / (t1 - t0);
    Ok(ys[hi - 1] + w * (ys[hi] - ys[hi - 1]))
}

/// Returns `x̃ᵢ = xᵢ + η εᵢ` with `εᵢ` i.i.d. standard normal drawn from the
/// stream for `seed`.
pub fn add_gaussian_noise(traj: &Trajectory, eta: f64, seed: u64) -> Result<Trajectory> {
    if !(eta >= 0.0) || !eta.is_finite() {
        return Err(Error::Argument(format!(
            "noise level must be a finite non-negative number, got {eta}"
        )));
    }
    if eta == 0.0 {
        return Ok(traj.clone());
    }
    let mut rng = rng::stream(seed);
    let heights = traj
        .heights()
        .iter()
        .map(|&x| {
            let eps: f64 = StandardNormal.sample(&mut rng);
            x + eta * eps
        })
        .collect();
    traj.with_heights(heights)
}

/// First time at which the ball has descended `distance` below its initial
/// height, linearly interpolated between samples.
pub fn time_to_fall_distance(traj: &Trajectory, distance: f64) -> Result<f64> {
    if !(distance > 0.0) || !distance.is_finite() {
        return Err(Error::Argument(format!(
            "distance must be positive, got {distance}"
        )));
    }
    let h0 = traj.heights()[0];
    let descent = |i: usize| h0 - traj.heights()[i];
    let mut max_descent = 0.0_f64;
    for i in 1..traj.len() {
        let d = descent(i);
        if d >= distance {
            let d_prev = descent(i - 1);
            let (t0, t1) = (traj.times()[i - 1], traj.times()[i]);
            let w = (distance - d_prev) / (d - d_prev);
            return Ok(t0 + w * (t1 - t0));
        }
        max_descent = max_descent.max(d);
    }
    Err(Error::NotReached {
        distance,
        max_descent,
    })
}

/// A sphere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallSpec {
    pub label: String,
    /// Radius in metres.
    pub radius: f64,
    /// Mass in kilograms.
    pub mass: f64,
}

impl BallSpec {
    pub fn new(label: impl Into<String>, radius: f64, mass: f64) -> Result<Self> {
        let ball = Self {
            label: label.into(),
            radius,
            mass,
        };
        ball.validate()?;
        Ok(ball)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::Argument(format!(
                "radius must be positive, got {}",
                self.radius
            )));
        }
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(Error::Argument(format!(
                "mass must be positive, got {}",
                self.mass
            )));
        }
        Ok(())
    }

    pub fn diameter(&self) -> f64 {
        2.0 * self.radius
    }

    /// Frontal area `πD²/4`.
    pub fn cross_section(&self) -> f64 {
        PI * self.radius * self.radius
    }

    pub fn volume(&self) -> f64 {
        4.0 / 3.0 * PI * self.radius.powi(3)
    }

    pub fn density(&self) -> f64 {
        self.mass / self.volume()
    }
}

/// A Newtonian fluid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluidSpec {
    /// kg/m³
    pub density: f64,
    /// kg/(m·s)
    pub dynamic_viscosity: f64,
}

impl FluidSpec {
    /// Air at sea level and 18 °C.
    pub const AIR: FluidSpec = FluidSpec {
        density: 1.211,
        dynamic_viscosity: 1.82e-5,
    };

    pub fn new(density: f64, dynamic_viscosity: f64) -> Result<Self> {
        let fluid = Self {
            density,
            dynamic_viscosity,
        };
        fluid.validate()?;
        Ok(fluid)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.density > 0.0 && self.density.is_finite()) {
            return Err(Error::Argument(format!(
                "fluid density must be positive, got {}",
                self.density
            )));
        }
        if !(self.dynamic_viscosity > 0.0 && self.dynamic_viscosity.is_finite()) {
            return Err(Error::Argument(format!(
                "dynamic viscosity must be positive, got {}",
                self.dynamic_viscosity
            )));
        }
        Ok(())
    }
}

impl Default for FluidSpec {
    fn default() -> Self {
        Self::AIR
    }
}
