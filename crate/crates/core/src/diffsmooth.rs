//! Savitzky–Golay smoothing, finite differences, and the smoothing-based
//! noise-level estimator.

use std::io::{Read, Write};

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::simulate::{simulate_drop, DragModel};
use crate::trajectory::{add_gaussian_noise, Trajectory};

/// Savitzky–Golay window configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SmootherConfig {
    /// Odd number of samples in each local fit, at least 5.
    pub window_length: usize,
    /// Degree of the local polynomial, `1 ≤ poly_order < window_length`.
    pub poly_order: usize,
}

impl Default for SmootherConfig {
    fn default() -> Self {
        Self {
            window_length: 35,
            poly_order: 3,
        }
    }
}

impl SmootherConfig {
    pub fn new(window_length: usize, poly_order: usize) -> Result<Self> {
        let cfg = Self {
            window_length,
            poly_order,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_window(window_length: usize) -> Result<Self> {
        Self::new(window_length, Self::default().poly_order)
    }

    pub fn validate(&self) -> Result<()> {
        if self.window_length < 5 || self.window_length.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "window length must be odd and at least 5, got {}",
                self.window_length
            )));
        }
        if self.poly_order < 1 || self.poly_order >= self.window_length {
            return Err(Error::Config(format!(
                "polynomial order must lie in [1, {}), got {}",
                self.window_length, self.poly_order
            )));
        }
        Ok(())
    }
}

/// Precomputed smoothing weights for one configuration.
///
/// Row `s` of `hat` evaluates the least-squares polynomial through a full
/// window at the window's `s`-th abscissa. Interior samples use the centre
/// row; the first and last half-windows reuse the one-sided edge windows.
#[derive(Debug, Clone)]
pub struct SavitzkyGolay {
    cfg: SmootherConfig,
    hat: DMatrix<f64>,
}

impl SavitzkyGolay {
    pub fn new(cfg: SmootherConfig) -> Result<Self> {
        cfg.validate()?;
        let w = cfg.window_length;
        let half = (w / 2) as f64;
        let vander = DMatrix::from_fn(w, cfg.poly_order + 1, |i, j| {
            ((i as f64 - half) / half).powi(j as i32)
        });
        let pinv = vander
            .clone()
            .pseudo_inverse(1e-13)
            .map_err(|e| Error::Config(e.to_string()))?;
        Ok(Self {
            cfg,
            hat: vander * pinv,
        })
    }

    pub fn config(&self) -> SmootherConfig {
        self.cfg
    }

    pub fn apply(&self, values: &[f64]) -> Result<Vec<f64>> {
        let w = self.cfg.window_length;
        let n = values.len();
        if n < w {
            return Err(Error::Config(format!(
                "{n} samples is shorter than the smoothing window of {w}"
            )));
        }
        let half = w / 2;
        let out = (0..n)
            .map(|i| {
                let start = i.saturating_sub(half).min(n - w);
                let row = i - start;
                (0..w).map(|k| self.hat[(row, k)] * values[start + k]).sum()
            })
            .collect();
        Ok(out)
    }
}

/// Replaces heights with their Savitzky–Golay smoothed values.
pub fn savgol_smooth(traj: &Trajectory, cfg: SmootherConfig) -> Result<Trajectory> {
    traj.uniform_dt()?;
    let smoothed = SavitzkyGolay::new(cfg)?.apply(traj.heights())?;
    traj.with_heights(smoothed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Forward,
    Centered,
}

/// First derivative of uniformly spaced samples; output length equals input
/// length.
///
/// `Centered` is second order everywhere, using one-sided three-point
/// stencils at the ends. `Forward` is first order with a backward difference
/// at the last point.
pub fn finite_difference(values: &[f64], dt: f64, scheme: Scheme) -> Result<Vec<f64>> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::Argument(format!("dt must be positive, got {dt}")));
    }
    let n = values.len();
    match scheme {
        Scheme::Centered => {
            if n < 3 {
                return Err(Error::Argument(format!(
                    "centered differences need at least 3 samples, got {n}"
                )));
            }
            let mut d = vec![0.0; n];
            for i in 1..n - 1 {
                d[i] = (values[i + 1] - values[i - 1]) / (2.0 * dt);
            }
            d[0] = (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * dt);
            d[n - 1] = (3.0 * values[n - 1] - 4.0 * values[n - 2] + values[n - 3]) / (2.0 * dt);
            Ok(d)
        }
        Scheme::Forward => {
            if n < 2 {
                return Err(Error::Argument(format!(
                    "forward differences need at least 2 samples, got {n}"
                )));
            }
            let mut d: Vec<f64> = values.windows(2).map(|w| (w[1] - w[0]) / dt).collect();
            d.push(d[n - 2]);
            Ok(d)
        }
    }
}

/// Heights with their first two time derivatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivativeSet {
    pub times: Vec<f64>,
    /// Smoothed heights, or the raw heights when smoothing was skipped.
    pub heights: Vec<f64>,
    pub velocities: Vec<f64>,
    pub accelerations: Vec<f64>,
}

impl DerivativeSet {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Velocity and acceleration by centered differences, optionally after
/// Savitzky–Golay smoothing of the heights. Acceleration is the centered
/// difference of the velocity series.
pub fn compute_derivatives(
    traj: &Trajectory,
    cfg: SmootherConfig,
    smooth: bool,
) -> Result<DerivativeSet> {
    let dt = traj.uniform_dt()?;
    let heights = if smooth {
        SavitzkyGolay::new(cfg)?.apply(traj.heights())?
    } else {
        traj.heights().to_vec()
    };
    let velocities = finite_difference(&heights, dt, Scheme::Centered)?;
    let accelerations = finite_difference(&velocities, dt, Scheme::Centered)?;
    Ok(DerivativeSet {
        times: traj.times().to_vec(),
        heights,
        velocities,
        accelerations,
    })
}

/// `‖a − b‖₂ / ‖b‖₂`.
pub fn relative_l2(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}

/// Relative ℓ² difference between a trajectory and its smoothed version.
pub fn smoothing_difference(traj: &Trajectory, smoother: &SavitzkyGolay) -> Result<f64> {
    traj.uniform_dt()?;
    let smoothed = smoother.apply(traj.heights())?;
    Ok(relative_l2(&smoothed, traj.heights()))
}

/// Sampling rate of the calibration reference drop, Hz.
pub const REFERENCE_RATE_HZ: f64 = 15.0;
/// Number of samples in the calibration reference drop.
pub const REFERENCE_SAMPLES: usize = 50;
/// Initial height of the calibration reference drop, m.
pub const REFERENCE_HEIGHT: f64 = 40.0;

/// The clean reference drop: `v̇ = −9.8 − 0.5v`, `x(0) = 40`, `v(0) = 0`,
/// sampled at 15 Hz.
pub fn reference_trajectory() -> Result<Trajectory> {
    let model = DragModel::LinearDrag {
        g: -9.8,
        coefficient: -0.5,
    };
    let sim = simulate_drop(
        &model,
        REFERENCE_HEIGHT,
        0.0,
        1.0 / REFERENCE_RATE_HZ,
        REFERENCE_SAMPLES - 1,
    )?;
    Ok(sim.trajectory)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationPoint {
    pub eta: f64,
    pub relative_difference: f64,
}

/// Monotone table mapping injected noise level to the mean relative
/// difference between noisy reference drops and their smoothed versions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseCalibration {
    pub smoother: SmootherConfig,
    pub points: Vec<CalibrationPoint>,
}

impl NoiseCalibration {
    pub fn new(smoother: SmootherConfig, points: Vec<CalibrationPoint>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Calibration(
                "need at least two calibration points".into(),
            ));
        }
        if let Some(w) = points
            .windows(2)
            .find(|w| !(w[1].eta > w[0].eta && w[1].relative_difference > w[0].relative_difference))
        {
            return Err(Error::Calibration(format!(
                "curve is not strictly increasing between eta {} and {} \
                 (differences {} and {}); increase the replicate count",
                w[0].eta, w[1].eta, w[0].relative_difference, w[1].relative_difference
            )));
        }
        Ok(Self { smoother, points })
    }

    pub fn write_csv<W: Write>(&self, sink: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        for p in &self.points {
            w.serialize(p).map_err(|e| Error::Io(e.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(source: R, smoother: SmootherConfig) -> Result<Self> {
        let mut r = csv::Reader::from_reader(source);
        let points = r
            .deserialize::<CalibrationPoint>()
            .map(|p| {
                p.map_err(|e| Error::Parse {
                    line: e.position().map(|p| p.line()).unwrap_or(0),
                    message: e.to_string(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(smoother, points)
    }
}

/// Default calibration levels: 25 points log-spaced over [0.005, 1] m.
pub fn default_noise_grid() -> Vec<f64> {
    let (lo, hi) = (0.005f64.ln(), 1.0f64.ln());
    (0..25)
        .map(|i| (lo + (hi - lo) * i as f64 / 24.0).exp())
        .collect()
}

/// Builds a calibration curve on the reference drop.
///
/// Grid point `i`, replicate `r` draws its noise from
/// `derive_seed(derive_seed(seed, i), r)`, so grid points may be evaluated in
/// parallel without affecting the result.
pub fn build_noise_calibration(
    eta_grid: &[f64],
    replicates: usize,
    seed: u64,
    smoother: SmootherConfig,
) -> Result<NoiseCalibration> {
    if replicates == 0 {
        return Err(Error::Argument("replicates must be at least 1".into()));
    }
    if eta_grid.is_empty() {
        return Err(Error::Argument("noise grid is empty".into()));
    }
    if eta_grid.iter().any(|&e| !(e > 0.0) || !e.is_finite())
        || eta_grid.windows(2).any(|w| w[1] <= w[0])
    {
        return Err(Error::Argument(
            "noise grid must be positive and strictly increasing".into(),
        ));
    }
    let reference = reference_trajectory()?;
    let filter = SavitzkyGolay::new(smoother)?;
    let points = eta_grid
        .par_iter()
        .enumerate()
        .map(|(i, &eta)| {
            let point_seed = rng::derive_seed(seed, i as u64);
            let mut total = 0.0;
            for r in 0..replicates {
                let noisy =
                    add_gaussian_noise(&reference, eta, rng::derive_seed(point_seed, r as u64))?;
                total += smoothing_difference(&noisy, &filter)?;
            }
            Ok(CalibrationPoint {
                eta,
                relative_difference: total / replicates as f64,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    NoiseCalibration::new(smoother, points)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseEstimate {
    pub eta: f64,
    pub relative_difference: f64,
    /// The difference fell below the calibrated range; `eta` is then the
    /// smallest calibrated level, an upper bound rather than an estimate.
    pub below_range: bool,
}

/// Estimates the noise standard deviation of `traj` by locating its
/// smoothing difference on the calibration curve (log–log linear
/// interpolation).
pub fn estimate_noise_level(
    traj: &Trajectory,
    smoother: SmootherConfig,
    calibration: &NoiseCalibration,
) -> Result<NoiseEstimate> {
    if calibration.smoother != smoother {
        return Err(Error::Config(format!(
            "calibration uses window {} / order {}, estimator asked for window {} / order {}",
            calibration.smoother.window_length,
            calibration.smoother.poly_order,
            smoother.window_length,
            smoother.poly_order
        )));
    }
    let rd = smoothing_difference(traj, &SavitzkyGolay::new(smoother)?)?;
    let pts = &calibration.points;
    let (first, last) = (pts[0], pts[pts.len() - 1]);
    if rd < first.relative_difference {
        return Ok(NoiseEstimate {
            eta: first.eta,
            relative_difference: rd,
            below_range: true,
        });
    }
    if rd > last.relative_difference {
        return Err(Error::OutOfRange {
            value: rd,
            low: first.relative_difference,
            high: last.relative_difference,
        });
    }
    let hi = pts
        .partition_point(|p| p.relative_difference < rd)
        .clamp(1, pts.len() - 1);
    let (a, b) = (pts[hi - 1], pts[hi]);
    let w = (rd.ln() - a.relative_difference.ln())
        / (b.relative_difference.ln() - a.relative_difference.ln());
    let eta = (a.eta.ln() + w * (b.eta.ln() - a.eta.ln())).exp();
    Ok(NoiseEstimate {
        eta,
        relative_difference: rd,
        below_range: false,
    })
}
