use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trajectory::Trajectory;

use super::pipeline::{build_regression, PipelineConfig};
use super::{group_stlsq, stlsq, FitConfig, SparseModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepMode {
    /// Independent STLSQ per trajectory.
    #[default]
    Plain,
    Group,
}

/// Result for one threshold. A failed fit is kept as its error.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepEntry {
    pub delta: f64,
    pub outcome: Result<Vec<SparseModel>>,
}

impl SweepEntry {
    /// Active term count per model.
    pub fn term_counts(&self) -> Option<Vec<usize>> {
        self.outcome
            .as_ref()
            .ok()
            .map(|ms| ms.iter().map(SparseModel::term_count).collect())
    }
}

/// Fits every trajectory at every threshold in `deltas`.
///
/// Derivatives and libraries are built once; each threshold is fit
/// independently so an error at one threshold is recorded in its entry
/// without affecting the others.
pub fn sparsity_sweep(
    trajectories: &[Trajectory],
    deltas: &[f64],
    mode: SweepMode,
    pipeline: &PipelineConfig,
    base: &FitConfig,
) -> Result<Vec<SweepEntry>> {
    if deltas.is_empty() {
        return Err(Error::Argument("threshold grid is empty".into()));
    }
    if let Some(d) = deltas.iter().find(|&&d| !(d > 0.0) || !d.is_finite()) {
        return Err(Error::Argument(format!(
            "thresholds must be positive, got {d}"
        )));
    }
    if trajectories.is_empty() {
        return Err(Error::Argument("no trajectories to sweep".into()));
    }
    let regs = trajectories
        .iter()
        .map(|t| build_regression(t, pipeline))
        .collect::<Result<Vec<_>>>()?;
    let names = pipeline.states.names();

    Ok(deltas
        .par_iter()
        .map(|&delta| {
            let cfg = FitConfig {
                threshold: delta,
                ..*base
            };
            let outcome = match mode {
                SweepMode::Plain => regs
                    .iter()
                    .map(|r| stlsq(&r.library, &r.targets, &cfg))
                    .collect::<Result<Vec<_>>>(),
                SweepMode::Group => {
                    let libs: Vec<_> = regs.iter().map(|r| r.library.clone()).collect();
                    let ys: Vec<_> = regs.iter().map(|r| r.targets.clone()).collect();
                    group_stlsq(&libs, &ys, &cfg).map(|g| g.models)
                }
            }
            .map(|ms| ms.into_iter().map(|m| m.with_names(names, "v'")).collect());
            SweepEntry { delta, outcome }
        })
        .collect())
}
