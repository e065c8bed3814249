use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::library::LibraryMatrix;

use super::stlsq::{check_shapes, solve_active};
use super::{FitConfig, FitWarning, SparseModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupFitResult {
    /// One model per trajectory, in input order.
    pub models: Vec<SparseModel>,
    /// Term indices that survived pruning.
    pub shared_support: Vec<usize>,
    pub iterations: usize,
    pub converged: bool,
}

impl GroupFitResult {
    /// Salience of each term row under `cfg.salience`, zero for pruned rows.
    pub fn row_salience(&self, cfg: &FitConfig) -> Vec<f64> {
        let p = self.models.first().map(|m| m.terms().len()).unwrap_or(0);
        (0..p)
            .map(|j| {
                let row: Vec<f64> = self.models.iter().map(|m| m.coefficients()[j]).collect();
                cfg.salience.evaluate(&row)
            })
            .collect()
    }
}

fn solve_all(
    libraries: &[LibraryMatrix],
    targets: &[Vec<f64>],
    active: &[bool],
    warnings: &mut [Vec<FitWarning>],
) -> Vec<Vec<f64>> {
    libraries
        .par_iter()
        .zip(targets.par_iter())
        .zip(warnings.par_iter_mut())
        .map(|((lib, y), w)| solve_active(lib, y, active, w))
        .collect()
}

/// Thresholded least squares with one support shared by all trajectories.
///
/// Each pass solves every trajectory on the active terms, then removes every
/// term whose row of coefficients (one entry per trajectory) has salience
/// below the threshold.
pub fn group_stlsq(
    libraries: &[LibraryMatrix],
    targets: &[Vec<f64>],
    cfg: &FitConfig,
) -> Result<GroupFitResult> {
    cfg.validate()?;
    if libraries.is_empty() {
        return Err(Error::Argument(
            "group fit needs at least one trajectory".into(),
        ));
    }
    if libraries.len() != targets.len() {
        return Err(Error::Argument(format!(
            "{} libraries but {} target vectors",
            libraries.len(),
            targets.len()
        )));
    }
    let terms = libraries[0].terms();
    if libraries.iter().any(|l| l.terms() != terms) {
        return Err(Error::Argument(
            "libraries do not share one term list".into(),
        ));
    }
    for (lib, y) in libraries.iter().zip(targets) {
        check_shapes(lib, y)?;
    }

    let p = terms.len();
    let mut warnings = vec![Vec::new(); libraries.len()];
    let mut active = vec![true; p];
    let mut coef = solve_all(libraries, targets, &active, &mut warnings);
    let mut solves = 1;
    let mut converged = false;

    loop {
        let next: Vec<bool> = (0..p)
            .map(|j| {
                let row: Vec<f64> = coef.iter().map(|c| c[j]).collect();
                active[j] && cfg.salience.evaluate(&row) >= cfg.threshold
            })
            .collect();
        if next == active {
            converged = true;
            break;
        }
        active = next;
        if !active.iter().any(|&a| a) {
            converged = true;
            break;
        }
        if solves == cfg.max_iterations {
            break;
        }
        coef = solve_all(libraries, targets, &active, &mut warnings);
        solves += 1;
    }

    let models = coef
        .into_iter()
        .zip(warnings)
        .map(|(mut c, mut w)| {
            for j in 0..p {
                if !active[j] {
                    c[j] = 0.0;
                }
            }
            if !converged {
                w.push(FitWarning::NotConverged { iterations: solves });
            }
            if c.iter().all(|&x| x == 0.0) {
                w.push(FitWarning::EmptyModel);
            }
            Ok(SparseModel::new(terms.to_vec(), c)?.with_warnings(w))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GroupFitResult {
        models,
        shared_support: (0..p).filter(|&j| active[j]).collect(),
        iterations: solves,
        converged,
    })
}
