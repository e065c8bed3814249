use crate::error::{Error, Result};
use crate::library::LibraryMatrix;
use crate::lstsq;

use super::{FitConfig, FitWarning, SparseModel};

/// Supports visited by one STLSQ run, for diagnostics and tests.
#[derive(Debug, Clone, PartialEq)]
pub struct StlsqTrace {
    /// Active mask before each least-squares solve.
    pub supports: Vec<Vec<bool>>,
    pub converged: bool,
}

/// Solves on the active columns and scatters back to full length.
pub(crate) fn solve_active(
    library: &LibraryMatrix,
    targets: &[f64],
    active: &[bool],
    warnings: &mut Vec<FitWarning>,
) -> Vec<f64> {
    let cols: Vec<usize> = (0..active.len()).filter(|&j| active[j]).collect();
    let mut full = vec![0.0; active.len()];
    if cols.is_empty() {
        return full;
    }
    let sub = library.values().select_columns(&cols);
    let sol = lstsq::solve(&sub, targets);
    if sol.ill_conditioned() {
        let dependent_terms = sol
            .dependent
            .iter()
            .map(|&k| library.terms()[cols[k]].name.clone())
            .collect();
        let w = FitWarning::IllConditioned {
            condition: sol.condition,
            dependent_terms,
        };
        if !warnings.contains(&w) {
            warnings.push(w);
        }
    }
    for (k, &j) in cols.iter().enumerate() {
        full[j] = sol.coefficients[k];
    }
    full
}

pub(crate) fn check_shapes(library: &LibraryMatrix, targets: &[f64]) -> Result<()> {
    if library.n_samples() != targets.len() {
        return Err(Error::Argument(format!(
            "library has {} rows but there are {} targets",
            library.n_samples(),
            targets.len()
        )));
    }
    if let Some(i) = targets.iter().position(|t| !t.is_finite()) {
        return Err(Error::Validation(format!("non-finite target at row {i}")));
    }
    Ok(())
}

/// Sequentially thresholded least squares.
///
/// Alternates an unregularized solve on the active terms with removal of
/// every term whose coefficient magnitude is below the threshold, until the
/// support stops changing or `max_iterations` solves have run.
pub fn stlsq(library: &LibraryMatrix, targets: &[f64], cfg: &FitConfig) -> Result<SparseModel> {
    stlsq_traced(library, targets, cfg).map(|(m, _)| m)
}

pub fn stlsq_traced(
    library: &LibraryMatrix,
    targets: &[f64],
    cfg: &FitConfig,
) -> Result<(SparseModel, StlsqTrace)> {
    cfg.validate()?;
    check_shapes(library, targets)?;
    let p = library.n_terms();
    let mut warnings = Vec::new();
    let mut active = vec![true; p];
    let mut supports = vec![active.clone()];
    let mut coef = solve_active(library, targets, &active, &mut warnings);
    let mut converged = false;

    for _ in 1..=cfg.max_iterations {
        let next: Vec<bool> = (0..p)
            .map(|j| active[j] && coef[j].abs() >= cfg.threshold)
            .collect();
        if next == active {
            converged = true;
            break;
        }
        active = next;
        if !active.iter().any(|&a| a) {
            coef = vec![0.0; p];
            converged = true;
            break;
        }
        if supports.len() == cfg.max_iterations {
            break;
        }
        supports.push(active.clone());
        coef = solve_active(library, targets, &active, &mut warnings);
    }

    for j in 0..p {
        if !active[j] {
            coef[j] = 0.0;
        }
    }
    if !converged {
        warnings.push(FitWarning::NotConverged {
            iterations: supports.len(),
        });
    }
    if coef.iter().all(|&c| c == 0.0) {
        warnings.push(FitWarning::EmptyModel);
    }
    let model = SparseModel::new(library.terms().to_vec(), coef)?.with_warnings(warnings);
    Ok((
        model,
        StlsqTrace {
            supports,
            converged,
        },
    ))
}
