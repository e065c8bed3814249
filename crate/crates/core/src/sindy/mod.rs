//! Sparse identification of the acceleration law.
//!
//! [`stlsq`] fits a single trajectory by sequentially thresholded least
//! squares. [`group_stlsq`] fits several trajectories that must share one
//! active term set, pruning library rows by a salience function.

mod group;
mod pipeline;
mod stlsq;
mod sweep;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::library::{default_state_names, display_permutation, DisplayOrder, TermDescriptor};

pub use group::{group_stlsq, GroupFitResult};
pub use pipeline::{
    build_regression, fit_first_order, fit_second_order, group_fit_second_order, simulate_model,
    Forecast, PipelineConfig, Regression, StateVariables, DIVERGENCE_LIMIT, MODEL_SUBSTEPS,
};
pub use stlsq::{stlsq, stlsq_traced, StlsqTrace};
pub use sweep::{sparsity_sweep, SweepEntry, SweepMode};

/// Row salience used by the group fit to decide whether a term survives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Salience {
    /// Sum of absolute coefficients across trajectories.
    #[default]
    L1,
    L2,
    MeanAbs,
    MedianAbs,
    /// Lower quartile of the absolute coefficients.
    Quantile25,
}

impl Salience {
    pub fn evaluate(self, row: &[f64]) -> f64 {
        let n = row.len() as f64;
        match self {
            Salience::L1 => row.iter().map(|c| c.abs()).sum(),
            Salience::L2 => row.iter().map(|c| c * c).sum::<f64>().sqrt(),
            Salience::MeanAbs => row.iter().map(|c| c.abs()).sum::<f64>() / n,
            Salience::MedianAbs => quantile(row, 0.5),
            Salience::Quantile25 => quantile(row, 0.25),
        }
    }
}

/// Linear-interpolation quantile of absolute values.
fn quantile(row: &[f64], q: f64) -> f64 {
    let mut abs: Vec<f64> = row.iter().map(|c| c.abs()).collect();
    abs.sort_by(f64::total_cmp);
    let pos = q * (abs.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    abs[lo] + (pos - lo as f64) * (abs[hi] - abs[lo])
}

/// Thresholding parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    /// Sparsity threshold δ.
    pub threshold: f64,
    pub max_iterations: usize,
    /// Only consulted by group fits.
    pub salience: Salience,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            threshold: 0.1,
            max_iterations: 20,
            salience: Salience::L1,
        }
    }
}

impl FitConfig {
    pub fn with_threshold(threshold: f64) -> Self {
        Self {
            threshold,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.threshold >= 0.0) || !self.threshold.is_finite() {
            return Err(Error::Argument(format!(
                "threshold must be finite and non-negative, got {}",
                self.threshold
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::Argument("max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

/// Non-fatal conditions observed while fitting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FitWarning {
    /// Every term was pruned; the model is `target = 0`.
    EmptyModel,
    /// A least-squares solve had a large condition number or dependent
    /// columns, which were zeroed.
    IllConditioned {
        condition: f64,
        dependent_terms: Vec<String>,
    },
    /// The support was still changing after `iterations` passes.
    NotConverged { iterations: usize },
}

impl fmt::Display for FitWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FitWarning::EmptyModel => write!(f, "empty model: all terms pruned"),
            FitWarning::IllConditioned {
                condition,
                dependent_terms,
            } => {
                write!(f, "ill-conditioned library (condition {condition:.3e})")?;
                if !dependent_terms.is_empty() {
                    write!(
                        f,
                        "; dependent terms zeroed: {}",
                        dependent_terms.join(", ")
                    )?;
                }
                Ok(())
            }
            FitWarning::NotConverged { iterations } => {
                write!(f, "support not converged after {iterations} iterations")
            }
        }
    }
}

/// One governing equation `target = Σⱼ ξⱼ φⱼ(state)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelRepr", into = "ModelRepr")]
pub struct SparseModel {
    coefficients: Vec<f64>,
    terms: Vec<TermDescriptor>,
    state_names: Vec<String>,
    target_name: String,
    warnings: Vec<FitWarning>,
}

impl SparseModel {
    pub fn new(terms: Vec<TermDescriptor>, coefficients: Vec<f64>) -> Result<Self> {
        if terms.len() != coefficients.len() {
            return Err(Error::Argument(format!(
                "{} terms but {} coefficients",
                terms.len(),
                coefficients.len()
            )));
        }
        let n_states = terms.first().map(|t| t.exponents.len()).unwrap_or(0);
        if terms.iter().any(|t| t.exponents.len() != n_states) {
            return Err(Error::Argument(
                "terms disagree on the number of states".into(),
            ));
        }
        Ok(Self {
            coefficients,
            terms,
            state_names: default_state_names(n_states),
            target_name: "v'".into(),
            warnings: Vec::new(),
        })
    }

    pub fn with_names(mut self, state_names: &[&str], target_name: &str) -> Self {
        self.state_names = state_names.iter().map(|s| s.to_string()).collect();
        self.target_name = target_name.to_string();
        self
    }

    pub(crate) fn with_warnings(mut self, warnings: Vec<FitWarning>) -> Self {
        self.warnings = warnings;
        self
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn terms(&self) -> &[TermDescriptor] {
        &self.terms
    }

    pub fn state_names(&self) -> &[String] {
        &self.state_names
    }

    pub fn target_name(&self) -> &str {
        &self.target_name
    }

    pub fn warnings(&self) -> &[FitWarning] {
        &self.warnings
    }

    pub fn n_states(&self) -> usize {
        self.state_names.len()
    }

    /// Indices of nonzero coefficients.
    pub fn support(&self) -> Vec<usize> {
        (0..self.coefficients.len())
            .filter(|&j| self.coefficients[j] != 0.0)
            .collect()
    }

    pub fn term_count(&self) -> usize {
        self.coefficients.iter().filter(|&&c| c != 0.0).count()
    }

    pub fn is_empty_model(&self) -> bool {
        self.term_count() == 0
    }

    /// Coefficient of the term with the given exponents, zero if absent.
    pub fn coefficient_of(&self, exponents: &[u32]) -> f64 {
        self.terms
            .iter()
            .position(|t| t.exponents == exponents)
            .map(|j| self.coefficients[j])
            .unwrap_or(0.0)
    }

    /// Coefficient of the term printed as `name` (for example `"v^2"`).
    pub fn coefficient_named(&self, name: &str) -> f64 {
        self.terms
            .iter()
            .position(|t| t.name == name)
            .map(|j| self.coefficients[j])
            .unwrap_or(0.0)
    }

    /// `Σⱼ ξⱼ φⱼ(state)`.
    pub fn predict_derivative(&self, state: &[f64]) -> f64 {
        self.terms
            .iter()
            .zip(&self.coefficients)
            .filter(|(_, &c)| c != 0.0)
            .map(|(t, &c)| c * t.evaluate(state))
            .sum()
    }

    /// Equation text such as `v' = -9.79 - 0.48 v`.
    pub fn equation(&self, precision: usize) -> String {
        self.equation_ordered(precision, DisplayOrder::GradedLex)
    }

    pub fn equation_ordered(&self, precision: usize, order: DisplayOrder) -> String {
        let mut rhs = String::new();
        for j in display_permutation(&self.terms, order) {
            let c = self.coefficients[j];
            if c == 0.0 {
                continue;
            }
            let mag = format!("{:.*}", precision, c.abs());
            let body = if self.terms[j].is_constant() {
                mag
            } else {
                format!("{mag} {}", self.terms[j].name)
            };
            match (rhs.is_empty(), c < 0.0) {
                (true, false) => rhs.push_str(&body),
                (true, true) => rhs.push_str(&format!("-{body}")),
                (false, false) => rhs.push_str(&format!(" + {body}")),
                (false, true) => rhs.push_str(&format!(" - {body}")),
            }
        }
        if rhs.is_empty() {
            rhs.push('0');
        }
        format!("{} = {rhs}", self.target_name)
    }
}

impl fmt::Display for SparseModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.equation(2))
    }
}

#[derive(Serialize, Deserialize)]
struct TermRepr {
    name: String,
    exponents: Vec<u32>,
    coefficient: f64,
}

#[derive(Serialize, Deserialize)]
struct ModelRepr {
    target: String,
    states: Vec<String>,
    terms: Vec<TermRepr>,
    #[serde(default)]
    warnings: Vec<FitWarning>,
}

impl From<SparseModel> for ModelRepr {
    fn from(m: SparseModel) -> Self {
        ModelRepr {
            target: m.target_name,
            states: m.state_names,
            terms: m
                .terms
                .into_iter()
                .zip(m.coefficients)
                .map(|(t, c)| TermRepr {
                    name: t.name,
                    exponents: t.exponents,
                    coefficient: c,
                })
                .collect(),
            warnings: m.warnings,
        }
    }
}

impl TryFrom<ModelRepr> for SparseModel {
    type Error = Error;

    fn try_from(r: ModelRepr) -> Result<Self> {
        let (terms, coefficients) = r
            .terms
            .into_iter()
            .map(|t| {
                (
                    TermDescriptor {
                        exponents: t.exponents,
                        name: t.name,
                    },
                    t.coefficient,
                )
            })
            .unzip();
        let mut model = SparseModel::new(terms, coefficients)?;
        if model.terms.first().map(|t| t.exponents.len()) != Some(r.states.len()) {
            return Err(Error::Validation(
                "state list does not match term exponents".into(),
            ));
        }
        model.state_names = r.states;
        model.target_name = r.target;
        model.warnings = r.warnings;
        Ok(model)
    }
}
