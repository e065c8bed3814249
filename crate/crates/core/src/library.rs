//! Monomial candidate libraries `Φ(X)`.
//!
//! Terms are stored in graded-lexicographic order: by total degree, then by
//! descending exponent of the earlier state variables. For states `(x, v)`
//! and degree 3 that is `1, x, v, x^2, x v, v^2, x^3, x^2 v, x v^2, v^3`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One monomial `∏ₖ stateₖ^exponentsₖ`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TermDescriptor {
    pub exponents: Vec<u32>,
    pub name: String,
}

impl TermDescriptor {
    pub fn new(exponents: Vec<u32>, state_names: &[&str]) -> Self {
        let name = monomial_name(&exponents, state_names);
        Self { exponents, name }
    }

    pub fn constant(n_states: usize) -> Self {
        Self {
            exponents: vec![0; n_states],
            name: "1".into(),
        }
    }

    pub fn degree(&self) -> u32 {
        self.exponents.iter().sum()
    }

    pub fn is_constant(&self) -> bool {
        self.degree() == 0
    }

    pub fn evaluate(&self, state: &[f64]) -> f64 {
        self.exponents
            .iter()
            .zip(state)
            .map(|(&e, &s)| s.powi(e as i32))
            .product()
    }
}

fn monomial_name(exponents: &[u32], state_names: &[&str]) -> String {
    let parts: Vec<String> = exponents
        .iter()
        .zip(state_names)
        .filter(|(&e, _)| e > 0)
        .map(|(&e, name)| match e {
            1 => name.to_string(),
            _ => format!("{name}^{e}"),
        })
        .collect();
    if parts.is_empty() {
        "1".into()
    } else {
        parts.join(" ")
    }
}

/// Names used when the caller does not supply any: `x` for one state,
/// `x, v` for two, `x1..xn` otherwise.
pub fn default_state_names(n_states: usize) -> Vec<String> {
    match n_states {
        1 => vec!["x".into()],
        2 => vec!["x".into(), "v".into()],
        n => (1..=n).map(|i| format!("x{i}")).collect(),
    }
}

/// All monomials in `state_names.len()` variables with total degree at most
/// `degree`, in storage order.
pub fn polynomial_terms_named(state_names: &[&str], degree: u32) -> Result<Vec<TermDescriptor>> {
    let n = state_names.len();
    if n == 0 {
        return Err(Error::Argument("need at least one state variable".into()));
    }
    let mut terms = Vec::new();
    for d in 0..=degree {
        let mut exps = vec![0u32; n];
        push_compositions(&mut terms, &mut exps, 0, d, state_names);
    }
    Ok(terms)
}

fn push_compositions(
    out: &mut Vec<TermDescriptor>,
    exps: &mut Vec<u32>,
    k: usize,
    remaining: u32,
    names: &[&str],
) {
    if k == exps.len() - 1 {
        exps[k] = remaining;
        out.push(TermDescriptor::new(exps.clone(), names));
        return;
    }
    for e in (0..=remaining).rev() {
        exps[k] = e;
        push_compositions(out, exps, k + 1, remaining - e, names);
    }
    exps[k] = 0;
}

/// [`polynomial_terms_named`] with [`default_state_names`].
pub fn polynomial_terms(n_states: usize, degree: u32) -> Result<Vec<TermDescriptor>> {
    let names = default_state_names(n_states);
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    polynomial_terms_named(&refs, degree)
}

/// Order in which terms are listed when printing equations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DisplayOrder {
    /// Storage order.
    #[default]
    GradedLex,
    /// Within each degree, mixed terms precede pure powers
    /// (`1, x, v, x v, x^2, v^2, …`).
    MixedFirst,
}

/// Permutation of `0..terms.len()` giving the display order.
pub fn display_permutation(terms: &[TermDescriptor], order: DisplayOrder) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..terms.len()).collect();
    if order == DisplayOrder::MixedFirst {
        // stable sort keeps graded-lex order inside each class
        idx.sort_by_key(|&i| {
            let t = &terms[i];
            let nonzero = t.exponents.iter().filter(|&&e| e > 0).count();
            (t.degree(), usize::MAX - nonzero)
        });
    }
    idx
}

fn check_terms(terms: &[TermDescriptor], n_states: usize) -> Result<()> {
    for (i, t) in terms.iter().enumerate() {
        if t.exponents.len() != n_states {
            return Err(Error::Argument(format!(
                "term `{}` has {} exponents but the states have {n_states} columns",
                t.name,
                t.exponents.len()
            )));
        }
        if terms[..i].iter().any(|u| u.exponents == t.exponents) {
            return Err(Error::Argument(format!("duplicate term `{}`", t.name)));
        }
    }
    Ok(())
}

/// Library matrix: column `j` holds term `j` evaluated on every sample.
#[derive(Debug, Clone, PartialEq)]
pub struct LibraryMatrix {
    values: DMatrix<f64>,
    terms: Vec<TermDescriptor>,
}

impl LibraryMatrix {
    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn terms(&self) -> &[TermDescriptor] {
        &self.terms
    }

    pub fn n_samples(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    /// Sub-library with the given columns, in the order given.
    pub fn select(&self, columns: &[usize]) -> Result<LibraryMatrix> {
        if let Some(&j) = columns.iter().find(|&&j| j >= self.terms.len()) {
            return Err(Error::Argument(format!(
                "column {j} out of range for {} terms",
                self.terms.len()
            )));
        }
        Ok(LibraryMatrix {
            values: self.values.select_columns(columns),
            terms: columns.iter().map(|&j| self.terms[j].clone()).collect(),
        })
    }
}

/// Evaluates `terms` on an `m × n` state matrix.
pub fn evaluate_library(states: &DMatrix<f64>, terms: &[TermDescriptor]) -> Result<LibraryMatrix> {
    check_terms(terms, states.ncols())?;
    if let Some((i, _)) = states.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(Error::Validation(format!(
            "non-finite state at row {}, column {}",
            i % states.nrows(),
            i / states.nrows()
        )));
    }
    let values = DMatrix::from_fn(states.nrows(), terms.len(), |i, j| {
        terms[j]
            .exponents
            .iter()
            .enumerate()
            .map(|(k, &e)| states[(i, k)].powi(e as i32))
            .product()
    });
    Ok(LibraryMatrix {
        values,
        terms: terms.to_vec(),
    })
}

/// Builds a state matrix from equally long columns.
pub fn state_matrix(columns: &[&[f64]]) -> Result<DMatrix<f64>> {
    let m = columns.first().map(|c| c.len()).unwrap_or(0);
    if columns.iter().any(|c| c.len() != m) {
        return Err(Error::Argument("state columns differ in length".into()));
    }
    Ok(DMatrix::from_fn(m, columns.len(), |i, j| columns[j][i]))
}
