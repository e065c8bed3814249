//! Dense least squares for thresholded regression.
//!
//! Columns are admitted in library order: a column whose component
//! orthogonal to the already admitted columns is below
//! [`DEPENDENCE_TOL`] of its norm is declared dependent and receives a zero
//! coefficient. The remaining columns are solved by Householder QR. For a
//! full-rank matrix this is the ordinary least-squares solution; for a
//! rank-deficient one it is the basic solution that prefers earlier
//! (lower-degree) terms.

use nalgebra::{DMatrix, DVector};

/// Relative residual below which a column counts as linearly dependent on
/// the earlier ones.
pub const DEPENDENCE_TOL: f64 = 1e-10;

/// Condition number above which a solve is reported as ill-conditioned.
pub const CONDITION_WARNING: f64 = 1e10;

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub coefficients: Vec<f64>,
    /// 2-norm condition number of the full matrix (infinite when singular).
    pub condition: f64,
    /// Columns set to zero because they depend on earlier columns.
    pub dependent: Vec<usize>,
}

impl Solution {
    pub fn ill_conditioned(&self) -> bool {
        self.condition > CONDITION_WARNING || !self.dependent.is_empty()
    }
}

pub fn condition_number(a: &DMatrix<f64>) -> f64 {
    if a.ncols() == 0 {
        return 1.0;
    }
    if a.ncols() > a.nrows() {
        return f64::INFINITY;
    }
    let sv = a.clone().singular_values();
    let max = sv.max();
    let min = sv.min();
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Indices of columns that are independent of all earlier columns.
fn admitted_columns(a: &DMatrix<f64>) -> Vec<usize> {
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut keep = Vec::new();
    for j in 0..a.ncols() {
        let col = a.column(j).into_owned();
        let norm = col.norm();
        if norm == 0.0 || !norm.is_finite() {
            continue;
        }
        let mut r = col;
        // two passes of modified Gram–Schmidt
        for _ in 0..2 {
            for q in &basis {
                let proj = q.dot(&r);
                r.axpy(-proj, q, 1.0);
            }
        }
        let rn = r.norm();
        if rn > DEPENDENCE_TOL * norm {
            basis.push(r / rn);
            keep.push(j);
        }
    }
    keep
}

/// Solves `min ‖a ξ − b‖₂`.
pub fn solve(a: &DMatrix<f64>, b: &[f64]) -> Solution {
    assert_eq!(a.nrows(), b.len(), "row count must match target length");
    let n = a.ncols();
    let condition = condition_number(a);
    let keep = admitted_columns(a);
    let dependent: Vec<usize> = (0..n).filter(|j| !keep.contains(j)).collect();
    let mut coefficients = vec![0.0; n];
    if !keep.is_empty() {
        let sub = a.select_columns(&keep);
        let qr = sub.qr();
        let rhs = qr.q().transpose() * DVector::from_column_slice(b);
        let x = qr
            .r()
            .solve_upper_triangular(&rhs)
            .expect("admitted columns are independent");
        for (k, &j) in keep.iter().enumerate() {
            coefficients[j] = x[k];
        }
    }
    Solution {
        coefficients,
        condition,
        dependent,
    }
}
