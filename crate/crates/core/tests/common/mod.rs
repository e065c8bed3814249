//! Shared generators and property checks for the integration tests.
#![allow(dead_code)]

use std::path::PathBuf;

use dropfit::library::{evaluate_library, polynomial_terms, LibraryMatrix};
use dropfit::sindy::{group_stlsq, stlsq, stlsq_traced, FitConfig};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

/// Environment variable naming the real drop-data CSV.
pub const FIXTURE_ENV: &str = "DROPFIT_BRIDGE_CSV";

pub fn fixture_path() -> PathBuf {
    std::env::var_os(FIXTURE_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| {
            PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/bridge_drops.csv")
        })
}

/// A regression instance with a known sparse generator.
#[derive(Debug, Clone)]
pub struct Problem {
    pub library: LibraryMatrix,
    pub targets: Vec<f64>,
    pub truth: Vec<f64>,
    pub delta: f64,
}

/// Several trajectories sharing a generator support.
#[derive(Debug, Clone)]
pub struct GroupProblem {
    pub libraries: Vec<LibraryMatrix>,
    pub targets: Vec<Vec<f64>>,
    pub support: Vec<bool>,
    pub delta: f64,
}

fn n_terms(n: usize, d: u32) -> usize {
    (1..=d as usize).fold(1, |acc, i| acc * (n + i) / i)
}

fn shapes(max_terms: usize) -> Vec<(usize, u32)> {
    [
        (1, 1),
        (1, 2),
        (1, 3),
        (1, 4),
        (2, 1),
        (2, 2),
        (3, 1),
        (2, 3),
    ]
    .into_iter()
    .filter(|&(n, d)| n_terms(n, d) <= max_terms)
    .collect()
}

fn build_library(n: usize, degree: u32, states: &[f64]) -> LibraryMatrix {
    let m = states.len() / n;
    let x = DMatrix::from_row_slice(m, n, states);
    evaluate_library(&x, &polynomial_terms(n, degree).unwrap()).unwrap()
}

fn generator(mask: &[bool], mags: &[f64], signs: &[bool], delta: f64) -> Vec<f64> {
    mask.iter()
        .zip(mags.iter().zip(signs))
        .map(|(&on, (&mag, &neg))| {
            if !on {
                0.0
            } else if neg {
                -(2.0 * delta + mag)
            } else {
                2.0 * delta + mag
            }
        })
        .collect()
}

fn apply(lib: &LibraryMatrix, coef: &[f64], noise: &[f64], level: f64) -> Vec<f64> {
    let y = lib.values() * DVector::from_column_slice(coef);
    y.iter().zip(noise).map(|(y, e)| y + level * e).collect()
}

/// Random polynomial regression with every generator coefficient at least
/// `2δ` in magnitude and additive noise up to `noise_max`.
pub fn problem(max_terms: usize, noise_max: f64) -> impl Strategy<Value = Problem> {
    (prop::sample::select(shapes(max_terms)), 20usize..50).prop_flat_map(move |((n, d), m)| {
        let p = n_terms(n, d);
        (
            Just((n, d)),
            prop::collection::vec(-2.0f64..2.0, m * n),
            prop::collection::vec(any::<bool>(), p),
            prop::collection::vec(0.0f64..3.0, p),
            prop::collection::vec(any::<bool>(), p),
            0.05f64..0.5,
            prop::collection::vec(-1.0f64..1.0, m),
            0.0..=noise_max,
        )
            .prop_map(|((n, d), states, mask, mags, signs, delta, noise, level)| {
                let library = build_library(n, d, &states);
                let truth = generator(&mask, &mags, &signs, delta);
                let targets = apply(&library, &truth, &noise, level);
                Problem {
                    library,
                    targets,
                    truth,
                    delta,
                }
            })
    })
}

/// One to four noise-free trajectories on a shared support.
pub fn group_problem(max_terms: usize) -> impl Strategy<Value = GroupProblem> {
    (
        prop::sample::select(shapes(max_terms)),
        1usize..=4,
        25usize..45,
    )
        .prop_flat_map(|((n, d), b, m)| {
            let p = n_terms(n, d);
            (
                Just((n, d)),
                prop::collection::vec(prop::collection::vec(-2.0f64..2.0, m * n), b),
                prop::collection::vec(any::<bool>(), p),
                prop::collection::vec(prop::collection::vec(0.0f64..3.0, p), b),
                prop::collection::vec(prop::collection::vec(any::<bool>(), p), b),
                0.05f64..0.5,
            )
                .prop_map(|((n, d), states, mask, mags, signs, delta)| {
                    let libraries: Vec<_> = states.iter().map(|s| build_library(n, d, s)).collect();
                    let targets = libraries
                        .iter()
                        .zip(mags.iter().zip(&signs))
                        .map(|(lib, (mg, sg))| {
                            let coef = generator(&mask, mg, sg, delta);
                            apply(lib, &coef, &vec![0.0; lib.n_samples()], 0.0)
                        })
                        .collect();
                    GroupProblem {
                        libraries,
                        targets,
                        support: mask,
                        delta,
                    }
                })
        })
}

/// 2-norm condition number from the eigenvalues of the Gram matrix.
pub fn condition(lib: &LibraryMatrix) -> f64 {
    let a = lib.values();
    let eig = (a.transpose() * a).symmetric_eigenvalues();
    let (lo, hi) = (eig.min(), eig.max());
    if lo <= 0.0 {
        f64::INFINITY
    } else {
        (hi / lo).sqrt()
    }
}

/// Least-squares residual norm on the given columns via the normal equations.
pub fn subset_residual(lib: &LibraryMatrix, y: &[f64], cols: &[usize]) -> f64 {
    let b = DVector::from_column_slice(y);
    if cols.is_empty() {
        return b.norm();
    }
    let a = lib.values().select_columns(cols);
    let gram = a.transpose() * &a;
    let rhs = a.transpose() * &b;
    match gram.lu().solve(&rhs) {
        Some(x) => (&a * x - &b).norm(),
        None => f64::INFINITY,
    }
}

fn subsets(p: usize, k: usize) -> Vec<Vec<usize>> {
    (0u32..1 << p)
        .filter(|mask| mask.count_ones() as usize == k)
        .map(|mask| (0..p).filter(|j| mask & (1 << j) != 0).collect())
        .collect()
}

/// Rerunning on the returned support reproduces the coefficients.
pub fn check_fixed_point(pb: &Problem) -> Result<(), TestCaseError> {
    let cfg = FitConfig::with_threshold(pb.delta);
    let first = stlsq(&pb.library, &pb.targets, &cfg).unwrap();
    let support = first.support();
    if support.is_empty() {
        return Ok(());
    }
    let sub = pb.library.select(&support).unwrap();
    let again = stlsq(&sub, &pb.targets, &cfg).unwrap();
    prop_assert_eq!(again.support().len(), support.len());
    for (k, &j) in support.iter().enumerate() {
        let diff = (again.coefficients()[k] - first.coefficients()[j]).abs();
        prop_assert!(diff <= 1e-12, "term {} moved by {}", j, diff);
    }
    Ok(())
}

/// Nonzero coefficients clear the threshold, and the support never grows.
pub fn check_threshold_floor(pb: &Problem) -> Result<(), TestCaseError> {
    let cfg = FitConfig::with_threshold(pb.delta);
    let (model, trace) = stlsq_traced(&pb.library, &pb.targets, &cfg).unwrap();
    for &c in model.coefficients() {
        prop_assert!(c == 0.0 || c.abs() >= pb.delta);
    }
    for w in trace.supports.windows(2) {
        for (before, after) in w[0].iter().zip(&w[1]) {
            prop_assert!(*before || !*after, "support grew");
        }
    }
    Ok(())
}

/// Group fit on one trajectory equals plain STLSQ.
pub fn check_single_group(pb: &Problem) -> Result<(), TestCaseError> {
    let cfg = FitConfig::with_threshold(pb.delta);
    let plain = stlsq(&pb.library, &pb.targets, &cfg).unwrap();
    let group = group_stlsq(
        std::slice::from_ref(&pb.library),
        std::slice::from_ref(&pb.targets),
        &cfg,
    )
    .unwrap();
    for (a, b) in plain
        .coefficients()
        .iter()
        .zip(group.models[0].coefficients())
    {
        prop_assert!((a - b).abs() <= 1e-12);
    }
    Ok(())
}

/// Noise-free data from an in-library generator give back its support.
pub fn check_exact_recovery(pb: &Problem, gp: &GroupProblem) -> Result<(), TestCaseError> {
    if condition(&pb.library) < 1e6 {
        let cfg = FitConfig::with_threshold(pb.delta);
        let clean = apply(&pb.library, &pb.truth, &vec![0.0; pb.targets.len()], 0.0);
        let m = stlsq(&pb.library, &clean, &cfg).unwrap();
        let want: Vec<usize> = (0..pb.truth.len())
            .filter(|&j| pb.truth[j] != 0.0)
            .collect();
        prop_assert_eq!(m.support(), want);
    }
    if gp.libraries.iter().all(|l| condition(l) < 1e6) {
        let cfg = FitConfig::with_threshold(gp.delta);
        let r = group_stlsq(&gp.libraries, &gp.targets, &cfg).unwrap();
        let want: Vec<usize> = (0..gp.support.len()).filter(|&j| gp.support[j]).collect();
        prop_assert_eq!(r.shared_support, want);
    }
    Ok(())
}

/// The STLSQ support fits within 10% of the best support of equal size.
pub fn check_subset_oracle(pb: &Problem) -> Result<(), TestCaseError> {
    let cfg = FitConfig::with_threshold(pb.delta);
    let m = stlsq(&pb.library, &pb.targets, &cfg).unwrap();
    let support = m.support();
    let ours = subset_residual(&pb.library, &pb.targets, &support);
    let best = subsets(pb.library.n_terms(), support.len())
        .iter()
        .map(|s| subset_residual(&pb.library, &pb.targets, s))
        .fold(f64::INFINITY, f64::min);
    prop_assert!(
        ours <= 1.1 * best + 1e-9,
        "support {:?} residual {} vs best {}",
        support,
        ours,
        best
    );
    Ok(())
}
