//! Worked examples that cross module boundaries.

mod common;

use dropfit::benchmark::{
    fit_template, initial_conditions, long_forecast, BenchmarkConfig, TemplateId,
};
use dropfit::diffsmooth::{
    build_noise_calibration, compute_derivatives, estimate_noise_level, finite_difference,
    reference_trajectory, relative_l2, savgol_smooth, Scheme, SmootherConfig,
};
use dropfit::library::{evaluate_library, polynomial_terms, state_matrix};
use dropfit::simulate::{simulate_drop, terminal_velocity, SyntheticSet, SYNTHETIC_DRAG};
use dropfit::sindy::{fit_second_order, group_fit_second_order, stlsq, FitWarning, StateVariables};
use dropfit::trajectory::add_gaussian_noise;
use dropfit::{BallSpec, DragModel, Error, FitConfig, FluidSpec, PipelineConfig, Trajectory};

fn linear_drop() -> Trajectory {
    let model = DragModel::LinearDrag {
        g: -9.8,
        coefficient: -0.5,
    };
    simulate_drop(&model, 35.0, 0.0, 1.0 / 15.0, 49)
        .unwrap()
        .trajectory
}

fn reynolds_drop(label: &str, radius: f64, mass: f64, n_steps: usize) -> Trajectory {
    let model = DragModel::ReynoldsDependent {
        ball: BallSpec::new(label, radius, mass).unwrap(),
        fluid: FluidSpec::AIR,
        g: -9.81,
    };
    simulate_drop(&model, 40.0, 0.0, 1.0 / 15.0, n_steps)
        .unwrap()
        .trajectory
}

#[test]
fn smoothing_moves_noisy_heights_towards_truth() {
    let clean = reference_trajectory().unwrap();
    for seed in 0..10 {
        let noisy = add_gaussian_noise(&clean, 1.0, seed).unwrap();
        let smoothed = savgol_smooth(&noisy, SmootherConfig::default()).unwrap();
        assert!(
            relative_l2(smoothed.heights(), clean.heights())
                < relative_l2(noisy.heights(), clean.heights())
        );
    }
}

#[test]
fn centered_difference_is_second_order() {
    let err = |h: f64| {
        let ys: Vec<f64> = (0..=(3.0 / h) as usize)
            .map(|i| (i as f64 * h).sin())
            .collect();
        finite_difference(&ys, h, Scheme::Centered)
            .unwrap()
            .iter()
            .enumerate()
            .map(|(i, d)| (d - (i as f64 * h).cos()).abs())
            .fold(0.0, f64::max)
    };
    let ratio = err(0.02) / err(0.01);
    assert!((ratio - 4.0).abs() < 0.2, "ratio {ratio}");
}

#[test]
fn raw_accelerations_of_linear_drag() {
    let traj = linear_drop();
    let d = compute_derivatives(&traj, SmootherConfig::default(), false).unwrap();
    let n = d.len();
    for (i, (&t, &a)) in d.times.iter().zip(&d.accelerations).enumerate() {
        let v = -19.6 * (1.0 - (-0.5 * t).exp());
        let err = (a - (-9.8 - 0.5 * v)).abs();
        if (3..n - 3).contains(&i) {
            assert!(err < 0.1, "sample {i}: {err}");
        } else {
            assert!(err < 0.5, "boundary sample {i}: {err}");
        }
    }
}

#[test]
fn noise_level_of_a_synthetic_drop() {
    let smoother = SmootherConfig::default();
    let grid: Vec<f64> = (0..13).map(|i| 0.005 * 1.5f64.powi(i)).collect();
    let cal = build_noise_calibration(&grid, 20, 11, smoother).unwrap();
    let noisy = add_gaussian_noise(&reference_trajectory().unwrap(), 0.05, 3).unwrap();
    let est = estimate_noise_level(&noisy, smoother, &cal).unwrap();
    assert!((0.033..=0.075).contains(&est.eta), "estimate {}", est.eta);
}

#[test]
fn free_fall_on_height_velocity_library() {
    let sim = simulate_drop(
        &DragModel::ConstantAcceleration { g: -9.8 },
        35.0,
        0.0,
        1.0 / 15.0,
        49,
    )
    .unwrap();
    let m = fit_second_order(
        &sim.trajectory,
        &PipelineConfig::default(),
        &FitConfig::with_threshold(0.1),
    )
    .unwrap();
    assert_eq!(m.support(), vec![0]);
    assert!((m.coefficient_named("1") + 9.8).abs() < 1e-3);
}

#[test]
fn linear_drag_on_velocity_library() {
    let pipeline = PipelineConfig {
        smooth: false,
        states: StateVariables::Velocity,
        ..PipelineConfig::default()
    };
    let m = fit_second_order(&linear_drop(), &pipeline, &FitConfig::with_threshold(0.1)).unwrap();
    assert_eq!(m.support(), vec![0, 1]);
    assert!((m.coefficient_named("1") + 9.786).abs() < 0.05);
    assert!((m.coefficient_named("v") + 0.499).abs() < 0.05);
}

#[test]
fn five_samples_three_terms_match_best_subset() {
    let x = [-1.0, -0.5, 0.2, 0.9, 1.4];
    let states = state_matrix(&[&x]).unwrap();
    let lib = evaluate_library(&states, &polynomial_terms(1, 2).unwrap()).unwrap();
    let y: Vec<f64> = x.iter().map(|x| 1.5 - 2.0 * x * x).collect();
    let m = stlsq(&lib, &y, &FitConfig::with_threshold(0.5)).unwrap();
    // every support of the same size fits worse than the one returned
    let ours = common::subset_residual(&lib, &y, &m.support());
    for cols in [vec![0, 1], vec![1, 2]] {
        assert!(ours < common::subset_residual(&lib, &y, &cols));
    }
    assert_eq!(m.support(), vec![0, 2]);
    assert!((m.coefficients()[0] - 1.5).abs() < 1e-12);
    assert!((m.coefficients()[2] + 2.0).abs() < 1e-12);
}

#[test]
fn large_threshold_prunes_everything() {
    let tennis = reynolds_drop("tennis", 0.033, 0.0567, 49);
    let m = fit_second_order(
        &tennis,
        &PipelineConfig::default(),
        &FitConfig::with_threshold(10.0),
    )
    .unwrap();
    assert!(m.is_empty_model());
    assert!(m.warnings().contains(&FitWarning::EmptyModel));
    assert_eq!(m.to_string(), "v' = 0");
}

#[test]
fn group_fit_at_moderate_noise() {
    let set = SyntheticSet {
        eta: 0.1,
        seed: 5,
        ..SyntheticSet::default()
    };
    let r = group_fit_second_order(
        &set.generate().unwrap(),
        &PipelineConfig::default(),
        &FitConfig::with_threshold(1.5),
    )
    .unwrap();
    assert_eq!(r.shared_support, vec![0, 2]);
    for (i, m) in r.models.iter().enumerate() {
        let truth = SYNTHETIC_DRAG[i / 2];
        let tol = f64::max(0.05, 0.2 * truth.abs());
        assert!(
            (m.coefficient_named("v") - truth).abs() < tol,
            "drop {i}: {m}"
        );
        // a 35-sample cubic window at 15 Hz shrinks every acceleration by ~6%
        assert!(
            (m.coefficient_named("1") + 9.8).abs() < 0.8,
            "drop {i}: {m}"
        );
    }
}

#[test]
fn group_fit_on_exact_states() {
    let (mut libs, mut targets) = (Vec::new(), Vec::new());
    for &d in &SYNTHETIC_DRAG {
        let model = DragModel::LinearDrag {
            g: -9.8,
            coefficient: d,
        };
        let sim = simulate_drop(&model, 35.0, 0.0, 1.0 / 15.0, 59).unwrap();
        let states = state_matrix(&[sim.trajectory.heights(), &sim.velocities]).unwrap();
        libs.push(evaluate_library(&states, &polynomial_terms(2, 3).unwrap()).unwrap());
        targets.push(
            sim.velocities
                .iter()
                .map(|&v| -9.8 + d * v)
                .collect::<Vec<_>>(),
        );
    }
    let r = dropfit::sindy::group_stlsq(&libs, &targets, &FitConfig::with_threshold(1.5)).unwrap();
    assert_eq!(r.shared_support, vec![0, 2]);
    for (m, &d) in r.models.iter().zip(&SYNTHETIC_DRAG) {
        assert!((m.coefficients()[0] + 9.8).abs() < 1e-3);
        assert!((m.coefficients()[2] - d).abs() < 1e-3);
    }
}

#[test]
fn overfit_cubic_diverges_on_golf_ball() {
    let golf = reynolds_drop("golf", 0.022, 0.0454, 49);
    let noisy = add_gaussian_noise(&golf, 0.1, 2).unwrap();
    let cfg = BenchmarkConfig::default();
    let t4 = fit_template(&noisy, TemplateId::T4, &cfg).unwrap();
    let (x0, v0) = initial_conditions(&noisy, &cfg).unwrap();
    let f = long_forecast(&t4, x0, v0, 15.0, 1.0 / 15.0).unwrap();
    assert!(t4.term_count() > 3, "{t4}");
    assert!(f.diverged, "{t4}");
    assert!(f.times.last().unwrap() < &15.0);
}

#[test]
fn terminal_velocities() {
    let weak = DragModel::LinearDrag {
        g: -9.8,
        coefficient: -0.1,
    };
    assert!((terminal_velocity(&weak).unwrap() + 98.0).abs() < 1e-12);
    assert!(terminal_velocity(&DragModel::ConstantAcceleration { g: -9.8 }).is_err());
    let quad = DragModel::QuadraticDrag {
        g: -9.8,
        lin: 0.0,
        quad: -0.2,
    };
    assert!((terminal_velocity(&quad).unwrap() + 7.0).abs() < 1e-9);
}

#[test]
fn short_drop_is_rejected_by_smoother() {
    let traj = Trajectory::uniform("b", 1, 0.0, 0.1, vec![1.0; 34]).unwrap();
    assert!(matches!(
        savgol_smooth(&traj, SmootherConfig::default()),
        Err(Error::Config(_))
    ));
}
