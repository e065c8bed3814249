//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criteria 9 (real-data half) and 12 need the real drop CSV; set
//! `DROPFIT_BRIDGE_CSV` or place it at `tests/fixtures/bridge_drops.csv`.

mod common;

use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;

use dropfit::benchmark::{run_benchmark, BenchmarkConfig, TemplateId};
use dropfit::diffsmooth::{
    build_noise_calibration, compute_derivatives, estimate_noise_level, finite_difference,
    reference_trajectory, relative_l2, Scheme, SmootherConfig,
};
use dropfit::io::load_trajectories;
use dropfit::ode::integrate_system;
use dropfit::simulate::{
    brown_lawler_cd, drag_acceleration, simulate_drop, terminal_velocity, SyntheticSet,
    SYNTHETIC_DRAG,
};
use dropfit::sindy::{fit_first_order, fit_second_order, group_fit_second_order, StateVariables};
use dropfit::trajectory::add_gaussian_noise;
use dropfit::{BallSpec, DragModel, FitConfig, FluidSpec, PipelineConfig, Trajectory};
use proptest::test_runner::{Config, RngAlgorithm, TestError, TestRng, TestRunner};

type Outcome = Result<String, String>;

const SEED: u64 = 20240611;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

fn velocity_protocol() -> PipelineConfig {
    PipelineConfig {
        smooth: false,
        degree: 3,
        states: StateVariables::Velocity,
        ..PipelineConfig::default()
    }
}

fn fixture() -> Result<Vec<Trajectory>, String> {
    let path = common::fixture_path();
    if !path.exists() {
        return Err(format!("fixture unavailable: {}", path.display()));
    }
    load_trajectories(&path).map_err(|e| format!("fixture unreadable: {e}"))
}

fn oscillator() -> Outcome {
    let f = |y: &[f64]| {
        let (x3, y3) = (y[0].powi(3), y[1].powi(3));
        vec![-0.1 * x3 + 2.0 * y3, -2.0 * x3 - 0.1 * y3]
    };
    let states = integrate_system(f, &[2.0, 0.0], 0.01, 500, 10);
    let xs: Vec<f64> = states.iter().map(|s| s[0]).collect();
    let ys: Vec<f64> = states.iter().map(|s| s[1]).collect();
    let models = fit_first_order(
        &[&xs, &ys],
        &["x", "y"],
        0.01,
        5,
        &FitConfig::with_threshold(0.05),
    )
    .map_err(|e| e.to_string())?;
    let expected = [
        [("x^3", -0.100), ("y^3", 1.999)],
        [("x^3", -1.999), ("y^3", -0.100)],
    ];
    let mut report = Vec::new();
    for (m, want) in models.iter().zip(&expected) {
        ensure(m.term_count() == 2, format!("spurious terms: {m}"))?;
        for &(name, c) in want {
            let got = m.coefficient_named(name);
            ensure(
                (got - c).abs() <= 0.01,
                format!("{name} = {got:.4}, want {c}"),
            )?;
        }
        report.push(m.equation(3));
    }
    Ok(report.join("; "))
}

fn drag_free() -> Outcome {
    let sim = simulate_drop(
        &DragModel::ConstantAcceleration { g: -9.8 },
        35.0,
        0.0,
        1.0 / 15.0,
        49,
    )
    .map_err(|e| e.to_string())?;
    let m = fit_second_order(
        &sim.trajectory,
        &velocity_protocol(),
        &FitConfig::with_threshold(0.1),
    )
    .map_err(|e| e.to_string())?;
    let alpha = m.coefficient_named("1");
    ensure(m.term_count() == 1, format!("expected one term: {m}"))?;
    ensure((alpha + 9.8).abs() < 5e-3, format!("alpha = {alpha}"))?;
    Ok(m.equation(4))
}

fn linear_drag() -> Outcome {
    let model = DragModel::LinearDrag {
        g: -9.8,
        coefficient: -0.5,
    };
    let sim = simulate_drop(&model, 35.0, 0.0, 1.0 / 15.0, 49).map_err(|e| e.to_string())?;
    let m = fit_second_order(
        &sim.trajectory,
        &velocity_protocol(),
        &FitConfig::with_threshold(0.1),
    )
    .map_err(|e| e.to_string())?;
    let (alpha, beta) = (m.coefficient_named("1"), m.coefficient_named("v"));
    ensure(m.term_count() == 2, format!("expected two terms: {m}"))?;
    ensure((alpha + 9.8).abs() < 0.05, format!("alpha = {alpha}"))?;
    ensure((beta + 0.5).abs() < 0.01, format!("beta = {beta}"))?;
    Ok(m.equation(4))
}

fn group_heatmap() -> Outcome {
    let pipeline = PipelineConfig {
        smoother: SmootherConfig::with_window(35).map_err(|e| e.to_string())?,
        ..PipelineConfig::default()
    };
    let mut report = Vec::new();
    for eta in [0.01, 0.1, 0.5] {
        let set = SyntheticSet {
            eta,
            seed: SEED,
            ..SyntheticSet::default()
        };
        let trajs = set.generate().map_err(|e| e.to_string())?;
        let r = group_fit_second_order(&trajs, &pipeline, &FitConfig::with_threshold(1.5))
            .map_err(|e| e.to_string())?;
        ensure(
            r.shared_support == vec![0, 2],
            format!("eta {eta}: support {:?}", r.shared_support),
        )?;
        let mut worst: f64 = 0.0;
        for (i, m) in r.models.iter().enumerate() {
            let truth = SYNTHETIC_DRAG[i / set.drops_per_ball as usize];
            let err = (m.coefficient_named("v") - truth).abs();
            if eta <= 0.1 {
                let tol = f64::max(0.05, 0.2 * truth.abs());
                ensure(
                    err <= tol,
                    format!("eta {eta}: drop {i} v-coefficient off by {err:.3}"),
                )?;
            }
            worst = worst.max(err);
        }
        report.push(format!("eta {eta}: max |dv| {worst:.3}"));
    }
    Ok(report.join(", "))
}

fn reynolds_learning() -> Outcome {
    let ball = BallSpec::new("tennis", 0.033, 0.0567).map_err(|e| e.to_string())?;
    let model = DragModel::ReynoldsDependent {
        ball,
        fluid: FluidSpec::AIR,
        g: -9.81,
    };
    let sim = simulate_drop(&model, 35.0, 0.0, 1.0 / 15.0, 49).map_err(|e| e.to_string())?;
    let fit = |delta| {
        fit_second_order(
            &sim.trajectory,
            &velocity_protocol(),
            &FitConfig::with_threshold(delta),
        )
        .map_err(|e| e.to_string())
    };
    let coarse = fit(0.1)?;
    let alpha = coarse.coefficient_named("1");
    ensure(coarse.support() == vec![0], format!("delta 0.1: {coarse}"))?;
    ensure(
        (-7.5..=-5.0).contains(&alpha),
        format!("delta 0.1: alpha = {alpha}"),
    )?;
    let fine = fit(0.004)?;
    let c = fine.coefficient_named("1");
    let v2 = fine.coefficient_named("v^2");
    ensure(
        (c + 9.81).abs() <= 0.2,
        format!("delta 0.004: constant = {c}"),
    )?;
    ensure(v2 > 0.0, format!("delta 0.004: v^2 coefficient = {v2}"))?;
    Ok(format!("{}; {}", coarse.equation(3), fine.equation(4)))
}

fn brown_lawler() -> Outcome {
    // algebraically rearranged form of the correlation
    let oracle = |re: f64| 24.0 / re + 3.6 * (-0.319 * re.ln()).exp() + 0.407 * re / (re + 8710.0);
    let (lo, hi) = (1e-2f64.ln(), 2e5f64.ln());
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let re = (lo + (hi - lo) * i as f64 / 99.0).exp();
        let cd = brown_lawler_cd(re).map_err(|e| e.to_string())?;
        worst = worst.max(((cd - oracle(re)) / oracle(re)).abs());
    }
    ensure(worst <= 1e-12, format!("max relative deviation {worst:e}"))?;
    let cd = brown_lawler_cd(1e4).map_err(|e| e.to_string())?;
    ensure((0.35..=0.55).contains(&cd), format!("C_D(1e4) = {cd}"))?;
    Ok(format!("max rel dev {worst:.1e}, C_D(1e4) = {cd:.4}"))
}

fn terminal() -> Outcome {
    let linear = terminal_velocity(&DragModel::LinearDrag {
        g: -9.8,
        coefficient: -0.5,
    })
    .map_err(|e| e.to_string())?;
    ensure(linear == -19.6, format!("linear drag terminal = {linear}"))?;
    let tennis = DragModel::ReynoldsDependent {
        ball: BallSpec::new("tennis", 0.033025, 0.056699).map_err(|e| e.to_string())?,
        fluid: FluidSpec::AIR,
        g: -9.81,
    };
    let v = terminal_velocity(&tennis).map_err(|e| e.to_string())?;
    let residual = drag_acceleration(&tennis, v);
    ensure(
        residual.abs() <= 1e-9,
        format!("residual {residual:e} at v* = {v}"),
    )?;
    Ok(format!(
        "linear {linear}, tennis {v:.4} m/s (residual {residual:.1e})"
    ))
}

fn differentiation() -> Outcome {
    let reference = reference_trajectory().map_err(|e| e.to_string())?;
    let truth: Vec<f64> = reference
        .times()
        .iter()
        .map(|t| -9.8 - 0.5 * (-19.6 * (1.0 - (-0.5 * t).exp())))
        .collect();
    let smoother = SmootherConfig::default();
    let (mut smoothed, mut raw) = (Vec::new(), Vec::new());
    for s in 0..20 {
        let noisy = add_gaussian_noise(&reference, 1.0, SEED + s).map_err(|e| e.to_string())?;
        for (smooth, errs) in [(true, &mut smoothed), (false, &mut raw)] {
            let d = compute_derivatives(&noisy, smoother, smooth).map_err(|e| e.to_string())?;
            errs.push(relative_l2(&d.accelerations, &truth));
        }
    }
    let (es, er) = (median(smoothed), median(raw));
    ensure(es < er, format!("smoothed {es:.3} vs unsmoothed {er:.3}"))?;

    let max_err = |h: f64| {
        let n = (2.0 / h).round() as usize + 1;
        let ys: Vec<f64> = (0..n).map(|i| (i as f64 * h).sin()).collect();
        let d = finite_difference(&ys, h, Scheme::Centered).unwrap();
        d.iter()
            .enumerate()
            .map(|(i, v)| (v - (i as f64 * h).cos()).abs())
            .fold(0.0, f64::max)
    };
    let order = (max_err(0.02) / max_err(0.01)).log2();
    ensure(order >= 1.9, format!("centered order {order:.3}"))?;
    Ok(format!(
        "accel rel error smoothed {es:.3} < unsmoothed {er:.3}; centered order {order:.3}"
    ))
}

fn noise_estimator() -> Outcome {
    let smoother = SmootherConfig::default();
    let grid: Vec<f64> = (0..25)
        .map(|i| (0.005f64.ln() + (1.0f64.ln() - 0.005f64.ln()) * i as f64 / 24.0).exp())
        .collect();
    let cal = build_noise_calibration(&grid, 20, SEED, smoother).map_err(|e| e.to_string())?;
    let reference = reference_trajectory().map_err(|e| e.to_string())?;
    let mut report = Vec::new();
    for eta in [0.03, 0.05, 0.07] {
        let mut est = Vec::new();
        for s in 0..20 {
            let noisy = add_gaussian_noise(&reference, eta, SEED ^ (1000 + s))
                .map_err(|e| e.to_string())?;
            est.push(
                estimate_noise_level(&noisy, smoother, &cal)
                    .map_err(|e| e.to_string())?
                    .eta,
            );
        }
        let m = median(est);
        ensure(
            m >= eta / 1.5 && m <= eta * 1.5,
            format!("injected {eta}: median estimate {m:.4}"),
        )?;
        report.push(format!("{eta} -> {m:.4}"));
    }
    let real = fixture().map_err(|e| format!("synthetic ok ({}); {e}", report.join(", ")))?;
    for t in &real {
        let e = estimate_noise_level(t, smoother, &cal).map_err(|e| e.to_string())?;
        ensure(
            (0.03..=0.07).contains(&e.eta),
            format!(
                "{} drop {}: estimate {:.4}",
                t.ball_id(),
                t.drop_id(),
                e.eta
            ),
        )?;
    }
    Ok(format!(
        "{}; {} real drops in range",
        report.join(", "),
        real.len()
    ))
}

fn benchmark() -> Outcome {
    let set = SyntheticSet {
        eta: 0.1,
        seed: SEED,
        ..SyntheticSet::default()
    };
    let trajs = set.generate().map_err(|e| e.to_string())?;
    let report = run_benchmark(&trajs, &BenchmarkConfig::default()).map_err(|e| e.to_string())?;
    let med = |t| report.median_error(t).unwrap_or(f64::NAN);
    let (t1, t2, t3) = (
        med(TemplateId::T1),
        med(TemplateId::T2),
        med(TemplateId::T3),
    );
    ensure(t2 < t1, format!("median T2 {t2:.3} not below T1 {t1:.3}"))?;

    for c2 in report.cells_for(TemplateId::T2) {
        let c3 = report
            .cells_for(TemplateId::T3)
            .find(|c| c.ball_id == c2.ball_id && c.train_drop == c2.train_drop)
            .ok_or("missing T3 cell")?;
        let x0 = trajs
            .iter()
            .find(|t| t.ball_id() == c2.ball_id && t.drop_id() == c2.test_drop)
            .map(|t| t.heights()[0])
            .ok_or("missing test drop")?;
        let (p2, p3) = match (c2.predicted_height(), c3.predicted_height()) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                return Err(format!(
                    "{} drop {}: no T2/T3 prediction",
                    c2.ball_id, c2.train_drop
                ))
            }
        };
        let (d2, d3) = (x0 - p2, x0 - p3);
        ensure(
            (d2 - d3).abs() <= 0.1 * d2.abs().max(d3.abs()),
            format!(
                "{} drop {}: fall {d2:.2} m vs {d3:.2} m",
                c2.ball_id, c2.train_drop
            ),
        )?;
    }
    let diverged = report
        .cells_for(TemplateId::T4)
        .filter(|c| c.diverged())
        .count();
    ensure(diverged >= 1, "no T4 forecast diverged")?;
    Ok(format!(
        "median error T1 {t1:.3}, T2 {t2:.3}, T3 {t3:.3} m; {diverged} T4 forecasts diverged"
    ))
}

fn properties() -> Outcome {
    let runner = || {
        TestRunner::new_with_rng(
            Config {
                cases: 100,
                failure_persistence: None,
                ..Config::default()
            },
            TestRng::deterministic_rng(RngAlgorithm::ChaCha),
        )
    };
    fn fmt<T: std::fmt::Debug>(name: &str, r: Result<(), TestError<T>>) -> Result<(), String> {
        r.map_err(|e| format!("{name}: {e}"))
    }
    fmt(
        "fixed point",
        runner().run(&common::problem(10, 0.5), |p| common::check_fixed_point(&p)),
    )?;
    fmt(
        "threshold floor",
        runner().run(&common::problem(10, 1.0), |p| {
            common::check_threshold_floor(&p)
        }),
    )?;
    fmt(
        "single group",
        runner().run(&common::problem(10, 0.5), |p| {
            common::check_single_group(&p)
        }),
    )?;
    fmt(
        "exact recovery",
        runner().run(
            &(common::problem(10, 0.0), common::group_problem(10)),
            |(p, g)| common::check_exact_recovery(&p, &g),
        ),
    )?;
    fmt(
        "subset oracle",
        runner().run(&common::problem(8, 0.05), |p| {
            common::check_subset_oracle(&p)
        }),
    )?;
    Ok("5 properties x 100 cases".into())
}

fn table_two() -> Outcome {
    let trajs = fixture()?;
    let pipeline = PipelineConfig {
        smoother: SmootherConfig::with_window(35).map_err(|e| e.to_string())?,
        ..PipelineConfig::default()
    };
    let r = group_fit_second_order(&trajs, &pipeline, &FitConfig::with_threshold(1.5))
        .map_err(|e| e.to_string())?;
    let (mut whiffle, mut other) = (Vec::new(), Vec::new());
    for (t, m) in trajs.iter().zip(&r.models) {
        let c = m.coefficient_named("1");
        ensure(
            m.term_count() == 2,
            format!("{} drop {}: {m}", t.ball_id(), t.drop_id()),
        )?;
        ensure(
            (-10.5..=-6.0).contains(&c),
            format!("{}: constant {c}", t.ball_id()),
        )?;
        let v = m.coefficient_named("v");
        if t.ball_id().to_lowercase().contains("whiffle") {
            whiffle.push(v);
        } else {
            other.push(v);
        }
    }
    let w_max = whiffle.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let o_min = other.iter().copied().fold(f64::INFINITY, f64::min);
    ensure(!whiffle.is_empty(), "no whiffle-ball drops in fixture")?;
    ensure(
        w_max < o_min,
        format!("whiffle max v {w_max:.3} vs others min {o_min:.3}"),
    )?;
    Ok(format!(
        "{} drops, whiffle max v {w_max:.3} < others min {o_min:.3}",
        trajs.len()
    ))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        ("oscillator recovery", oscillator),
        ("drag-free recovery", drag_free),
        ("linear-drag recovery", linear_drag),
        ("group sparsity on synthetic balls", group_heatmap),
        ("Reynolds-dependent learning", reynolds_learning),
        ("Brown-Lawler oracle", brown_lawler),
        ("terminal velocity", terminal),
        ("differentiation study", differentiation),
        ("noise estimator", noise_estimator),
        ("benchmark ordering", benchmark),
        ("property suite", properties),
        ("real-data group fit", table_two),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
