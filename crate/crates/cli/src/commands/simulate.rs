use dropfit::io::write_trajectories;
use dropfit::rng::derive_seed;
use dropfit::simulate::{reference_balls, simulate_drop, SimWarning, SyntheticSet, SYNTHETIC_DRAG};
use dropfit::trajectory::add_gaussian_noise;
use dropfit::{DragModel, FluidSpec, SimResult};

use crate::args::{Format, ModelKind, SimulateArgs};
use crate::error::{CliError, CliResult};
use crate::output::{Manifest, OutputDir};

fn resolve(a: &mut SimulateArgs) {
    a.common.resolve();
    let model = *a.model.get_or_insert(ModelKind::Linear);
    a.g.get_or_insert(if model == ModelKind::Reynolds {
        -9.81
    } else {
        -9.8
    });
    if matches!(model, ModelKind::Linear | ModelKind::Quadratic) {
        a.drag.get_or_insert(-0.5);
    }
    if model == ModelKind::Quadratic {
        a.quad.get_or_insert(-0.02);
    }
    if model == ModelKind::Reynolds {
        a.ball.get_or_insert_with(|| "tennis".into());
    }
    if model == ModelKind::Synthetic {
        a.drops.get_or_insert(2);
    }
    a.x0.get_or_insert(35.0);
    a.v0.get_or_insert(0.0);
    a.rate_hz.get_or_insert(15.0);
    a.steps.get_or_insert(49);
    a.eta.get_or_insert_with(Vec::new);
}

fn drag_model(a: &SimulateArgs) -> CliResult<DragModel> {
    let g = a.g.unwrap_or(-9.8);
    let field = |v: Option<f64>, name: &str| {
        v.ok_or_else(|| CliError::Config(format!("`{name}` is required for this model")))
    };
    Ok(match a.model.unwrap_or(ModelKind::Linear) {
        ModelKind::Constant => DragModel::ConstantAcceleration { g },
        ModelKind::Linear => DragModel::LinearDrag {
            g,
            coefficient: field(a.drag, "drag")?,
        },
        ModelKind::Quadratic => DragModel::QuadraticDrag {
            g,
            lin: field(a.drag, "drag")?,
            quad: field(a.quad, "quad")?,
        },
        ModelKind::Reynolds => {
            let name = a.ball.as_deref().unwrap_or("tennis");
            let ball = reference_balls()
                .into_iter()
                .find(|b| b.label == name)
                .ok_or_else(|| {
                    let known: Vec<_> = reference_balls().into_iter().map(|b| b.label).collect();
                    CliError::Config(format!("ball: unknown `{name}`, expected one of {known:?}"))
                })?;
            DragModel::ReynoldsDependent {
                ball,
                fluid: FluidSpec::AIR,
                g,
            }
        }
        ModelKind::Synthetic => unreachable!("synthetic sets are not a single model"),
    })
}

fn check(a: &SimulateArgs) -> CliResult<()> {
    let rate = a.rate_hz.unwrap_or(15.0);
    if !(rate > 0.0) || !rate.is_finite() {
        return Err(CliError::Config(format!(
            "rate_hz: must be positive, got {rate}"
        )));
    }
    if let Some(e) = a.eta.iter().flatten().find(|e| !(**e >= 0.0)) {
        return Err(CliError::Config(format!(
            "eta: noise levels must be non-negative, got {e}"
        )));
    }
    Ok(())
}

pub fn run(mut a: SimulateArgs) -> CliResult<Manifest> {
    resolve(&mut a);
    check(&a)?;
    let mut out = OutputDir::create(a.common.out_dir())?;
    let seed = a.common.seed();
    let dt = 1.0 / a.rate_hz.unwrap_or(15.0);
    let steps = a.steps.unwrap_or(49);
    let etas = a.eta.clone().unwrap_or_default();
    let json = a.common.format() == Format::Json;

    if a.model == Some(ModelKind::Synthetic) {
        let base = SyntheticSet {
            drag_coefficients: SYNTHETIC_DRAG.to_vec(),
            g: a.g.unwrap_or(-9.8),
            x0: a.x0.unwrap_or(35.0),
            rate_hz: a.rate_hz.unwrap_or(15.0),
            n_samples: steps + 1,
            drops_per_ball: a.drops.unwrap_or(2),
            eta: 0.0,
            seed,
        };
        let clean = base.generate()?;
        write_set(&mut out, "synthetic", &clean, json)?;
        println!(
            "synthetic set: {} drops of {} samples",
            clean.len(),
            steps + 1
        );
        for (i, &eta) in etas.iter().enumerate() {
            let set = SyntheticSet {
                eta,
                seed: derive_seed(seed, i as u64),
                ..base.clone()
            };
            write_set(
                &mut out,
                &format!("synthetic_eta{eta}"),
                &set.generate()?,
                json,
            )?;
        }
        return out.finish("simulate", &a);
    }

    let model = drag_model(&a)?;
    let label = match &model {
        DragModel::ReynoldsDependent { ball, .. } => ball.label.clone(),
        _ => "sim".to_string(),
    };
    let sim = simulate_drop(&model, a.x0.unwrap_or(35.0), a.v0.unwrap_or(0.0), dt, steps)?
        .relabel(&label, 1)?;
    for w in &sim.warnings {
        match w {
            SimWarning::DragCrisis { max_reynolds } => out.warn(format!(
                "drag crisis: Reynolds number reached {max_reynolds:.3e}; drag coefficient clamped"
            )),
        }
    }
    write_sim(&mut out, "trajectory", &sim, json)?;
    println!(
        "{label}: {} samples, final height {:.3} m",
        sim.trajectory.len(),
        sim.trajectory.heights().last().copied().unwrap_or(f64::NAN)
    );
    for (i, &eta) in etas.iter().enumerate() {
        let noisy = add_gaussian_noise(&sim.trajectory, eta, derive_seed(seed, i as u64))?;
        write_set(&mut out, &format!("trajectory_eta{eta}"), &[noisy], json)?;
    }
    out.finish("simulate", &a)
}

fn write_set(
    out: &mut OutputDir,
    stem: &str,
    trajs: &[dropfit::Trajectory],
    json: bool,
) -> CliResult<()> {
    if json {
        out.write_json(&format!("{stem}.json"), &trajs)?;
    } else {
        out.write_with(&format!("{stem}.csv"), |w| {
            Ok(write_trajectories(w, trajs)?)
        })?;
    }
    Ok(())
}

fn write_sim(out: &mut OutputDir, stem: &str, sim: &SimResult, json: bool) -> CliResult<()> {
    if json {
        out.write_json(&format!("{stem}.json"), sim)?;
    } else {
        out.write_with(&format!("{stem}.csv"), |w| Ok(sim.write_csv(w)?))?;
    }
    Ok(())
}
