use dropfit::sindy::{fit_second_order, group_fit_second_order, Salience};
use dropfit::{FitConfig, SparseModel, Trajectory};
use serde::Serialize;

use crate::args::{FitArgs, Format};
use crate::commands::{load_input, trajectory_label, write_heatmap};
use crate::error::CliResult;
use crate::output::{Manifest, OutputDir};

#[derive(Serialize)]
struct FittedModel<'a> {
    ball_id: &'a str,
    drop_id: u32,
    model: &'a SparseModel,
}

pub fn fit_config(
    delta: f64,
    salience: Option<Salience>,
    max_iterations: Option<usize>,
) -> FitConfig {
    let base = FitConfig::with_threshold(delta);
    FitConfig {
        salience: salience.unwrap_or(base.salience),
        max_iterations: max_iterations.unwrap_or(base.max_iterations),
        ..base
    }
}

pub fn run(mut a: FitArgs) -> CliResult<Manifest> {
    a.common.resolve();
    a.pipeline.resolve();
    a.mode.grouped.get_or_insert(false);
    a.delta.get_or_insert(0.1);
    a.salience.get_or_insert(Salience::L1);
    a.max_iterations.get_or_insert(20);

    let trajs = load_input(&a.common)?;
    let pipeline = a.pipeline.pipeline()?;
    let cfg = fit_config(a.delta.unwrap_or(0.1), a.salience, a.max_iterations);
    cfg.validate()?;
    let mut out = OutputDir::create(a.common.out_dir())?;

    let models: Vec<SparseModel> = if a.mode.is_group() {
        let r = group_fit_second_order(&trajs, &pipeline, &cfg)?;
        let names: Vec<_> = r
            .shared_support
            .iter()
            .map(|&j| r.models[0].terms()[j].name.clone())
            .collect();
        println!("shared support: {{{}}}", names.join(", "));
        r.models
    } else {
        trajs
            .iter()
            .map(|t| fit_second_order(t, &pipeline, &cfg))
            .collect::<dropfit::Result<_>>()?
    };

    let mut equations = String::new();
    for (t, m) in trajs.iter().zip(&models) {
        let line = format!("{}: {m}", trajectory_label(t));
        println!("{line}");
        equations.push_str(&line);
        equations.push('\n');
        for w in m.warnings() {
            out.warn(format!("{}: {w}", trajectory_label(t)));
        }
    }
    out.write_text("equations.txt", &equations)?;
    write_models(&mut out, &trajs, &models, a.common.format())?;
    write_heatmap(&mut out, "heatmap.csv", &trajs, &models)?;
    out.finish("fit", &a)
}

fn write_models(
    out: &mut OutputDir,
    trajs: &[Trajectory],
    models: &[SparseModel],
    format: Format,
) -> CliResult<()> {
    match format {
        Format::Json => {
            let rows: Vec<_> = trajs
                .iter()
                .zip(models)
                .map(|(t, m)| FittedModel {
                    ball_id: t.ball_id(),
                    drop_id: t.drop_id(),
                    model: m,
                })
                .collect();
            out.write_json("models.json", &rows)?;
        }
        Format::Csv => {
            out.write_with("coefficients.csv", |w| {
                let mut csv = csv::Writer::from_writer(w);
                csv.write_record(["ball_id", "drop_id", "term", "coefficient"])?;
                for (t, m) in trajs.iter().zip(models) {
                    for (term, c) in m.terms().iter().zip(m.coefficients()) {
                        csv.write_record([
                            t.ball_id().to_string(),
                            t.drop_id().to_string(),
                            term.name.clone(),
                            c.to_string(),
                        ])?;
                    }
                }
                Ok(csv.flush().map_err(csv::Error::from)?)
            })?;
        }
    }
    Ok(())
}
