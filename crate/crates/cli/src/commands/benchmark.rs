use dropfit::benchmark::{
    error_vs_time, run_benchmark, BenchmarkConfig, BenchmarkReport, TemplateId,
};
use dropfit::simulate::SyntheticSet;
use dropfit::Trajectory;

use crate::args::{BenchmarkArgs, Format};
use crate::commands::load_input;
use crate::error::{CliError, CliResult};
use crate::output::{Manifest, OutputDir};

fn resolve(a: &mut BenchmarkArgs) {
    a.common.resolve();
    a.pipeline.resolve();
    if a.common.input.is_none() {
        a.eta.get_or_insert_with(|| vec![0.1]);
        a.samples.get_or_insert(60);
    }
    a.horizon_s.get_or_insert(2.8);
    a.long_horizon_s.get_or_insert(15.0);
    a.t4_threshold.get_or_insert(0.005);
}

fn inputs(a: &BenchmarkArgs) -> CliResult<Vec<Trajectory>> {
    if a.common.input.is_some() {
        return load_input(&a.common);
    }
    let eta = match a.eta.as_deref() {
        Some([eta]) => *eta,
        _ => {
            return Err(CliError::Config(
                "eta: benchmark takes a single noise level".into(),
            ))
        }
    };
    let set = SyntheticSet {
        eta,
        seed: a.common.seed(),
        n_samples: a.samples.unwrap_or(60),
        ..SyntheticSet::default()
    };
    Ok(set.generate()?)
}

pub fn run(mut a: BenchmarkArgs) -> CliResult<Manifest> {
    resolve(&mut a);
    let trajs = inputs(&a)?;
    let cfg = BenchmarkConfig {
        pipeline: a.pipeline.pipeline()?,
        horizon_s: a.horizon_s.unwrap_or(2.8),
        long_horizon_s: a.long_horizon_s.unwrap_or(15.0),
        t4_threshold: a.t4_threshold.unwrap_or(0.005),
        ..BenchmarkConfig::default()
    };
    let report = run_benchmark(&trajs, &cfg)?;
    let mut out = OutputDir::create(a.common.out_dir())?;

    for m in &report.missing {
        out.warn(format!("missing cells: {m}"));
    }
    for c in &report.cells {
        let label = format!("{} drop {} {}", c.ball_id, c.train_drop, c.template);
        if let Some(e) = &c.error {
            out.warn(format!("{label}: {e}"));
        }
        if c.diverged() {
            out.warn(format!("{label}: long forecast diverged"));
        }
    }
    for t in TemplateId::ALL {
        match report.median_error(t) {
            Some(e) => println!("{t}: median error at {} s = {e:.4} m", cfg.horizon_s),
            None => println!("{t}: no cells"),
        }
    }

    match a.common.format() {
        Format::Json => {
            out.write_json("report.json", &report)?;
        }
        Format::Csv => {
            out.write_with("report.csv", |w| Ok(report.write_csv(w)?))?;
        }
    }
    write_forecasts(&mut out, &report)?;
    write_error_curves(&mut out, &report, &trajs, &cfg)?;
    out.finish("benchmark", &a)
}

fn write_forecasts(out: &mut OutputDir, report: &BenchmarkReport) -> CliResult<()> {
    out.write_with("forecasts.csv", |w| {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record([
            "ball_id",
            "train_drop",
            "template",
            "time_s",
            "height_m",
            "diverged",
        ])?;
        for c in &report.cells {
            let Some(f) = &c.forecast else { continue };
            for (t, h) in f.times.iter().zip(&f.heights) {
                csv.write_record([
                    c.ball_id.clone(),
                    c.train_drop.to_string(),
                    c.template.to_string(),
                    t.to_string(),
                    h.to_string(),
                    f.diverged.to_string(),
                ])?;
            }
        }
        Ok(csv.flush().map_err(csv::Error::from)?)
    })?;
    Ok(())
}

/// Per-sample forecast error of each cell's model on its test drop.
fn write_error_curves(
    out: &mut OutputDir,
    report: &BenchmarkReport,
    trajs: &[Trajectory],
    cfg: &BenchmarkConfig,
) -> CliResult<()> {
    let mut rows = Vec::new();
    for c in &report.cells {
        let Some(model) = &c.model else { continue };
        let Some(test) = trajs
            .iter()
            .find(|t| t.ball_id() == c.ball_id && t.drop_id() == c.test_drop)
        else {
            continue;
        };
        let curve = error_vs_time(model, test, cfg)?;
        for (i, t) in curve.times.iter().enumerate() {
            rows.push([
                c.ball_id.clone(),
                c.train_drop.to_string(),
                c.template.to_string(),
                t.to_string(),
                curve
                    .errors
                    .get(i)
                    .map(|e| e.to_string())
                    .unwrap_or_default(),
                curve.baseline[i].to_string(),
            ]);
        }
    }
    out.write_with("errors.csv", |w| {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record([
            "ball_id",
            "train_drop",
            "template",
            "time_s",
            "abs_error_m",
            "baseline_m",
        ])?;
        for r in &rows {
            csv.write_record(r)?;
        }
        Ok(csv.flush().map_err(csv::Error::from)?)
    })?;
    Ok(())
}
