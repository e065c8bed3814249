use dropfit::sindy::{sparsity_sweep, Salience, SweepMode};
use serde::Serialize;

use crate::args::{Format, SweepArgs};
use crate::commands::fit::fit_config;
use crate::commands::load_input;
use crate::error::{CliError, CliResult};
use crate::output::{Manifest, OutputDir};

/// Default thresholds for independent fits.
pub const PLAIN_GRID: [f64; 7] = [10.0, 2.0, 0.1, 0.005, 0.0045, 0.0035, 0.002];
/// Default thresholds for group fits.
pub const GROUP_GRID: [f64; 10] = [70.0, 65.0, 2.0, 0.2, 0.14, 0.1, 0.05, 0.02, 0.01, 0.005];

#[derive(Serialize)]
struct Row {
    delta: f64,
    ball_id: String,
    drop_id: u32,
    equation: String,
    term_count: Option<usize>,
    error: Option<String>,
}

pub fn run(mut a: SweepArgs) -> CliResult<Manifest> {
    a.common.resolve();
    a.pipeline.resolve();
    let group = *a.mode.grouped.get_or_insert(false);
    a.deltas.get_or_insert_with(|| {
        if group {
            GROUP_GRID.to_vec()
        } else {
            PLAIN_GRID.to_vec()
        }
    });
    a.salience.get_or_insert(Salience::L1);
    let deltas = a.deltas.clone().unwrap_or_default();
    if deltas.is_empty() {
        return Err(CliError::Config("deltas: threshold grid is empty".into()));
    }
    if let Some(d) = deltas.iter().find(|d| !(**d > 0.0) || !d.is_finite()) {
        return Err(CliError::Config(format!(
            "deltas: thresholds must be positive, got {d}"
        )));
    }

    let trajs = load_input(&a.common)?;
    let pipeline = a.pipeline.pipeline()?;
    let mode = if group {
        SweepMode::Group
    } else {
        SweepMode::Plain
    };
    let entries = sparsity_sweep(
        &trajs,
        &deltas,
        mode,
        &pipeline,
        &fit_config(1.0, a.salience, None),
    )?;
    let mut out = OutputDir::create(a.common.out_dir())?;

    let mut rows = Vec::new();
    for e in &entries {
        match &e.outcome {
            Ok(models) => {
                for (t, m) in trajs.iter().zip(models) {
                    rows.push(Row {
                        delta: e.delta,
                        ball_id: t.ball_id().into(),
                        drop_id: t.drop_id(),
                        equation: m.equation(4),
                        term_count: Some(m.term_count()),
                        error: None,
                    });
                }
            }
            Err(err) => {
                out.warn(format!("delta {}: {err}", e.delta));
                rows.push(Row {
                    delta: e.delta,
                    ball_id: String::new(),
                    drop_id: 0,
                    equation: String::new(),
                    term_count: None,
                    error: Some(err.to_string()),
                });
            }
        }
    }
    for r in &rows {
        if r.error.is_none() {
            println!(
                "delta {:<8} {} drop {}: {}",
                r.delta, r.ball_id, r.drop_id, r.equation
            );
        }
    }
    match a.common.format() {
        Format::Json => {
            out.write_json("sweep.json", &rows)?;
        }
        Format::Csv => {
            out.write_with("sweep.csv", |w| {
                let mut csv = csv::Writer::from_writer(w);
                for r in &rows {
                    csv.serialize(r)?;
                }
                Ok(csv.flush().map_err(csv::Error::from)?)
            })?;
        }
    }
    out.finish("sweep", &a)
}
