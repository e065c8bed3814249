use std::collections::BTreeMap;
use std::path::Path;

use crate::args::PlotArgs;
use crate::commands::load_input;
use crate::error::{CliError, CliResult};
use crate::output::{Manifest, OutputDir};
use crate::svg::{Heatmap, LineChart, Series};

pub const CHARTS: [&str; 4] = ["trajectory", "loglog", "error", "heatmap"];

fn file_stem(ball: &str) -> String {
    ball.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

pub fn run(mut a: PlotArgs) -> CliResult<Manifest> {
    a.common.resolve();
    let chart = a.chart.get_or_insert_with(|| "trajectory".into()).clone();
    if !CHARTS.contains(&chart.as_str()) {
        return Err(CliError::Config(format!(
            "chart: unknown chart {chart:?}, expected one of {}",
            CHARTS.join(", ")
        )));
    }
    let input = a.common.input()?.to_path_buf();
    let mut out = OutputDir::create(a.common.out_dir())?;
    let written = match chart.as_str() {
        "trajectory" => trajectories(&mut out, &a)?,
        "loglog" => loglog(&mut out, &a)?,
        "error" => errors(&mut out, &input)?,
        _ => heatmap(&mut out, &input)?,
    };
    for name in &written {
        println!("wrote {}", out.path(name).display());
    }
    out.finish("plot", &a)
}

fn write_svg(out: &mut OutputDir, name: String, svg: String) -> CliResult<String> {
    out.write_text(&name, &svg)?;
    Ok(name)
}

fn trajectories(out: &mut OutputDir, a: &PlotArgs) -> CliResult<Vec<String>> {
    let mut by_ball: BTreeMap<String, Vec<Series>> = BTreeMap::new();
    for t in load_input(&a.common)? {
        let points = t
            .times()
            .iter()
            .copied()
            .zip(t.heights().iter().copied())
            .collect();
        by_ball
            .entry(t.ball_id().to_string())
            .or_default()
            .push(Series::new(format!("drop {}", t.drop_id()), points));
    }
    by_ball
        .into_iter()
        .map(|(ball, series)| {
            let chart = LineChart {
                title: format!("{ball} drops"),
                x_label: "time (s)".into(),
                y_label: "height (m)".into(),
                log_x: false,
                log_y: false,
                series,
            };
            write_svg(
                out,
                format!("trajectory_{}.svg", file_stem(&ball)),
                chart.render(),
            )
        })
        .collect()
}

/// Displacement from the first sample against time on log axes, with
/// unit-slope and slope-two guides anchored at the data's first point.
fn loglog(out: &mut OutputDir, a: &PlotArgs) -> CliResult<Vec<String>> {
    let mut series = Vec::new();
    let (mut t_lo, mut t_hi, mut anchor) = (f64::INFINITY, 0.0f64, None);
    for t in load_input(&a.common)? {
        let (t0, x0) = (t.times()[0], t.heights()[0]);
        let points: Vec<(f64, f64)> = t
            .times()
            .iter()
            .zip(t.heights())
            .map(|(&s, &x)| (s - t0, x0 - x))
            .filter(|&(s, d)| s > 0.0 && d > 0.0)
            .collect();
        if let (Some(&first), Some(&last)) = (points.first(), points.last()) {
            t_lo = t_lo.min(first.0);
            t_hi = t_hi.max(last.0);
            anchor.get_or_insert(first);
        }
        series.push(Series::new(
            format!("{} drop {}", t.ball_id(), t.drop_id()),
            points,
        ));
    }
    if let Some((ta, da)) = anchor {
        for p in [1.0, 2.0] {
            let line = [t_lo, t_hi]
                .iter()
                .map(|&s| (s, da * (s / ta).powf(p)))
                .collect();
            series.push(Series::new(format!("slope {p}"), line).dashed());
        }
    }
    let chart = LineChart {
        title: "displacement".into(),
        x_label: "time since release (s)".into(),
        y_label: "x0 - x (m)".into(),
        log_x: true,
        log_y: true,
        series,
    };
    Ok(vec![write_svg(out, "loglog.svg".into(), chart.render())?])
}

fn read_csv(path: &Path) -> CliResult<(csv::StringRecord, Vec<csv::StringRecord>)> {
    let mut rdr = csv::Reader::from_path(path)?;
    let header = rdr.headers()?.clone();
    let rows = rdr.records().collect::<Result<Vec<_>, _>>()?;
    Ok((header, rows))
}

fn column(header: &csv::StringRecord, name: &str, path: &Path) -> CliResult<usize> {
    header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| CliError::format(path, format!("missing column {name:?}")))
}

fn number(field: &str, path: &Path) -> CliResult<f64> {
    field
        .parse()
        .map_err(|_| CliError::format(path, format!("not a number: {field:?}")))
}

/// Forecast error curves from a benchmark `errors.csv`, one chart per ball.
fn errors(out: &mut OutputDir, path: &Path) -> CliResult<Vec<String>> {
    let (header, rows) = read_csv(path)?;
    let [ball, train, template, time, err, base] = [
        "ball_id",
        "train_drop",
        "template",
        "time_s",
        "abs_error_m",
        "baseline_m",
    ]
    .map(|c| column(&header, c, path));
    let (ball, train, template, time, err, base) = (ball?, train?, template?, time?, err?, base?);

    type Curves = BTreeMap<String, Vec<(f64, f64)>>;
    let mut by_ball: BTreeMap<String, (Curves, Curves)> = BTreeMap::new();
    for r in &rows {
        let entry = by_ball.entry(r[ball].to_string()).or_default();
        let t = number(&r[time], path)?;
        let key = format!("{} train {}", &r[template], &r[train]);
        if !r[err].is_empty() {
            entry
                .0
                .entry(key.clone())
                .or_default()
                .push((t, number(&r[err], path)?));
        }
        entry
            .1
            .entry(format!("baseline train {}", &r[train]))
            .or_default()
            .push((t, number(&r[base], path)?));
    }
    by_ball
        .into_iter()
        .map(|(b, (curves, baselines))| {
            let mut series: Vec<Series> =
                curves.into_iter().map(|(k, p)| Series::new(k, p)).collect();
            if let Some((k, p)) = baselines.into_iter().next() {
                series.push(Series::new(k, p).dashed());
            }
            let chart = LineChart {
                title: format!("{b} forecast error"),
                x_label: "time (s)".into(),
                y_label: "|error| (m)".into(),
                log_x: false,
                log_y: true,
                series,
            };
            write_svg(out, format!("error_{}.svg", file_stem(&b)), chart.render())
        })
        .collect()
}

/// Coefficient-magnitude table from a fit `heatmap.csv`.
fn heatmap(out: &mut OutputDir, path: &Path) -> CliResult<Vec<String>> {
    let (header, rows) = read_csv(path)?;
    if header.get(0) != Some("term") {
        return Err(CliError::format(path, "first column must be \"term\""));
    }
    let values = rows
        .iter()
        .map(|r| r.iter().skip(1).map(|f| number(f, path)).collect())
        .collect::<CliResult<Vec<Vec<f64>>>>()?;
    let map = Heatmap {
        title: "coefficient magnitude".into(),
        row_labels: rows.iter().map(|r| r[0].to_string()).collect(),
        col_labels: header.iter().skip(1).map(str::to_string).collect(),
        values,
    };
    Ok(vec![write_svg(out, "heatmap.svg".into(), map.render())?])
}
