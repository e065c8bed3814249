use std::path::{Path, PathBuf};

use dropfit::diffsmooth::{
    build_noise_calibration, default_noise_grid, estimate_noise_level, NoiseCalibration,
    SmootherConfig,
};
use serde::{Deserialize, Serialize};

use crate::args::{Format, NoiseArgs};
use crate::commands::{load_input, trajectory_label};
use crate::error::{CliError, CliResult};
use crate::output::{write_atomic, Manifest, OutputDir};

/// Everything a cached calibration depends on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheKey {
    pub window_length: usize,
    pub poly_order: usize,
    pub replicates: usize,
    pub seed: u64,
    pub grid: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CacheFile {
    key: CacheKey,
    calibration: NoiseCalibration,
}

/// Returns the cached calibration when its key matches, otherwise builds
/// and stores a fresh one. The flag is true when the cache was reused.
pub fn load_or_build(path: &Path, key: &CacheKey) -> CliResult<(NoiseCalibration, bool)> {
    if let Ok(text) = std::fs::read_to_string(path) {
        if let Ok(cached) = serde_json::from_str::<CacheFile>(&text) {
            if &cached.key == key {
                return Ok((cached.calibration, true));
            }
        }
    }
    let smoother = SmootherConfig::new(key.window_length, key.poly_order)?;
    let calibration = build_noise_calibration(&key.grid, key.replicates, key.seed, smoother)?;
    let file = CacheFile {
        key: key.clone(),
        calibration,
    };
    if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    write_atomic(path, |w| {
        serde_json::to_writer_pretty(w, &file).map_err(|e| CliError::format(path, e))
    })?;
    Ok((file.calibration, false))
}

#[derive(Serialize)]
struct Row {
    ball_id: String,
    drop_id: u32,
    eta: Option<f64>,
    relative_difference: Option<f64>,
    below_range: Option<bool>,
    error: Option<String>,
}

pub fn run(mut a: NoiseArgs) -> CliResult<Manifest> {
    a.common.resolve();
    a.window.get_or_insert(35);
    a.replicates.get_or_insert(20);
    let cache: PathBuf = a
        .cache
        .get_or_insert_with(|| a.common.out_dir().join("noise_calibration.json"))
        .clone();
    let smoother = SmootherConfig::with_window(a.window.unwrap_or(35))
        .map_err(|e| CliError::Config(format!("window: {e}")))?;
    let trajs = load_input(&a.common)?;
    let mut out = OutputDir::create(a.common.out_dir())?;

    let key = CacheKey {
        window_length: smoother.window_length,
        poly_order: smoother.poly_order,
        replicates: a.replicates.unwrap_or(20),
        seed: a.common.seed(),
        grid: default_noise_grid(),
    };
    let (cal, reused) = load_or_build(&cache, &key)?;
    let status = if reused { "reused" } else { "regenerated" };
    println!("calibration {status}: {}", cache.display());
    out.note(format!("calibration {status}: {}", cache.display()));

    let mut rows = Vec::new();
    let mut failures = 0;
    for t in &trajs {
        let label = trajectory_label(t);
        match estimate_noise_level(t, smoother, &cal) {
            Ok(e) => {
                if e.below_range {
                    out.warn(format!(
                        "{label}: below calibrated range, eta <= {:.4}",
                        e.eta
                    ));
                }
                println!("{label}: eta = {:.4} m", e.eta);
                rows.push(Row {
                    ball_id: t.ball_id().into(),
                    drop_id: t.drop_id(),
                    eta: Some(e.eta),
                    relative_difference: Some(e.relative_difference),
                    below_range: Some(e.below_range),
                    error: None,
                });
            }
            Err(err) => {
                failures += 1;
                eprintln!("{label}: {err}");
                rows.push(Row {
                    ball_id: t.ball_id().into(),
                    drop_id: t.drop_id(),
                    eta: None,
                    relative_difference: None,
                    below_range: None,
                    error: Some(err.to_string()),
                });
            }
        }
    }
    match a.common.format() {
        Format::Json => {
            out.write_json("noise_estimates.json", &rows)?;
        }
        Format::Csv => {
            out.write_with("noise_estimates.csv", |w| {
                let mut csv = csv::Writer::from_writer(w);
                for r in &rows {
                    csv.serialize(r)?;
                }
                Ok(csv.flush().map_err(csv::Error::from)?)
            })?;
        }
    }
    let manifest = out.finish("noise-estimate", &a)?;
    if failures > 0 {
        return Err(CliError::Failed(format!(
            "{failures} of {} trajectories could not be estimated",
            trajs.len()
        )));
    }
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_endpoints() {
        let g = default_noise_grid();
        assert_eq!(g.len(), 25);
        assert!((g[0] - 0.005).abs() < 1e-15);
        assert!((g[24] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cache_reused_only_for_matching_key() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cal.json");
        let key = CacheKey {
            window_length: 15,
            poly_order: 3,
            replicates: 2,
            seed: 1,
            grid: vec![0.01, 0.1, 1.0],
        };
        let (a, reused) = load_or_build(&path, &key).unwrap();
        assert!(!reused);
        let (b, reused) = load_or_build(&path, &key).unwrap();
        assert!(reused);
        assert_eq!(a, b);
        let other = CacheKey {
            window_length: 21,
            ..key
        };
        let (c, reused) = load_or_build(&path, &other).unwrap();
        assert!(!reused);
        assert_eq!(c.smoother.window_length, 21);
    }
}
