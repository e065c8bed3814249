//! Trajectory CSV format: header `ball_id,drop_id,time_s,height_m`, one row
//! per sample. Additional columns are ignored on read.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trajectory::Trajectory;

pub const TRAJECTORY_HEADER: [&str; 4] = ["ball_id", "drop_id", "time_s", "height_m"];

#[derive(Debug, Deserialize, Serialize)]
struct Row {
    ball_id: String,
    drop_id: u32,
    time_s: f64,
    height_m: f64,
}

fn csv_error(err: csv::Error) -> Error {
    let line = err.position().map(|p| p.line()).unwrap_or(0);
    match err.kind() {
        csv::ErrorKind::Io(_) => Error::Io(err.to_string()),
        _ => Error::Parse {
            line,
            message: err.to_string(),
        },
    }
}

/// Parses trajectories from CSV text, one per `(ball_id, drop_id)` group in
/// order of first appearance.
pub fn read_trajectories<R: Read>(source: R) -> Result<Vec<Trajectory>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let headers = reader.headers().map_err(csv_error)?.clone();
    for col in TRAJECTORY_HEADER {
        if !headers.iter().any(|h| h == col) {
            return Err(Error::Parse {
                line: 1,
                message: format!("missing required column `{col}`"),
            });
        }
    }

    let mut groups: Vec<(String, u32, Vec<f64>, Vec<f64>)> = Vec::new();
    for row in reader.deserialize::<Row>() {
        let row = row.map_err(csv_error)?;
        let idx = match groups
            .iter()
            .position(|(b, d, _, _)| *b == row.ball_id && *d == row.drop_id)
        {
            Some(i) => i,
            None => {
                groups.push((row.ball_id.clone(), row.drop_id, Vec::new(), Vec::new()));
                groups.len() - 1
            }
        };
        groups[idx].2.push(row.time_s);
        groups[idx].3.push(row.height_m);
    }
    if groups.is_empty() {
        return Err(Error::Validation("no data rows".into()));
    }
    groups
        .into_iter()
        .map(|(ball, drop, times, heights)| Trajectory::new(ball, drop, times, heights))
        .collect()
}

pub fn load_trajectories(path: impl AsRef<Path>) -> Result<Vec<Trajectory>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    read_trajectories(file)
}

/// Writes trajectories in the CSV schema. Floats use the shortest
/// representation that reads back to the same value.
pub fn write_trajectories<W: Write>(sink: W, trajectories: &[Trajectory]) -> Result<()> {
    let mut writer = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(sink);
    writer.write_record(TRAJECTORY_HEADER).map_err(csv_error)?;
    for traj in trajectories {
        for (&t, &h) in traj.times().iter().zip(traj.heights()) {
            writer
                .serialize(Row {
                    ball_id: traj.ball_id().to_string(),
                    drop_id: traj.drop_id(),
                    time_s: t,
                    height_m: h,
                })
                .map_err(csv_error)?;
        }
    }
    writer.flush()?;
    Ok(())
}
