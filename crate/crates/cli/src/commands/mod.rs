pub mod benchmark;
pub mod fit;
pub mod noise;
pub mod plot;
pub mod simulate;
pub mod sweep;

use dropfit::io::load_trajectories;
use dropfit::{SparseModel, Trajectory};

use crate::args::Common;
use crate::error::CliResult;
use crate::output::OutputDir;

pub fn load_input(common: &Common) -> CliResult<Vec<Trajectory>> {
    Ok(load_trajectories(common.input()?)?)
}

pub fn trajectory_label(t: &Trajectory) -> String {
    format!("{} drop {}", t.ball_id(), t.drop_id())
}

/// Term-by-trajectory table of coefficient magnitudes. The header is `term`
/// followed by one `ball_id:drop_id` column per trajectory.
pub fn write_heatmap(
    out: &mut OutputDir,
    name: &str,
    trajs: &[Trajectory],
    models: &[SparseModel],
) -> CliResult<()> {
    out.write_with(name, |w| {
        let mut csv = csv::Writer::from_writer(w);
        let mut header = vec!["term".to_string()];
        header.extend(
            trajs
                .iter()
                .map(|t| format!("{}:{}", t.ball_id(), t.drop_id())),
        );
        csv.write_record(&header)?;
        if let Some(first) = models.first() {
            for (j, term) in first.terms().iter().enumerate() {
                let mut row = vec![term.name.clone()];
                row.extend(models.iter().map(|m| m.coefficients()[j].abs().to_string()));
                csv.write_record(&row)?;
            }
        }
        Ok(csv.flush().map_err(csv::Error::from)?)
    })?;
    Ok(())
}
