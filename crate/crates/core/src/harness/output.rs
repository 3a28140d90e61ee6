use std::path::Path;

use crate::error::{Error, Result};
use crate::evaluation::RunResult;
use crate::harness::aggregate::{aggregate, runs_to_csv, AggregateSeries};
use crate::harness::plot::{render_svg, Metric};

pub const RUNS_CSV: &str = "runs.csv";
pub const AGGREGATE_CSV: &str = "aggregate.csv";

/// Writes `files` into `dir`. Everything is rendered before this is called;
/// a directory created here is removed again if any write fails.
fn write_all(dir: &Path, files: &[(&str, String)]) -> Result<()> {
    let created = !dir.exists();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (name, body) in files {
        let path = dir.join(name);
        if let Err(e) = std::fs::write(&path, body) {
            if created {
                let _ = std::fs::remove_dir_all(dir);
            }
            return Err(Error::io(path, e));
        }
    }
    Ok(())
}

pub fn render_plots(series: &AggregateSeries) -> Result<Vec<(&'static str, String)>> {
    [Metric::Regret, Metric::Violations]
        .into_iter()
        .map(|m| Ok((m.file_name(), render_svg(series, m)?)))
        .collect()
}

/// Writes `runs.csv`, `aggregate.csv`, `regret.svg` and `violations.svg`.
pub fn emit_outputs(results: &[RunResult], dir: &Path) -> Result<AggregateSeries> {
    if results.is_empty() {
        return Err(Error::input("no runs to write"));
    }
    let series = aggregate(results)?;
    let mut files = vec![
        (RUNS_CSV, runs_to_csv(results)?),
        (AGGREGATE_CSV, series.to_csv()?),
    ];
    files.extend(render_plots(&series)?);
    write_all(dir, &files)?;
    Ok(series)
}

/// Recomputes `aggregate.csv` from `runs.csv` in `dir`.
pub fn aggregate_dir(dir: &Path) -> Result<AggregateSeries> {
    let path = dir.join(RUNS_CSV);
    let file = std::fs::File::open(&path).map_err(|e| Error::io(&path, e))?;
    let runs = crate::harness::aggregate::runs_from_csv(file, &path)?;
    let series = aggregate(&runs)?;
    write_all(dir, &[(AGGREGATE_CSV, series.to_csv()?)])?;
    Ok(series)
}

/// Renders the SVG charts from `aggregate.csv` in `dir`.
pub fn plot_dir(dir: &Path) -> Result<()> {
    let path = dir.join(AGGREGATE_CSV);
    let file = std::fs::File::open(&path).map_err(|e| Error::io(&path, e))?;
    let series = AggregateSeries::from_csv(file, &path)?;
    let files = render_plots(&series)?;
    write_all(dir, &files)
}
