//! CSV / JSON emission for `run`.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use num_traits::Float;
use serde_json::json;

use super::config::{build_setup, OutputFormat, ScenarioConfig};
use crate::error::{Error, Result};
use crate::grid::Domain;
use crate::retrodict::{sweep_conditioning, ConditionalDistribution, RetrodictiveRun, RetrodictiveStages};

fn io_err(context: String) -> impl FnOnce(std::io::Error) -> Error {
    move |source| Error::Io { context, source }
}

/// Writes `x2,probability_density` rows. `{}` formatting of `f64` is the
/// shortest representation that parses back to the same value.
pub fn write_conditional_csv(path: &Path, d: &ConditionalDistribution<f64>) -> Result<()> {
    let file = fs::File::create(path).map_err(io_err(format!("creating {}", path.display())))?;
    let mut w = BufWriter::new(file);
    let mut body = String::with_capacity(48 * d.density.len() + 32);
    body.push_str("x2,probability_density\n");
    for (x, p) in d.positions().iter().zip(&d.density) {
        body.push_str(&format!("{x},{p}\n"));
    }
    w.write_all(body.as_bytes())
        .and_then(|_| w.flush())
        .map_err(io_err(format!("writing {}", path.display())))
}

/// Reads back a file written by [`write_conditional_csv`].
pub fn read_conditional_csv(path: &Path) -> Result<Vec<(f64, f64)>> {
    let text = fs::read_to_string(path).map_err(io_err(format!("reading {}", path.display())))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, "x2,probability_density")) => {}
        _ => {
            return Err(Error::Config {
                line: 1,
                message: format!("{}: missing header", path.display()),
            })
        }
    }
    lines
        .map(|(idx, line)| {
            let parsed = line
                .split_once(',')
                .and_then(|(x, p)| Some((x.parse().ok()?, p.parse().ok()?)));
            parsed.ok_or_else(|| Error::Config {
                line: idx + 1,
                message: format!("{}: malformed row '{line}'", path.display()),
            })
        })
        .collect()
}

/// Magnitude and phase of every stage, each on ascending coordinates.
pub fn stages_json(stages: &RetrodictiveStages<f64>, x1: f64) -> serde_json::Value {
    let entries: Vec<serde_json::Value> = stages
        .unfolded()
        .iter()
        .map(|s| {
            let f = &s.field;
            let (domain, coords) = match f.domain() {
                Domain::Position => ("position", f.grid().positions()),
                Domain::Wavevector => ("wavevector", f.grid().k_values_monotone()),
            };
            let values = f.values_monotone();
            json!({
                "label": s.label,
                "domain": domain,
                "coordinate": coords,
                "magnitude": values.iter().map(|v| v.norm()).collect::<Vec<_>>(),
                "phase": values.iter().map(|v| v.arg()).collect::<Vec<_>>(),
                "edge_leakage": s.edge_leakage,
            })
        })
        .collect();
    json!({ "x1": x1, "stages": entries })
}

/// What `run` wrote.
#[derive(Clone, Debug)]
pub struct RunSummary {
    pub files: Vec<PathBuf>,
    pub positions: Vec<f64>,
    /// `Σ density·Δx` per position.
    pub totals: Vec<f64>,
    /// Largest conditioned-stage leakage seen in any run.
    pub max_edge_leakage: f64,
}

fn file_names(c: &ScenarioConfig) -> Vec<(String, String)> {
    if c.x1.len() == 1 {
        vec![("conditional.csv".into(), "stages.json".into())]
    } else {
        c.x1.iter()
            .map(|x| (format!("conditional_x1_{x}.csv"), format!("stages_x1_{x}.json")))
            .collect()
    }
}

/// Runs every configured position and writes the results under `out`
/// (or the configured `output.dir`).
pub fn run(c: &ScenarioConfig, out: Option<&Path>) -> Result<RunSummary> {
    let setup = build_setup::<f64>(c)?;
    let runs: Vec<RetrodictiveRun<f64>> = match sweep_conditioning(&setup, &c.x1) {
        Ok(r) => r,
        // A single position reports its own error rather than a one-item sweep.
        Err(Error::Sweep(mut failures)) if c.x1.len() == 1 => return Err(failures.remove(0).1),
        Err(e) => return Err(e),
    };

    let dir = out.unwrap_or(&c.output_dir);
    fs::create_dir_all(dir).map_err(io_err(format!("creating {}", dir.display())))?;

    let mut summary = RunSummary {
        files: Vec::new(),
        positions: c.x1.clone(),
        totals: Vec::new(),
        max_edge_leakage: 0.0,
    };
    for ((csv, stages), (run, x1)) in file_names(c).into_iter().zip(runs.iter().zip(&c.x1)) {
        let path = dir.join(csv);
        write_conditional_csv(&path, &run.distribution)?;
        summary.files.push(path);
        summary.totals.push(run.distribution.total());
        for s in run.stages.conditioned() {
            summary.max_edge_leakage = Float::max(summary.max_edge_leakage, s.edge_leakage);
        }
        if c.output_format == OutputFormat::CsvWithStages {
            let path = dir.join(stages);
            let text = serde_json::to_string(&stages_json(&run.stages, *x1)).expect("stage report serializes");
            fs::write(&path, text).map_err(io_err(format!("writing {}", path.display())))?;
            summary.files.push(path);
        }
    }
    let path = dir.join("scenario.conf");
    fs::write(&path, c.to_text()).map_err(io_err(format!("writing {}", path.display())))?;
    summary.files.push(path);
    Ok(summary)
}
