//! Writing summaries and tables as JSON or CSV.
//!
//! Floats go through `Display`, which prints the shortest decimal that
//! round-trips, so CSV and JSON carry identical values.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use voterlab_core::montecarlo::{Interval, TrialRecord};

use crate::config::{CliResult, Format, RunConfig};

/// Summary of a `simulate` run; field names are the documented output keys.
#[derive(Debug, Clone, Serialize)]
pub struct SimulationSummary<'a> {
    pub config: &'a RunConfig,
    pub method: &'static str,
    pub trials: u64,
    pub completed: u64,
    pub censored: u64,
    pub all_censored: bool,
    pub fixation1_freq: f64,
    pub ci95_fixation: Interval,
    pub mean_steps: Option<f64>,
    pub stderr_steps: Option<f64>,
    pub ci95_steps: Option<Interval>,
    pub max_steps: u64,
    pub max_steps_source: &'static str,
    pub seed: u64,
    pub wallclock_seconds: f64,
}

pub const SUMMARY_CSV_HEADER: [&str; 20] = [
    "schedule",
    "graph",
    "n",
    "alpha01",
    "alpha10",
    "k",
    "trials",
    "completed",
    "censored",
    "fixation1_freq",
    "ci95_fixation_lo",
    "ci95_fixation_hi",
    "mean_steps",
    "stderr_steps",
    "ci95_steps_lo",
    "ci95_steps_hi",
    "max_steps",
    "seed",
    "method",
    "wallclock_seconds",
];

pub fn num(x: f64) -> String {
    format!("{x}")
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

impl SimulationSummary<'_> {
    pub fn csv_row(&self, k: usize) -> Vec<String> {
        let c = self.config;
        vec![
            c.model.schedule.to_string(),
            c.graph.kind.as_str().to_string(),
            c.graph.n.map(|n| n.to_string()).unwrap_or_default(),
            num(c.model.alpha01),
            num(c.model.alpha10),
            k.to_string(),
            self.trials.to_string(),
            self.completed.to_string(),
            self.censored.to_string(),
            num(self.fixation1_freq),
            num(self.ci95_fixation.lo),
            num(self.ci95_fixation.hi),
            opt(self.mean_steps),
            opt(self.stderr_steps),
            opt(self.ci95_steps.map(|i| i.lo)),
            opt(self.ci95_steps.map(|i| i.hi)),
            self.max_steps.to_string(),
            self.seed.to_string(),
            self.method.to_string(),
            num(self.wallclock_seconds),
        ]
    }
}

pub fn csv_string<H, R>(header: &[H], rows: &[R]) -> CliResult<String>
where
    H: AsRef<[u8]>,
    R: AsRef<[String]>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| crate::config::CliError::runtime(e.to_string());
    w.write_record(header).map_err(err)?;
    for row in rows {
        w.write_record(row.as_ref()).map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| crate::config::CliError::runtime(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn json_string<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

/// Writes `text` to `path`, or to standard output when absent.
pub fn emit(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

/// `out/run.json` -> `out/run.trials.json`
pub fn trials_path(summary: &Path, format: Format) -> PathBuf {
    let stem = summary.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "summary".into());
    let ext = match format {
        Format::Json => "json",
        Format::Csv => "csv",
    };
    summary.with_file_name(format!("{stem}.trials.{ext}"))
}

pub fn trials_text(records: &[TrialRecord], format: Format) -> CliResult<String> {
    match format {
        Format::Json => Ok(json_string(&records)),
        Format::Csv => {
            let rows: Vec<Vec<String>> = records
                .iter()
                .map(|r| vec![r.trial.to_string(), r.outcome.to_string(), r.steps.to_string()])
                .collect();
            csv_string(&["trial", "outcome", "steps"], &rows)
        }
    }
}
