//! `simulate`, `exact` and `sweep`.

use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use serde_json::Value;
use voterlab_core::montecarlo::{estimate, reference_time, EstimateConfig, EstimateSummary};

use crate::config::{parse_config, resolve, set_path, CliError, CliResult, Format, Resolved};
use crate::exact::{self, ExactReport, ExactValue, Quantity};
use crate::output::{self, num, opt, SimulationSummary, SUMMARY_CSV_HEADER};

/// Step cap from the config, or 50x the reference time.
fn step_cap(r: &Resolved) -> CliResult<(u64, &'static str)> {
    if let Some(m) = r.config.run.max_steps {
        return Ok((m, "config"));
    }
    let t = reference_time(&r.graph, &r.acc, r.schedule, &r.initial)?;
    Ok(((50.0 * t.steps).ceil().clamp(1000.0, u64::MAX as f64 / 2.0) as u64, t.method))
}

fn run_estimate(r: &Resolved, keep_records: bool) -> CliResult<(voterlab_core::montecarlo::Estimate, u64, &'static str)> {
    let (max_steps, source) = step_cap(r)?;
    let cfg = EstimateConfig { trials: r.config.run.trials, max_steps, master_seed: r.seed, keep_records };
    let e = estimate(&r.graph, &r.acc, r.schedule, &r.initial, &cfg)?;
    Ok((e, max_steps, source))
}

pub fn simulate(r: &Resolved, quiet: bool) -> CliResult<()> {
    let start = Instant::now();
    let out = &r.config.output;
    let (est, max_steps, source) = run_estimate(r, out.per_trial)?;
    let s: &EstimateSummary = &est.summary;
    let summary = SimulationSummary {
        config: &r.config,
        method: "monte-carlo",
        trials: s.trials,
        completed: s.completed,
        censored: s.censored,
        all_censored: s.all_censored,
        fixation1_freq: s.fixation1_freq,
        ci95_fixation: s.ci95_fixation,
        mean_steps: s.mean_steps,
        stderr_steps: s.stderr_steps,
        ci95_steps: s.ci95_steps,
        max_steps,
        max_steps_source: source,
        seed: r.seed,
        wallclock_seconds: start.elapsed().as_secs_f64(),
    };
    let text = match out.format {
        Format::Json => output::json_string(&summary),
        Format::Csv => output::csv_string(&SUMMARY_CSV_HEADER, &[summary.csv_row(r.initial.ones_count())])?,
    };
    output::emit(out.path.as_deref(), &text)?;
    if let (Some(records), Some(path)) = (&est.records, &out.path) {
        output::emit(Some(&output::trials_path(path, out.format)), &output::trials_text(records, out.format)?)?;
    }
    if !quiet {
        let steps = match (s.mean_steps, s.stderr_steps) {
            (Some(m), Some(se)) => format!("{m:.3} ± {se:.3}"),
            _ => "n/a".into(),
        };
        eprintln!(
            "{} trials ({} censored): fixation1 = {:.5} [{:.5}, {:.5}], steps = {steps}, seed = {}",
            s.trials, s.censored, s.fixation1_freq, s.ci95_fixation.lo, s.ci95_fixation.hi, r.seed
        );
        if s.all_censored {
            eprintln!("warning: every trial hit max_steps = {max_steps}; step statistics are absent");
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct ExactOutput<'a> {
    config: &'a crate::config::RunConfig,
    #[serde(flatten)]
    report: &'a ExactReport,
}

pub fn exact(r: &Resolved, q: Quantity, quiet: bool) -> CliResult<()> {
    let report = exact::compute(q, r)?;
    let out = &r.config.output;
    let text = match out.format {
        Format::Json => output::json_string(&ExactOutput { config: &r.config, report: &report }),
        Format::Csv => {
            let cross = report.cross_check;
            output::csv_string(
                &["quantity", "method", "value", "cross_check_method", "cross_check_value"],
                &[vec![
                    report.quantity.to_string(),
                    report.method.to_string(),
                    num(report.value),
                    cross.map(|c| c.method.to_string()).unwrap_or_default(),
                    opt(cross.map(|c| c.value)),
                ]],
            )?
        }
    };
    output::emit(out.path.as_deref(), &text)?;
    if !quiet && out.path.is_some() {
        eprintln!("{} = {} ({})", report.quantity, report.value, report.method);
    }
    Ok(())
}

/// Parameters a sweep may vary, and where they live in the config.
const SWEEPABLE: [(&str, &str); 5] =
    [("n", "graph.n"), ("k", "init.k"), ("alpha01", "model.alpha01"), ("alpha10", "model.alpha10"), ("trials", "run.trials")];

/// Parses `name=v1,v2,...`; integer parameters also accept `a..b`
/// (end exclusive) items.
pub fn parse_param(spec: &str) -> CliResult<(&'static str, Vec<Value>)> {
    let (name, list) =
        spec.split_once('=').ok_or_else(|| CliError::config(format!("--param expects name=v1,v2,..., got '{spec}'")))?;
    let name = name.trim();
    let (name, key) = SWEEPABLE
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| CliError::config(format!("--param: cannot sweep '{name}'; choose one of n, k, alpha01, alpha10, trials")))?;
    let integer = !name.starts_with("alpha");
    let mut values = Vec::new();
    for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let bad = || CliError::config(format!("--param {name}: cannot parse '{item}'"));
        if integer {
            if let Some((a, b)) = item.split_once("..") {
                let (a, b): (u64, u64) = (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?);
                values.extend((a..b).map(Value::from));
            } else {
                values.push(Value::from(item.parse::<u64>().map_err(|_| bad())?));
            }
        } else {
            let x: f64 = item.parse().map_err(|_| bad())?;
            values.push(Value::from(x));
        }
    }
    if values.is_empty() {
        return Err(CliError::config(format!("--param {name}: empty value list")));
    }
    Ok((key, values))
}

#[derive(Debug, Serialize)]
pub struct SweepRow {
    pub n: usize,
    pub k: usize,
    pub alpha01: f64,
    pub alpha10: f64,
    pub trials: u64,
    pub fixation1_freq: Option<f64>,
    pub ci95_fixation_lo: Option<f64>,
    pub ci95_fixation_hi: Option<f64>,
    pub mean_steps: Option<f64>,
    pub stderr_steps: Option<f64>,
    pub censored: Option<u64>,
    pub exact_fixation: Option<f64>,
    pub exact_fixation_method: Option<&'static str>,
    pub exact_time: Option<f64>,
    pub exact_time_method: Option<&'static str>,
}

const SWEEP_HEADER: [&str; 15] = [
    "n",
    "k",
    "alpha01",
    "alpha10",
    "trials",
    "fixation1_freq",
    "ci95_fixation_lo",
    "ci95_fixation_hi",
    "mean_steps",
    "stderr_steps",
    "censored",
    "exact_fixation",
    "exact_fixation_method",
    "exact_time",
    "exact_time_method",
];

impl SweepRow {
    fn csv(&self) -> Vec<String> {
        vec![
            self.n.to_string(),
            self.k.to_string(),
            num(self.alpha01),
            num(self.alpha10),
            self.trials.to_string(),
            opt(self.fixation1_freq),
            opt(self.ci95_fixation_lo),
            opt(self.ci95_fixation_hi),
            opt(self.mean_steps),
            opt(self.stderr_steps),
            self.censored.map(|c| c.to_string()).unwrap_or_default(),
            opt(self.exact_fixation),
            self.exact_fixation_method.unwrap_or_default().to_string(),
            opt(self.exact_time),
            self.exact_time_method.unwrap_or_default().to_string(),
        ]
    }
}

/// Exact value when a method applies; a method that fails numerically (for
/// example a periodic chain with infinite expected time) leaves it empty.
fn optional(v: CliResult<Option<(ExactValue, Option<ExactValue>)>>) -> CliResult<Option<ExactValue>> {
    match v {
        Ok(v) => Ok(v.map(|(x, _)| x)),
        Err(CliError::Runtime(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

fn sweep_row(r: &Resolved, exact_only: bool) -> CliResult<SweepRow> {
    let fix = optional(exact::fixation(r))?;
    let time = optional(exact::time(r))?;
    let est = if exact_only { None } else { Some(run_estimate(r, false)?.0.summary) };
    Ok(SweepRow {
        n: r.n(),
        k: r.initial.ones_count(),
        alpha01: r.acc.alpha01(),
        alpha10: r.acc.alpha10(),
        trials: r.config.run.trials,
        fixation1_freq: est.as_ref().map(|s| s.fixation1_freq),
        ci95_fixation_lo: est.as_ref().map(|s| s.ci95_fixation.lo),
        ci95_fixation_hi: est.as_ref().map(|s| s.ci95_fixation.hi),
        mean_steps: est.as_ref().and_then(|s| s.mean_steps),
        stderr_steps: est.as_ref().and_then(|s| s.stderr_steps),
        censored: est.as_ref().map(|s| s.censored),
        exact_fixation: fix.map(|v| v.value),
        exact_fixation_method: fix.map(|v| v.method),
        exact_time: time.map(|v| v.value),
        exact_time_method: time.map(|v| v.method),
    })
}

/// Runs the Cartesian product of the parameter lists over `base`.
pub fn sweep(base: &Value, params: &[String], exact_only: bool, quiet: bool) -> CliResult<()> {
    let axes: Vec<(&str, Vec<Value>)> = params.iter().map(|p| parse_param(p)).collect::<CliResult<_>>()?;
    let mut seen = std::collections::HashSet::new();
    for (key, _) in &axes {
        if !seen.insert(*key) {
            return Err(CliError::config(format!("--param: {key} given twice")));
        }
    }
    // validate the base once so output settings are known
    let mut first = base.clone();
    for (key, values) in &axes {
        assign(&mut first, key, values[0].clone())?;
    }
    let out = resolve(parse_config(&first)?)?.config.output;

    let mut rows = Vec::new();
    let mut index = vec![0usize; axes.len()];
    loop {
        let mut doc = base.clone();
        for ((key, values), &i) in axes.iter().zip(&index) {
            assign(&mut doc, key, values[i].clone())?;
        }
        let r = resolve(parse_config(&doc)?)?;
        rows.push(sweep_row(&r, exact_only)?);
        // odometer over the axes, last axis fastest
        let mut d = axes.len();
        loop {
            if d == 0 {
                return finish_sweep(&rows, &out, quiet);
            }
            d -= 1;
            index[d] += 1;
            if index[d] < axes[d].1.len() {
                break;
            }
            index[d] = 0;
        }
    }
}

fn assign(doc: &mut Value, key: &str, value: Value) -> CliResult<()> {
    if key == "init.k" {
        // sweeping k means prefix placement; drop other init forms
        set_path(doc, "init", serde_json::json!({}))?;
    }
    set_path(doc, key, value)
}

fn finish_sweep(rows: &[SweepRow], out: &crate::config::OutputConfig, quiet: bool) -> CliResult<()> {
    let text = match out.format {
        Format::Json => output::json_string(&rows),
        Format::Csv => output::csv_string(&SWEEP_HEADER, &rows.iter().map(SweepRow::csv).collect::<Vec<_>>())?,
    };
    output::emit(out.path.as_deref(), &text)?;
    if !quiet {
        eprintln!("sweep: {} rows{}", rows.len(), out.path.as_deref().map(|p| format!(" -> {}", display(p))).unwrap_or_default());
    }
    Ok(())
}

fn display(p: &Path) -> String {
    p.display().to_string()
}
