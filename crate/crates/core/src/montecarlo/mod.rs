//! Monte Carlo estimation of fixation probability and consensus time.
//!
//! Trials run in parallel on per-trial random streams (`stream_index` is the
//! trial number) and are reduced in trial order, so the thread count never
//! changes a summary.

mod checks;
mod walks;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::{
    absorption_time_birth_death, clique_async_chain, drift_bound_sync, glaz_time, walk_analysis, WalkMode,
};
use crate::dynamics::{run_unchecked, validate_run};
use crate::dynamics::{
    run_clique_kernel_to_consensus, AcceptanceMatrix, OpinionState, Outcome, RngStream, RunResult, Schedule,
};
use crate::{Error, Graph, Result};

pub use checks::{
    check_consensus_hitting_bound, check_drift_bound, check_lazy_scaling, check_meeting_vs_hitting,
    check_sync_fixation_monotone, DriftReport, HittingBoundReport, LazyScalingReport, MeetingReport, PairMeeting,
    SyncFixationReport,
};
pub use walks::{coalescing_walk_trial, meeting_time_trial};

/// Standard normal quantile for a two-sided 95% interval.
pub const Z95: f64 = 1.959_963_984_540_054;
/// Standard normal quantile for a two-sided 99% interval.
pub const Z99: f64 = 2.575_829_303_548_901;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: u64, n: u64, z: f64) -> Interval {
    if n == 0 {
        return Interval { lo: 0.0, hi: 1.0 };
    }
    let nf = n as f64;
    let p = successes as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = z / denom * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
    // the exact endpoints at 0 and n are 0 and 1; avoid rounding residue
    let lo = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if successes == n { 1.0 } else { (center + half).min(1.0) };
    Interval { lo, hi }
}

/// Sample mean and standard error of the mean, computed from exact integer
/// sums.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub count: u64,
    pub mean: f64,
    pub stderr: f64,
}

impl MeanEstimate {
    pub fn from_counts(values: impl IntoIterator<Item = u64>) -> Option<Self> {
        let (mut n, mut sum, mut sumsq) = (0u128, 0u128, 0u128);
        for v in values {
            let v = u128::from(v);
            n += 1;
            sum += v;
            sumsq += v * v;
        }
        if n == 0 {
            return None;
        }
        let mean = sum as f64 / n as f64;
        let stderr = if n > 1 {
            let var = (n * sumsq - sum * sum) as f64 / (n * (n - 1)) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        Some(MeanEstimate { count: n as u64, mean, stderr })
    }

    pub fn ci(&self, z: f64) -> Interval {
        Interval { lo: self.mean - z * self.stderr, hi: self.mean + z * self.stderr }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub outcome: Outcome,
    pub steps: u64,
    pub stream_index: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateSummary {
    pub trials: u64,
    pub completed: u64,
    pub censored: u64,
    /// Fraction of completed trials that fixed opinion 1.
    pub fixation1_freq: f64,
    pub ci95_fixation: Interval,
    /// Absent when every trial was censored.
    pub mean_steps: Option<f64>,
    pub stderr_steps: Option<f64>,
    pub ci95_steps: Option<Interval>,
    /// Set when no trial reached consensus.
    pub all_censored: bool,
}

impl EstimateSummary {
    pub fn from_records(records: &[TrialRecord]) -> Self {
        let trials = records.len() as u64;
        let censored = records.iter().filter(|r| r.outcome == Outcome::Censored).count() as u64;
        let completed = trials - censored;
        let fixed1 = records.iter().filter(|r| r.outcome == Outcome::Fixed1).count() as u64;
        let steps = MeanEstimate::from_counts(
            records.iter().filter(|r| r.outcome != Outcome::Censored).map(|r| r.steps),
        );
        EstimateSummary {
            trials,
            completed,
            censored,
            fixation1_freq: if completed > 0 { fixed1 as f64 / completed as f64 } else { 0.0 },
            ci95_fixation: wilson_interval(fixed1, completed, Z95),
            mean_steps: steps.map(|s| s.mean),
            stderr_steps: steps.map(|s| s.stderr),
            ci95_steps: steps.map(|s| s.ci(Z95)),
            all_censored: completed == 0,
        }
    }

    /// Wilson interval for the fixation frequency at an arbitrary `z`.
    pub fn fixation_interval(&self, z: f64) -> Interval {
        let fixed1 = (self.fixation1_freq * self.completed as f64).round() as u64;
        wilson_interval(fixed1, self.completed, z)
    }

    pub fn steps_estimate(&self) -> Option<MeanEstimate> {
        Some(MeanEstimate { count: self.completed, mean: self.mean_steps?, stderr: self.stderr_steps? })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EstimateConfig {
    pub trials: u64,
    pub max_steps: u64,
    pub master_seed: u64,
    pub keep_records: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub summary: EstimateSummary,
    pub records: Option<Vec<TrialRecord>>,
}

/// Runs `trials` independent trials; trial `t` uses stream `offset + t`.
pub(crate) fn run_trials<F>(trials: u64, master_seed: u64, offset: u64, f: F) -> Result<Vec<TrialRecord>>
where
    F: Fn(&RngStream) -> Result<RunResult> + Sync,
{
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let stream = RngStream::new(master_seed, offset + t);
            let r = f(&stream)?;
            Ok(TrialRecord { trial: t, outcome: r.outcome, steps: r.steps, stream_index: stream.stream_index })
        })
        .collect()
}

fn finish(records: Vec<TrialRecord>, keep: bool) -> Estimate {
    let summary = EstimateSummary::from_records(&records);
    Estimate { summary, records: keep.then_some(records) }
}

/// Estimates fixation probability and consensus time by simulation.
pub fn estimate(
    g: &Graph,
    acc: &AcceptanceMatrix,
    schedule: Schedule,
    initial: &OpinionState,
    cfg: &EstimateConfig,
) -> Result<Estimate> {
    if cfg.trials == 0 {
        return Err(Error::invalid("trials must be at least 1"));
    }
    validate_run(initial, g, acc, schedule)?;
    let records = run_trials(cfg.trials, cfg.master_seed, 0, |stream| {
        let mut state = initial.clone();
        Ok(run_unchecked(&mut state, g, acc, schedule, cfg.max_steps, &mut stream.rng()))
    })?;
    Ok(finish(records, cfg.keep_records))
}

/// Estimate for the synchronous clique with loops through the lumped
/// binomial kernel.
pub fn estimate_clique_kernel(n: usize, k: usize, acc: &AcceptanceMatrix, cfg: &EstimateConfig) -> Result<Estimate> {
    if cfg.trials == 0 {
        return Err(Error::invalid("trials must be at least 1"));
    }
    let records = run_trials(cfg.trials, cfg.master_seed, 0, |stream| {
        run_clique_kernel_to_consensus(n, k, acc, cfg.max_steps, &mut stream.rng())
    })?;
    Ok(finish(records, cfg.keep_records))
}

/// Above this size the reference time uses a walk bound instead of solving
/// for hitting times.
const REFERENCE_WALK_NODES: usize = 200;

/// Reference expected time (exact value or upper bound) behind the default
/// step cap, and where it came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeScale {
    pub steps: f64,
    pub method: &'static str,
}

/// Best available exact value or bound for the expected consensus time.
///
/// Exact on the loop-free clique under asynchronous updates; the drift bound
/// on the synchronous biased clique with loops; `(ln n + 3) T_hit` for
/// unbiased synchronous runs. Other cases use `n (ln n + 3) T_hit / alpha_min`
/// from the plain walk, a heuristic scale rather than a proven bound.
pub fn reference_time(g: &Graph, acc: &AcceptanceMatrix, schedule: Schedule, initial: &OpinionState) -> Result<TimeScale> {
    let n = g.n();
    let k = initial.ones_count();
    if initial.consensus().is_some() {
        return Ok(TimeScale { steps: 0.0, method: "consensus" });
    }
    let is_clique = g.regular_degree() == Some(if g.allows_self_loops() { n } else { n - 1 })
        && g.edge_count() == n * (n - 1) / 2 + if g.allows_self_loops() { n } else { 0 };
    if is_clique && !g.allows_self_loops() && schedule == Schedule::Async {
        let t = if acc.alpha01() > 0.0 && acc.alpha10() > 0.0 {
            glaz_time(n, k, acc)
        } else {
            absorption_time_birth_death(&clique_async_chain(n, acc)?, k)
        };
        if let Ok(t) = t {
            return Ok(TimeScale { steps: t, method: "exact" });
        }
    }
    if is_clique && g.allows_self_loops() && schedule == Schedule::SyncM1 && !acc.is_unbiased() {
        let eps = acc.eps();
        let b = if eps > 0.0 { drift_bound_sync(n, k, eps)? } else { drift_bound_sync(n, n - k, -eps)? };
        return Ok(TimeScale { steps: b.bound, method: "drift-bound" });
    }
    let ln_factor = (n as f64).ln() + 3.0;
    let slow = acc.alpha01().min(acc.alpha10());
    let slow = if slow > 0.0 { slow } else { acc.alpha01().max(acc.alpha10()) };
    // plain-walk T_hit: exact for small graphs, else the commute bound 2m(n-1)
    let (t_hit, exact_hit) = if n <= REFERENCE_WALK_NODES {
        (walk_analysis(g, 1.0, WalkMode::Plain)?.t_hit, true)
    } else {
        (g.volume() as f64 * (n as f64 - 1.0), false)
    };
    if let Some(alpha) = acc.alpha().filter(|_| schedule.is_sync()) {
        let method = if exact_hit { "hitting-bound" } else { "heuristic" };
        return Ok(TimeScale { steps: ln_factor * t_hit / alpha, method });
    }
    let per_round = if schedule.is_sync() { 1.0 } else { n as f64 };
    Ok(TimeScale { steps: per_round * ln_factor * t_hit / slow, method: "heuristic" })
}

/// Default step cap: 50 times the reference time, at least 1000.
pub fn default_max_steps(g: &Graph, acc: &AcceptanceMatrix, schedule: Schedule, initial: &OpinionState) -> Result<u64> {
    let t = reference_time(g, acc, schedule, initial)?;
    Ok((50.0 * t.steps).ceil().max(1000.0).min(u64::MAX as f64 / 2.0) as u64)
}
