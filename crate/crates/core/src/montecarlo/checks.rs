//! Statistical checks of the bounds and scaling laws. Each check is a
//! 3-sigma one-sided test: passing means the simulation does not refute the
//! claim, failing points at an implementation error (or an unlucky seed).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::walks::{coalesce, meeting_time_trial};
use super::{run_trials, EstimateSummary, MeanEstimate};
use crate::chain::{drift_bound_sync, walk_analysis, WalkMode};
use crate::dynamics::{
    run_clique_kernel_to_consensus, run_unchecked, validate_run, AcceptanceMatrix, OpinionState, Outcome, RngStream,
    Schedule,
};
use crate::{Error, Graph, Result};

fn need_trials(trials: u64) -> Result<()> {
    if trials < 2 {
        return Err(Error::invalid("checks need at least 2 trials"));
    }
    Ok(())
}

fn steps_of(summary: &EstimateSummary) -> MeanEstimate {
    summary.steps_estimate().unwrap_or(MeanEstimate { count: 0, mean: f64::NAN, stderr: f64::NAN })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairMeeting {
    pub u: usize,
    pub v: usize,
    pub mean: f64,
    pub stderr: f64,
    pub censored: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeetingReport {
    pub alpha: f64,
    pub trials_per_pair: u64,
    pub t_hit: f64,
    pub pairs: Vec<PairMeeting>,
    pub max_mean: f64,
    pub max_pair: (usize, usize),
    pub stderr_at_max: f64,
    pub censored: u64,
    /// `max_mean <= t_hit + 3 stderr_at_max` with no censored walks.
    pub pass: bool,
}

/// Estimates `E[M_uv]` for every unordered pair of distinct nodes and
/// compares the largest against the lazy-walk `T_hit`. Pair `i` (in
/// lexicographic order) uses streams `i * trials ..`.
pub fn check_meeting_vs_hitting(
    g: &Graph,
    alpha: f64,
    trials: u64,
    master_seed: u64,
    max_steps: Option<u64>,
) -> Result<MeetingReport> {
    need_trials(trials)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("meeting check needs a lazy walk, 0 < alpha < 1; got {alpha}")));
    }
    let n = g.n();
    if n < 2 {
        return Err(Error::invalid("meeting check needs n >= 2"));
    }
    let walk = walk_analysis(g, alpha, WalkMode::SyncLazy)?;
    let cap = max_steps.unwrap_or_else(|| (50.0 * walk.t_hit).ceil().max(1000.0) as u64);
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
    let results: Vec<PairMeeting> = pairs
        .par_iter()
        .enumerate()
        .map(|(i, &(u, v))| {
            let times: Vec<Option<u64>> = (0..trials)
                .map(|t| {
                    let mut rng = RngStream::new(master_seed, i as u64 * trials + t).rng();
                    meeting_time_trial(g, alpha, u, v, cap, &mut rng).expect("validated walk")
                })
                .collect();
            let censored = times.iter().filter(|t| t.is_none()).count() as u64;
            let est = MeanEstimate::from_counts(times.into_iter().flatten())
                .unwrap_or(MeanEstimate { count: 0, mean: f64::INFINITY, stderr: 0.0 });
            PairMeeting { u, v, mean: est.mean, stderr: est.stderr, censored }
        })
        .collect();
    let best = results.iter().max_by(|a, b| a.mean.total_cmp(&b.mean)).expect("n >= 2");
    let censored = results.iter().map(|p| p.censored).sum();
    Ok(MeetingReport {
        alpha,
        trials_per_pair: trials,
        t_hit: walk.t_hit,
        max_mean: best.mean,
        max_pair: (best.u, best.v),
        stderr_at_max: best.stderr,
        censored,
        pass: censored == 0 && best.mean <= walk.t_hit + 3.0 * best.stderr,
        pairs: results,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HittingBoundReport {
    pub alpha: f64,
    pub n: usize,
    pub t_hit: f64,
    /// `(ln n + 3) t_hit`
    pub bound: f64,
    pub consensus: EstimateSummary,
    pub coalescence_mean: f64,
    pub coalescence_stderr: f64,
    pub coalescence_censored: u64,
    /// Both empirical means (no slack) lie below `bound`, nothing censored.
    pub pass: bool,
}

/// Consensus time of the unbiased synchronous dynamics from `initial`, and
/// full coalescence time of the dual walks, against `(ln n + 3) T_hit`.
/// Voter trials use streams `0..trials`, walk trials `trials..2 trials`.
pub fn check_consensus_hitting_bound(
    g: &Graph,
    alpha: f64,
    initial: &OpinionState,
    trials: u64,
    master_seed: u64,
    max_steps: Option<u64>,
) -> Result<HittingBoundReport> {
    need_trials(trials)?;
    let acc = AcceptanceMatrix::unbiased(alpha)?;
    validate_run(initial, g, &acc, Schedule::SyncM2)?;
    let walk = walk_analysis(g, alpha, WalkMode::SyncLazy)?;
    let n = g.n();
    let bound = ((n as f64).ln() + 3.0) * walk.t_hit;
    let cap = max_steps.unwrap_or_else(|| (50.0 * bound).ceil().max(1000.0) as u64);
    let records = run_trials(trials, master_seed, 0, |stream| {
        let mut state = initial.clone();
        Ok(run_unchecked(&mut state, g, &acc, Schedule::SyncM2, cap, &mut stream.rng()))
    })?;
    let consensus = EstimateSummary::from_records(&records);
    let coal: Vec<Option<u64>> = (0..trials)
        .into_par_iter()
        .map(|t| coalesce(g, alpha, cap, &mut RngStream::new(master_seed, trials + t).rng()))
        .collect();
    let coalescence_censored = coal.iter().filter(|c| c.is_none()).count() as u64;
    let coal_est = MeanEstimate::from_counts(coal.into_iter().flatten())
        .unwrap_or(MeanEstimate { count: 0, mean: f64::INFINITY, stderr: 0.0 });
    let cons = steps_of(&consensus);
    Ok(HittingBoundReport {
        alpha,
        n,
        t_hit: walk.t_hit,
        bound,
        pass: consensus.censored == 0
            && coalescence_censored == 0
            && cons.mean <= bound
            && coal_est.mean <= bound,
        consensus,
        coalescence_mean: coal_est.mean,
        coalescence_stderr: coal_est.stderr,
        coalescence_censored,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    pub n: usize,
    pub k: usize,
    pub eps: f64,
    pub alpha01: f64,
    pub alpha10: f64,
    pub bound: f64,
    pub simplified_bound: f64,
    pub mean: f64,
    pub stderr: f64,
    pub censored: u64,
    pub fixation1_freq: f64,
    /// `mean - 3 stderr <= bound`, with under 1% of trials censored.
    pub pass: bool,
}

/// Consensus time of the synchronous biased clique with loops (through the
/// binomial kernel) against the drift bound, with `alpha10 = 1` and
/// `alpha01 = 1 - eps`.
pub fn check_drift_bound(
    n: usize,
    k: usize,
    eps: f64,
    trials: u64,
    max_steps: Option<u64>,
    master_seed: u64,
) -> Result<DriftReport> {
    need_trials(trials)?;
    let bound = drift_bound_sync(n, k, eps)?;
    let acc = AcceptanceMatrix::new(1.0 - eps, 1.0)?;
    let cap = max_steps.unwrap_or_else(|| (50.0 * bound.bound).ceil().max(1000.0) as u64);
    let records = run_trials(trials, master_seed, 0, |stream| {
        run_clique_kernel_to_consensus(n, k, &acc, cap, &mut stream.rng())
    })?;
    let summary = EstimateSummary::from_records(&records);
    let steps = steps_of(&summary);
    Ok(DriftReport {
        n,
        k,
        eps,
        alpha01: acc.alpha01(),
        alpha10: acc.alpha10(),
        bound: bound.bound,
        simplified_bound: bound.simplified,
        mean: steps.mean,
        stderr: steps.stderr,
        censored: summary.censored,
        fixation1_freq: summary.fixation1_freq,
        pass: (summary.censored as f64) < 0.01 * trials as f64 && steps.mean - 3.0 * steps.stderr <= bound.bound,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyncFixationReport {
    pub n: usize,
    pub k: usize,
    pub alpha01: f64,
    pub alpha10: f64,
    pub freq0: f64,
    pub stderr: f64,
    /// `1 - k/n`
    pub threshold: f64,
    pub censored: u64,
    /// `freq0 + 3 stderr >= threshold`
    pub pass: bool,
}

/// Fixation of opinion 0 on the synchronous clique with loops when 0 is
/// favoured (`alpha01 <= alpha10`), against the initial fraction of zeros.
pub fn check_sync_fixation_monotone(
    n: usize,
    acc: &AcceptanceMatrix,
    k: usize,
    trials: u64,
    master_seed: u64,
    max_steps: Option<u64>,
) -> Result<SyncFixationReport> {
    need_trials(trials)?;
    if acc.alpha01() > acc.alpha10() {
        return Err(Error::invalid("monotone fixation check needs alpha01 <= alpha10"));
    }
    if k > n || n < 2 {
        return Err(Error::invalid(format!("k = {k} out of range for n = {n}")));
    }
    let g = Graph::clique(n, true)?;
    let init = OpinionState::with_ones_prefix(n, k)?;
    let cap = match max_steps {
        Some(c) => c,
        None => super::default_max_steps(&g, acc, Schedule::SyncM1, &init)?,
    };
    let records = run_trials(trials, master_seed, 0, |stream| {
        run_clique_kernel_to_consensus(n, k, acc, cap, &mut stream.rng())
    })?;
    let completed = records.iter().filter(|r| r.outcome != Outcome::Censored).count() as u64;
    let fixed0 = records.iter().filter(|r| r.outcome == Outcome::Fixed0).count() as u64;
    let freq0 = if completed > 0 { fixed0 as f64 / completed as f64 } else { 0.0 };
    let stderr = if completed > 0 { (freq0 * (1.0 - freq0) / completed as f64).sqrt() } else { f64::INFINITY };
    let threshold = 1.0 - k as f64 / n as f64;
    Ok(SyncFixationReport {
        n,
        k,
        alpha01: acc.alpha01(),
        alpha10: acc.alpha10(),
        freq0,
        stderr,
        threshold,
        censored: trials - completed,
        pass: completed > 0 && freq0 + 3.0 * stderr >= threshold,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LazyScalingReport {
    pub alpha: f64,
    pub mean_alpha: f64,
    pub stderr_alpha: f64,
    pub mean_one: f64,
    pub stderr_one: f64,
    pub ratio: f64,
    /// Delta-method standard error of `ratio`.
    pub ratio_stderr: f64,
    pub expected: f64,
    pub censored: u64,
    /// `|ratio - 1/alpha| <= 3 ratio_stderr`, nothing censored.
    pub pass: bool,
}

/// Asynchronous unbiased consensus time at acceptance `alpha` over the time
/// at acceptance 1, same graph and start. The `alpha` runs use streams
/// `0..trials`, the reference runs `trials..2 trials` (the same streams when
/// `alpha = 1`, so the ratio is exactly 1 there).
pub fn check_lazy_scaling(
    g: &Graph,
    alpha: f64,
    initial: &OpinionState,
    trials: u64,
    master_seed: u64,
    max_steps: Option<u64>,
) -> Result<LazyScalingReport> {
    need_trials(trials)?;
    let lazy = AcceptanceMatrix::unbiased(alpha)?;
    if lazy.is_frozen() {
        return Err(Error::Frozen);
    }
    let full = AcceptanceMatrix::unbiased(1.0)?;
    validate_run(initial, g, &lazy, Schedule::Async)?;
    let cap = match max_steps {
        Some(c) => c,
        None => super::default_max_steps(g, &lazy, Schedule::Async, initial)?,
    };
    let run = |acc: AcceptanceMatrix, offset: u64| {
        run_trials(trials, master_seed, offset, |stream| {
            let mut state = initial.clone();
            Ok(run_unchecked(&mut state, g, &acc, Schedule::Async, cap, &mut stream.rng()))
        })
        .map(|r| EstimateSummary::from_records(&r))
    };
    let a = run(lazy, 0)?;
    let b = run(full, if alpha == 1.0 { 0 } else { trials })?;
    let (sa, sb) = (steps_of(&a), steps_of(&b));
    let ratio = sa.mean / sb.mean;
    let ratio_stderr = ratio * ((sa.stderr / sa.mean).powi(2) + (sb.stderr / sb.mean).powi(2)).sqrt();
    let expected = 1.0 / alpha;
    let censored = a.censored + b.censored;
    let pass = censored == 0
        && if sa.mean == 0.0 && sb.mean == 0.0 {
            true
        } else {
            (ratio - expected).abs() <= 3.0 * ratio_stderr
        };
    Ok(LazyScalingReport {
        alpha,
        mean_alpha: sa.mean,
        stderr_alpha: sa.stderr,
        mean_one: sb.mean,
        stderr_one: sb.stderr,
        ratio: if sb.mean == 0.0 { expected } else { ratio },
        ratio_stderr: if ratio_stderr.is_nan() { 0.0 } else { ratio_stderr },
        expected,
        censored,
        pass,
    })
}
