//! Exact quantities for a resolved configuration, choosing the cheapest
//! method that applies.

use serde::Serialize;
use voterlab_core::chain::{
    absorption_time_birth_death, clique_async_chain, degree_weighted_fixation, diffusion_estimate, drift_bound_sync,
    fixation_birth_death, fixation_closed_form, full_state_oracle, glaz_time, unbiased_clique_time_closed,
    walk_analysis, WalkMode, MAX_ASYNC_NODES, MAX_SYNC_NODES,
};
use voterlab_core::dynamics::Schedule;

use crate::config::{CliError, CliResult, Resolved};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Quantity {
    Fixation,
    Time,
    Diffusion,
    DriftBound,
    Walk,
}

impl Quantity {
    pub fn as_str(self) -> &'static str {
        match self {
            Quantity::Fixation => "fixation",
            Quantity::Time => "time",
            Quantity::Diffusion => "diffusion",
            Quantity::DriftBound => "drift-bound",
            Quantity::Walk => "walk",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExactValue {
    pub value: f64,
    pub method: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WalkSummary {
    pub mode: WalkMode,
    pub alpha: f64,
    pub t_hit: f64,
    pub stationary: Vec<f64>,
}

/// Result of `exact`: the value, how it was computed, and an independent
/// second evaluation where one is cheap.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactReport {
    pub quantity: &'static str,
    pub method: &'static str,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cross_check: Option<ExactValue>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub walk: Option<WalkSummary>,
}

fn loop_free_async_clique(r: &Resolved) -> bool {
    r.is_clique() && !r.graph.allows_self_loops() && r.schedule == Schedule::Async
}

fn oracle_fits(r: &Resolved) -> bool {
    r.n() <= if r.schedule.is_sync() { MAX_SYNC_NODES } else { MAX_ASYNC_NODES }
}

fn ones(r: &Resolved) -> Vec<usize> {
    (0..r.n()).filter(|&u| r.initial.get(u) == 1).collect()
}

/// Fixation probability of opinion 1; `None` when no method applies.
pub fn fixation(r: &Resolved) -> CliResult<Option<(ExactValue, Option<ExactValue>)>> {
    let (n, k) = (r.n(), r.initial.ones_count());
    let degree = r
        .acc
        .is_unbiased()
        .then(|| ExactValue { value: degree_weighted_fixation(&r.graph, &ones(r)), method: "closed-form" });
    if loop_free_async_clique(r) {
        let value = match r.acc.r() {
            Some(ratio) => fixation_closed_form(ratio, n, k)?,
            None => fixation_birth_death(&clique_async_chain(n, &r.acc)?, k)?,
        };
        return Ok(Some((ExactValue { value, method: "closed-form" }, None)));
    }
    if oracle_fits(r) {
        let o = full_state_oracle(&r.graph, &r.acc, r.schedule, &r.initial)?;
        return Ok(Some((ExactValue { value: o.fixation1, method: "oracle" }, degree)));
    }
    Ok(degree.map(|d| (d, None)))
}

/// Expected consensus time in steps of the configured schedule.
pub fn time(r: &Resolved) -> CliResult<Option<(ExactValue, Option<ExactValue>)>> {
    let (n, k) = (r.n(), r.initial.ones_count());
    if loop_free_async_clique(r) {
        let chain = clique_async_chain(n, &r.acc)?;
        let tri = ExactValue { value: absorption_time_birth_death(&chain, k)?, method: "tridiagonal" };
        if let Some(alpha) = r.acc.alpha() {
            let v = unbiased_clique_time_closed(n, k, alpha)?;
            return Ok(Some((ExactValue { value: v, method: "closed-form" }, Some(tri))));
        }
        if r.acc.alpha01() > 0.0 && r.acc.alpha10() > 0.0 {
            return Ok(Some((ExactValue { value: glaz_time(n, k, &r.acc)?, method: "glaz" }, Some(tri))));
        }
        return Ok(Some((tri, None)));
    }
    if oracle_fits(r) {
        let o = full_state_oracle(&r.graph, &r.acc, r.schedule, &r.initial)?;
        return Ok(Some((ExactValue { value: o.expected_time, method: "oracle" }, None)));
    }
    Ok(None)
}

fn unsupported(q: Quantity, r: &Resolved, why: &str) -> CliError {
    CliError::config(format!(
        "{} is not available for the {} graph (n = {}) under {}: {why}",
        q.as_str(),
        r.config.graph.kind.as_str(),
        r.n(),
        r.schedule
    ))
}

pub fn compute(q: Quantity, r: &Resolved) -> CliResult<ExactReport> {
    let (n, k) = (r.n(), r.initial.ones_count());
    let report = |v: ExactValue, cross: Option<ExactValue>| ExactReport {
        quantity: q.as_str(),
        method: v.method,
        value: v.value,
        cross_check: cross,
        walk: None,
    };
    match q {
        Quantity::Fixation => fixation(r)?
            .map(|(v, c)| report(v, c))
            .ok_or_else(|| unsupported(q, r, "biased dynamics beyond the oracle size cap")),
        Quantity::Time => time(r)?
            .map(|(v, c)| report(v, c))
            .ok_or_else(|| unsupported(q, r, "only the loop-free asynchronous clique or oracle-sized graphs")),
        Quantity::Diffusion => {
            let alpha = r.acc.alpha().filter(|_| loop_free_async_clique(r));
            let alpha = alpha.ok_or_else(|| unsupported(q, r, "needs an unbiased asynchronous loop-free clique"))?;
            Ok(report(ExactValue { value: diffusion_estimate(n, k, alpha)?, method: "closed-form" }, None))
        }
        Quantity::DriftBound => {
            if !(r.is_clique() && r.graph.allows_self_loops() && r.schedule.is_sync()) {
                return Err(unsupported(q, r, "needs a synchronous clique with self-loops"));
            }
            let eps = r.acc.eps();
            if eps == 0.0 {
                return Err(CliError::config("drift-bound: needs alpha01 != alpha10 (eps = 0 leaves the bound undefined)"));
            }
            // the bound is stated for 0 favoured; relabel otherwise
            let b = if eps > 0.0 { drift_bound_sync(n, k, eps)? } else { drift_bound_sync(n, n - k, -eps)? };
            Ok(report(ExactValue { value: b.bound, method: "closed-form" }, Some(ExactValue { value: b.simplified, method: "closed-form" })))
        }
        Quantity::Walk => {
            let (mode, alpha) = match r.acc.alpha() {
                Some(a) if a > 0.0 && r.schedule.is_sync() => (WalkMode::SyncLazy, a),
                Some(a) if a > 0.0 => (WalkMode::AsyncLazy, a),
                _ => (WalkMode::Plain, 1.0),
            };
            let w = walk_analysis(&r.graph, alpha, mode)?;
            Ok(ExactReport {
                quantity: q.as_str(),
                method: "walk",
                value: w.t_hit,
                cross_check: None,
                walk: Some(WalkSummary { mode, alpha, t_hit: w.t_hit, stationary: w.stationary }),
            })
        }
    }
}
