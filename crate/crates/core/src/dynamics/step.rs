use rand::Rng;
use rand_distr::{Binomial, Distribution};

use super::{AcceptanceMatrix, OpinionState, Outcome, Schedule};
use crate::{Error, Graph, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateResult {
    Accept,
    Reject,
}

/// One application of the update rule at node `u`: sample a uniform
/// neighbor `v`, then adopt its opinion with probability `alpha[x_u][x_v]`.
///
/// When `x_u == x_v` no uniform is drawn and the result is `Reject`.
pub fn update_node<R: Rng + ?Sized>(
    state: &mut OpinionState,
    g: &Graph,
    acc: &AcceptanceMatrix,
    u: usize,
    rng: &mut R,
) -> UpdateResult {
    let nbrs = g.neighbors(u);
    let v = nbrs[rng.gen_range(0..nbrs.len())];
    let (c, c2) = (state.get(u), state.get(v));
    if c == c2 {
        return UpdateResult::Reject;
    }
    let theta: f64 = rng.gen();
    if theta < acc.accept(c, c2) {
        state.set(u, c2);
        UpdateResult::Accept
    } else {
        UpdateResult::Reject
    }
}

/// One asynchronous iteration: a uniformly random node updates.
pub fn step_async<R: Rng + ?Sized>(state: &mut OpinionState, g: &Graph, acc: &AcceptanceMatrix, rng: &mut R) {
    let u = rng.gen_range(0..g.n());
    update_node(state, g, acc, u, rng);
}

/// One synchronous iteration: every node applies the update rule to the
/// time-`t` snapshot. Nodes are visited in ascending order.
pub fn step_sync_m1<R: Rng + ?Sized>(state: &mut OpinionState, g: &Graph, acc: &AcceptanceMatrix, rng: &mut R) {
    for u in 0..g.n() {
        let nbrs = g.neighbors(u);
        let v = nbrs[rng.gen_range(0..nbrs.len())];
        let (c, c2) = (state.x[u], state.x[v]);
        state.next[u] = if c != c2 && rng.gen::<f64>() < acc.accept(c, c2) { c2 } else { c };
    }
    state.commit_next();
}

/// Coin-first synchronous iteration for unbiased matrices: each node copies a
/// uniform neighbor with probability `alpha`, otherwise keeps its opinion.
pub fn step_sync_m2<R: Rng + ?Sized>(
    state: &mut OpinionState,
    g: &Graph,
    acc: &AcceptanceMatrix,
    rng: &mut R,
) -> Result<()> {
    let alpha = acc
        .alpha()
        .ok_or_else(|| Error::invalid("sync-m2 requires an unbiased acceptance matrix (alpha01 = alpha10)"))?;
    for u in 0..g.n() {
        state.next[u] = if rng.gen::<f64>() < alpha {
            let nbrs = g.neighbors(u);
            state.x[nbrs[rng.gen_range(0..nbrs.len())]]
        } else {
            state.x[u]
        };
    }
    state.commit_next();
    Ok(())
}

pub fn step<R: Rng + ?Sized>(
    state: &mut OpinionState,
    g: &Graph,
    acc: &AcceptanceMatrix,
    schedule: Schedule,
    rng: &mut R,
) -> Result<()> {
    match schedule {
        Schedule::Async => step_async(state, g, acc, rng),
        Schedule::SyncM1 => step_sync_m1(state, g, acc, rng),
        Schedule::SyncM2 => step_sync_m2(state, g, acc, rng)?,
    }
    Ok(())
}

/// Lumped synchronous step on the clique with loops: the `k` holders of 1
/// keep it with probability `1 - alpha10 (1 - k/n)`, the `n - k` holders of 0
/// switch with probability `alpha01 k/n`.
pub fn step_sync_clique_kernel<R: Rng + ?Sized>(
    k: usize,
    n: usize,
    acc: &AcceptanceMatrix,
    rng: &mut R,
) -> Result<usize> {
    if n == 0 || k > n {
        return Err(Error::invalid(format!("k = {k} out of range for n = {n}")));
    }
    let y = k as f64 / n as f64;
    let keep = 1.0 - acc.alpha10() * (1.0 - y);
    let join = acc.alpha01() * y;
    let stay = Binomial::new(k as u64, keep).expect("probability in [0, 1]").sample(rng);
    let switch = Binomial::new((n - k) as u64, join).expect("probability in [0, 1]").sample(rng);
    Ok((stay + switch) as usize)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyncRule {
    /// Sample a neighbor, then accept with the context-dependent probability.
    M1,
    /// Toss the `alpha` coin, then copy a uniform neighbor on heads.
    M2,
}

/// Exact probability that node `u` holds 1 after one synchronous step, given
/// the current configuration `opinion(v)`.
pub fn next_one_probability(
    rule: SyncRule,
    g: &Graph,
    acc: &AcceptanceMatrix,
    u: usize,
    opinion: impl Fn(usize) -> u8,
) -> f64 {
    let nbrs = g.neighbors(u);
    let d = nbrs.len() as f64;
    let own = opinion(u);
    match rule {
        SyncRule::M1 => {
            nbrs.iter()
                .map(|&v| {
                    let other = opinion(v);
                    let a = acc.accept(own, other);
                    // adopt `other` with probability a, otherwise keep `own`
                    a * f64::from(other) + (1.0 - a) * f64::from(own)
                })
                .sum::<f64>()
                / d
        }
        SyncRule::M2 => {
            let alpha = acc.alpha().expect("M2 needs an unbiased matrix");
            let ones = nbrs.iter().filter(|&&v| opinion(v) == 1).count() as f64;
            (1.0 - alpha) * f64::from(own) + alpha * ones / d
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunResult {
    pub outcome: Outcome,
    pub steps: u64,
}

fn outcome_of(state: &OpinionState) -> Option<Outcome> {
    state.consensus().map(|c| if c == 1 { Outcome::Fixed1 } else { Outcome::Fixed0 })
}

pub(crate) fn validate_run(state: &OpinionState, g: &Graph, acc: &AcceptanceMatrix, schedule: Schedule) -> Result<()> {
    if state.n() != g.n() {
        return Err(Error::invalid(format!("state has {} nodes, graph has {}", state.n(), g.n())));
    }
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    if schedule == Schedule::SyncM2 && !acc.is_unbiased() {
        return Err(Error::invalid("sync-m2 requires an unbiased acceptance matrix (alpha01 = alpha10)"));
    }
    if acc.is_frozen() && state.consensus().is_none() {
        return Err(Error::Frozen);
    }
    Ok(())
}

/// Run loop without validation; callers check the preconditions once.
pub(crate) fn run_unchecked<R: Rng + ?Sized>(
    state: &mut OpinionState,
    g: &Graph,
    acc: &AcceptanceMatrix,
    schedule: Schedule,
    max_steps: u64,
    rng: &mut R,
) -> RunResult {
    let mut steps = 0;
    loop {
        if let Some(outcome) = outcome_of(state) {
            return RunResult { outcome, steps };
        }
        if steps >= max_steps {
            return RunResult { outcome: Outcome::Censored, steps };
        }
        match schedule {
            Schedule::Async => step_async(state, g, acc, rng),
            Schedule::SyncM1 => step_sync_m1(state, g, acc, rng),
            Schedule::SyncM2 => step_sync_m2(state, g, acc, rng).expect("validated unbiased"),
        }
        steps += 1;
    }
}

/// Iterates the chosen schedule until consensus or `max_steps` iterations.
/// Under the asynchronous schedule every single-node iteration counts,
/// including rejected ones.
pub fn run_to_consensus<R: Rng + ?Sized>(
    state: &mut OpinionState,
    g: &Graph,
    acc: &AcceptanceMatrix,
    schedule: Schedule,
    max_steps: u64,
    rng: &mut R,
) -> Result<RunResult> {
    validate_run(state, g, acc, schedule)?;
    Ok(run_unchecked(state, g, acc, schedule, max_steps, rng))
}

/// Runs the lumped synchronous clique chain from `k` holders of opinion 1.
pub fn run_clique_kernel_to_consensus<R: Rng + ?Sized>(
    n: usize,
    k: usize,
    acc: &AcceptanceMatrix,
    max_steps: u64,
    rng: &mut R,
) -> Result<RunResult> {
    if n == 0 || k > n {
        return Err(Error::invalid(format!("k = {k} out of range for n = {n}")));
    }
    if acc.is_frozen() && k != 0 && k != n {
        return Err(Error::Frozen);
    }
    let mut k = k;
    let mut steps = 0;
    loop {
        if k == 0 {
            return Ok(RunResult { outcome: Outcome::Fixed0, steps });
        }
        if k == n {
            return Ok(RunResult { outcome: Outcome::Fixed1, steps });
        }
        if steps >= max_steps {
            return Ok(RunResult { outcome: Outcome::Censored, steps });
        }
        k = step_sync_clique_kernel(k, n, acc, rng)?;
        steps += 1;
    }
}
