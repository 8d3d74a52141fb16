//! Lazy coalescing random walks, the dual of the unbiased synchronous
//! dynamics.

use rand::Rng;

use crate::dynamics::RngStream;
use crate::{Error, Graph, Result};

fn check_walk(g: &Graph, alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::invalid(format!("alpha = {alpha} must lie in (0, 1]")));
    }
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    Ok(())
}

#[inline]
fn lazy_move<R: Rng + ?Sized>(g: &Graph, alpha: f64, at: usize, rng: &mut R) -> usize {
    if rng.gen::<f64>() < alpha {
        let nb = g.neighbors(at);
        nb[rng.gen_range(0..nb.len())]
    } else {
        at
    }
}

/// One walker per node; each round every walker independently moves to a
/// uniform neighbour with probability `alpha`, and walkers sharing a node
/// merge. Returns the number of rounds until one walker remains, or `None`
/// if that takes more than `max_steps` rounds. Randomness comes from stream
/// `trial_index` of `master_seed`.
pub fn coalescing_walk_trial(
    g: &Graph,
    alpha: f64,
    master_seed: u64,
    trial_index: u64,
    max_steps: u64,
) -> Result<Option<u64>> {
    check_walk(g, alpha)?;
    Ok(coalesce(g, alpha, max_steps, &mut RngStream::new(master_seed, trial_index).rng()))
}

pub(crate) fn coalesce<R: Rng + ?Sized>(g: &Graph, alpha: f64, max_steps: u64, rng: &mut R) -> Option<u64> {
    let n = g.n();
    let mut walkers: Vec<usize> = (0..n).collect();
    // stamp[v] == round marks v as already occupied this round
    let mut stamp = vec![u64::MAX; n];
    let mut steps = 0u64;
    while walkers.len() > 1 {
        if steps >= max_steps {
            return None;
        }
        for w in walkers.iter_mut() {
            *w = lazy_move(g, alpha, *w, rng);
        }
        walkers.retain(|&w| {
            let fresh = stamp[w] != steps;
            stamp[w] = steps;
            fresh
        });
        steps += 1;
    }
    Some(steps)
}

/// Rounds until two independent lazy walks started at `u` and `v` occupy the
/// same node, or `None` past `max_steps`.
pub fn meeting_time_trial<R: Rng + ?Sized>(
    g: &Graph,
    alpha: f64,
    u: usize,
    v: usize,
    max_steps: u64,
    rng: &mut R,
) -> Result<Option<u64>> {
    check_walk(g, alpha)?;
    if u >= g.n() || v >= g.n() {
        return Err(Error::invalid(format!("start nodes ({u}, {v}) out of range")));
    }
    let (mut a, mut b) = (u, v);
    let mut steps = 0;
    while a != b {
        if steps >= max_steps {
            return Ok(None);
        }
        a = lazy_move(g, alpha, a, rng);
        b = lazy_move(g, alpha, b, rng);
        steps += 1;
    }
    Ok(Some(steps))
}
