//! Brute-force analysis over all `2^n` configurations.
//!
//! Configurations are `n`-bit integers (bit `u` is node `u`'s opinion). The
//! two consensus configurations are absorbing; every other configuration is
//! transient and gets one unknown in the absorption linear systems.

use rayon::prelude::*;

use crate::dynamics::{next_one_probability, AcceptanceMatrix, OpinionState, Schedule, SyncRule};
use crate::linalg::DenseMatrix;
use crate::{Error, Graph, Result};

/// Largest `n` for the asynchronous oracle.
pub const MAX_ASYNC_NODES: usize = 14;
/// Largest `n` for the synchronous oracle.
pub const MAX_SYNC_NODES: usize = 12;
/// Transient-state count up to which the oracle uses a dense LU solve.
const DENSE_LIMIT: usize = 4096;
const GAUSS_SEIDEL_MAX_SWEEPS: usize = 2_000_000;

fn sync_rule(schedule: Schedule, acc: &AcceptanceMatrix) -> Result<Option<SyncRule>> {
    match schedule {
        Schedule::Async => Ok(None),
        Schedule::SyncM1 => Ok(Some(SyncRule::M1)),
        Schedule::SyncM2 if acc.is_unbiased() => Ok(Some(SyncRule::M2)),
        Schedule::SyncM2 => Err(Error::invalid("sync-m2 requires an unbiased acceptance matrix (alpha01 = alpha10)")),
    }
}

/// Sparse row of the asynchronous kernel from configuration `x`.
pub fn async_kernel_row(g: &Graph, acc: &AcceptanceMatrix, x: u64) -> Vec<(u64, f64)> {
    let n = g.n();
    let mut row: Vec<(u64, f64)> = Vec::with_capacity(n + 1);
    let mut stay = 0.0;
    for u in 0..n {
        let own = (x >> u & 1) as u8;
        let nbrs = g.neighbors(u);
        let weight = 1.0 / (n as f64 * nbrs.len() as f64);
        let mut flip = 0.0;
        for &v in nbrs {
            let other = (x >> v & 1) as u8;
            if other != own {
                flip += weight * acc.accept(own, other);
            }
        }
        if flip > 0.0 {
            row.push((x ^ 1 << u, flip));
        }
        stay += 1.0 / n as f64 - flip;
    }
    row.push((x, stay));
    row
}

/// Dense row of a synchronous kernel: product of per-node two-point laws,
/// filled in place.
pub fn sync_kernel_row(g: &Graph, acc: &AcceptanceMatrix, rule: SyncRule, x: u64, row: &mut [f64]) {
    let n = g.n();
    debug_assert_eq!(row.len(), 1 << n);
    row[0] = 1.0;
    for u in 0..n {
        let p = next_one_probability(rule, g, acc, u, |v| (x >> v & 1) as u8);
        let half = 1usize << u;
        for idx in (0..half).rev() {
            let base = row[idx];
            row[idx | half] = base * p;
            row[idx] = base * (1.0 - p);
        }
    }
}

/// The full one-step configuration kernel as a dense `2^n x 2^n` matrix.
pub fn configuration_kernel(g: &Graph, acc: &AcceptanceMatrix, schedule: Schedule) -> Result<DenseMatrix> {
    let n = g.n();
    if n > MAX_SYNC_NODES {
        return Err(Error::Resource(format!("dense kernel capped at n = {MAX_SYNC_NODES}, got {n}")));
    }
    let size = 1usize << n;
    let mut m = DenseMatrix::zeros(size);
    match sync_rule(schedule, acc)? {
        None => {
            for x in 0..size {
                for (y, p) in async_kernel_row(g, acc, x as u64) {
                    m[(x, y as usize)] += p;
                }
            }
        }
        Some(rule) => {
            for x in 0..size {
                sync_kernel_row(g, acc, rule, x as u64, m.row_mut(x));
            }
        }
    }
    Ok(m)
}

/// Absorption probabilities and expected consensus times for every
/// configuration, indexed by the configuration integer.
#[derive(Debug, Clone)]
pub struct OracleSolution {
    pub n: usize,
    pub fixation1: Vec<f64>,
    pub expected_time: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleResult {
    pub fixation1: f64,
    pub expected_time: f64,
}

impl OracleSolution {
    pub fn at(&self, config: u64) -> OracleResult {
        OracleResult { fixation1: self.fixation1[config as usize], expected_time: self.expected_time[config as usize] }
    }
}

/// Solves the absorption systems over all configurations.
pub fn solve_oracle(g: &Graph, acc: &AcceptanceMatrix, schedule: Schedule) -> Result<OracleSolution> {
    let n = g.n();
    let rule = sync_rule(schedule, acc)?;
    let cap = if rule.is_some() { MAX_SYNC_NODES } else { MAX_ASYNC_NODES };
    if n > cap {
        return Err(Error::Resource(format!("{schedule} oracle capped at n = {cap}, got {n}")));
    }
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    if acc.is_frozen() && n > 1 {
        return Err(Error::Frozen);
    }
    let size = 1usize << n;
    let full = (size - 1) as u64;
    let mut fixation1 = vec![0.0; size];
    let mut expected_time = vec![0.0; size];
    fixation1[size - 1] = 1.0;
    if n == 1 {
        return Ok(OracleSolution { n, fixation1, expected_time });
    }
    let transient = size - 2;
    // transient configuration x has index x - 1
    let (fix, time) = match rule {
        Some(rule) => {
            let mut a = DenseMatrix::zeros(transient);
            let mut b_fix = vec![0.0; transient];
            let mut scratch = vec![0.0; size];
            for x in 1..full {
                sync_kernel_row(g, acc, rule, x, &mut scratch);
                let i = x as usize - 1;
                b_fix[i] = scratch[size - 1];
                let row = a.row_mut(i);
                for (j, slot) in row.iter_mut().enumerate() {
                    *slot = -scratch[j + 1];
                }
                row[i] += 1.0;
            }
            let mut sol = a.solve_many(vec![b_fix, vec![1.0; transient]]).map_err(divergent)?;
            let time = sol.pop().expect("two right-hand sides");
            (sol.pop().expect("two right-hand sides"), time)
        }
        None => {
            let rows: Vec<Vec<(u64, f64)>> =
                (1..full).into_par_iter().map(|x| async_kernel_row(g, acc, x)).collect();
            if transient <= DENSE_LIMIT {
                let mut a = DenseMatrix::identity(transient);
                let mut b_fix = vec![0.0; transient];
                for (i, row) in rows.iter().enumerate() {
                    for &(y, p) in row {
                        if y == full {
                            b_fix[i] += p;
                        } else if y != 0 {
                            a[(i, y as usize - 1)] -= p;
                        }
                    }
                }
                let mut sol = a.solve_many(vec![b_fix, vec![1.0; transient]]).map_err(divergent)?;
                let time = sol.pop().expect("two right-hand sides");
                (sol.pop().expect("two right-hand sides"), time)
            } else {
                gauss_seidel_absorption(&rows, full)?
            }
        }
    };
    for x in 1..size - 1 {
        fixation1[x] = fix[x - 1];
        expected_time[x] = time[x - 1];
    }
    if expected_time.iter().any(|t| !t.is_finite() || *t < -1e-9) {
        return Err(divergent(Error::Singular));
    }
    Ok(OracleSolution { n, fixation1, expected_time })
}

fn divergent(_: Error) -> Error {
    Error::Divergent("some configuration cannot reach consensus".into())
}

/// Iterative solve for the large asynchronous case; rows are sparse.
fn gauss_seidel_absorption(rows: &[Vec<(u64, f64)>], full: u64) -> Result<(Vec<f64>, Vec<f64>)> {
    let m = rows.len();
    let mut fix = vec![0.0; m];
    let mut time = vec![0.0; m];
    for sweep in 0..GAUSS_SEIDEL_MAX_SWEEPS {
        let mut delta: f64 = 0.0;
        let mut scale: f64 = 1.0;
        for (i, row) in rows.iter().enumerate() {
            let (mut f_acc, mut t_acc, mut self_p) = (0.0, 1.0, 0.0);
            for &(y, p) in row {
                if y == full {
                    f_acc += p;
                } else if y != 0 {
                    let j = y as usize - 1;
                    if j == i {
                        self_p += p;
                    } else {
                        f_acc += p * fix[j];
                        t_acc += p * time[j];
                    }
                }
            }
            if self_p >= 1.0 {
                return Err(divergent(Error::Singular));
            }
            let (f_new, t_new) = (f_acc / (1.0 - self_p), t_acc / (1.0 - self_p));
            delta = delta.max((f_new - fix[i]).abs()).max((t_new - time[i]).abs());
            scale = scale.max(t_new.abs());
            fix[i] = f_new;
            time[i] = t_new;
        }
        if delta <= 1e-15 * scale && sweep > 0 {
            return Ok((fix, time));
        }
    }
    Err(Error::Resource("Gauss-Seidel iteration did not converge".into()))
}

/// Fixation probability of opinion 1 and expected consensus time from
/// `initial`, by exact enumeration of the configuration chain.
pub fn full_state_oracle(
    g: &Graph,
    acc: &AcceptanceMatrix,
    schedule: Schedule,
    initial: &OpinionState,
) -> Result<OracleResult> {
    if initial.n() != g.n() {
        return Err(Error::invalid(format!("state has {} nodes, graph has {}", initial.n(), g.n())));
    }
    if let Some(c) = initial.consensus() {
        // absorbing already; the frozen check only applies to mixed starts
        let cap = if schedule.is_sync() { MAX_SYNC_NODES } else { MAX_ASYNC_NODES };
        if g.n() > cap {
            return Err(Error::Resource(format!("{schedule} oracle capped at n = {cap}, got {}", g.n())));
        }
        return Ok(OracleResult { fixation1: f64::from(c), expected_time: 0.0 });
    }
    Ok(solve_oracle(g, acc, schedule)?.at(initial.to_config()))
}
