//! Birth-death chains on `0..=n` and their absorption quantities.

use crate::dynamics::AcceptanceMatrix;
use crate::linalg::solve_tridiagonal;
use crate::{Error, Result};

const ROW_TOL: f64 = 1e-12;

/// Transition triples `(p_k, q_k, r_k)`: up, down and hold probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct BirthDeathChain {
    p: Vec<f64>,
    q: Vec<f64>,
    r: Vec<f64>,
}

impl BirthDeathChain {
    /// Builds a chain from up/down probabilities; holds are the remainder.
    /// Requires `p[0] = 0` and `q[n] = 0`.
    pub fn new(p: Vec<f64>, q: Vec<f64>) -> Result<Self> {
        if p.len() != q.len() || p.len() < 2 {
            return Err(Error::invalid("p and q must have equal length n + 1 >= 2"));
        }
        let n = p.len() - 1;
        if p[0] != 0.0 || q[n] != 0.0 {
            return Err(Error::invalid("p_0 and q_n must be zero"));
        }
        let mut r = Vec::with_capacity(n + 1);
        for (k, (&pk, &qk)) in p.iter().zip(&q).enumerate() {
            if !(0.0..=1.0).contains(&pk) || !(0.0..=1.0).contains(&qk) || pk + qk > 1.0 + ROW_TOL {
                return Err(Error::invalid(format!("invalid transition probabilities at state {k}")));
            }
            r.push((1.0 - pk - qk).max(0.0));
        }
        Ok(BirthDeathChain { p, q, r })
    }

    /// States `0..=n`; this returns `n`.
    pub fn n(&self) -> usize {
        self.p.len() - 1
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn r(&self) -> &[f64] {
        &self.r
    }

    /// One-step mean `sum_k' P(k -> k') k'`.
    pub fn step_mean(&self, k: usize) -> f64 {
        let k_f = k as f64;
        self.p[k] * (k_f + 1.0) + self.q[k] * (k_f - 1.0) + self.r[k] * k_f
    }
}

/// Number of 1-holders under asynchronous updates on the loop-free clique:
/// `p_k = alpha01 k(n-k)/(n(n-1))`, `q_k = alpha10 k(n-k)/(n(n-1))`.
pub fn clique_async_chain(n: usize, acc: &AcceptanceMatrix) -> Result<BirthDeathChain> {
    if n < 2 {
        return Err(Error::invalid(format!("clique chain needs n >= 2, got {n}")));
    }
    let denom = (n * (n - 1)) as f64;
    let mix = |k: usize| (k * (n - k)) as f64 / denom;
    let p = (0..=n).map(|k| acc.alpha01() * mix(k)).collect();
    let q = (0..=n).map(|k| acc.alpha10() * mix(k)).collect();
    BirthDeathChain::new(p, q)
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Probability of absorption at `n` from state `k`, from the ratio formula
/// `phi_k = (1 + sum_{i<k} prod_{j<=i} g_j) / (1 + sum_{i<n} prod_{j<=i} g_j)`
/// with `g_j = q_j / p_j`, evaluated in log space.
///
/// A blocked up-move (`p_j = 0`) at or above `k` gives 0; one below `k` acts
/// as a reflecting floor, so the sums restart above the highest such state.
pub fn fixation_birth_death(chain: &BirthDeathChain, k: usize) -> Result<f64> {
    let n = chain.n();
    if k > n {
        return Err(Error::invalid(format!("state {k} out of range 0..={n}")));
    }
    if k == 0 {
        return Ok(0.0);
    }
    if k == n {
        return Ok(1.0);
    }
    let (p, q) = (chain.p(), chain.q());
    if (k..n).any(|j| p[j] == 0.0) {
        return Ok(0.0);
    }
    let floor = (1..k).rev().find(|&j| p[j] == 0.0).unwrap_or(0);
    // log prod_{j=floor+1}^{i} g_j for i = floor..n-1 (empty product at i = floor)
    let mut logs = Vec::with_capacity(n - floor);
    let mut acc = 0.0;
    logs.push(0.0);
    for j in floor + 1..n {
        acc += if q[j] == 0.0 { f64::NEG_INFINITY } else { q[j].ln() - p[j].ln() };
        logs.push(acc);
    }
    let num = log_sum_exp(&logs[..k - floor]);
    let den = log_sum_exp(&logs);
    Ok((num - den).exp())
}

/// Expected steps to absorption from every state, by solving `B T = 1` on
/// the interior states with `B` tridiagonal (diagonal `p_k + q_k`,
/// off-diagonals `-q_k` below and `-p_k` above). Entries 0 and `n` are 0.
pub fn absorption_times_birth_death(chain: &BirthDeathChain) -> Result<Vec<f64>> {
    let n = chain.n();
    let m = n - 1;
    let (p, q) = (chain.p(), chain.q());
    if let Some(j) = (1..n).find(|&j| p[j] == 0.0 && q[j] == 0.0) {
        return Err(Error::Divergent(format!("interior state {j} is absorbing")));
    }
    let diag: Vec<f64> = (1..n).map(|k| p[k] + q[k]).collect();
    let sub: Vec<f64> = (1..n).map(|k| -q[k]).collect();
    let sup: Vec<f64> = (1..n).map(|k| -p[k]).collect();
    let interior = solve_tridiagonal(&sub, &diag, &sup, &vec![1.0; m])
        .map_err(|_| Error::Divergent("absorption unreachable from some interior state".into()))?;
    if interior.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(Error::Divergent("absorption unreachable from some interior state".into()));
    }
    let mut t = Vec::with_capacity(n + 1);
    t.push(0.0);
    t.extend(interior);
    t.push(0.0);
    Ok(t)
}

pub fn absorption_time_birth_death(chain: &BirthDeathChain, k: usize) -> Result<f64> {
    let n = chain.n();
    if k > n {
        return Err(Error::invalid(format!("state {k} out of range 0..={n}")));
    }
    if k == 0 || k == n {
        return Ok(0.0);
    }
    Ok(absorption_times_birth_death(chain)?[k])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseMatrix;

    fn acc(a01: f64, a10: f64) -> AcceptanceMatrix {
        AcceptanceMatrix::new(a01, a10).unwrap()
    }

    /// Dense absorption-probability solve over the full state space.
    fn dense_fixation(chain: &BirthDeathChain) -> Vec<f64> {
        let n = chain.n();
        let mut a = DenseMatrix::zeros(n + 1);
        let mut b = vec![0.0; n + 1];
        for k in 0..=n {
            a[(k, k)] = 1.0;
            if k == 0 || k == n {
                b[k] = if k == n { 1.0 } else { 0.0 };
                continue;
            }
            a[(k, k)] -= chain.r()[k];
            a[(k, k + 1)] -= chain.p()[k];
            a[(k, k - 1)] -= chain.q()[k];
        }
        a.solve(b).unwrap()
    }

    #[test]
    fn clique_chain_values() {
        let c = clique_async_chain(2, &acc(1.0, 1.0)).unwrap();
        assert_eq!((c.p()[1], c.q()[1], c.r()[1]), (0.5, 0.5, 0.0));
        let c = clique_async_chain(3, &acc(0.5, 0.25)).unwrap();
        assert!((c.p()[1] - 1.0 / 6.0).abs() < 1e-15);
        assert!((c.q()[1] - 1.0 / 12.0).abs() < 1e-15);
        for n in 2..10 {
            let c = clique_async_chain(n, &acc(0.3, 0.9)).unwrap();
            assert_eq!(c.p()[0], 0.0);
            assert_eq!(c.q()[n], 0.0);
            assert_eq!(c.r()[0], 1.0);
            assert_eq!(c.r()[n], 1.0);
        }
        assert!(clique_async_chain(1, &acc(1.0, 1.0)).is_err());
    }

    #[test]
    fn chain_validation() {
        assert!(BirthDeathChain::new(vec![0.1, 0.0], vec![0.0, 0.0]).is_err());
        assert!(BirthDeathChain::new(vec![0.0, 0.7, 0.0], vec![0.0, 0.6, 0.0]).is_err());
    }

    #[test]
    fn fixation_boundaries_and_unbiased() {
        for n in 2..12 {
            let c = clique_async_chain(n, &acc(0.6, 0.6)).unwrap();
            assert_eq!(fixation_birth_death(&c, 0).unwrap(), 0.0);
            assert_eq!(fixation_birth_death(&c, n).unwrap(), 1.0);
            for k in 1..n {
                let phi = fixation_birth_death(&c, k).unwrap();
                assert!((phi - k as f64 / n as f64).abs() < 1e-14);
            }
        }
        let c = clique_async_chain(3, &acc(1.0, 1.0)).unwrap();
        assert!(fixation_birth_death(&c, 4).is_err());
    }

    #[test]
    fn fixation_matches_dense_solve() {
        // n = 3, r = 2, k = 1 gives 4/7
        let c = clique_async_chain(3, &acc(1.0, 0.5)).unwrap();
        let phi = fixation_birth_death(&c, 1).unwrap();
        assert!((phi - 4.0 / 7.0).abs() < 1e-15);
        assert!((dense_fixation(&c)[1] - 4.0 / 7.0).abs() < 1e-14);

        let p = vec![0.0, 0.2, 0.05, 0.3, 0.1, 0.0];
        let q = vec![0.0, 0.4, 0.1, 0.2, 0.5, 0.0];
        let c = BirthDeathChain::new(p, q).unwrap();
        let dense = dense_fixation(&c);
        for (k, want) in dense.iter().enumerate() {
            assert!((fixation_birth_death(&c, k).unwrap() - want).abs() < 1e-13);
        }
    }

    #[test]
    fn fixation_limit_rules() {
        // r = 0: no up moves at all
        let c = clique_async_chain(5, &acc(0.0, 0.5)).unwrap();
        assert_eq!(fixation_birth_death(&c, 4).unwrap(), 0.0);
        // down moves blocked everywhere: certain fixation
        let c = clique_async_chain(5, &acc(0.5, 0.0)).unwrap();
        assert!((fixation_birth_death(&c, 1).unwrap() - 1.0).abs() < 1e-15);
        // blocked up-move below k acts as a floor
        let p = vec![0.0, 0.3, 0.0, 0.25, 0.0];
        let q = vec![0.0, 0.2, 0.3, 0.25, 0.0];
        let c = BirthDeathChain::new(p, q).unwrap();
        assert!((fixation_birth_death(&c, 3).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(fixation_birth_death(&c, 2).unwrap(), 0.0);
    }

    #[test]
    fn absorption_small_cases() {
        let c = clique_async_chain(2, &acc(1.0, 1.0)).unwrap();
        assert_eq!(absorption_time_birth_death(&c, 1).unwrap(), 1.0);
        assert_eq!(absorption_time_birth_death(&c, 0).unwrap(), 0.0);
        assert_eq!(absorption_time_birth_death(&c, 2).unwrap(), 0.0);
        // by hand: T1 = 1.5 + T2 / 2, T2 = 1.5 + T1 / 2
        let c = clique_async_chain(3, &acc(1.0, 1.0)).unwrap();
        assert!((absorption_time_birth_death(&c, 1).unwrap() - 3.0).abs() < 1e-14);
    }

    #[test]
    fn absorption_divergence() {
        let c = clique_async_chain(4, &acc(0.0, 0.0)).unwrap();
        assert!(matches!(absorption_time_birth_death(&c, 2), Err(Error::Divergent(_))));
        // 2 <-> 3 trap: state 2 only goes up, state 3 only goes down
        let p = vec![0.0, 0.1, 0.5, 0.0, 0.0];
        let q = vec![0.0, 0.1, 0.0, 0.5, 0.0];
        let c = BirthDeathChain::new(p, q).unwrap();
        assert!(matches!(absorption_times_birth_death(&c), Err(Error::Divergent(_))));
    }

    #[test]
    fn unbiased_chain_is_a_martingale() {
        for n in 2..30 {
            let c = clique_async_chain(n, &acc(0.35, 0.35)).unwrap();
            for k in 0..=n {
                assert!((c.step_mean(k) - k as f64).abs() < 1e-12);
            }
        }
    }
}
