//! Closed-form fixation probabilities, consensus times and drift quantities.

use crate::dynamics::AcceptanceMatrix;
use crate::linalg::CompensatedSum;
use crate::{Error, Graph, Result};

/// Below this distance from 1 the fixation formula is replaced by `k/n`.
pub const NEUTRAL_R_TOL: f64 = 1e-8;

/// Fixation probability of opinion 1 from `k` of `n` holders under constant
/// fitness ratio `r`: `(1 - r^-k) / (1 - r^-n)`, with the limits `k/n` at
/// `r = 1` and 0 at `r = 0`.
pub fn fixation_closed_form(r: f64, n: usize, k: usize) -> Result<f64> {
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::invalid(format!("fitness ratio r = {r} must be finite and non-negative")));
    }
    if n == 0 || k > n {
        return Err(Error::invalid(format!("k = {k} out of range for n = {n}")));
    }
    if k == n {
        return Ok(1.0);
    }
    if k == 0 || r == 0.0 {
        return Ok(0.0);
    }
    if (r - 1.0).abs() < NEUTRAL_R_TOL {
        return Ok(k as f64 / n as f64);
    }
    let (k, n) = (k as f64, n as f64);
    let ln_r = r.ln();
    if r > 1.0 {
        // (1 - e^{-k ln r}) / (1 - e^{-n ln r})
        Ok((-k * ln_r).exp_m1() / (-n * ln_r).exp_m1())
    } else {
        // r^{n-k} (1 - r^k) / (1 - r^n)
        Ok(((n - k) * ln_r).exp() * (k * ln_r).exp_m1() / (n * ln_r).exp_m1())
    }
}

/// `H_0..=H_n` by compensated summation.
pub fn harmonic_numbers(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut sum = CompensatedSum::default();
    out.push(0.0);
    for j in 1..=n {
        sum.add(1.0 / j as f64);
        out.push(sum.value());
    }
    out
}

/// Exact expected asynchronous consensus time on the loop-free clique in
/// the unbiased case:
/// `(n-1)/alpha * ((n-k)(H_{n-1} - H_{n-k}) + k(H_{n-1} - H_{k-1}))`.
pub fn unbiased_clique_time_closed(n: usize, k: usize, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::invalid(format!("alpha = {alpha} must lie in (0, 1]")));
    }
    if n < 2 || k > n {
        return Err(Error::invalid(format!("k = {k} out of range for n = {n}")));
    }
    if k == 0 || k == n {
        return Ok(0.0);
    }
    let h = harmonic_numbers(n);
    let (nf, kf) = (n as f64, k as f64);
    let inner = (nf - kf) * (h[n - 1] - h[n - k]) + kf * (h[n - 1] - h[k - 1]);
    Ok((nf - 1.0) / alpha * inner)
}

/// Binary entropy in nats, with `h(0) = h(1) = 0`.
pub fn entropy_h(p: f64) -> f64 {
    assert!((0.0..=1.0).contains(&p), "entropy_h needs p in [0, 1], got {p}");
    let term = |x: f64| if x == 0.0 { 0.0 } else { -x * x.ln() };
    term(p) + term(1.0 - p)
}

/// Diffusion approximation `n^2 h(k/n) / alpha` of the unbiased clique time.
pub fn diffusion_estimate(n: usize, k: usize, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::invalid(format!("alpha = {alpha} must lie in (0, 1]")));
    }
    if k == 0 || k >= n {
        return Err(Error::invalid(format!("diffusion estimate needs 1 <= k <= n - 1, got k = {k}, n = {n}")));
    }
    let nf = n as f64;
    Ok(nf * nf * entropy_h(k as f64 / nf) / alpha)
}

/// `sum_{l=0}^{m-1} r^l`, accurate for `r` near 1.
fn geometric_sum(r: f64, ln_r: f64, m: usize) -> f64 {
    if r == 1.0 {
        m as f64
    } else {
        (m as f64 * ln_r).exp_m1() / ln_r.exp_m1()
    }
}

/// Exact expected asynchronous consensus time on the loop-free clique for
/// any positive `alpha01`, `alpha10`:
///
/// `T_k = sum_s q_s^-1 (sum_{l<=min(s,k)} r^{s-l}) (sum_{l<=n-max(s,k)} r^{l-1}) / sum_{l<=n} r^{l-1}`
///
/// Each inner sum is a geometric series, so the evaluation is `O(n)`. For
/// `r > 1` the opinions are relabelled (`k -> n - k`, matrix swapped) so the
/// powers stay bounded.
pub fn glaz_time(n: usize, k: usize, acc: &AcceptanceMatrix) -> Result<f64> {
    if acc.alpha01() == 0.0 || acc.alpha10() == 0.0 {
        return Err(Error::invalid(
            "glaz_time needs alpha01 > 0 and alpha10 > 0; use the tridiagonal solve otherwise",
        ));
    }
    if n < 2 || k > n {
        return Err(Error::invalid(format!("k = {k} out of range for n = {n}")));
    }
    if k == 0 || k == n {
        return Ok(0.0);
    }
    let r = acc.alpha01() / acc.alpha10();
    if r > 1.0 {
        return glaz_time(n, n - k, &acc.swapped());
    }
    let ln_r = r.ln();
    let pair_rate = |s: usize| acc.alpha10() * (s * (n - s)) as f64 / (n * (n - 1)) as f64;
    let total: CompensatedSum = (1..n)
        .map(|s| {
            let lower = r.powi(s.saturating_sub(k) as i32) * geometric_sum(r, ln_r, s.min(k));
            let upper = geometric_sum(r, ln_r, n - s.max(k));
            lower * upper / pair_rate(s)
        })
        .collect();
    Ok(total.value() / geometric_sum(r, ln_r, n))
}

/// Drift upper bound on the synchronous biased clique consensus time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftBound {
    /// `n k / (eps (n - 1))`
    pub bound: f64,
    /// `min(2k/eps, n/eps)`
    pub simplified: f64,
}

pub fn drift_bound_sync(n: usize, k: usize, eps: f64) -> Result<DriftBound> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::invalid(format!("eps = {eps} must lie in (0, 1]")));
    }
    if n < 2 || k == 0 || k >= n {
        return Err(Error::invalid(format!("drift bound needs 1 <= k <= n - 1, got k = {k}, n = {n}")));
    }
    let (nf, kf) = (n as f64, k as f64);
    Ok(DriftBound { bound: nf * kf / (eps * (nf - 1.0)), simplified: (2.0 * kf / eps).min(nf / eps) })
}

/// One-step conditional mean of the opinion-1 fraction on the clique with
/// loops: `y + (alpha01 - alpha10) y (1 - y)`.
pub fn sync_drift(y: f64, acc: &AcceptanceMatrix) -> f64 {
    y + (acc.alpha01() - acc.alpha10()) * y * (1.0 - y)
}

/// Binomial(m, p) probabilities, by the ratio recurrence outward from the
/// mode so nothing overflows and tails underflow harmlessly to zero.
fn binomial_pmf(m: usize, p: f64) -> Vec<f64> {
    let mut pmf = vec![0.0; m + 1];
    if p <= 0.0 {
        pmf[0] = 1.0;
        return pmf;
    }
    if p >= 1.0 {
        pmf[m] = 1.0;
        return pmf;
    }
    let odds = p / (1.0 - p);
    let mode = (((m + 1) as f64 * p).floor() as usize).min(m);
    pmf[mode] = 1.0;
    for j in mode..m {
        pmf[j + 1] = pmf[j] * odds * (m - j) as f64 / (j + 1) as f64;
    }
    for j in (0..mode).rev() {
        pmf[j] = pmf[j + 1] / odds * (j + 1) as f64 / (m - j) as f64;
    }
    let total = pmf.iter().copied().collect::<CompensatedSum>().value();
    pmf.iter_mut().for_each(|x| *x /= total);
    pmf
}

/// Exact distribution of the next count under the lumped synchronous clique
/// step from `k` holders: Binomial(`k`, `1 - alpha10 (1 - k/n)`) plus an
/// independent Binomial(`n - k`, `alpha01 k/n`).
pub fn sync_clique_kernel_distribution(n: usize, k: usize, acc: &AcceptanceMatrix) -> Result<Vec<f64>> {
    if n == 0 || k > n {
        return Err(Error::invalid(format!("k = {k} out of range for n = {n}")));
    }
    let y = k as f64 / n as f64;
    let stay = binomial_pmf(k, 1.0 - acc.alpha10() * (1.0 - y));
    let join = binomial_pmf(n - k, acc.alpha01() * y);
    let mut dist = vec![0.0; n + 1];
    for (i, &a) in stay.iter().enumerate() {
        if a == 0.0 {
            continue;
        }
        for (d, &b) in dist[i..].iter_mut().zip(&join) {
            *d += a * b;
        }
    }
    Ok(dist)
}

/// Degree-weighted fixation probability `sum_{u in W} d_u / sum_u d_u`.
pub fn degree_weighted_fixation(g: &Graph, ones: &[usize]) -> f64 {
    let mut mark = vec![false; g.n()];
    for &u in ones {
        mark[u] = true;
    }
    let w: usize = (0..g.n()).filter(|&u| mark[u]).map(|u| g.degree(u)).sum();
    w as f64 / g.volume() as f64
}
