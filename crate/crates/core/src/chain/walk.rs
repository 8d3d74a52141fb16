//! Lazy random walks on the graph: transition matrices, stationary law and
//! expected hitting times. Also the cut-ratio check for regular graphs.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::AcceptanceMatrix;
use crate::linalg::DenseMatrix;
use crate::{Error, Graph, Result};

/// Largest graph accepted by [`walk_analysis`].
pub const MAX_WALK_NODES: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WalkMode {
    /// `(1 - alpha) I + alpha D^-1 A`
    SyncLazy,
    /// `(1 - alpha/n) I + (alpha/n) D^-1 A`
    AsyncLazy,
    /// `D^-1 A`
    Plain,
}

#[derive(Debug, Clone)]
pub struct WalkAnalysis {
    pub transition: DenseMatrix,
    /// `pi_i = d_i / sum_j d_j`
    pub stationary: Vec<f64>,
    /// `hitting[(u, v)] = E_u[T_v]`
    pub hitting: DenseMatrix,
    pub t_hit: f64,
}

pub fn transition_matrix(g: &Graph, alpha: f64, mode: WalkMode) -> Result<DenseMatrix> {
    let n = g.n();
    let laziness = match mode {
        WalkMode::Plain => 0.0,
        WalkMode::SyncLazy | WalkMode::AsyncLazy => {
            if !(alpha > 0.0 && alpha <= 1.0) {
                return Err(Error::invalid(format!("alpha = {alpha} must lie in (0, 1] for a lazy walk")));
            }
            if mode == WalkMode::SyncLazy {
                1.0 - alpha
            } else {
                1.0 - alpha / n as f64
            }
        }
    };
    let mut p = DenseMatrix::zeros(n);
    for u in 0..n {
        let w = (1.0 - laziness) / g.degree(u) as f64;
        for &v in g.neighbors(u) {
            p[(u, v)] += w;
        }
        p[(u, u)] += laziness;
    }
    Ok(p)
}

/// Transition matrix, stationary distribution and all expected hitting
/// times, from the fundamental matrix `Z = (I - P + 1 pi^T)^-1`:
/// `E_u[T_v] = (Z_vv - Z_uv) / pi_v`. One `O(n^3)` factorisation.
pub fn walk_analysis(g: &Graph, alpha: f64, mode: WalkMode) -> Result<WalkAnalysis> {
    let n = g.n();
    if n > MAX_WALK_NODES {
        return Err(Error::Resource(format!("walk analysis capped at n = {MAX_WALK_NODES}, got {n}")));
    }
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    let transition = transition_matrix(g, alpha, mode)?;
    let vol = g.volume() as f64;
    let stationary: Vec<f64> = (0..n).map(|u| g.degree(u) as f64 / vol).collect();
    // Z^T solves (I - P + 1 pi^T)^T Z^T = I; columns of Z^T are rows of Z.
    let mut a = DenseMatrix::identity(n);
    for i in 0..n {
        for j in 0..n {
            a[(j, i)] += stationary[j] - transition[(i, j)];
        }
    }
    let unit = |i: usize| {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        e
    };
    // z_rows[u][v] = Z_uv
    let z_rows = a.solve_many((0..n).map(unit).collect()).map_err(|_| Error::Divergent("walk is not ergodic".into()))?;
    let mut hitting = DenseMatrix::zeros(n);
    let mut t_hit = 0.0f64;
    for u in 0..n {
        for v in 0..n {
            if u != v {
                let h = (z_rows[v][v] - z_rows[u][v]) / stationary[v];
                hitting[(u, v)] = h;
                t_hit = t_hit.max(h);
            }
        }
    }
    Ok(WalkAnalysis { transition, stationary, hitting, t_hit })
}

/// Ratios `p_S / q_S` for random nonempty proper subsets `S` of a regular
/// graph, where `p_S` (`q_S`) is the asynchronous probability that the set of
/// 1-holders grows (shrinks) by one when it currently equals `S`.
pub fn fitness_cut_ratios<R: Rng + ?Sized>(
    g: &Graph,
    acc: &AcceptanceMatrix,
    samples: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let n = g.n();
    if g.regular_degree().is_none() {
        return Err(Error::invalid("cut-ratio check needs a regular graph"));
    }
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    if n < 2 {
        return Err(Error::invalid("cut-ratio check needs n >= 2"));
    }
    if acc.alpha01() == 0.0 || acc.alpha10() == 0.0 {
        return Err(Error::invalid("cut-ratio check needs alpha01 > 0 and alpha10 > 0"));
    }
    let mut ratios = Vec::with_capacity(samples);
    let mut inside = vec![false; n];
    while ratios.len() < samples {
        for slot in inside.iter_mut() {
            *slot = rng.gen();
        }
        let size = inside.iter().filter(|&&b| b).count();
        if size == 0 || size == n {
            continue;
        }
        let (mut grow, mut shrink) = (0.0, 0.0);
        for u in 0..n {
            let d = g.degree(u) as f64;
            let across = g.neighbors(u).iter().filter(|&&v| inside[v] != inside[u]).count() as f64;
            let p = across / (n as f64 * d);
            if inside[u] {
                shrink += p * acc.alpha10();
            } else {
                grow += p * acc.alpha01();
            }
        }
        ratios.push(grow / shrink);
    }
    Ok(ratios)
}

/// True iff every sampled `p_S / q_S` equals `alpha01 / alpha10` to 1e-12.
pub fn fitness_cut_invariance_check<R: Rng + ?Sized>(
    g: &Graph,
    acc: &AcceptanceMatrix,
    samples: usize,
    rng: &mut R,
) -> Result<bool> {
    let r = acc.alpha01() / acc.alpha10();
    let ratios = fitness_cut_ratios(g, acc, samples, rng)?;
    Ok(ratios.iter().all(|x| (x - r).abs() <= 1e-12 * r.max(1.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::RngStream;

    /// Hitting times by one absorbing solve per target:
    /// `(I - P restricted to V - v) h = 1`.
    fn per_target_hitting(p: &DenseMatrix) -> DenseMatrix {
        let n = p.dim();
        let mut hitting = DenseMatrix::zeros(n);
        for v in 0..n {
            let others: Vec<usize> = (0..n).filter(|&u| u != v).collect();
            let mut a = DenseMatrix::identity(n - 1);
            for (i, &u) in others.iter().enumerate() {
                for (j, &w) in others.iter().enumerate() {
                    a[(i, j)] -= p[(u, w)];
                }
            }
            let h = a.solve(vec![1.0; n - 1]).unwrap();
            for (i, &u) in others.iter().enumerate() {
                hitting[(u, v)] = h[i];
            }
        }
        hitting
    }

    #[test]
    fn clique_plain_hitting_times() {
        for n in [3, 5, 8] {
            let w = walk_analysis(&Graph::clique(n, false).unwrap(), 1.0, WalkMode::Plain).unwrap();
            for u in 0..n {
                assert_eq!(w.hitting[(u, u)], 0.0);
                for v in 0..n {
                    if u != v {
                        assert!((w.hitting[(u, v)] - (n - 1) as f64).abs() < 1e-10);
                    }
                }
            }
        }
    }

    #[test]
    fn sync_lazy_rescales_plain_hitting() {
        let g = Graph::cycle(6).unwrap();
        let plain = walk_analysis(&g, 1.0, WalkMode::Plain).unwrap();
        let lazy = walk_analysis(&g, 0.3, WalkMode::SyncLazy).unwrap();
        assert!((lazy.hitting.max_abs_diff(&{
            let mut m = plain.hitting.clone();
            for u in 0..6 {
                for v in 0..6 {
                    m[(u, v)] /= 0.3;
                }
            }
            m
        })) < 1e-9);
        assert!((lazy.t_hit - plain.t_hit / 0.3).abs() < 1e-9);
    }

    #[test]
    fn stationary_and_rows() {
        let g = Graph::star(5).unwrap();
        for mode in [WalkMode::Plain, WalkMode::SyncLazy, WalkMode::AsyncLazy] {
            let w = walk_analysis(&g, 0.5, mode).unwrap();
            assert_eq!(w.stationary[0], 0.5);
            for i in 0..5 {
                assert!((w.transition.row(i).iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
            let back = w.transition.left_mul_vec(&w.stationary);
            for (a, b) in back.iter().zip(&w.stationary) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn hitting_matches_per_target_solves() {
        let g = Graph::from_edges(6, &[(0, 1), (1, 2), (2, 3), (3, 0), (3, 4), (4, 5), (5, 5)], true).unwrap();
        for mode in [WalkMode::Plain, WalkMode::SyncLazy, WalkMode::AsyncLazy] {
            let w = walk_analysis(&g, 0.4, mode).unwrap();
            let oracle = per_target_hitting(&w.transition);
            assert!(w.hitting.max_abs_diff(&oracle) < 1e-8 * w.t_hit);
        }
    }

    #[test]
    fn walk_errors() {
        let g = Graph::cycle(4).unwrap();
        assert!(walk_analysis(&g, 0.0, WalkMode::SyncLazy).is_err());
        let split = Graph::from_edges(4, &[(0, 1), (2, 3)], false).unwrap();
        assert_eq!(walk_analysis(&split, 0.5, WalkMode::Plain).err(), Some(Error::Disconnected));
    }

    #[test]
    fn cut_ratio_invariance() {
        let mut rng = RngStream::new(1, 0).rng();
        let a = AcceptanceMatrix::new(0.3, 0.9).unwrap();
        assert!(fitness_cut_invariance_check(&Graph::cycle(8).unwrap(), &a, 200, &mut rng).unwrap());
        let a3 = AcceptanceMatrix::new(0.9, 0.3).unwrap();
        let ratios = fitness_cut_ratios(&Graph::clique(5, false).unwrap(), &a3, 50, &mut rng).unwrap();
        assert!(ratios.iter().all(|r| (r - 3.0).abs() < 1e-12));
        assert!(fitness_cut_invariance_check(&Graph::star(5).unwrap(), &a, 10, &mut rng).is_err());
    }
}
