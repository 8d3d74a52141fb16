//! Small numerical kernels: tridiagonal and dense solves, compensated sums.

use crate::{Error, Result};

/// Solves a tridiagonal system by forward elimination and back substitution.
///
/// `sub[i]` multiplies `x[i - 1]` in row `i` (`sub[0]` unused), `sup[i]`
/// multiplies `x[i + 1]` (last entry unused). No pivoting; a vanishing pivot
/// reports [`Error::Singular`].
pub fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let m = diag.len();
    assert!(sub.len() == m && sup.len() == m && rhs.len() == m, "tridiagonal band length mismatch");
    if m == 0 {
        return Ok(Vec::new());
    }
    let mut c = vec![0.0; m];
    let mut d = vec![0.0; m];
    let mut pivot = diag[0];
    let scale = diag.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let tiny = scale * 1e-20;
    if pivot.abs() <= tiny {
        return Err(Error::Singular);
    }
    c[0] = sup[0] / pivot;
    d[0] = rhs[0] / pivot;
    for i in 1..m {
        pivot = diag[i] - sub[i] * c[i - 1];
        if pivot.abs() <= tiny {
            return Err(Error::Singular);
        }
        c[i] = if i + 1 < m { sup[i] / pivot } else { 0.0 };
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / pivot;
    }
    let mut x = d;
    for i in (0..m - 1).rev() {
        x[i] -= c[i] * x[i + 1];
    }
    Ok(x)
}

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        DenseMatrix { n, data: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum()).collect()
    }

    /// `y = x^T M`.
    pub fn left_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for (i, &xi) in x.iter().enumerate() {
            for (yj, &a) in y.iter_mut().zip(self.row(i)) {
                *yj += xi * a;
            }
        }
        y
    }

    pub fn max_abs_diff(&self, other: &DenseMatrix) -> f64 {
        assert_eq!(self.n, other.n);
        self.data.iter().zip(&other.data).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Solves `self * X = B` for several right-hand sides by LU with partial
    /// pivoting. Consumes the matrix.
    pub fn solve_many(mut self, mut rhs: Vec<Vec<f64>>) -> Result<Vec<Vec<f64>>> {
        let n = self.n;
        for b in &rhs {
            assert_eq!(b.len(), n);
        }
        for col in 0..n {
            let (piv, best) = (col..n)
                .map(|r| (r, self.data[r * n + col].abs()))
                .fold((col, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if best < 1e-300 {
                return Err(Error::Singular);
            }
            if piv != col {
                for j in 0..n {
                    self.data.swap(col * n + j, piv * n + j);
                }
                for b in rhs.iter_mut() {
                    b.swap(col, piv);
                }
            }
            let (upper, lower) = self.data.split_at_mut((col + 1) * n);
            let pivot_row = &upper[col * n..];
            let p = pivot_row[col];
            for r in 0..n - col - 1 {
                let row = &mut lower[r * n..(r + 1) * n];
                let f = row[col] / p;
                if f == 0.0 {
                    continue;
                }
                row[col] = 0.0;
                for j in col + 1..n {
                    row[j] -= f * pivot_row[j];
                }
                for b in rhs.iter_mut() {
                    b[col + 1 + r] -= f * b[col];
                }
            }
        }
        for b in rhs.iter_mut() {
            for i in (0..n).rev() {
                let row = self.row(i);
                let s: f64 = (i + 1..n).map(|j| row[j] * b[j]).sum();
                b[i] = (b[i] - s) / row[i];
            }
        }
        Ok(rhs)
    }

    pub fn solve(self, rhs: Vec<f64>) -> Result<Vec<f64>> {
        Ok(self.solve_many(vec![rhs])?.pop().expect("one right-hand side"))
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::default();
        for x in iter {
            s.add(x);
        }
        s
    }
}
