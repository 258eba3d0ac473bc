//! Band matrices with direct LU (partial pivoting) and Cholesky solvers.

use crate::error::{HpError, Result};

/// Relative pivot threshold below which a factorization is declared singular.
pub const PIVOT_TOL: f64 = 1e-14;

/// Square matrix with `lower` sub- and `upper` super-diagonals, stored row by
/// row: entry `(i, j)` lives at `i * width + (j + lower - i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix {
    n: usize,
    lower: usize,
    upper: usize,
    data: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Factorization {
    Cholesky,
    PivotedLu,
}

/// Diagnostics of a direct solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveReport {
    pub method: Factorization,
    /// `||A x - b|| / ||b||` (Euclidean), zero for a zero right-hand side.
    pub relative_residual: f64,
    /// `||A||_inf / min |pivot|`, a cheap lower estimate of the condition number.
    pub condition_estimate: f64,
}

impl BandMatrix {
    pub fn zeros(n: usize, lower: usize, upper: usize) -> Self {
        Self {
            n,
            lower,
            upper,
            data: vec![0.0; n * (lower + upper + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn lower(&self) -> usize {
        self.lower
    }

    pub fn upper(&self) -> usize {
        self.upper
    }

    fn width(&self) -> usize {
        self.lower + self.upper + 1
    }

    fn in_band(&self, i: usize, j: usize) -> bool {
        j + self.lower >= i && j <= i + self.upper
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i >= self.n || j >= self.n || !self.in_band(i, j) {
            return 0.0;
        }
        self.data[i * self.width() + j + self.lower - i]
    }

    /// Adds `v` to entry `(i, j)`; panics outside the band.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(
            self.in_band(i, j) && i < self.n && j < self.n,
            "entry ({i}, {j}) outside band"
        );
        let w = self.width();
        self.data[i * w + j + self.lower - i] += v;
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.lower);
                let hi = (i + self.upper).min(self.n - 1);
                (lo..=hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    pub fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.lower);
                let hi = (i + self.upper).min(self.n - 1);
                (lo..=hi).map(|j| self.get(i, j).abs()).sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    /// Largest `|a_ij - a_ji|` inside the band.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            let hi = (i + self.upper.max(self.lower)).min(self.n.saturating_sub(1));
            for j in i..=hi {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j)).collect())
            .collect()
    }

    /// Gaussian elimination with partial pivoting. The factor `U` has upper
    /// bandwidth `upper + lower`.
    pub fn solve_lu(&self, b: &[f64]) -> Result<(Vec<f64>, f64)> {
        let n = self.n;
        let kl = self.lower;
        let ku = self.upper + kl;
        let w = kl + ku + 1;
        let norm = self.norm_inf();
        let threshold = PIVOT_TOL * norm;
        // working copy with room for fill-in
        let mut a = vec![0.0; n * w];
        let idx = |i: usize, j: usize| i * w + j + kl - i;
        for i in 0..n {
            let lo = i.saturating_sub(kl);
            let hi = (i + self.upper).min(n.saturating_sub(1));
            for j in lo..=hi {
                a[idx(i, j)] = self.get(i, j);
            }
        }
        let mut x = b.to_vec();
        let mut min_pivot = f64::INFINITY;
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let mut piv = k;
            let mut best = a[idx(k, k)].abs();
            for r in k + 1..=last_row {
                let v = a[idx(r, k)].abs();
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            min_pivot = min_pivot.min(best);
            if !(best > threshold) {
                return Err(HpError::SolverFailure {
                    pivot: best,
                    condition_estimate: if best > 0.0 { norm / best } else { f64::INFINITY },
                });
            }
            let last_col = (k + ku).min(n - 1);
            if piv != k {
                for j in k..=last_col {
                    a.swap(idx(k, j), idx(piv, j));
                }
                x.swap(k, piv);
            }
            let pivot = a[idx(k, k)];
            for r in k + 1..=last_row {
                let m = a[idx(r, k)] / pivot;
                if m == 0.0 {
                    continue;
                }
                a[idx(r, k)] = 0.0;
                for j in k + 1..=last_col {
                    a[idx(r, j)] -= m * a[idx(k, j)];
                }
                x[r] -= m * x[k];
            }
        }
        for i in (0..n).rev() {
            let last_col = (i + ku).min(n - 1);
            let mut s = x[i];
            for j in i + 1..=last_col {
                s -= a[idx(i, j)] * x[j];
            }
            x[i] = s / a[idx(i, i)];
        }
        Ok((x, norm / min_pivot))
    }

    /// Band Cholesky `A = L L^T` using the lower triangle. Returns `Ok(None)`
    /// when a non-positive pivot shows the matrix is not positive definite.
    pub fn solve_cholesky(&self, b: &[f64]) -> Result<Option<(Vec<f64>, f64)>> {
        let n = self.n;
        let kb = self.lower;
        let norm = self.norm_inf();
        let threshold = PIVOT_TOL * norm;
        // l[i][j - i + kb] for j in i-kb..=i
        let w = kb + 1;
        let mut l = vec![0.0; n * w];
        let li = |i: usize, j: usize| i * w + j + kb - i;
        let mut min_pivot = f64::INFINITY;
        for i in 0..n {
            let lo = i.saturating_sub(kb);
            for j in lo..=i {
                let mut s = self.get(i, j);
                let klo = lo.max(j.saturating_sub(kb));
                for k in klo..j {
                    s -= l[li(i, k)] * l[li(j, k)];
                }
                if i == j {
                    if !(s > 0.0) {
                        return Ok(None);
                    }
                    min_pivot = min_pivot.min(s);
                    l[li(i, i)] = s.sqrt();
                } else {
                    l[li(i, j)] = s / l[li(j, j)];
                }
            }
        }
        if !(min_pivot > threshold) {
            return Err(HpError::SolverFailure {
                pivot: min_pivot,
                condition_estimate: norm / min_pivot,
            });
        }
        let mut y = b.to_vec();
        for i in 0..n {
            let lo = i.saturating_sub(kb);
            let mut s = y[i];
            for k in lo..i {
                s -= l[li(i, k)] * y[k];
            }
            y[i] = s / l[li(i, i)];
        }
        for i in (0..n).rev() {
            let hi = (i + kb).min(n - 1);
            let mut s = y[i];
            for k in i + 1..=hi {
                s -= l[li(k, i)] * y[k];
            }
            y[i] = s / l[li(i, i)];
        }
        Ok(Some((y, norm / min_pivot)))
    }
}

pub(crate) fn relative_residual(a: &BandMatrix, x: &[f64], b: &[f64]) -> f64 {
    let bn = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if bn == 0.0 {
        let xn = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        return xn;
    }
    let ax = a.matvec(x);
    let rn = ax
        .iter()
        .zip(b)
        .map(|(u, v)| (u - v) * (u - v))
        .sum::<f64>()
        .sqrt();
    rn / bn
}
