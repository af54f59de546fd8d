//! Small direct solvers: banded LU with partial pivoting and a tridiagonal
//! (Thomas) factorization for diagonally dominant radial operators.

use crate::error::{Error, Result};

/// Square band matrix with `kl` sub- and `ku` super-diagonals.
///
/// Row `i` stores columns `i - kl ..= i + kl + ku`; the extra `kl` slots on
/// the right receive fill-in from row interchanges during factorization.
#[derive(Clone, Debug)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        if i >= self.n || j >= self.n || j + self.kl < i || j > i + self.kl + self.ku {
            return None;
        }
        Some(i * self.width + (j + self.kl - i))
    }

    /// Entry `(i, j)`; zero outside the stored band.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |s| self.data[s])
    }

    /// Sets entry `(i, j)`. Panics if `(i, j)` lies outside the band.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(
            j + self.kl >= i && j <= i + self.ku,
            "entry ({i}, {j}) outside band"
        );
        let s = self.slot(i, j).expect("index out of range");
        self.data[s] = v;
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let cur = self.get(i, j);
        self.set(i, j, cur + v);
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                (lo..=hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    /// LU factorization with partial pivoting, consuming the matrix.
    pub fn factor(mut self) -> Result<BandLu> {
        let n = self.n;
        let kl = self.kl;
        let reach = kl + self.ku;
        let mut pivots = vec![0usize; n];
        let mut mults = vec![0.0; n * kl.max(1)];
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = self.get(k, k).abs();
            for i in k + 1..=last_row {
                let v = self.get(i, k).abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 {
                return Err(Error::SingularSystem(k));
            }
            pivots[k] = p;
            let last_col = (k + reach).min(n - 1);
            if p != k {
                for j in k..=last_col {
                    let a = self.slot(k, j).unwrap();
                    let b = self.slot(p, j).unwrap();
                    self.data.swap(a, b);
                }
            }
            let pivot = self.get(k, k);
            for i in k + 1..=last_row {
                let si = self.slot(i, k).unwrap();
                let m = self.data[si] / pivot;
                self.data[si] = 0.0;
                mults[k * kl + (i - k - 1)] = m;
                if m != 0.0 {
                    for j in k + 1..=last_col {
                        let v = self.get(k, j);
                        if v != 0.0 {
                            let s = self.slot(i, j).unwrap();
                            self.data[s] -= m * v;
                        }
                    }
                }
            }
        }
        Ok(BandLu {
            upper: self,
            pivots,
            mults,
        })
    }
}

/// Factorized band matrix ready for solves.
#[derive(Clone, Debug)]
pub struct BandLu {
    upper: BandMatrix,
    pivots: Vec<usize>,
    mults: Vec<f64>,
}

impl BandLu {
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let u = &self.upper;
        let n = u.n;
        let kl = u.kl;
        assert_eq!(rhs.len(), n);
        let mut x = rhs.to_vec();
        for k in 0..n {
            x.swap(k, self.pivots[k]);
            let last_row = (k + kl).min(n - 1);
            for i in k + 1..=last_row {
                x[i] -= self.mults[k * kl + (i - k - 1)] * x[k];
            }
        }
        let reach = kl + u.ku;
        for k in (0..n).rev() {
            let last_col = (k + reach).min(n - 1);
            let mut s = x[k];
            for j in k + 1..=last_col {
                s -= u.get(k, j) * x[j];
            }
            x[k] = s / u.get(k, k);
        }
        x
    }
}

/// Factorization of a tridiagonal matrix without pivoting. Valid for the
/// strictly diagonally dominant operators used as preconditioners.
#[derive(Clone, Debug)]
pub struct Tridiagonal {
    lower: Vec<f64>,
    // modified upper diagonal c'_i and inverse pivots
    upper: Vec<f64>,
    inv_pivot: Vec<f64>,
}

impl Tridiagonal {
    /// `lower[i]` multiplies `x[i-1]` in row `i` (ignored for `i = 0`),
    /// `upper[i]` multiplies `x[i+1]` (ignored for the last row).
    pub fn factor(lower: &[f64], diag: &[f64], upper: &[f64]) -> Result<Self> {
        let n = diag.len();
        let mut cp = vec![0.0; n];
        let mut inv = vec![0.0; n];
        for i in 0..n {
            let d = if i == 0 {
                diag[0]
            } else {
                diag[i] - lower[i] * cp[i - 1]
            };
            if d == 0.0 || !d.is_finite() {
                return Err(Error::SingularSystem(i));
            }
            inv[i] = 1.0 / d;
            cp[i] = if i + 1 < n { upper[i] * inv[i] } else { 0.0 };
        }
        Ok(Self {
            lower: lower.to_vec(),
            upper: cp,
            inv_pivot: inv,
        })
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = rhs.len();
        let mut x = vec![0.0; n];
        for i in 0..n {
            let prev = if i == 0 { 0.0 } else { self.lower[i] * x[i - 1] };
            x[i] = (rhs[i] - prev) * self.inv_pivot[i];
        }
        for i in (0..n.saturating_sub(1)).rev() {
            x[i] -= self.upper[i] * x[i + 1];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_matvec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
        a.iter()
            .map(|row| row.iter().zip(x).map(|(u, v)| u * v).sum())
            .collect()
    }

    #[test]
    fn band_solve_with_pivoting() {
        // small pentadiagonal system whose first pivot is zero
        let n = 9;
        let mut dense = vec![vec![0.0; n]; n];
        let mut band = BandMatrix::zeros(n, 2, 2);
        for i in 0..n {
            for j in i.saturating_sub(2)..=(i + 2).min(n - 1) {
                let v = if i == j && i == 0 {
                    0.0
                } else {
                    ((i * 7 + j * 3) % 5) as f64 - 1.5 + if i == j { 0.25 } else { 0.0 }
                };
                dense[i][j] = v;
                band.set(i, j, v);
            }
        }
        let x: Vec<f64> = (0..n).map(|i| (i as f64).sin() + 0.5).collect();
        let b = dense_matvec(&dense, &x);
        assert_eq!(band.matvec(&x), b);
        let lu = band.factor().unwrap();
        let y = lu.solve(&b);
        for (u, v) in x.iter().zip(&y) {
            assert!((u - v).abs() < 1e-10, "{u} vs {v}");
        }
    }

    #[test]
    fn singular_band_is_reported() {
        let band = BandMatrix::zeros(4, 1, 1);
        assert!(matches!(band.factor(), Err(Error::SingularSystem(0))));
    }

    #[test]
    fn tridiagonal_solve() {
        let n = 6;
        let lower = vec![-1.0; n];
        let diag = vec![3.0; n];
        let upper = vec![-0.5; n];
        let t = Tridiagonal::factor(&lower, &diag, &upper).unwrap();
        let x: Vec<f64> = (0..n).map(|i| i as f64 - 2.0).collect();
        let b: Vec<f64> = (0..n)
            .map(|i| {
                let mut s = diag[i] * x[i];
                if i > 0 {
                    s += lower[i] * x[i - 1];
                }
                if i + 1 < n {
                    s += upper[i] * x[i + 1];
                }
                s
            })
            .collect();
        let y = t.solve(&b);
        for (u, v) in x.iter().zip(&y) {
            assert!((u - v).abs() < 1e-13);
        }
    }
}
