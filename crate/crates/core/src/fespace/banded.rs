//! Symmetric banded matrices with a band Cholesky factorization.

use crate::error::{Error, Result};

/// Symmetric matrix storing the lower band `j ∈ [i − bw, i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct BandedSym {
    n: usize,
    bw: usize,
    lower: Vec<f64>,
}

impl BandedSym {
    pub fn zeros(n: usize, bw: usize) -> Self {
        BandedSym { n, bw, lower: vec![0.0; n * (bw + 1)] }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        debug_assert!(i - j <= self.bw, "entry ({i},{j}) outside band {}", self.bw);
        i * (self.bw + 1) + (i - j)
    }

    /// Adds `v` to entries (i, j) and (j, i) (a single stored entry).
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let s = self.slot(i, j);
        self.lower[s] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (a, b) = if i >= j { (i, j) } else { (j, i) };
        if a - b > self.bw {
            0.0
        } else {
            self.lower[self.slot(i, j)]
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let row = &self.lower[i * (self.bw + 1)..(i + 1) * (self.bw + 1)];
            y[i] += row[0] * x[i];
            for (off, &v) in row.iter().enumerate().skip(1) {
                if off > i {
                    break;
                }
                let j = i - off;
                y[i] += v * x[j];
                y[j] += v * x[i];
            }
        }
        y
    }

    /// `a·self + b·other`; both must share size and bandwidth.
    pub fn combine(&self, a: f64, other: &BandedSym, b: f64) -> BandedSym {
        assert_eq!((self.n, self.bw), (other.n, other.bw), "banded shape mismatch");
        let lower = self.lower.iter().zip(&other.lower).map(|(x, y)| a * x + b * y).collect();
        BandedSym { n: self.n, bw: self.bw, lower }
    }

    /// xᵀ A x
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        self.matvec(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| (0..self.n).map(|j| self.get(i, j)).collect()).collect()
    }

    /// Band Cholesky A = L Lᵀ. Fails if A is not positive definite.
    pub fn cholesky(&self) -> Result<BandedCholesky> {
        let (n, bw) = (self.n, self.bw);
        let w = bw + 1;
        let mut l = self.lower.clone();
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            for j in j0..=i {
                // L[i][j] = (A[i][j] - Σ_k L[i][k] L[j][k]) / L[j][j]
                let k0 = j0.max(j.saturating_sub(bw));
                let mut s = l[i * w + (i - j)];
                for k in k0..j {
                    s -= l[i * w + (i - k)] * l[j * w + (j - k)];
                }
                if i == j {
                    if s <= 0.0 || !s.is_finite() {
                        return Err(Error::InvalidData(format!(
                            "matrix is not positive definite (pivot {s:e} at row {i})"
                        )));
                    }
                    l[i * w] = s.sqrt();
                } else {
                    l[i * w + (i - j)] = s / l[j * w];
                }
            }
        }
        Ok(BandedCholesky { n, bw, l })
    }
}

#[derive(Clone, Debug)]
pub struct BandedCholesky {
    n: usize,
    bw: usize,
    l: Vec<f64>,
}

impl BandedCholesky {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        let w = self.bw + 1;
        for i in 0..self.n {
            let mut s = x[i];
            for k in i.saturating_sub(self.bw)..i {
                s -= self.l[i * w + (i - k)] * x[k];
            }
            x[i] = s / self.l[i * w];
        }
        for i in (0..self.n).rev() {
            let mut s = x[i];
            for k in (i + 1)..(i + w).min(self.n) {
                s -= self.l[k * w + (k - i)] * x[k];
            }
            x[i] = s / self.l[i * w];
        }
    }
}
