//! Cholesky factorization of symmetric positive definite band matrices.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;

/// Lower band of an SPD matrix, row `i` holding columns `i-bw ..= i`.
#[derive(Debug, Clone)]
pub(crate) struct BandMatrix {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Self { n, bw, data: vec![0.0; n * (bw + 1)] }
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bw);
        i * (self.bw + 1) + (j + self.bw - i)
    }

    /// Adds `v` at `(i, j)`; the symmetric partner is implied.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if j > i { (j, i) } else { (i, j) };
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    /// In-place factorization `A = L Lᵀ`. Returns the failing pivot row on breakdown.
    pub fn factor(mut self) -> Result<CholeskyBand, usize> {
        let (n, bw) = (self.n, self.bw);
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            for j in j0..=i {
                let k0 = j0.max(j.saturating_sub(bw));
                let mut s = self.data[self.idx(i, j)];
                for k in k0..j {
                    s -= self.data[self.idx(i, k)] * self.data[self.idx(j, k)];
                }
                if i == j {
                    if !(s > 0.0) {
                        return Err(i);
                    }
                    let k = self.idx(i, i);
                    self.data[k] = math::sqrt(s);
                } else {
                    let d = self.data[self.idx(j, j)];
                    let k = self.idx(i, j);
                    self.data[k] = s / d;
                }
            }
        }
        Ok(CholeskyBand { l: self })
    }
}

#[derive(Debug, Clone)]
pub(crate) struct CholeskyBand {
    l: BandMatrix,
}

impl CholeskyBand {
    #[allow(clippy::needless_range_loop)]
    pub fn solve(&self, b: &mut [f64]) {
        let l = &self.l;
        let (n, bw) = (l.n, l.bw);
        for i in 0..n {
            let mut s = b[i];
            for k in i.saturating_sub(bw)..i {
                s -= l.data[l.idx(i, k)] * b[k];
            }
            b[i] = s / l.data[l.idx(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in i + 1..n.min(i + bw + 1) {
                s -= l.data[l.idx(k, i)] * b[k];
            }
            b[i] = s / l.data[l.idx(i, i)];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_pentadiagonal_system() {
        let n = 9;
        let mut a = BandMatrix::zeros(n, 2);
        let mut dense = [[0.0f64; 9]; 9];
        for i in 0..n {
            a.add(i, i, 6.0 + i as f64);
            dense[i][i] = 6.0 + i as f64;
            if i >= 1 {
                a.add(i, i - 1, -1.5);
                dense[i][i - 1] = -1.5;
                dense[i - 1][i] = -1.5;
            }
            if i >= 2 {
                a.add(i - 2, i, 0.7);
                dense[i][i - 2] = 0.7;
                dense[i - 2][i] = 0.7;
            }
        }
        let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut b: Vec<f64> = (0..n).map(|i| (0..n).map(|j| dense[i][j] * x[j]).sum()).collect();
        a.factor().unwrap().solve(&mut b);
        for (u, v) in b.iter().zip(&x) {
            assert!((u - v).abs() < 1e-13);
        }
    }

    #[test]
    fn reports_indefinite_pivot() {
        let mut a = BandMatrix::zeros(3, 1);
        a.add(0, 0, 1.0);
        a.add(1, 0, 2.0);
        a.add(1, 1, 1.0);
        a.add(2, 2, 1.0);
        assert_eq!(a.factor().unwrap_err(), 1);
    }
}
