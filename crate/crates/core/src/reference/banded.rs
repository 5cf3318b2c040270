use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Square band matrix with `kl` sub- and `ku` super-diagonals, stored with
/// room for the fill-in of partial pivoting.
#[derive(Debug, Clone)]
pub struct BandedMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        BandedMatrix { n, kl, ku, width, data: vec![0.0; n * width] }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.kl + self.ku);
        i * self.width + (j + self.kl - i)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j + self.kl < i || j > i + self.ku {
            0.0
        } else {
            self.data[self.slot(i, j)]
        }
    }

    /// Panics when `(i, j)` lies outside the declared band.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(j + self.kl >= i && j <= i + self.ku, "entry ({i}, {j}) outside the band");
        let k = self.slot(i, j);
        self.data[k] = v;
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(j + self.kl >= i && j <= i + self.ku, "entry ({i}, {j}) outside the band");
        let k = self.slot(i, j);
        self.data[k] += v;
    }

    /// `y = A x`.
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku).min(self.n - 1);
            let mut acc = 0.0;
            for j in lo..=hi {
                acc += self.data[self.slot(i, j)] * x[j];
            }
            y[i] = acc;
        }
    }

    /// LU factorization with partial pivoting.
    pub fn factor(mut self) -> Result<BandedLu> {
        let n = self.n;
        let reach = self.kl + self.ku;
        let mut pivots = vec![0usize; n];
        for j in 0..n {
            let last_row = (j + self.kl).min(n - 1);
            let mut p = j;
            let mut best = self.data[self.slot(j, j)].abs();
            for i in j + 1..=last_row {
                let v = self.data[self.slot(i, j)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(Error::InvalidArgument(format!("singular band matrix at column {j}")));
            }
            pivots[j] = p;
            let last_col = (j + reach).min(n - 1);
            if p != j {
                for c in j..=last_col {
                    let a = self.slot(j, c);
                    let b = self.slot(p, c);
                    self.data.swap(a, b);
                }
            }
            let diag = self.data[self.slot(j, j)];
            for i in j + 1..=last_row {
                let s = self.slot(i, j);
                let m = self.data[s] / diag;
                self.data[s] = m;
                if m != 0.0 {
                    for c in j + 1..=last_col {
                        let u = self.data[self.slot(j, c)];
                        let t = self.slot(i, c);
                        self.data[t] -= m * u;
                    }
                }
            }
        }
        Ok(BandedLu { m: self, pivots })
    }
}

/// Factors produced by [`BandedMatrix::factor`].
#[derive(Debug, Clone)]
pub struct BandedLu {
    m: BandedMatrix,
    pivots: Vec<usize>,
}

impl BandedLu {
    /// Solves `A x = b` in place.
    pub fn solve(&self, b: &mut [f64]) {
        let a = &self.m;
        let n = a.n;
        assert_eq!(b.len(), n);
        for j in 0..n {
            let p = self.pivots[j];
            if p != j {
                b.swap(j, p);
            }
            let bj = b[j];
            if bj != 0.0 {
                for i in j + 1..=(j + a.kl).min(n - 1) {
                    b[i] -= a.data[a.slot(i, j)] * bj;
                }
            }
        }
        let reach = a.kl + a.ku;
        for i in (0..n).rev() {
            let mut acc = b[i];
            for c in i + 1..=(i + reach).min(n - 1) {
                acc -= a.data[a.slot(i, c)] * b[c];
            }
            b[i] = acc / a.data[a.slot(i, i)];
        }
    }
}
