//! Direct solvers: banded LU with partial pivoting for the production path,
//! dense Gaussian elimination as the small-grid fallback.

use crate::error::{Error, Result};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        self.data
            .chunks_exact(self.cols)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn factor(self) -> Result<DenseLu> {
        DenseLu::new(self)
    }
}

/// Dense LU with partial pivoting. Only meant for small systems.
#[derive(Debug, Clone)]
pub struct DenseLu {
    lu: DenseMatrix,
    piv: Vec<usize>,
}

impl DenseLu {
    pub fn new(mut a: DenseMatrix) -> Result<Self> {
        assert_eq!(a.rows, a.cols, "LU needs a square matrix");
        let n = a.rows;
        let mut piv = Vec::with_capacity(n);
        for k in 0..n {
            let p = (k..n)
                .max_by(|&x, &y| a.get(x, k).abs().total_cmp(&a.get(y, k).abs()))
                .unwrap();
            if a.get(p, k) == 0.0 {
                return Err(Error::SingularMatrix(k));
            }
            piv.push(p);
            if p != k {
                for c in 0..n {
                    a.data.swap(k * n + c, p * n + c);
                }
            }
            let pivot = a.get(k, k);
            for r in k + 1..n {
                let l = a.get(r, k) / pivot;
                a.set(r, k, l);
                if l != 0.0 {
                    for c in k + 1..n {
                        let v = a.get(r, c) - l * a.get(k, c);
                        a.set(r, c, v);
                    }
                }
            }
        }
        Ok(Self { lu: a, piv })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.lu.rows;
        let mut x = b.to_vec();
        // rows were swapped in full, so L is already in pivoted order
        for k in 0..n {
            x.swap(k, self.piv[k]);
        }
        for k in 0..n {
            for r in k + 1..n {
                x[r] -= self.lu.get(r, k) * x[k];
            }
        }
        for k in (0..n).rev() {
            let s: f64 = (k + 1..n).map(|c| self.lu.get(k, c) * x[c]).sum();
            x[k] = (x[k] - s) / self.lu.get(k, k);
        }
        x
    }
}

/// Square band matrix with `kl` sub- and `ku` super-diagonals, stored
/// column-wise with `kl` extra rows of headroom for pivoting fill-in.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    ldab: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let ldab = 2 * kl + ku + 1;
        Self { n, kl, ku, ldab, data: vec![0.0; ldab * n] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        j * self.ldab + self.kl + self.ku + i - j
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(
            i <= j + self.kl && j <= i + self.ku,
            "entry ({i}, {j}) lies outside the band (kl = {}, ku = {})",
            self.kl,
            self.ku
        );
        let s = self.slot(i, j);
        self.data[s] = v;
    }

    /// In-place LU with row pivoting restricted to the band.
    pub fn factor(mut self) -> Result<BandedLu> {
        let (n, kl) = (self.n, self.kl);
        let kv = self.kl + self.ku;
        let mut piv = Vec::with_capacity(n);
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let last_col = (k + kv).min(n - 1);
            let mut p = k;
            let mut best = self.data[self.slot(k, k)].abs();
            for i in k + 1..=last_row {
                let v = self.data[self.slot(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 {
                return Err(Error::SingularMatrix(k));
            }
            piv.push(p);
            if p != k {
                for j in k..=last_col {
                    let (a, b) = (self.slot(k, j), self.slot(p, j));
                    self.data.swap(a, b);
                }
            }
            let pivot = self.data[self.slot(k, k)];
            for i in k + 1..=last_row {
                let si = self.slot(i, k);
                let l = self.data[si] / pivot;
                self.data[si] = l;
                if l == 0.0 {
                    continue;
                }
                for j in k + 1..=last_col {
                    let (sk, sij) = (self.slot(k, j), self.slot(i, j));
                    self.data[sij] -= l * self.data[sk];
                }
            }
        }
        Ok(BandedLu { band: self, piv })
    }
}

/// Factorization from [`BandMatrix::factor`]; immutable and shareable.
#[derive(Debug, Clone)]
pub struct BandedLu {
    band: BandMatrix,
    piv: Vec<usize>,
}

impl BandedLu {
    pub fn n(&self) -> usize {
        self.band.n
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let m = &self.band;
        let n = m.n;
        assert_eq!(b.len(), n);
        let kv = m.kl + m.ku;
        for k in 0..n {
            b.swap(k, self.piv[k]);
            let bk = b[k];
            if bk != 0.0 {
                for i in k + 1..=(k + m.kl).min(n - 1) {
                    b[i] -= m.data[m.slot(i, k)] * bk;
                }
            }
        }
        for k in (0..n).rev() {
            let mut s = b[k];
            for j in k + 1..=(k + kv).min(n - 1) {
                s -= m.data[m.slot(k, j)] * b[j];
            }
            b[k] = s / m.data[m.slot(k, k)];
        }
    }
}
