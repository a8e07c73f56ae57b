//! Small dense linear algebra: just enough LU for the exact network oracles.
//! All systems here are a few thousand unknowns at most; determinism matters
//! more than peak speed.

#![allow(clippy::needless_range_loop)]

use crate::error::{CoreError, Result};

/// Row-major dense square matrix.
#[derive(Clone, Debug)]
pub struct Mat {
    n: usize,
    a: Vec<f64>,
}

impl Mat {
    pub fn zeros(n: usize) -> Mat {
        Mat { n, a: vec![0.0; n * n] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.a[i * self.n + j] = v;
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        self.a[i * self.n + j] += v;
    }

    /// LU factorization with partial pivoting, consuming the matrix.
    pub fn lu(mut self) -> Result<Lu> {
        let n = self.n;
        let mut piv: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let mut p = k;
            let mut best = self.get(k, k).abs();
            for i in k + 1..n {
                let v = self.get(i, k).abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(CoreError::Singular(format!("pivot {best} at column {k}")));
            }
            if p != k {
                piv.swap(p, k);
                for j in 0..n {
                    let t = self.get(k, j);
                    self.set(k, j, self.get(p, j));
                    self.set(p, j, t);
                }
            }
            let d = self.get(k, k);
            for i in k + 1..n {
                let m = self.get(i, k) / d;
                self.set(i, k, m);
                if m != 0.0 {
                    for j in k + 1..n {
                        let v = self.get(k, j);
                        self.add(i, j, -m * v);
                    }
                }
            }
        }
        Ok(Lu { mat: self, piv })
    }
}

/// A factored system, reusable across right-hand sides.
pub struct Lu {
    mat: Mat,
    piv: Vec<usize>,
}

impl Lu {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.mat.n;
        assert_eq!(b.len(), n);
        let mut x: Vec<f64> = self.piv.iter().map(|&p| b[p]).collect();
        for i in 1..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.mat.get(i, j) * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.mat.get(i, j) * x[j];
            }
            x[i] = s / self.mat.get(i, i);
        }
        x
    }
}

/// Convenience one-shot solve.
pub fn solve(a: Mat, b: &[f64]) -> Result<Vec<f64>> {
    Ok(a.lu()?.solve(b))
}
