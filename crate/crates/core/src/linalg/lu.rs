//! LU factorization with partial pivoting.

use ndarray::{Array2, ArrayView2};

use crate::error::{CoreError, Result};

pub struct LuFactor {
    lu: Array2<f64>,
    pivots: Vec<usize>,
    sign: f64,
}

impl LuFactor {
    pub fn new(a: ArrayView2<'_, f64>) -> Result<Self> {
        let n = a.nrows();
        if n != a.ncols() {
            return Err(CoreError::InvalidArgument("matrix must be square".into()));
        }
        let mut lu = a.to_owned();
        let mut pivots = Vec::with_capacity(n);
        let mut sign = 1.0;
        for k in 0..n {
            let mut p = k;
            let mut max = lu[[k, k]].abs();
            for i in (k + 1)..n {
                let v = lu[[i, k]].abs();
                if v > max {
                    max = v;
                    p = i;
                }
            }
            if max == 0.0 || !max.is_finite() {
                return Err(CoreError::InvalidArgument(format!(
                    "matrix is singular at column {k}"
                )));
            }
            if p != k {
                for j in 0..n {
                    lu.swap([k, j], [p, j]);
                }
                sign = -sign;
            }
            pivots.push(p);
            let pivot = lu[[k, k]];
            for i in (k + 1)..n {
                let factor = lu[[i, k]] / pivot;
                lu[[i, k]] = factor;
                for j in (k + 1)..n {
                    lu[[i, j]] -= factor * lu[[k, j]];
                }
            }
        }
        Ok(Self { lu, pivots, sign })
    }

    pub fn det(&self) -> f64 {
        let mut det = self.sign;
        for k in 0..self.lu.nrows() {
            det *= self.lu[[k, k]];
        }
        det
    }

    /// Solves `A·X = B` column by column.
    pub fn solve_matrix(&self, b: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        let n = self.lu.nrows();
        if b.nrows() != n {
            return Err(CoreError::DimensionMismatch { expected: n, got: b.nrows() });
        }
        let mut x = b.to_owned();
        for col in 0..x.ncols() {
            // apply row exchanges
            for k in 0..n {
                let p = self.pivots[k];
                if p != k {
                    x.swap([k, col], [p, col]);
                }
            }
            // forward substitution (unit lower triangle)
            for i in 1..n {
                let mut sum = x[[i, col]];
                for j in 0..i {
                    sum -= self.lu[[i, j]] * x[[j, col]];
                }
                x[[i, col]] = sum;
            }
            // back substitution
            for i in (0..n).rev() {
                let mut sum = x[[i, col]];
                for j in (i + 1)..n {
                    sum -= self.lu[[i, j]] * x[[j, col]];
                }
                x[[i, col]] = sum / self.lu[[i, i]];
            }
        }
        Ok(x)
    }
}
