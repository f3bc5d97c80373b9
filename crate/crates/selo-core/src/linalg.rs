//! Dense linear solves for the likelihood closed forms.
//!
//! The systems are small (subgraph-sized) and symmetric positive definite
//! after the identity shift, so a plain LU factorization with partial
//! pivoting is both stable and fast enough. Matrices are never inverted
//! explicitly.

use ndarray::Array2;

use crate::error::{Result, SeloError};

/// LU factorization with partial pivoting, stored in packed form.
pub struct LuFactors {
    n: usize,
    /// Row-major packed L (unit diagonal, below) and U (on and above).
    lu: Vec<f64>,
    /// Row swap applied at each elimination step.
    pivots: Vec<usize>,
}

impl LuFactors {
    /// Factors a square matrix. Fails on non-finite entries or a numerically
    /// singular pivot.
    pub fn new(a: &Array2<f64>) -> Result<Self> {
        let (rows, cols) = a.dim();
        if rows != cols {
            return Err(SeloError::Argument(format!(
                "cannot LU-factor a {rows}x{cols} matrix"
            )));
        }
        ensure_finite(a, "LU input")?;
        let n = rows;
        let mut lu: Vec<f64> = Vec::with_capacity(n * n);
        for row in a.rows() {
            lu.extend(row.iter());
        }
        let mut pivots = vec![0usize; n];

        for k in 0..n {
            // pivot: largest remaining entry in column k
            let mut p = k;
            let mut max = lu[k * n + k].abs();
            for i in (k + 1)..n {
                let v = lu[i * n + k].abs();
                if v > max {
                    max = v;
                    p = i;
                }
            }
            if max == 0.0 {
                return Err(SeloError::Numeric(format!(
                    "singular matrix: zero pivot at column {k}"
                )));
            }
            pivots[k] = p;
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
            }
            let pivot = lu[k * n + k];
            for i in (k + 1)..n {
                let factor = lu[i * n + k] / pivot;
                lu[i * n + k] = factor;
                if factor != 0.0 {
                    let (head, tail) = lu.split_at_mut(i * n);
                    let row_k = &head[k * n + k + 1..k * n + n];
                    let row_i = &mut tail[k + 1..n];
                    for (ri, rk) in row_i.iter_mut().zip(row_k) {
                        *ri -= factor * rk;
                    }
                }
            }
        }

        Ok(LuFactors { n, lu, pivots })
    }

    /// Solves `A X = B` for a matrix of right-hand sides.
    pub fn solve(&self, b: &Array2<f64>) -> Result<Array2<f64>> {
        let (rows, k) = b.dim();
        if rows != self.n {
            return Err(SeloError::Argument(format!(
                "rhs has {rows} rows, matrix is {n}x{n}",
                n = self.n
            )));
        }
        let n = self.n;
        let mut x: Vec<f64> = Vec::with_capacity(n * k);
        for row in b.rows() {
            x.extend(row.iter());
        }
        // apply recorded row swaps
        for i in 0..n {
            let p = self.pivots[i];
            if p != i {
                for j in 0..k {
                    x.swap(i * k + j, p * k + j);
                }
            }
        }
        // forward substitution with unit-lower L
        for i in 1..n {
            let (solved, rest) = x.split_at_mut(i * k);
            let row_i = &mut rest[..k];
            for j in 0..i {
                let l = self.lu[i * n + j];
                if l != 0.0 {
                    let row_j = &solved[j * k..j * k + k];
                    for (xi, xj) in row_i.iter_mut().zip(row_j) {
                        *xi -= l * xj;
                    }
                }
            }
        }
        // back substitution with U
        for i in (0..n).rev() {
            let (head, tail) = x.split_at_mut((i + 1) * k);
            let row_i = &mut head[i * k..];
            for j in (i + 1)..n {
                let u = self.lu[i * n + j];
                if u != 0.0 {
                    let row_j = &tail[(j - i - 1) * k..(j - i - 1) * k + k];
                    for (xi, xj) in row_i.iter_mut().zip(row_j) {
                        *xi -= u * xj;
                    }
                }
            }
            let diag = self.lu[i * n + i];
            for xi in row_i.iter_mut() {
                *xi /= diag;
            }
        }
        Array2::from_shape_vec((n, k), x)
            .map_err(|e| SeloError::Numeric(format!("solution shape: {e}")))
    }
}

/// One-shot solve of `A X = B`.
pub fn solve(a: &Array2<f64>, b: &Array2<f64>) -> Result<Array2<f64>> {
    LuFactors::new(a)?.solve(b)
}

/// Identity matrix.
pub fn eye(n: usize) -> Array2<f64> {
    Array2::from_diag_elem(n, 1.0)
}

/// Frobenius norm.
pub fn fro_norm(a: &Array2<f64>) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn ensure_finite(a: &Array2<f64>, what: &str) -> Result<()> {
    if a.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(SeloError::Numeric(format!("{what} contains non-finite entries")))
    }
}
