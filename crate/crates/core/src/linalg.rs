//! Dense direct solves for coarsest-level matrices and test oracles.

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// LU factorization with partial pivoting of a small dense matrix.
#[derive(Clone, Debug)]
pub struct DenseLu {
    n: usize,
    /// Row-major packed L (unit diagonal, below) and U (on and above).
    lu: Vec<f64>,
    /// Row permutation applied to the right-hand side.
    piv: Vec<usize>,
}

impl DenseLu {
    /// Factorizes a row-major `n x n` matrix.
    pub fn factor(mut a: Vec<f64>, n: usize) -> Result<DenseLu> {
        if a.len() != n * n {
            return Err(Error::DimensionMismatch(format!(
                "dense factorization: {} entries for order {n}",
                a.len()
            )));
        }
        let mut piv: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let mut p = k;
            let mut best = a[k * n + k].abs();
            for i in (k + 1)..n {
                let cand = a[i * n + k].abs();
                if cand > best {
                    best = cand;
                    p = i;
                }
            }
            if best == 0.0 {
                return Err(Error::InvalidMatrix(format!(
                    "singular matrix: zero pivot column {k}"
                )));
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                piv.swap(k, p);
            }
            let pivot = a[k * n + k];
            for i in (k + 1)..n {
                let m = a[i * n + k] / pivot;
                a[i * n + k] = m;
                for j in (k + 1)..n {
                    a[i * n + j] -= m * a[k * n + j];
                }
            }
        }
        Ok(DenseLu { n, lu: a, piv })
    }

    /// Factorizes the dense form of a small sparse matrix.
    pub fn factor_csr(a: &CsrMatrix) -> Result<DenseLu> {
        if a.n_rows != a.n_cols {
            return Err(Error::InvalidMatrix(
                "dense factorization requires a square matrix".into(),
            ));
        }
        let n = a.n_rows;
        let mut dense = vec![0.0; n * n];
        for i in 0..n {
            let (cols, vals) = a.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                dense[i * n + j] = v;
            }
        }
        DenseLu::factor(dense, n)
    }

    pub fn order(&self) -> usize {
        self.n
    }

    /// Solves `A x = b` using the stored factorization.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "dense solve: order {} with right-hand side of length {}",
                self.n,
                b.len()
            )));
        }
        let n = self.n;
        let mut x: Vec<f64> = self.piv.iter().map(|&p| b[p]).collect();
        for i in 1..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in (i + 1)..n {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s / self.lu[i * n + i];
        }
        Ok(x)
    }
}

/// Tests whether a symmetric matrix is positive definite by attempting a
/// Cholesky factorization; positive pivots throughout are equivalent to
/// positive definiteness.
pub fn is_symmetric_positive_definite(a: &CsrMatrix, sym_tol: f64) -> bool {
    if a.n_rows != a.n_cols {
        return false;
    }
    let n = a.n_rows;
    let dense = a.to_dense();
    let scale = a
        .values
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1e-300);
    for i in 0..n {
        for j in 0..i {
            if (dense[i][j] - dense[j][i]).abs() > sym_tol * scale {
                return false;
            }
        }
    }
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = dense[i][j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if s <= 0.0 {
                    return false;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    true
}
