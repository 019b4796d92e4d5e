//! Sparse Galerkin triple product.

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// Sparse matrix product `A * B` over the structural pattern.
///
/// Entries that cancel to zero stay in the pattern, so the result's
/// sparsity depends only on the input patterns and is reproducible.
/// Each output value accumulates in the order of A's row entries.
pub fn csr_matmul(a: &CsrMatrix, b: &CsrMatrix) -> Result<CsrMatrix> {
    if a.n_cols != b.n_rows {
        return Err(Error::DimensionMismatch(format!(
            "cannot multiply {}x{} by {}x{}",
            a.n_rows, a.n_cols, b.n_rows, b.n_cols
        )));
    }
    let mut row_ptr = Vec::with_capacity(a.n_rows + 1);
    row_ptr.push(0usize);
    let mut col_idx = Vec::new();
    let mut values = Vec::new();
    let mut accum = vec![0.0f64; b.n_cols];
    let mut touched_mark = vec![false; b.n_cols];
    let mut touched = Vec::new();
    for i in 0..a.n_rows {
        let (a_cols, a_vals) = a.row(i);
        for (&k, &av) in a_cols.iter().zip(a_vals) {
            let (b_cols, b_vals) = b.row(k);
            for (&j, &bv) in b_cols.iter().zip(b_vals) {
                if !touched_mark[j] {
                    touched_mark[j] = true;
                    touched.push(j);
                }
                accum[j] += av * bv;
            }
        }
        touched.sort_unstable();
        for &j in &touched {
            col_idx.push(j);
            values.push(accum[j]);
            accum[j] = 0.0;
            touched_mark[j] = false;
        }
        touched.clear();
        row_ptr.push(col_idx.len());
    }
    CsrMatrix::new(a.n_rows, b.n_cols, row_ptr, col_idx, values)
}

/// Coarse-level operator `P^T A P`.
pub fn galerkin(a: &CsrMatrix, p: &CsrMatrix) -> Result<CsrMatrix> {
    if a.n_rows != a.n_cols || a.n_cols != p.n_rows {
        return Err(Error::DimensionMismatch(format!(
            "Galerkin product needs square A matching P rows: A is {}x{}, P is {}x{}",
            a.n_rows, a.n_cols, p.n_rows, p.n_cols
        )));
    }
    let ap = csr_matmul(a, p)?;
    csr_matmul(&p.transpose(), &ap)
}
