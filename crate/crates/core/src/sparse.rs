//! Compressed sparse row matrices and the row-scale diagnostics built on
//! them.
//!
//! The storage layout is the usual three-array CSR form. Column indices are
//! strictly increasing within each row and all stored values are finite;
//! both properties are validated on construction and preserved by every
//! operation here. Stored entries may hold the value zero (coarse-grid
//! products keep cancelled entries), but neighborhood-based diagnostics
//! only look at entries with nonzero values.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Dense vector of coefficients; lengths are checked at operation
/// boundaries.
pub type DenseVector = Vec<f64>;

/// Square or rectangular sparse matrix in compressed sparse row form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsrMatrix {
    pub n_rows: usize,
    pub n_cols: usize,
    /// `row_ptr[i]..row_ptr[i + 1]` spans row `i`; length `n_rows + 1`.
    pub row_ptr: Vec<usize>,
    /// Column of each stored entry, strictly increasing within a row.
    pub col_idx: Vec<usize>,
    /// Value of each stored entry; always finite.
    pub values: Vec<f64>,
}

/// Rows whose off-diagonal magnitudes span at least `10^delta`.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiscaleReport {
    pub delta: f64,
    /// Rows with at least two off-diagonal nonzeros whose
    /// max/min magnitude ratio reaches the threshold, ascending.
    pub rows: Vec<usize>,
    /// Largest `log10(max/min)` over all eligible rows, `0.0` if no row
    /// has two off-diagonal nonzeros.
    pub max_row_ratio_log10: f64,
}

impl MultiscaleReport {
    /// True when at least one row crosses the threshold.
    pub fn is_multiscale(&self) -> bool {
        !self.rows.is_empty()
    }
}

impl CsrMatrix {
    /// Builds a matrix from raw CSR arrays, validating the layout.
    pub fn new(
        n_rows: usize,
        n_cols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        let m = CsrMatrix {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            values,
        };
        m.validate()?;
        Ok(m)
    }

    fn validate(&self) -> Result<()> {
        if self.row_ptr.len() != self.n_rows + 1 {
            return Err(Error::InvalidMatrix(format!(
                "row_ptr length {} does not match {} rows",
                self.row_ptr.len(),
                self.n_rows
            )));
        }
        if self.row_ptr[0] != 0 {
            return Err(Error::InvalidMatrix("row_ptr must start at 0".into()));
        }
        if *self.row_ptr.last().unwrap() != self.col_idx.len()
            || self.col_idx.len() != self.values.len()
        {
            return Err(Error::InvalidMatrix(
                "row_ptr, col_idx, and values disagree on the entry count".into(),
            ));
        }
        for i in 0..self.n_rows {
            let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
            if lo > hi {
                return Err(Error::InvalidMatrix(format!(
                    "row_ptr decreases at row {i}"
                )));
            }
            let mut prev: Option<usize> = None;
            for &j in &self.col_idx[lo..hi] {
                if j >= self.n_cols {
                    return Err(Error::InvalidMatrix(format!(
                        "column {j} out of range in row {i}"
                    )));
                }
                if let Some(p) = prev {
                    if j <= p {
                        return Err(Error::InvalidMatrix(format!(
                            "columns not strictly increasing in row {i}"
                        )));
                    }
                }
                prev = Some(j);
            }
        }
        if let Some(k) = self.values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidMatrix(format!(
                "non-finite value at entry {k}"
            )));
        }
        Ok(())
    }

    /// Builds a matrix from `(row, col, value)` triplets.
    ///
    /// Triplets may arrive in any order; duplicates are an error.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        let mut order: Vec<usize> = (0..triplets.len()).collect();
        order.sort_by_key(|&k| (triplets[k].0, triplets[k].1));
        let mut row_ptr = vec![0usize; n_rows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        let mut prev: Option<(usize, usize)> = None;
        for &k in &order {
            let (i, j, v) = triplets[k];
            if i >= n_rows || j >= n_cols {
                return Err(Error::InvalidMatrix(format!(
                    "entry ({i}, {j}) out of range for {n_rows}x{n_cols}"
                )));
            }
            if prev == Some((i, j)) {
                return Err(Error::InvalidMatrix(format!("duplicate entry ({i}, {j})")));
            }
            prev = Some((i, j));
            row_ptr[i + 1] += 1;
            col_idx.push(j);
            values.push(v);
        }
        for i in 0..n_rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix::new(n_rows, n_cols, row_ptr, col_idx, values)
    }

    /// Builds a matrix from a dense row-major table, skipping exact zeros.
    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, |r| r.len());
        let mut triplets = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n_cols {
                return Err(Error::InvalidMatrix("ragged dense input".into()));
            }
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    triplets.push((i, j, v));
                }
            }
        }
        CsrMatrix::from_triplets(n_rows, n_cols, &triplets)
    }

    /// Number of stored entries (including stored zeros).
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.col_idx[lo..hi], &self.values[lo..hi])
    }

    /// Stored value at `(i, j)`, or `None` when the entry is not stored.
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).ok().map(|k| vals[k])
    }

    /// Dense row-major copy; intended for small matrices and test oracles.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.n_cols]; self.n_rows];
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                out[i][j] = v;
            }
        }
        out
    }

    /// Stored diagonal, with `0.0` for missing diagonal entries.
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n_rows.min(self.n_cols))
            .map(|i| self.get(i, i).unwrap_or(0.0))
            .collect()
    }

    /// True when every stored `(i, j)` has a stored mirror `(j, i)`.
    pub fn is_structurally_symmetric(&self) -> bool {
        if self.n_rows != self.n_cols {
            return false;
        }
        for i in 0..self.n_rows {
            let (cols, _) = self.row(i);
            for &j in cols {
                if j != i && self.get(j, i).is_none() {
                    return false;
                }
            }
        }
        true
    }

    /// Matrix-vector product `A x`.
    ///
    /// Each output component sums the row's stored entries left to right,
    /// so results are bitwise reproducible.
    pub fn spmv(&self, x: &[f64]) -> Result<DenseVector> {
        if x.len() != self.n_cols {
            return Err(Error::DimensionMismatch(format!(
                "spmv: {}x{} matrix with vector of length {}",
                self.n_rows,
                self.n_cols,
                x.len()
            )));
        }
        let mut y = vec![0.0; self.n_rows];
        self.spmv_into(x, &mut y);
        Ok(y)
    }

    pub(crate) fn spmv_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n_cols);
        debug_assert_eq!(y.len(), self.n_rows);
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            let mut acc = 0.0;
            for (&j, &v) in cols.iter().zip(vals) {
                acc += v * x[j];
            }
            y[i] = acc;
        }
    }

    /// Matrix-vector product `A^T x` without forming the transpose.
    ///
    /// Accumulates in row-major traversal order, which is fixed, so results
    /// are bitwise reproducible (though not bitwise identical to
    /// `transpose().spmv(x)`, whose summation order differs).
    pub fn spmv_transpose(&self, x: &[f64]) -> Result<DenseVector> {
        if x.len() != self.n_rows {
            return Err(Error::DimensionMismatch(format!(
                "spmv_transpose: {}x{} matrix with vector of length {}",
                self.n_rows,
                self.n_cols,
                x.len()
            )));
        }
        let mut y = vec![0.0; self.n_cols];
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                y[j] += v * x[i];
            }
        }
        Ok(y)
    }

    /// Explicit transpose with sorted rows.
    pub fn transpose(&self) -> CsrMatrix {
        let mut counts = vec![0usize; self.n_cols + 1];
        for &j in &self.col_idx {
            counts[j + 1] += 1;
        }
        for j in 0..self.n_cols {
            counts[j + 1] += counts[j];
        }
        let row_ptr = counts.clone();
        let mut col_idx = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                let slot = counts[j];
                col_idx[slot] = i;
                values[slot] = v;
                counts[j] += 1;
            }
        }
        CsrMatrix {
            n_rows: self.n_cols,
            n_cols: self.n_rows,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Flags rows whose off-diagonal magnitudes span `delta` or more
    /// decades.
    ///
    /// A row qualifies when it has at least two off-diagonal entries with
    /// nonzero value and `log10(max|a_ik}| / min|a_ik|) >= delta` over
    /// those entries. Rows with one or zero off-diagonal nonzeros are
    /// excluded: a single coefficient has no scale spread.
    pub fn multiscale_report(&self, delta: f64) -> Result<MultiscaleReport> {
        if self.n_rows != self.n_cols {
            return Err(Error::InvalidMatrix(
                "multiscale_report requires a square matrix".into(),
            ));
        }
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "delta must be positive and finite, got {delta}"
            )));
        }
        let mut rows = Vec::new();
        let mut max_ratio = 0.0f64;
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            let mut count = 0usize;
            let mut min_abs = f64::INFINITY;
            let mut max_abs = 0.0f64;
            for (&j, &v) in cols.iter().zip(vals) {
                if j != i && v != 0.0 {
                    count += 1;
                    min_abs = min_abs.min(v.abs());
                    max_abs = max_abs.max(v.abs());
                }
            }
            if count <= 1 {
                continue;
            }
            let ratio = (max_abs / min_abs).log10();
            max_ratio = max_ratio.max(ratio);
            if ratio >= delta {
                rows.push(i);
            }
        }
        Ok(MultiscaleReport {
            delta,
            rows,
            max_row_ratio_log10: max_ratio,
        })
    }

    /// Removes the off-diagonal stored entry of globally minimal magnitude.
    ///
    /// Ties resolve to the smallest `(row, col)` lexicographically. When
    /// the matrix is structurally symmetric the mirrored entry is removed
    /// in the same step, so symmetric matrices stay symmetric under
    /// repeated drops.
    pub fn drop_min_entry(&self) -> Result<CsrMatrix> {
        if self.n_rows != self.n_cols {
            return Err(Error::InvalidMatrix(
                "drop_min_entry requires a square matrix".into(),
            ));
        }
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if j == i {
                    continue;
                }
                // Strict improvement keeps the first (lexicographically
                // smallest) position among equal magnitudes.
                if best.is_none() || v.abs() < best.unwrap().0 {
                    best = Some((v.abs(), i, j));
                }
            }
        }
        let Some((_, di, dj)) = best else {
            return Err(Error::InvalidMatrix(
                "drop_min_entry: no off-diagonal entries".into(),
            ));
        };
        let drop_mirror = self.is_structurally_symmetric();
        let keep = |i: usize, j: usize| -> bool {
            if i == di && j == dj {
                return false;
            }
            if drop_mirror && i == dj && j == di {
                return false;
            }
            true
        };
        let mut row_ptr = vec![0usize; self.n_rows + 1];
        let mut col_idx = Vec::with_capacity(self.nnz());
        let mut values = Vec::with_capacity(self.nnz());
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if keep(i, j) {
                    col_idx.push(j);
                    values.push(v);
                }
            }
            row_ptr[i + 1] = col_idx.len();
        }
        Ok(CsrMatrix {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            row_ptr,
            col_idx,
            values,
        })
    }
}
