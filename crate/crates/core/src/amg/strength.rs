//! Strength-of-connection graph.

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// CSR-layout adjacency pattern without values.
#[derive(Clone, Debug, PartialEq)]
pub struct SparsityPattern {
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
}

impl SparsityPattern {
    pub fn n_rows(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn row(&self, i: usize) -> &[usize] {
        &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]]
    }

    pub fn transpose(&self, n_cols: usize) -> SparsityPattern {
        let mut counts = vec![0usize; n_cols + 1];
        for &j in &self.col_idx {
            counts[j + 1] += 1;
        }
        for j in 0..n_cols {
            counts[j + 1] += counts[j];
        }
        let row_ptr = counts.clone();
        let mut col_idx = vec![0usize; self.col_idx.len()];
        for i in 0..self.n_rows() {
            for &j in self.row(i) {
                col_idx[counts[j]] = i;
                counts[j] += 1;
            }
        }
        SparsityPattern { row_ptr, col_idx }
    }
}

/// Directed strong-dependency graph of a matrix at a given threshold.
///
/// Row `i` of `strong` lists the columns `i` strongly depends on; row `j`
/// of `strong_transpose` lists the rows that strongly depend on `j`.
#[derive(Clone, Debug, PartialEq)]
pub struct StrengthGraph {
    pub n: usize,
    pub strong: SparsityPattern,
    pub strong_transpose: SparsityPattern,
}

impl StrengthGraph {
    /// Columns that row `i` strongly depends on (`S_i`).
    pub fn deps(&self, i: usize) -> &[usize] {
        self.strong.row(i)
    }

    /// Rows that strongly depend on `i` (`S_i` transposed).
    pub fn dependents(&self, i: usize) -> &[usize] {
        self.strong_transpose.row(i)
    }

    pub fn is_isolated(&self, i: usize) -> bool {
        self.deps(i).is_empty() && self.dependents(i).is_empty()
    }

    /// Sorted union of `deps(i)` and `dependents(i)`.
    pub fn symmetrized_neighbors(&self, i: usize) -> Vec<usize> {
        let (a, b) = (self.deps(i), self.dependents(i));
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut p, mut q) = (0, 0);
        while p < a.len() || q < b.len() {
            let next = match (a.get(p), b.get(q)) {
                (Some(&x), Some(&y)) if x == y => {
                    p += 1;
                    q += 1;
                    x
                }
                (Some(&x), Some(&y)) if x < y => {
                    p += 1;
                    x
                }
                (Some(_), Some(&y)) => {
                    q += 1;
                    y
                }
                (Some(&x), None) => {
                    p += 1;
                    x
                }
                (None, Some(&y)) => {
                    q += 1;
                    y
                }
                (None, None) => unreachable!(),
            };
            out.push(next);
        }
        out
    }
}

/// Builds the strength graph: `j` is strong for row `i` when
/// `|a_ij| >= theta * max_k |a_ik|` over the stored off-diagonal entries.
///
/// Rows whose off-diagonal entries are all exactly zero (or absent) get an
/// empty dependency set; a threshold against a zero maximum would mark
/// meaningless connections strong.
pub fn strength_graph(a: &CsrMatrix, theta: f64) -> Result<StrengthGraph> {
    if a.n_rows != a.n_cols {
        return Err(Error::InvalidMatrix(format!(
            "strength graph requires a square matrix, got {}x{}",
            a.n_rows, a.n_cols
        )));
    }
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "strong threshold must lie in (0, 1], got {theta}"
        )));
    }
    let n = a.n_rows;
    let mut row_ptr = Vec::with_capacity(n + 1);
    row_ptr.push(0usize);
    let mut col_idx = Vec::new();
    for i in 0..n {
        let (cols, vals) = a.row(i);
        if a.get(i, i).is_none() {
            return Err(Error::InvalidMatrix(format!(
                "strength graph requires a stored diagonal; row {i} has none"
            )));
        }
        let mut max = 0.0f64;
        for (&j, &v) in cols.iter().zip(vals) {
            if j != i {
                max = max.max(v.abs());
            }
        }
        if max > 0.0 {
            let cut = theta * max;
            for (&j, &v) in cols.iter().zip(vals) {
                if j != i && v.abs() >= cut {
                    col_idx.push(j);
                }
            }
        }
        row_ptr.push(col_idx.len());
    }
    let strong = SparsityPattern { row_ptr, col_idx };
    let strong_transpose = strong.transpose(n);
    Ok(StrengthGraph {
        n,
        strong,
        strong_transpose,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::CsrMatrix;
    use proptest::prelude::*;

    fn from_dense(rows: &[&[f64]]) -> CsrMatrix {
        let nested: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
        CsrMatrix::from_dense(&nested).unwrap()
    }

    #[test]
    fn threshold_selects_large_magnitudes() {
        let a = from_dense(&[
            &[10.0, -4.0, -1.0, -2.0],
            &[-4.0, 10.0, 0.0, 0.0],
            &[-1.0, 0.0, 10.0, 0.0],
            &[-2.0, 0.0, 0.0, 10.0],
        ]);
        let s = strength_graph(&a, 0.5).unwrap();
        assert_eq!(s.deps(0), &[1, 3]);
        assert_eq!(s.dependents(1), &[0]);
    }

    #[test]
    fn theta_one_keeps_only_the_max() {
        let a = from_dense(&[
            &[9.0, -4.0, -1.0, -2.0],
            &[-4.0, 9.0, 0.0, 0.0],
            &[-1.0, 0.0, 9.0, 0.0],
            &[-2.0, 0.0, 0.0, 9.0],
        ]);
        let s = strength_graph(&a, 1.0).unwrap();
        assert_eq!(s.deps(0), &[1]);
    }

    #[test]
    fn uniform_offdiagonals_are_all_strong() {
        let a = from_dense(&[
            &[3.0, -1.0, -1.0],
            &[-1.0, 3.0, -1.0],
            &[-1.0, -1.0, 3.0],
        ]);
        for theta in [0.01, 0.5, 1.0] {
            let s = strength_graph(&a, theta).unwrap();
            assert_eq!(s.deps(0), &[1, 2]);
            assert_eq!(s.deps(1), &[0, 2]);
        }
    }

    #[test]
    fn zero_offdiagonal_rows_are_isolated() {
        let a = CsrMatrix::from_triplets(
            2,
            2,
            &[(0, 0, 1.0), (0, 1, 0.0), (1, 1, 1.0)],
        )
        .unwrap();
        let s = strength_graph(&a, 0.5).unwrap();
        assert!(s.is_isolated(0));
        assert!(s.is_isolated(1));
    }

    #[test]
    fn rejects_bad_threshold_and_missing_diagonal() {
        let a = from_dense(&[&[2.0, -1.0], &[-1.0, 2.0]]);
        assert!(strength_graph(&a, 0.0).is_err());
        assert!(strength_graph(&a, 1.5).is_err());
        let no_diag =
            CsrMatrix::from_triplets(2, 2, &[(0, 1, 1.0), (1, 0, 1.0)]).unwrap();
        assert!(strength_graph(&no_diag, 0.5).is_err());
    }

    #[test]
    fn transpose_lists_dependents_consistently() {
        let a = from_dense(&[
            &[5.0, -3.0, 0.0, -1.0],
            &[0.0, 5.0, -4.0, 0.0],
            &[-2.0, -2.0, 5.0, -2.0],
            &[0.0, 0.0, -5.0, 5.0],
        ]);
        let s = strength_graph(&a, 0.4).unwrap();
        for i in 0..4 {
            for &j in s.deps(i) {
                assert!(s.dependents(j).contains(&i));
            }
            for &j in s.dependents(i) {
                assert!(s.deps(j).contains(&i));
            }
        }
        assert_eq!(s.symmetrized_neighbors(2), vec![0, 1, 3]);
    }

    fn arb_square() -> impl Strategy<Value = CsrMatrix> {
        (2usize..10).prop_flat_map(|n| {
            proptest::collection::vec(-4.0f64..4.0, n * n).prop_map(move |mut vals| {
                for i in 0..n {
                    for j in 0..n {
                        if vals[i * n + j].abs() < 1.0 && i != j {
                            vals[i * n + j] = 0.0;
                        }
                    }
                    vals[i * n + i] = 5.0 + vals[i * n + i].abs();
                }
                let rows: Vec<Vec<f64>> =
                    vals.chunks(n).map(|chunk| chunk.to_vec()).collect();
                CsrMatrix::from_dense(&rows).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn raising_theta_only_shrinks_dependency_sets(
            a in arb_square(),
            t1 in 0.01f64..1.0,
            t2 in 0.01f64..1.0,
        ) {
            let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
            let s_lo = strength_graph(&a, lo).unwrap();
            let s_hi = strength_graph(&a, hi).unwrap();
            for i in 0..a.n_rows {
                for j in s_hi.deps(i) {
                    prop_assert!(s_lo.deps(i).contains(j));
                }
            }
        }

        #[test]
        fn pattern_ignores_global_scaling(
            a in arb_square(),
            theta in 0.01f64..1.0,
            exp in -40i32..40,
        ) {
            let c = 2.0f64.powi(exp);
            let scaled = CsrMatrix::new(
                a.n_rows,
                a.n_cols,
                a.row_ptr.clone(),
                a.col_idx.clone(),
                a.values.iter().map(|v| v * c).collect(),
            ).unwrap();
            let s = strength_graph(&a, theta).unwrap();
            let s_scaled = strength_graph(&scaled, theta).unwrap();
            prop_assert_eq!(s.strong, s_scaled.strong);
        }
    }
}
