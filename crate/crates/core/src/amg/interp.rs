//! Direct interpolation from strong coarse neighbors.

use super::pmis::CfSplitting;
use super::strength::StrengthGraph;
use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// Builds the prolongation matrix P (n_fine x n_coarse).
///
/// Coarse rows are unit vectors onto their coarse index. A fine row `i`
/// interpolates from its strong coarse neighbors `C_i` with weights
/// `p_ij = -(a_ij / a_ii) * (sum over N_i of a_ik) / (sum over C_i of a_ik)`;
/// the ratio spreads the full row mass over the represented neighbors.
/// When the `C_i` sum is exactly zero the weights fall back to equal shares
/// `1/|C_i|`. Fine rows with no strong coarse neighbor stay empty and rely
/// on smoothing alone.
pub fn direct_interpolation(
    a: &CsrMatrix,
    s: &StrengthGraph,
    split: &CfSplitting,
) -> Result<CsrMatrix> {
    let n = a.n_rows;
    if s.n != n || split.labels.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "interpolation inputs disagree on size: matrix {}, graph {}, splitting {}",
            n,
            s.n,
            split.labels.len()
        )));
    }
    let n_coarse = split.n_coarse();
    let coarse_index = split.coarse_index();

    let mut row_ptr = Vec::with_capacity(n + 1);
    row_ptr.push(0usize);
    let mut col_idx = Vec::new();
    let mut values = Vec::new();
    for i in 0..n {
        if let Some(ci) = coarse_index[i] {
            col_idx.push(ci);
            values.push(1.0);
            row_ptr.push(col_idx.len());
            continue;
        }
        let strong_coarse: Vec<usize> = s
            .deps(i)
            .iter()
            .copied()
            .filter(|&j| split.is_coarse(j))
            .collect();
        if strong_coarse.is_empty() {
            row_ptr.push(col_idx.len());
            continue;
        }
        let diag = a.get(i, i).unwrap_or(0.0);
        if diag == 0.0 {
            return Err(Error::InvalidMatrix(format!(
                "interpolation requires a nonzero diagonal; row {i} has none"
            )));
        }
        let (cols, vals) = a.row(i);
        let mut row_sum = 0.0;
        for (&j, &v) in cols.iter().zip(vals) {
            if j != i {
                row_sum += v;
            }
        }
        let mut coarse_sum = 0.0;
        for &j in &strong_coarse {
            coarse_sum += a.get(i, j).unwrap_or(0.0);
        }
        if coarse_sum == 0.0 {
            let share = 1.0 / strong_coarse.len() as f64;
            for &j in &strong_coarse {
                col_idx.push(coarse_index[j].unwrap());
                values.push(share);
            }
        } else {
            let ratio = row_sum / coarse_sum;
            for &j in &strong_coarse {
                let a_ij = a.get(i, j).unwrap_or(0.0);
                col_idx.push(coarse_index[j].unwrap());
                values.push(-(a_ij / diag) * ratio);
            }
        }
        row_ptr.push(col_idx.len());
    }
    CsrMatrix::new(n, n_coarse, row_ptr, col_idx, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amg::pmis::{CfSplitting, PointClass};
    use crate::amg::strength::strength_graph;
    use crate::sparse::CsrMatrix;

    fn laplacian_1d(n: usize) -> CsrMatrix {
        let mut triplets = Vec::new();
        for i in 0..n {
            triplets.push((i, i, 2.0));
            if i + 1 < n {
                triplets.push((i, i + 1, -1.0));
                triplets.push((i + 1, i, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, n, &triplets).unwrap()
    }

    fn splitting(labels: &[PointClass]) -> CfSplitting {
        CfSplitting {
            labels: labels.to_vec(),
        }
    }

    #[test]
    fn all_coarse_gives_identity() {
        let a = laplacian_1d(4);
        let s = strength_graph(&a, 0.25).unwrap();
        let split = splitting(&[PointClass::Coarse; 4]);
        let p = direct_interpolation(&a, &s, &split).unwrap();
        assert_eq!(p.n_cols, 4);
        for i in 0..4 {
            assert_eq!(p.row(i), (&[i][..], &[1.0][..]));
        }
    }

    #[test]
    fn interior_fine_rows_average_their_neighbors() {
        let a = laplacian_1d(5);
        let s = strength_graph(&a, 0.25).unwrap();
        let labels: Vec<PointClass> = (0..5)
            .map(|i| {
                if i % 2 == 0 {
                    PointClass::Coarse
                } else {
                    PointClass::Fine
                }
            })
            .collect();
        let p = direct_interpolation(&a, &s, &splitting(&labels)).unwrap();
        assert_eq!(p.n_cols, 3);
        assert_eq!(p.row(1), (&[0usize, 1][..], &[0.5, 0.5][..]));
        assert_eq!(p.row(3), (&[1usize, 2][..], &[0.5, 0.5][..]));
    }

    #[test]
    fn fine_row_without_coarse_neighbors_is_empty() {
        let a = laplacian_1d(3);
        let s = strength_graph(&a, 0.25).unwrap();
        let split = splitting(&[PointClass::Coarse, PointClass::Fine, PointClass::Fine]);
        let p = direct_interpolation(&a, &s, &split).unwrap();
        let (cols, _) = p.row(2);
        assert!(cols.is_empty());
    }

    #[test]
    fn zero_coarse_sum_falls_back_to_equal_shares() {
        let a = CsrMatrix::from_triplets(
            3,
            3,
            &[
                (0, 0, 2.0),
                (0, 1, 1.0),
                (0, 2, -1.0),
                (1, 1, 2.0),
                (2, 2, 2.0),
            ],
        )
        .unwrap();
        let s = strength_graph(&a, 0.5).unwrap();
        let split = splitting(&[PointClass::Fine, PointClass::Coarse, PointClass::Coarse]);
        let p = direct_interpolation(&a, &s, &split).unwrap();
        assert_eq!(p.row(0), (&[0usize, 1][..], &[0.5, 0.5][..]));
    }

    #[test]
    fn zero_diagonal_is_rejected() {
        let a = CsrMatrix::from_triplets(
            2,
            2,
            &[(0, 0, 0.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 2.0)],
        )
        .unwrap();
        let s = strength_graph(&a, 0.5).unwrap();
        let split = splitting(&[PointClass::Fine, PointClass::Coarse]);
        assert!(direct_interpolation(&a, &s, &split).is_err());
    }
}
