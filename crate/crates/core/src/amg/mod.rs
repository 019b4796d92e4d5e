//! Classical algebraic multigrid preconditioner.
//!
//! The setup phase chains strength graph, PMIS coarsening, direct
//! interpolation, and the Galerkin product into a level hierarchy; the
//! solve phase is a V-cycle with Gauss-Seidel smoothing and a dense LU
//! factorization on the coarsest level.

pub mod galerkin;
pub mod interp;
pub mod pmis;
pub mod strength;
pub mod twogrid;

pub use galerkin::{csr_matmul, galerkin};
pub use interp::direct_interpolation;
pub use pmis::{pmis_coarsen, pmis_with_measures, CfSplitting, PointClass};
pub use strength::{strength_graph, SparsityPattern, StrengthGraph};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::DenseLu;
use crate::rng::derive_seed;
use crate::sparse::{CsrMatrix, DenseVector};

/// Setup controls other than the strong threshold.
#[derive(Clone, Debug, PartialEq)]
pub struct AmgParams {
    pub max_levels: usize,
    pub coarse_size_limit: usize,
    /// Forward Gauss-Seidel sweeps before coarse correction.
    pub nu_pre: usize,
    /// Backward Gauss-Seidel sweeps after coarse correction.
    pub nu_post: usize,
    /// Seed for the PMIS measures; level k uses a seed derived from it.
    pub pmis_seed: u64,
}

impl Default for AmgParams {
    fn default() -> Self {
        AmgParams {
            max_levels: 25,
            coarse_size_limit: 64,
            nu_pre: 1,
            nu_post: 1,
            pmis_seed: 0,
        }
    }
}

/// One fine level together with its transfer operators.
#[derive(Clone, Debug)]
pub struct Level {
    pub a: CsrMatrix,
    pub p: CsrMatrix,
    pub r: CsrMatrix,
    pub splitting: CfSplitting,
    pub inv_diag: Vec<f64>,
}

/// Multilevel hierarchy: transfer levels finest-first, then the coarsest
/// matrix with its dense factorization.
#[derive(Clone, Debug)]
pub struct Hierarchy {
    pub levels: Vec<Level>,
    pub coarsest: CsrMatrix,
    pub coarsest_lu: DenseLu,
    pub theta: f64,
    pub params: AmgParams,
}

/// Level-by-level sizes plus the usual grid/operator complexity summary.
#[derive(Clone, Debug, Serialize)]
pub struct HierarchyStats {
    pub levels: usize,
    pub sizes: Vec<usize>,
    pub nnz: Vec<usize>,
    pub operator_complexity: f64,
}

impl Hierarchy {
    /// Size of the finest matrix.
    pub fn n(&self) -> usize {
        self.levels
            .first()
            .map(|l| l.a.n_rows)
            .unwrap_or(self.coarsest.n_rows)
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len() + 1
    }

    pub fn stats(&self) -> HierarchyStats {
        let mut sizes: Vec<usize> = self.levels.iter().map(|l| l.a.n_rows).collect();
        sizes.push(self.coarsest.n_rows);
        let mut nnz: Vec<usize> = self.levels.iter().map(|l| l.a.nnz()).collect();
        nnz.push(self.coarsest.nnz());
        let total: usize = nnz.iter().sum();
        let finest = nnz[0];
        HierarchyStats {
            levels: self.num_levels(),
            sizes,
            nnz,
            operator_complexity: total as f64 / finest as f64,
        }
    }
}

fn inverse_diagonal(a: &CsrMatrix, level: usize) -> Result<Vec<f64>> {
    let diag = a.diagonal();
    diag.iter()
        .enumerate()
        .map(|(i, &d)| {
            if d == 0.0 {
                Err(Error::InvalidMatrix(format!(
                    "zero or missing diagonal entry in row {i} at level {level}"
                )))
            } else {
                Ok(1.0 / d)
            }
        })
        .collect()
}

/// Builds the AMG hierarchy for `a` at strong threshold `theta`.
///
/// Coarsening stops at `coarse_size_limit` rows, at `max_levels`, or when
/// PMIS stagnates (selects every point or none); the matrix reached at
/// that moment is factorized densely.
pub fn setup(a: &CsrMatrix, theta: f64, params: &AmgParams) -> Result<Hierarchy> {
    if a.n_rows != a.n_cols {
        return Err(Error::InvalidMatrix(format!(
            "AMG setup requires a square matrix, got {}x{}",
            a.n_rows, a.n_cols
        )));
    }
    if params.max_levels == 0 || params.coarse_size_limit == 0 {
        return Err(Error::InvalidParameter(
            "max_levels and coarse_size_limit must be positive".into(),
        ));
    }
    let mut current = a.clone();
    let mut levels: Vec<Level> = Vec::new();
    loop {
        if current.n_rows <= params.coarse_size_limit
            || levels.len() + 1 >= params.max_levels
        {
            break;
        }
        let inv_diag = inverse_diagonal(&current, levels.len())?;
        let s = strength_graph(&current, theta)?;
        let split = pmis_coarsen(&s, derive_seed(params.pmis_seed, levels.len() as u64));
        let n_coarse = split.n_coarse();
        if n_coarse == 0 || n_coarse == current.n_rows {
            break;
        }
        let p = direct_interpolation(&current, &s, &split)?;
        let r = p.transpose();
        let next = galerkin(&current, &p)?;
        levels.push(Level {
            a: current,
            p,
            r,
            splitting: split,
            inv_diag,
        });
        current = next;
    }
    let coarsest_lu = DenseLu::factor_csr(&current).map_err(|_| Error::SingularCoarse {
        level: levels.len(),
    })?;
    Ok(Hierarchy {
        levels,
        coarsest: current,
        coarsest_lu,
        theta,
        params: params.clone(),
    })
}

fn gauss_seidel_forward(a: &CsrMatrix, inv_diag: &[f64], b: &[f64], x: &mut [f64]) {
    for i in 0..a.n_rows {
        let (cols, vals) = a.row(i);
        let mut sigma = 0.0;
        for (&j, &v) in cols.iter().zip(vals) {
            if j != i {
                sigma += v * x[j];
            }
        }
        x[i] = (b[i] - sigma) * inv_diag[i];
    }
}

fn gauss_seidel_backward(a: &CsrMatrix, inv_diag: &[f64], b: &[f64], x: &mut [f64]) {
    for i in (0..a.n_rows).rev() {
        let (cols, vals) = a.row(i);
        let mut sigma = 0.0;
        for (&j, &v) in cols.iter().zip(vals) {
            if j != i {
                sigma += v * x[j];
            }
        }
        x[i] = (b[i] - sigma) * inv_diag[i];
    }
}

fn vcycle_level(h: &Hierarchy, k: usize, b: &[f64], x0: &[f64]) -> DenseVector {
    if k == h.levels.len() {
        return h
            .coarsest_lu
            .solve(b)
            .expect("coarse system dims fixed at setup");
    }
    let level = &h.levels[k];
    let a = &level.a;
    let mut x = x0.to_vec();
    for _ in 0..h.params.nu_pre {
        gauss_seidel_forward(a, &level.inv_diag, b, &mut x);
    }
    let mut residual = vec![0.0; a.n_rows];
    a.spmv_into(&x, &mut residual);
    for (r, &bv) in residual.iter_mut().zip(b) {
        *r = bv - *r;
    }
    let coarse_b = level.r.spmv(&residual).expect("restriction dims fixed at setup");
    let coarse_zero = vec![0.0; coarse_b.len()];
    let coarse_x = vcycle_level(h, k + 1, &coarse_b, &coarse_zero);
    let correction = level.p.spmv(&coarse_x).expect("prolongation dims fixed at setup");
    for (xi, c) in x.iter_mut().zip(&correction) {
        *xi += c;
    }
    for _ in 0..h.params.nu_post {
        gauss_seidel_backward(a, &level.inv_diag, b, &mut x);
    }
    x
}

/// One V-cycle for `A x = b` starting from `x0`.
///
/// A single-level hierarchy degenerates to the direct coarse solve. The
/// result is a pure function of the inputs; used with `b = 0` it applies
/// the error-propagation operator of the cycle to `x0`.
pub fn vcycle(h: &Hierarchy, b: &[f64], x0: &[f64]) -> Result<DenseVector> {
    let n = h.n();
    if b.len() != n || x0.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "vcycle on a hierarchy of size {n} got b of length {} and x of length {}",
            b.len(),
            x0.len()
        )));
    }
    Ok(vcycle_level(h, 0, b, x0))
}
