//! Test-problem generators.
//!
//! Two families: cell-centered finite-volume discretizations of
//! `-div(kappa grad u) = f` with blockwise-random diagonal coefficient
//! tensors, and a 3x3 block system mimicking the coupling structure of
//! discretized radiation diffusion. Both produce deterministic matrices
//! from an explicit seed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, Rng};
use crate::sparse::{CsrMatrix, DenseVector};

/// Blockwise-heterogeneous diffusion problem on the unit square or cube.
///
/// The domain is split into `bx * by (* bz)` equal-ish coefficient blocks;
/// each block draws one uniform exponent per axis, giving a diagonal
/// tensor `kappa = diag(10^(M*r0), 10^(M*r1)[, 10^(M*r2)])`. `M = 0`
/// reduces every block to the identity tensor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiffusionSpec {
    /// Spatial dimension, 2 or 3.
    pub dim: usize,
    pub nx: usize,
    pub ny: usize,
    /// Cells along z; ignored when `dim == 2`.
    #[serde(default = "default_one")]
    pub nz: usize,
    pub bx: usize,
    pub by: usize,
    /// Blocks along z; ignored when `dim == 2`.
    #[serde(default = "default_one")]
    pub bz: usize,
    /// Contrast exponent: per-block coefficients span `[1, 10^M)`.
    #[serde(rename = "M")]
    pub m: u32,
    pub seed: u64,
}

fn default_one() -> usize {
    1
}

impl DiffusionSpec {
    pub fn validate(&self) -> Result<()> {
        if self.dim != 2 && self.dim != 3 {
            return Err(Error::InvalidParameter(format!(
                "dim must be 2 or 3, got {}",
                self.dim
            )));
        }
        let axes: &[(&str, usize, usize)] = if self.dim == 2 {
            &[("x", self.nx, self.bx), ("y", self.ny, self.by)]
        } else {
            &[
                ("x", self.nx, self.bx),
                ("y", self.ny, self.by),
                ("z", self.nz, self.bz),
            ]
        };
        for &(name, cells, blocks) in axes {
            if cells < 2 {
                return Err(Error::InvalidParameter(format!(
                    "n{name} must be at least 2, got {cells}"
                )));
            }
            if blocks < 1 || blocks > cells {
                return Err(Error::InvalidParameter(format!(
                    "b{name} must be in [1, n{name}], got {blocks}"
                )));
            }
        }
        Ok(())
    }

    fn extent(&self) -> (usize, usize, usize) {
        if self.dim == 2 {
            (self.nx, self.ny, 1)
        } else {
            (self.nx, self.ny, self.nz)
        }
    }

    fn blocks(&self) -> (usize, usize, usize) {
        if self.dim == 2 {
            (self.bx, self.by, 1)
        } else {
            (self.bx, self.by, self.bz)
        }
    }
}

/// Structural surrogate for a coupled radiation/electron/ion diffusion
/// system.
///
/// Produces the 3x3 block layout
/// `[[A_R, D_RE, 0], [D_ER, A_E, D_EI], [0, D_IE, A_I]]` where the
/// diagonal blocks are independent single-block 3D diffusion matrices on
/// a shared mesh and the couplings are diagonal with per-row magnitudes
/// drawn from `[0, omega)`. Coupling magnitudes are added back onto the
/// block diagonals, so every row stays weakly diagonally dominant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadiationSurrogateSpec {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    #[serde(rename = "M")]
    pub m: u32,
    pub seed: u64,
    /// Upper bound for radiation/electron coupling magnitudes.
    pub omega_er: f64,
    /// Upper bound for electron/ion coupling magnitudes.
    pub omega_ei: f64,
}

impl RadiationSurrogateSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, cells) in [("x", self.nx), ("y", self.ny), ("z", self.nz)] {
            if cells < 2 {
                return Err(Error::InvalidParameter(format!(
                    "n{name} must be at least 2, got {cells}"
                )));
            }
        }
        for (name, omega) in [("omega_er", self.omega_er), ("omega_ei", self.omega_ei)] {
            if !(omega >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be nonnegative, got {omega}"
                )));
            }
        }
        Ok(())
    }
}

/// Generation recipe attached to a [`LinearProblem`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProblemSpec {
    Diffusion(DiffusionSpec),
    RadiationSurrogate(RadiationSurrogateSpec),
}

/// A generated system `A x = b` together with its recipe.
#[derive(Clone, Debug)]
pub struct LinearProblem {
    pub a: CsrMatrix,
    pub b: DenseVector,
    pub spec: ProblemSpec,
}

impl LinearProblem {
    pub fn n(&self) -> usize {
        self.a.n_rows
    }
}

fn harmonic(lo: f64, hi: f64) -> f64 {
    2.0 * lo * hi / (lo + hi)
}

/// Assembles the finite-volume diffusion matrix for `spec`.
///
/// Face transmissibilities use the harmonic mean of the two adjacent
/// cells' axis coefficients. Homogeneous Dirichlet boundaries are folded
/// into the diagonal through a ghost cell mirrored at the full cell
/// spacing, so the single-block `M = 0` case reproduces the classical
/// Poisson stencil exactly. The right-hand side is all ones.
///
/// Each face coefficient is computed once, with the lower-indexed cell's
/// coefficient as the first harmonic-mean argument, and shared by both
/// incident rows; the value array is therefore exactly symmetric.
pub fn gen_diffusion(spec: &DiffusionSpec) -> Result<LinearProblem> {
    spec.validate()?;
    let (nx, ny, nz) = spec.extent();
    let (bx, by, bz) = spec.blocks();
    let n = nx * ny * nz;
    let (hx, hy, hz) = (
        1.0 / nx as f64,
        1.0 / ny as f64,
        1.0 / nz as f64,
    );
    // (stride, cells, blocks, face area / cell spacing)
    let axes: Vec<(usize, usize, usize, f64)> = if spec.dim == 2 {
        vec![(1, nx, bx, hy / hx), (nx, ny, by, hx / hy)]
    } else {
        vec![
            (1, nx, bx, hy * hz / hx),
            (nx, ny, by, hx * hz / hy),
            (nx * ny, nz, bz, hx * hy / hz),
        ]
    };

    let mut rng = Rng::new(spec.seed);
    let m = f64::from(spec.m);
    let mut kappa = vec![[1.0f64; 3]; bx * by * bz];
    for block in kappa.iter_mut() {
        for axis in 0..spec.dim {
            block[axis] = 10f64.powf(m * rng.next_f64());
        }
    }
    let block_of = |i: usize, j: usize, k: usize| i * bx / nx + bx * (j * by / ny + by * (k * bz / nz));

    let mut row_ptr = Vec::with_capacity(n + 1);
    row_ptr.push(0usize);
    let mut col_idx = Vec::new();
    let mut values = Vec::new();
    let mut minus = [0.0f64; 3];
    let mut plus = [0.0f64; 3];
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let idx = i + nx * (j + ny * k);
                let pos = [i, j, k];
                let kap = kappa[block_of(i, j, k)];
                let mut diag = 0.0;
                for (axis, &(stride, cells, blocks, factor)) in axes.iter().enumerate() {
                    let p = pos[axis];
                    let t_minus = if p > 0 {
                        let mut nb_pos = pos;
                        nb_pos[axis] -= 1;
                        let nb_kap = kappa[block_of(nb_pos[0], nb_pos[1], nb_pos[2])];
                        harmonic(nb_kap[axis], kap[axis]) * factor
                    } else {
                        kap[axis] * factor
                    };
                    let t_plus = if p + 1 < cells {
                        let mut nb_pos = pos;
                        nb_pos[axis] += 1;
                        let nb_kap = kappa[block_of(nb_pos[0], nb_pos[1], nb_pos[2])];
                        harmonic(kap[axis], nb_kap[axis]) * factor
                    } else {
                        kap[axis] * factor
                    };
                    diag += t_minus + t_plus;
                    minus[axis] = if p > 0 { t_minus } else { 0.0 };
                    plus[axis] = if p + 1 < cells { t_plus } else { 0.0 };
                    let _ = (stride, blocks);
                }
                for axis in (0..spec.dim).rev() {
                    if minus[axis] != 0.0 {
                        col_idx.push(idx - axes[axis].0);
                        values.push(-minus[axis]);
                    }
                }
                col_idx.push(idx);
                values.push(diag);
                for axis in 0..spec.dim {
                    if plus[axis] != 0.0 {
                        col_idx.push(idx + axes[axis].0);
                        values.push(-plus[axis]);
                    }
                }
                row_ptr.push(col_idx.len());
            }
        }
    }
    let a = CsrMatrix::new(n, n, row_ptr, col_idx, values)?;
    Ok(LinearProblem {
        a,
        b: vec![1.0; n],
        spec: ProblemSpec::Diffusion(spec.clone()),
    })
}

/// Assembles the 3x3 block radiation surrogate for `spec`.
///
/// The three diagonal blocks come from [`gen_diffusion`] on the shared
/// mesh with a single coefficient block each, seeded independently from
/// `spec.seed`. Four coupling magnitudes are drawn per mesh row (one per
/// coupling block); zero magnitudes leave the entry out entirely, so the
/// decoupled limit is exactly block diagonal.
pub fn gen_radiation_surrogate(spec: &RadiationSurrogateSpec) -> Result<LinearProblem> {
    spec.validate()?;
    let diffusion = |tag: u64| -> Result<CsrMatrix> {
        let block_spec = DiffusionSpec {
            dim: 3,
            nx: spec.nx,
            ny: spec.ny,
            nz: spec.nz,
            bx: 1,
            by: 1,
            bz: 1,
            m: spec.m,
            seed: derive_seed(spec.seed, tag),
        };
        Ok(gen_diffusion(&block_spec)?.a)
    };
    let a_r = diffusion(1)?;
    let a_e = diffusion(2)?;
    let a_i = diffusion(3)?;
    let n = a_r.n_rows;

    let mut rng = Rng::new(derive_seed(spec.seed, 4));
    let mut w_re = vec![0.0f64; n];
    let mut w_er = vec![0.0f64; n];
    let mut w_ei = vec![0.0f64; n];
    let mut w_ie = vec![0.0f64; n];
    for i in 0..n {
        w_re[i] = rng.uniform(0.0, spec.omega_er);
        w_er[i] = rng.uniform(0.0, spec.omega_er);
        w_ei[i] = rng.uniform(0.0, spec.omega_ei);
        w_ie[i] = rng.uniform(0.0, spec.omega_ei);
    }

    let total = 3 * n;
    let mut row_ptr = Vec::with_capacity(total + 1);
    row_ptr.push(0usize);
    let mut col_idx = Vec::new();
    let mut values = Vec::new();
    let push_block_row =
        |block: &CsrMatrix, i: usize, shift: usize, bump: f64, cols: &mut Vec<usize>, vals: &mut Vec<f64>| {
            let (bcols, bvals) = block.row(i);
            for (&j, &v) in bcols.iter().zip(bvals) {
                cols.push(shift + j);
                vals.push(if j == i { v + bump } else { v });
            }
        };
    for i in 0..n {
        push_block_row(&a_r, i, 0, w_re[i], &mut col_idx, &mut values);
        if w_re[i] != 0.0 {
            col_idx.push(n + i);
            values.push(-w_re[i]);
        }
        row_ptr.push(col_idx.len());
    }
    for i in 0..n {
        if w_er[i] != 0.0 {
            col_idx.push(i);
            values.push(-w_er[i]);
        }
        push_block_row(&a_e, i, n, w_er[i] + w_ei[i], &mut col_idx, &mut values);
        if w_ei[i] != 0.0 {
            col_idx.push(2 * n + i);
            values.push(-w_ei[i]);
        }
        row_ptr.push(col_idx.len());
    }
    for i in 0..n {
        if w_ie[i] != 0.0 {
            col_idx.push(n + i);
            values.push(-w_ie[i]);
        }
        push_block_row(&a_i, i, 2 * n, w_ie[i], &mut col_idx, &mut values);
        row_ptr.push(col_idx.len());
    }
    let a = CsrMatrix::new(total, total, row_ptr, col_idx, values)?;
    Ok(LinearProblem {
        a,
        b: vec![1.0; total],
        spec: ProblemSpec::RadiationSurrogate(spec.clone()),
    })
}

/// Strips a multiscale matrix down to the edge of single-scale.
///
/// Repeatedly removes the smallest off-diagonal entry while the result
/// still has a multiscale row at `delta`; the returned matrix is
/// multiscale, but one further drop would not be.
pub fn boundary_matrix(a: &CsrMatrix, delta: f64) -> Result<CsrMatrix> {
    if !a.multiscale_report(delta)?.is_multiscale() {
        return Err(Error::InvalidMatrix(format!(
            "boundary_matrix requires a multiscale input at delta = {delta}"
        )));
    }
    let mut current = a.clone();
    loop {
        let next = current.drop_min_entry()?;
        if next.multiscale_report(delta)?.is_multiscale() {
            current = next;
        } else {
            return Ok(current);
        }
    }
}
