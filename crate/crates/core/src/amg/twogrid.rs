//! Two-grid convergence-factor estimates.

use super::{vcycle, Hierarchy};
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::sparse::CsrMatrix;
use crate::vecops::{norm2, scale, sub};

const POWER_SEED: u64 = 0x5eed_2b1d;
const POWER_TOL: f64 = 1e-6;
const POWER_MAX_ITERS: usize = 1000;

/// Estimated asymptotic error-reduction factor per cycle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TgEstimate {
    pub factor: f64,
    /// False when the underlying iteration never settled and the factor is
    /// a trailing geometric mean instead of a converged estimate.
    pub converged: bool,
}

fn require_two_levels(h: &Hierarchy) -> Result<()> {
    if h.levels.len() != 1 {
        return Err(Error::InvalidParameter(format!(
            "two-grid analysis requires exactly 2 levels, hierarchy has {}",
            h.num_levels()
        )));
    }
    Ok(())
}

fn geometric_mean_tail(values: &[f64]) -> f64 {
    let tail = values.len().div_ceil(2);
    let slice = &values[values.len() - tail..];
    let log_sum: f64 = slice.iter().map(|v| v.ln()).sum();
    (log_sum / slice.len() as f64).exp()
}

/// Spectral radius of the two-grid error propagation operator, by power
/// iteration.
///
/// One V-cycle on `b = 0` from iterate `v` applies the error operator:
/// `vcycle(H, 0, v) = E v`. The estimate is the norm growth per
/// application; it converges when successive estimates differ by less
/// than 1e-6. If 1000 applications never settle (an oscillating dominant
/// pair), the trailing geometric mean is returned with `converged =
/// false`.
pub fn tg_convergence_factor_theoretical(h: &Hierarchy) -> Result<TgEstimate> {
    require_two_levels(h)?;
    let n = h.n();
    let zero = vec![0.0; n];
    let mut rng = Rng::new(POWER_SEED);
    let mut v: Vec<f64> = (0..n).map(|_| rng.uniform(-1.0, 1.0)).collect();
    let nv = norm2(&v);
    scale(1.0 / nv, &mut v);
    let mut estimates: Vec<f64> = Vec::new();
    for _ in 0..POWER_MAX_ITERS {
        let w = vcycle(h, &zero, &v)?;
        let growth = norm2(&w);
        if growth == 0.0 {
            return Ok(TgEstimate {
                factor: 0.0,
                converged: true,
            });
        }
        if let Some(&prev) = estimates.last() {
            if (growth - prev).abs() < POWER_TOL {
                return Ok(TgEstimate {
                    factor: growth,
                    converged: true,
                });
            }
        }
        estimates.push(growth);
        v = w;
        scale(1.0 / growth, &mut v);
    }
    Ok(TgEstimate {
        factor: geometric_mean_tail(&estimates),
        converged: false,
    })
}

/// Measured error-reduction factor of the stationary two-grid iteration.
///
/// Picks a random exact solution so the error is known at every step,
/// runs `iters` cycles from a random start, and returns the geometric
/// mean of the trailing half of the per-cycle error-norm ratios. Stops
/// early once the error reaches the rounding floor relative to its
/// starting norm.
pub fn tg_convergence_factor_computed(
    h: &Hierarchy,
    a: &CsrMatrix,
    iters: usize,
    seed: u64,
) -> Result<f64> {
    require_two_levels(h)?;
    if iters < 10 {
        return Err(Error::InvalidParameter(format!(
            "computed factor needs at least 10 iterations, got {iters}"
        )));
    }
    let n = h.n();
    if a.n_rows != n || a.n_cols != n {
        return Err(Error::DimensionMismatch(format!(
            "matrix is {}x{} but hierarchy has size {n}",
            a.n_rows, a.n_cols
        )));
    }
    let mut rng = Rng::new(seed);
    let x_true: Vec<f64> = (0..n).map(|_| rng.uniform(-1.0, 1.0)).collect();
    let b = a.spmv(&x_true)?;
    let mut x: Vec<f64> = (0..n).map(|_| rng.uniform(-1.0, 1.0)).collect();
    let e0 = norm2(&sub(&x, &x_true));
    if e0 == 0.0 {
        return Ok(0.0);
    }
    let mut prev = e0;
    let mut ratios: Vec<f64> = Vec::new();
    for _ in 0..iters {
        x = vcycle(h, &b, &x)?;
        let err = norm2(&sub(&x, &x_true));
        if err == 0.0 {
            return Ok(0.0);
        }
        ratios.push(err / prev);
        prev = err;
        if err < 1e-13 * e0 || err > 1e100 {
            break;
        }
    }
    Ok(geometric_mean_tail(&ratios))
}

/// Outcome of [`stationary_solve`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StationaryReport {
    pub iterations: usize,
    pub converged: bool,
}

/// Runs the V-cycle as a stationary solver from `x = 0` until the true
/// relative residual drops below `tol` or `max_iter` cycles pass.
pub fn stationary_solve(
    h: &Hierarchy,
    a: &CsrMatrix,
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<StationaryReport> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let b_norm = norm2(b);
    if b_norm == 0.0 {
        return Ok(StationaryReport {
            iterations: 0,
            converged: true,
        });
    }
    let mut x = vec![0.0; b.len()];
    for k in 1..=max_iter {
        x = vcycle(h, b, &x)?;
        let residual = sub(b, &a.spmv(&x)?);
        if norm2(&residual) / b_norm < tol {
            return Ok(StationaryReport {
                iterations: k,
                converged: true,
            });
        }
    }
    Ok(StationaryReport {
        iterations: max_iter,
        converged: false,
    })
}
