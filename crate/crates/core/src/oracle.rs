//! Exhaustive search over the strong threshold and sensitivity studies.
//!
//! The search solves one linear system once per candidate threshold and
//! labels the matrix with the threshold that minimized the iteration
//! count. Iteration counts, not wall-clock times, drive every selection;
//! times are recorded for reporting only.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::amg::{setup, AmgParams};
use crate::amg::twogrid::{
    stationary_solve, tg_convergence_factor_computed, tg_convergence_factor_theoretical,
};
use crate::error::{Error, Result};
use crate::krylov::gmres;
use crate::problems::{boundary_matrix, gen_diffusion, DiffusionSpec};
use crate::rng::fnv1a64;
use crate::sparse::CsrMatrix;

const SENSITIVITY_HEADER: &str = "matrix_id,theta,iterations,converged,time_seconds";
const BOUNDARY_HEADER: &str = "theta,iterations,converged,factor_theoretical,factor_computed";
const BOUNDARY_SIZE_LIMIT: usize = 400;
const COMPUTED_FACTOR_CYCLES: usize = 60;
const COMPUTED_FACTOR_SEED: u64 = 0x5eed_70f2;

/// The candidate thresholds 0.01, 0.02, ..., 0.99.
pub fn theta_grid() -> Vec<f64> {
    (1..=99).map(|k| k as f64 / 100.0).collect()
}

/// GMRES settings used for every point of a threshold sweep.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolverParams {
    pub tol: f64,
    pub max_iter: usize,
    pub restart: usize,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            tol: 1e-8,
            max_iter: 500,
            restart: 30,
        }
    }
}

/// One evaluated threshold of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub theta: f64,
    pub iterations: usize,
    pub converged: bool,
    pub time_seconds: f64,
}

/// Full sweep result for one matrix.
///
/// `grid` is sorted by threshold. Ties in the minimum (and maximum)
/// iteration count resolve to the smallest threshold attaining it.
/// `defaults` maps the probed default thresholds present in the grid
/// (0.25 and 0.5) to their iteration counts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaRecord {
    pub matrix_id: String,
    pub grid: Vec<GridPoint>,
    pub theta_opt: f64,
    pub iters_min: usize,
    pub iters_max: usize,
    pub theta_at_max: f64,
    pub defaults: BTreeMap<String, usize>,
}

impl ThetaRecord {
    /// Compact JSON summary: id, optimum, extremes, and default-θ counts.
    pub fn summary_json(&self) -> String {
        #[derive(Serialize)]
        struct Summary<'a> {
            matrix_id: &'a str,
            theta_opt: f64,
            iters_min: usize,
            iters_max: usize,
            theta_at_max: f64,
            defaults: &'a BTreeMap<String, usize>,
        }
        serde_json::to_string_pretty(&Summary {
            matrix_id: &self.matrix_id,
            theta_opt: self.theta_opt,
            iters_min: self.iters_min,
            iters_max: self.iters_max,
            theta_at_max: self.theta_at_max,
            defaults: &self.defaults,
        })
        .expect("summary serialization cannot fail")
    }
}

fn aggregate(matrix_id: &str, mut points: Vec<GridPoint>) -> ThetaRecord {
    points.sort_by(|a, b| a.theta.total_cmp(&b.theta));
    let iters_min = points.iter().map(|p| p.iterations).min().expect("nonempty grid");
    let iters_max = points.iter().map(|p| p.iterations).max().expect("nonempty grid");
    let first_with = |count: usize| {
        points
            .iter()
            .find(|p| p.iterations == count)
            .expect("count taken from this grid")
            .theta
    };
    let theta_opt = first_with(iters_min);
    let theta_at_max = first_with(iters_max);
    let mut defaults = BTreeMap::new();
    for d in [0.25, 0.5] {
        if let Some(p) = points.iter().find(|p| (p.theta - d).abs() < 1e-12) {
            defaults.insert(format!("{d}"), p.iterations);
        }
    }
    ThetaRecord {
        matrix_id: matrix_id.to_string(),
        grid: points,
        theta_opt,
        iters_min,
        iters_max,
        theta_at_max,
        defaults,
    }
}

fn evaluate_theta(
    a: &CsrMatrix,
    b: &[f64],
    theta: f64,
    pmis_seed: u64,
    sp: &SolverParams,
) -> GridPoint {
    let t0 = Instant::now();
    let amg = AmgParams {
        pmis_seed,
        ..AmgParams::default()
    };
    // Any setup or solve failure counts as the worst case for this θ.
    let (iterations, converged) = match setup(a, theta, &amg) {
        Ok(h) => match gmres(a, b, Some(&h), sp.tol, sp.max_iter, sp.restart) {
            Ok((_, report)) => (report.iterations, report.converged),
            Err(_) => (sp.max_iter, false),
        },
        Err(_) => (sp.max_iter, false),
    };
    GridPoint {
        theta,
        iterations,
        converged,
        time_seconds: t0.elapsed().as_secs_f64(),
    }
}

/// Sweeps the threshold grid for one system `A x = b` and labels it
/// with θ_opt.
///
/// The coarsening seed is derived from `matrix_id` and held fixed across
/// the sweep, so the threshold is the only varying factor. Grid points
/// are evaluated in parallel and collected back in grid order.
pub fn grid_search(
    matrix_id: &str,
    a: &CsrMatrix,
    b: &[f64],
    grid: &[f64],
    params: &SolverParams,
) -> Result<ThetaRecord> {
    if matrix_id.is_empty() || matrix_id.contains([',', '\n']) {
        return Err(Error::InvalidParameter(format!(
            "matrix id {matrix_id:?} must be nonempty and free of commas and newlines"
        )));
    }
    if grid.is_empty() {
        return Err(Error::InvalidParameter("empty threshold grid".into()));
    }
    for &t in grid {
        if !(t > 0.0 && t < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "grid threshold {t} outside (0, 1)"
            )));
        }
    }
    if !(params.tol > 0.0) || params.max_iter == 0 || params.restart == 0 {
        return Err(Error::InvalidParameter(
            "solver params require tol > 0 and positive max_iter and restart".into(),
        ));
    }
    let pmis_seed = fnv1a64(matrix_id.as_bytes());
    let points: Vec<GridPoint> = grid
        .par_iter()
        .map(|&theta| evaluate_theta(a, b, theta, pmis_seed, params))
        .collect();
    Ok(aggregate(matrix_id, points))
}

fn fmt_bool(b: bool) -> &'static str {
    if b {
        "true"
    } else {
        "false"
    }
}

/// Renders a sweep as CSV: one row per threshold sorted ascending, then
/// a `#` summary line with the extremes and default-θ counts.
pub fn sensitivity_report(record: &ThetaRecord) -> String {
    let mut out = String::new();
    out.push_str(SENSITIVITY_HEADER);
    out.push('\n');
    for p in &record.grid {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            record.matrix_id,
            p.theta,
            p.iterations,
            fmt_bool(p.converged),
            p.time_seconds
        ));
    }
    out.push_str(&format!(
        "# min={}@{} max={}@{}",
        record.iters_min, record.theta_opt, record.iters_max, record.theta_at_max
    ));
    for (theta, iters) in &record.defaults {
        out.push_str(&format!(" default({theta})={iters}"));
    }
    out.push('\n');
    out
}

/// Parses `sensitivity_report` output back into a record.
///
/// Float fields round-trip exactly because both sides use the shortest
/// lossless decimal form; the summary line is redundant and skipped.
pub fn parse_sensitivity_report(text: &str) -> Result<ThetaRecord> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == SENSITIVITY_HEADER => {}
        _ => {
            return Err(Error::Csv {
                line: 1,
                message: format!("expected header {SENSITIVITY_HEADER:?}"),
            })
        }
    }
    let mut matrix_id: Option<String> = None;
    let mut points = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(Error::Csv {
                line: lineno,
                message: format!("expected 5 fields, found {}", fields.len()),
            });
        }
        let parse_err = |what: &str| Error::Csv {
            line: lineno,
            message: format!("unparsable {what} field"),
        };
        let id = fields[0];
        match &matrix_id {
            None => matrix_id = Some(id.to_string()),
            Some(seen) if seen == id => {}
            Some(seen) => {
                return Err(Error::Csv {
                    line: lineno,
                    message: format!("matrix id changed from {seen:?} to {id:?}"),
                })
            }
        }
        points.push(GridPoint {
            theta: fields[1].parse().map_err(|_| parse_err("theta"))?,
            iterations: fields[2].parse().map_err(|_| parse_err("iterations"))?,
            converged: match fields[3] {
                "true" => true,
                "false" => false,
                _ => return Err(parse_err("converged")),
            },
            time_seconds: fields[4].parse().map_err(|_| parse_err("time_seconds"))?,
        });
    }
    match matrix_id {
        Some(id) => Ok(aggregate(&id, points)),
        None => Err(Error::Csv {
            line: 2,
            message: "no data rows".into(),
        }),
    }
}

/// One threshold of a boundary-matrix sweep with the stationary two-grid
/// solver and both convergence-factor estimates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    pub theta: f64,
    pub iterations: usize,
    pub converged: bool,
    pub factor_theoretical: f64,
    pub factor_computed: f64,
}

/// Boundary-matrix sweep result.
///
/// `theta_star` is the left endpoint of the adjacent grid pair with the
/// largest iteration-count ratio: the sweep's sharpest jump.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryReport {
    pub points: Vec<BoundaryPoint>,
    pub theta_star: f64,
}

/// Builds the boundary matrix for `spec` and sweeps the threshold grid
/// with the stationary two-grid solver, recording iteration counts and
/// the theoretical and computed convergence factors at every point.
///
/// The matrix must be small (n ≤ 400): the per-point factor estimation
/// runs hundreds of cycles, and the experiment exists to expose the
/// critical threshold, not to scale.
pub fn boundary_sensitivity_experiment(
    spec: &DiffusionSpec,
    delta: f64,
    sp: &SolverParams,
) -> Result<BoundaryReport> {
    let problem = gen_diffusion(spec)?;
    let n = problem.a.n_rows;
    if n > BOUNDARY_SIZE_LIMIT {
        return Err(Error::InvalidParameter(format!(
            "boundary experiment limited to {BOUNDARY_SIZE_LIMIT} rows, spec yields {n}"
        )));
    }
    let a = boundary_matrix(&problem.a, delta)?;
    let grid = theta_grid();
    let points: Vec<BoundaryPoint> = grid
        .par_iter()
        .map(|&theta| {
            let amg = AmgParams {
                max_levels: 2,
                coarse_size_limit: 1,
                pmis_seed: spec.seed,
                ..AmgParams::default()
            };
            let worst = BoundaryPoint {
                theta,
                iterations: sp.max_iter,
                converged: false,
                factor_theoretical: 1.0,
                factor_computed: 1.0,
            };
            let h = match setup(&a, theta, &amg) {
                Ok(h) if h.levels.len() == 1 => h,
                _ => return worst,
            };
            let report = match stationary_solve(&h, &a, &problem.b, sp.tol, sp.max_iter) {
                Ok(r) => r,
                Err(_) => return worst,
            };
            let theoretical = match tg_convergence_factor_theoretical(&h) {
                Ok(est) => est.factor,
                Err(_) => return worst,
            };
            let computed = match tg_convergence_factor_computed(
                &h,
                &a,
                COMPUTED_FACTOR_CYCLES,
                COMPUTED_FACTOR_SEED,
            ) {
                Ok(f) => f,
                Err(_) => return worst,
            };
            BoundaryPoint {
                theta,
                iterations: report.iterations,
                converged: report.converged,
                factor_theoretical: theoretical,
                factor_computed: computed,
            }
        })
        .collect();
    let mut theta_star = points[0].theta;
    let mut best_ratio = 0.0;
    for pair in points.windows(2) {
        let (a, b) = (pair[0].iterations.max(1), pair[1].iterations.max(1));
        let ratio = a.max(b) as f64 / a.min(b) as f64;
        if ratio > best_ratio {
            best_ratio = ratio;
            theta_star = pair[0].theta;
        }
    }
    Ok(BoundaryReport { points, theta_star })
}

/// Renders a boundary sweep as CSV with a trailing `#` θ* line.
pub fn boundary_report_csv(report: &BoundaryReport) -> String {
    let mut out = String::new();
    out.push_str(BOUNDARY_HEADER);
    out.push('\n');
    for p in &report.points {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            p.theta,
            p.iterations,
            fmt_bool(p.converged),
            p.factor_theoretical,
            p.factor_computed
        ));
    }
    out.push_str(&format!("# theta_star={}\n", report.theta_star));
    out
}
