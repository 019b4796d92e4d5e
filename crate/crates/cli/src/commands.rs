//! Implementations behind the subcommands: corpus generation, labeling,
//! training, evaluation, prediction, and sensitivity sweeps.
//!
//! Every function here is callable as a library routine so tests can
//! drive the pipeline in process; `main` only parses flags and
//! dispatches.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use amgtheta::amg::{setup, AmgParams};
use amgtheta::krylov::gmres;
use amgtheta::manifest::{manifest_base, DatasetManifest, ManifestEntry, Split};
use amgtheta::mm::{read_matrix_market, write_matrix_market};
use amgtheta::model::{load_model, predict_theta, save_model, train, TrainConfig, TrainExample};
use amgtheta::oracle::{
    boundary_report_csv, boundary_sensitivity_experiment, grid_search, sensitivity_report,
    theta_grid, SolverParams,
};
use amgtheta::problems::{
    gen_diffusion, gen_radiation_surrogate, DiffusionSpec, LinearProblem, ProblemSpec,
    RadiationSurrogateSpec,
};
use amgtheta::rng::{derive_seed, fnv1a64, Rng};
use amgtheta::sparse::CsrMatrix;

/// Matrix family a generation run draws from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixKind {
    #[default]
    Diffusion,
    Radiation,
}

/// Corpus generation recipe; every field has a desk-scale default.
///
/// `n_range` and `b_range` are inclusive and default per dimension:
/// cells 32..=64 with 4..=8 coefficient blocks per axis in 2D, cells
/// 10..=16 with 3..=5 blocks in 3D. Matrix `i` draws its mesh from a
/// stream seeded by `(seed, i)` and keeps `i` as its own spec seed.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenConfig {
    pub kind: MatrixKind,
    pub dim: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub n_range: Option<[usize; 2]>,
    pub b_range: Option<[usize; 2]>,
    #[serde(rename = "M")]
    pub m: u32,
    pub omega_er: f64,
    pub omega_ei: f64,
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            kind: MatrixKind::Diffusion,
            dim: 2,
            n_train: 40,
            n_test: 10,
            n_range: None,
            b_range: None,
            m: 5,
            omega_er: 1.0,
            omega_ei: 0.5,
            seed: 0,
        }
    }
}

impl GenConfig {
    fn ranges(&self) -> Result<([usize; 2], [usize; 2])> {
        let (n_default, b_default) = match self.dim {
            2 => ([32, 64], [4, 8]),
            3 => ([10, 16], [3, 5]),
            d => bail!("dim must be 2 or 3, got {d}"),
        };
        let n = self.n_range.unwrap_or(n_default);
        let b = self.b_range.unwrap_or(b_default);
        for (name, [lo, hi]) in [("n_range", n), ("b_range", b)] {
            if lo > hi || lo == 0 {
                bail!("{name} [{lo}, {hi}] must satisfy 1 <= lo <= hi");
            }
        }
        if self.kind == MatrixKind::Radiation && self.dim != 3 {
            bail!("radiation matrices are 3D; set dim = 3");
        }
        Ok((n, b))
    }
}

/// Prints to stdout, surfacing write failures (closed pipes, full
/// disks) as errors instead of panics.
fn emit(line: std::fmt::Arguments) -> Result<()> {
    let mut out = std::io::stdout().lock();
    out.write_fmt(line)?;
    out.write_all(b"\n")?;
    Ok(())
}

macro_rules! emit {
    ($($arg:tt)*) => { emit(format_args!($($arg)*)) };
}

fn load_json<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> Result<T> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading {what} {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {what} {}", path.display()))
}

/// Generates the matrix corpus and its manifest under `out_dir`.
pub fn cmd_gen(config: Option<&Path>, out_dir: &Path, seed_override: Option<u64>) -> Result<()> {
    let mut cfg: GenConfig = match config {
        Some(path) => load_json(path, "generation config")?,
        None => GenConfig::default(),
    };
    if let Some(seed) = seed_override {
        cfg.seed = seed;
    }
    let (n_range, b_range) = cfg.ranges()?;
    let total = cfg.n_train + cfg.n_test;
    if total == 0 {
        eprintln!("warning: n_train + n_test = 0, writing an empty manifest");
    }

    let matrix_dir = out_dir.join("matrices");
    fs::create_dir_all(&matrix_dir)
        .with_context(|| format!("creating {}", matrix_dir.display()))?;

    let mut manifest = DatasetManifest::default();
    for i in 0..total {
        let (split, prefix, index) = if i < cfg.n_train {
            (Split::Train, "train", i)
        } else {
            (Split::Test, "test", i - cfg.n_train)
        };
        let matrix_id = format!("{prefix}_{index:03}");
        let mut rng = Rng::new(derive_seed(cfg.seed, i as u64));
        let cells = rng.int_in(n_range[0], n_range[1]);
        let blocks = rng.int_in(b_range[0], b_range[1]);
        let (problem, spec) = match cfg.kind {
            MatrixKind::Diffusion => {
                let spec = DiffusionSpec {
                    dim: cfg.dim,
                    nx: cells,
                    ny: cells,
                    nz: if cfg.dim == 3 { cells } else { 1 },
                    bx: blocks,
                    by: blocks,
                    bz: if cfg.dim == 3 { blocks } else { 1 },
                    m: cfg.m,
                    seed: i as u64,
                };
                (gen_diffusion(&spec)?, ProblemSpec::Diffusion(spec))
            }
            MatrixKind::Radiation => {
                let spec = RadiationSurrogateSpec {
                    nx: cells,
                    ny: cells,
                    nz: cells,
                    m: cfg.m,
                    seed: i as u64,
                    omega_er: cfg.omega_er,
                    omega_ei: cfg.omega_ei,
                };
                (
                    gen_radiation_surrogate(&spec)?,
                    ProblemSpec::RadiationSurrogate(spec),
                )
            }
        };
        let rel_path = format!("matrices/{matrix_id}.mtx");
        write_matrix_market(out_dir.join(&rel_path), &problem.a)?;
        manifest.entries.push(ManifestEntry {
            matrix_id,
            matrix_path: rel_path,
            split,
            spec,
            theta_opt: None,
            iters_at_opt: None,
            grid_csv: None,
        });
    }
    let manifest_path = out_dir.join("manifest.json");
    manifest.save(&manifest_path)?;
    emit!(
        "wrote {total} matrices ({} train, {} test) and {}",
        cfg.n_train,
        cfg.n_test,
        manifest_path.display()
    )?;
    Ok(())
}

/// The right-hand side every generated system uses.
fn ones(n: usize) -> Vec<f64> {
    vec![1.0; n]
}

/// Labels manifest entries with grid-searched θ_opt values.
pub fn cmd_gridsearch(manifest_path: &Path, force: bool, sp: &SolverParams) -> Result<()> {
    let mut manifest = DatasetManifest::load(manifest_path)?;
    let base = manifest_base(manifest_path);
    let todo: Vec<String> = manifest
        .entries
        .iter()
        .filter(|e| force || !e.is_labeled())
        .map(|e| e.matrix_id.clone())
        .collect();
    if todo.is_empty() {
        emit!(
            "all {} entries already labeled; use --force to relabel",
            manifest.entries.len()
        )?;
        return Ok(());
    }
    fs::create_dir_all(base.join("grids"))?;
    let grid = theta_grid();
    for matrix_id in &todo {
        let entry = manifest
            .get_mut(matrix_id)
            .expect("id collected from this manifest");
        let a = entry.load_matrix(&base)?;
        let b = ones(a.n_rows);
        let record = grid_search(matrix_id, &a, &b, &grid, sp)?;
        let rel_csv = format!("grids/{matrix_id}.csv");
        fs::write(base.join(&rel_csv), sensitivity_report(&record))?;
        let entry = manifest
            .get_mut(matrix_id)
            .expect("id collected from this manifest");
        entry.theta_opt = Some(record.theta_opt);
        entry.iters_at_opt = Some(record.iters_min);
        entry.grid_csv = Some(rel_csv);
        manifest.save(manifest_path)?;
        eprintln!(
            "labeled {matrix_id}: theta_opt={} iterations={}",
            record.theta_opt, record.iters_min
        );
    }
    emit!("labeled {} entries", todo.len())?;
    Ok(())
}

/// Trains the threshold selector from the manifest's train split.
pub fn cmd_train(
    manifest_path: &Path,
    config: Option<&Path>,
    seed_override: Option<u64>,
    model_out: &Path,
    log_out: &Path,
) -> Result<()> {
    let manifest = DatasetManifest::load(manifest_path)?;
    let base = manifest_base(manifest_path);
    let mut cfg: TrainConfig = match config {
        Some(path) => load_json(path, "training config")?,
        None => TrainConfig::default(),
    };
    if let Some(seed) = seed_override {
        cfg.seed = seed;
    }

    let entries: Vec<&ManifestEntry> = manifest.split(Split::Train).collect();
    let missing: Vec<&str> = entries
        .iter()
        .filter(|e| !e.is_labeled())
        .map(|e| e.matrix_id.as_str())
        .collect();
    if !missing.is_empty() {
        bail!(
            "train entries missing theta_opt labels: {}; run gridsearch first",
            missing.join(", ")
        );
    }
    let examples: Vec<TrainExample> = entries
        .iter()
        .map(|e| {
            Ok(TrainExample {
                matrix_id: e.matrix_id.clone(),
                a: e.load_matrix(&base)?,
                theta_opt: e.theta_opt.expect("labels checked above"),
            })
        })
        .collect::<Result<_>>()?;

    let model = train(&examples, &cfg)?;
    save_model(&model, model_out)?;
    fs::write(log_out, training_log_csv(&model.train_loss, &model.val_loss))?;
    emit!(
        "trained on {} matrices; best epoch {}; final train loss {}; model -> {}, log -> {}",
        examples.len(),
        model.best_epoch,
        model.train_loss.last().expect("training records epoch 0"),
        model_out.display(),
        log_out.display()
    )?;
    Ok(())
}

/// Renders loss curves as `epoch,train_loss,val_loss` rows; the val
/// column is empty when training ran without a holdout.
pub fn training_log_csv(train_loss: &[f64], val_loss: &[f64]) -> String {
    let mut out = String::from("epoch,train_loss,val_loss\n");
    for (epoch, t) in train_loss.iter().enumerate() {
        let val = val_loss
            .get(epoch)
            .map(|v| v.to_string())
            .unwrap_or_default();
        out.push_str(&format!("{epoch},{t},{val}\n"));
    }
    out
}

pub const GROUP_OPT: &str = "opt";
pub const GROUP_AUTO: &str = "auto";

/// Group label for a fixed default threshold.
pub fn default_group(theta: f64) -> String {
    format!("default={theta}")
}

/// One solver run on one matrix, timed around setup and solve only.
#[derive(Clone, Debug)]
pub struct EvalRow {
    pub matrix_id: String,
    pub n: usize,
    pub group: String,
    pub theta: f64,
    pub iterations: usize,
    pub converged: bool,
    pub setup_seconds: f64,
    pub solve_seconds: f64,
}

pub const EVAL_ROWS_HEADER: &str =
    "matrix_id,n,group,theta,iterations,converged,setup_seconds,solve_seconds";
pub const EVAL_SUMMARY_HEADER: &str = "group,nrow_mean,iter_opt_mean,time_opt_mean,\
     iter_default_mean,time_default_mean,iter_auto_mean,time_auto_mean,speedup";

fn median(mut samples: Vec<f64>) -> f64 {
    samples.sort_by(f64::total_cmp);
    samples[samples.len() / 2]
}

/// Runs AMG setup plus a GMRES solve `repeats` times and reports the
/// per-phase median times. Failures count as the iteration cap.
fn timed_solve(
    a: &CsrMatrix,
    b: &[f64],
    theta: f64,
    pmis_seed: u64,
    sp: &SolverParams,
    repeats: usize,
) -> (usize, bool, f64, f64) {
    let amg = AmgParams {
        pmis_seed,
        ..AmgParams::default()
    };
    let mut setup_times = Vec::with_capacity(repeats);
    let mut solve_times = Vec::with_capacity(repeats);
    let mut outcome = (sp.max_iter, false);
    for rep in 0..repeats {
        let t0 = Instant::now();
        let h = match setup(a, theta, &amg) {
            Ok(h) => h,
            Err(_) => {
                setup_times.push(t0.elapsed().as_secs_f64());
                solve_times.push(0.0);
                continue;
            }
        };
        setup_times.push(t0.elapsed().as_secs_f64());
        let t1 = Instant::now();
        let solved = gmres(a, b, Some(&h), sp.tol, sp.max_iter, sp.restart);
        solve_times.push(t1.elapsed().as_secs_f64());
        if rep == 0 {
            if let Ok((_, report)) = solved {
                outcome = (report.iterations, report.converged);
            }
        }
    }
    (outcome.0, outcome.1, median(setup_times), median(solve_times))
}

/// Per-default summary row recomputed from the per-matrix rows.
#[derive(Clone, Debug)]
pub struct EvalSummaryRow {
    pub group: String,
    pub nrow_mean: f64,
    pub iter_opt_mean: f64,
    pub time_opt_mean: f64,
    pub iter_default_mean: f64,
    pub time_default_mean: f64,
    pub iter_auto_mean: f64,
    pub time_auto_mean: f64,
    pub speedup: f64,
}

/// Means over the test split, one summary row per default threshold.
///
/// Every mean is a plain sum in row order divided by the count, so a
/// reader can reproduce the summary exactly from the per-matrix CSV.
pub fn summarize_eval(rows: &[EvalRow], defaults: &[f64]) -> Vec<EvalSummaryRow> {
    let stats = |group: &str| -> (f64, f64, f64) {
        let mut count = 0usize;
        let (mut n_sum, mut iter_sum, mut time_sum) = (0.0, 0.0, 0.0);
        for row in rows.iter().filter(|r| r.group == group) {
            count += 1;
            n_sum += row.n as f64;
            iter_sum += row.iterations as f64;
            time_sum += row.setup_seconds + row.solve_seconds;
        }
        let k = count.max(1) as f64;
        (n_sum / k, iter_sum / k, time_sum / k)
    };
    let (nrow_mean, iter_opt_mean, time_opt_mean) = stats(GROUP_OPT);
    let (_, iter_auto_mean, time_auto_mean) = stats(GROUP_AUTO);
    defaults
        .iter()
        .map(|&d| {
            let group = default_group(d);
            let (_, iter_default_mean, time_default_mean) = stats(&group);
            EvalSummaryRow {
                group,
                nrow_mean,
                iter_opt_mean,
                time_opt_mean,
                iter_default_mean,
                time_default_mean,
                iter_auto_mean,
                time_auto_mean,
                speedup: time_default_mean / time_auto_mean,
            }
        })
        .collect()
}

pub fn eval_rows_csv(rows: &[EvalRow]) -> String {
    let mut out = format!("{EVAL_ROWS_HEADER}\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.matrix_id,
            r.n,
            r.group,
            r.theta,
            r.iterations,
            r.converged,
            r.setup_seconds,
            r.solve_seconds
        ));
    }
    out
}

pub fn eval_summary_csv(rows: &[EvalSummaryRow]) -> String {
    let mut out = format!("{EVAL_SUMMARY_HEADER}\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.group,
            r.nrow_mean,
            r.iter_opt_mean,
            r.time_opt_mean,
            r.iter_default_mean,
            r.time_default_mean,
            r.iter_auto_mean,
            r.time_auto_mean,
            r.speedup
        ));
    }
    out
}

/// Solves every test matrix at θ_opt, each default θ, and the model's
/// θ_auto, then writes per-matrix and summary CSVs under `out_dir`.
pub fn cmd_eval(
    manifest_path: &Path,
    model_path: &Path,
    defaults: &[f64],
    repeats: usize,
    sp: &SolverParams,
    out_dir: &Path,
) -> Result<()> {
    if repeats == 0 {
        bail!("--repeats must be at least 1");
    }
    for &d in defaults {
        if !(d > 0.0 && d < 1.0) {
            bail!("default threshold {d} outside (0, 1)");
        }
    }
    let manifest = DatasetManifest::load(manifest_path)?;
    let base = manifest_base(manifest_path);
    let model = load_model(model_path)?;
    let entries: Vec<&ManifestEntry> = manifest.split(Split::Test).collect();
    if entries.is_empty() {
        bail!("manifest has no test entries");
    }
    let missing: Vec<&str> = entries
        .iter()
        .filter(|e| !e.is_labeled())
        .map(|e| e.matrix_id.as_str())
        .collect();
    if !missing.is_empty() {
        bail!(
            "test entries missing theta_opt labels: {}; run gridsearch first",
            missing.join(", ")
        );
    }

    let mut rows = Vec::new();
    for entry in &entries {
        let a = entry.load_matrix(&base)?;
        let b = ones(a.n_rows);
        let pmis_seed = fnv1a64(entry.matrix_id.as_bytes());
        let theta_auto = predict_theta(&model, &a)?;
        let mut groups = vec![(
            GROUP_OPT.to_string(),
            entry.theta_opt.expect("labels checked above"),
        )];
        groups.extend(defaults.iter().map(|&d| (default_group(d), d)));
        groups.push((GROUP_AUTO.to_string(), theta_auto));
        for (group, theta) in groups {
            let (iterations, converged, setup_seconds, solve_seconds) =
                timed_solve(&a, &b, theta, pmis_seed, sp, repeats);
            rows.push(EvalRow {
                matrix_id: entry.matrix_id.clone(),
                n: a.n_rows,
                group,
                theta,
                iterations,
                converged,
                setup_seconds,
                solve_seconds,
            });
        }
        eprintln!("evaluated {}", entry.matrix_id);
    }

    let summary = summarize_eval(&rows, defaults);
    fs::create_dir_all(out_dir)?;
    fs::write(out_dir.join("eval_matrices.csv"), eval_rows_csv(&rows))?;
    let summary_csv = eval_summary_csv(&summary);
    fs::write(out_dir.join("eval_summary.csv"), &summary_csv)?;
    emit!("{}", summary_csv.trim_end())?;
    Ok(())
}

/// Predicts θ for one matrix file; optionally solves at it and times
/// the feature-extraction inference.
pub fn cmd_predict(
    matrix_path: &Path,
    model_path: &Path,
    solve: bool,
    time: bool,
    sp: &SolverParams,
) -> Result<()> {
    let a = read_matrix_market(matrix_path)?;
    let model = load_model(model_path)?;
    let theta = predict_theta(&model, &a)?;
    emit!("theta_auto={theta}")?;

    if time {
        let samples: Vec<f64> = (0..3)
            .map(|_| {
                let t0 = Instant::now();
                let _ = predict_theta(&model, &a)?;
                Ok(t0.elapsed().as_secs_f64())
            })
            .collect::<Result<_>>()?;
        emit!("inference_seconds={}", median(samples))?;
    }

    if solve {
        let stem = matrix_path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let amg = AmgParams {
            pmis_seed: fnv1a64(stem.as_bytes()),
            ..AmgParams::default()
        };
        let h = setup(&a, theta, &amg)?;
        let (_, report) = gmres(&a, &ones(a.n_rows), Some(&h), sp.tol, sp.max_iter, sp.restart)?;
        emit!(
            "{}",
            serde_json::to_string_pretty(&report).expect("report serialization cannot fail")
        )?;
    }
    Ok(())
}

fn gen_problem(spec: &ProblemSpec) -> amgtheta::error::Result<LinearProblem> {
    match spec {
        ProblemSpec::Diffusion(d) => gen_diffusion(d),
        ProblemSpec::RadiationSurrogate(r) => gen_radiation_surrogate(r),
    }
}

fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "matrix".to_string())
}

/// Threshold sweep for one matrix: GMRES iteration counts per θ, or the
/// stationary two-grid boundary experiment with `--tg`.
pub fn cmd_sensitivity(
    spec_path: Option<&Path>,
    matrix_path: Option<&Path>,
    tg: bool,
    delta: f64,
    sp: &SolverParams,
    out: Option<&Path>,
    out_dir: &Path,
) -> Result<()> {
    if tg {
        let Some(spec_path) = spec_path else {
            bail!("--tg sweeps a generated boundary matrix; pass --spec, not --matrix");
        };
        let spec: DiffusionSpec = load_json(spec_path, "diffusion spec")?;
        let report = boundary_sensitivity_experiment(&spec, delta, sp)?;
        let csv = boundary_report_csv(&report);
        let path = out
            .map(Path::to_path_buf)
            .unwrap_or_else(|| out_dir.join("boundary_sensitivity.csv"));
        fs::write(&path, csv)?;
        emit!("theta_star={}; report -> {}", report.theta_star, path.display())?;
        return Ok(());
    }

    let (matrix_id, a, b) = match (spec_path, matrix_path) {
        (Some(p), None) => {
            let spec: ProblemSpec = load_json(p, "problem spec")?;
            let problem = gen_problem(&spec)?;
            (file_stem(p), problem.a, problem.b)
        }
        (None, Some(p)) => {
            let a = read_matrix_market(p)?;
            let b = ones(a.n_rows);
            (file_stem(p), a, b)
        }
        _ => bail!("pass exactly one of --spec or --matrix"),
    };
    let record = grid_search(&matrix_id, &a, &b, &theta_grid(), sp)?;
    let path = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| out_dir.join("sensitivity.csv"));
    fs::write(&path, sensitivity_report(&record))?;
    emit!(
        "theta_opt={} iterations {}..{}; report -> {}",
        record.theta_opt,
        record.iters_min,
        record.iters_max,
        path.display()
    )?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gen_config_defaults_track_the_dimension() {
        let cfg = GenConfig::default();
        assert_eq!(cfg.ranges().unwrap(), ([32, 64], [4, 8]));
        let cfg3 = GenConfig {
            dim: 3,
            ..GenConfig::default()
        };
        assert_eq!(cfg3.ranges().unwrap(), ([10, 16], [3, 5]));
        let bad = GenConfig {
            dim: 4,
            ..GenConfig::default()
        };
        assert!(bad.ranges().is_err());
        let flat_radiation = GenConfig {
            kind: MatrixKind::Radiation,
            ..GenConfig::default()
        };
        assert!(flat_radiation.ranges().is_err());
    }

    #[test]
    fn median_picks_the_middle_sample() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(vec![5.0]), 5.0);
    }

    #[test]
    fn summary_means_recompute_from_rows() {
        let row = |id: &str, group: &str, iters: usize, t: f64| EvalRow {
            matrix_id: id.into(),
            n: 100,
            group: group.into(),
            theta: 0.5,
            iterations: iters,
            converged: true,
            setup_seconds: t,
            solve_seconds: 2.0 * t,
        };
        let rows = vec![
            row("a", GROUP_OPT, 10, 0.1),
            row("a", "default=0.5", 30, 0.3),
            row("a", GROUP_AUTO, 12, 0.1),
            row("b", GROUP_OPT, 20, 0.2),
            row("b", "default=0.5", 50, 0.5),
            row("b", GROUP_AUTO, 24, 0.2),
        ];
        let summary = summarize_eval(&rows, &[0.5]);
        assert_eq!(summary.len(), 1);
        let s = &summary[0];
        assert_eq!(s.group, "default=0.5");
        assert_eq!(s.nrow_mean, 100.0);
        assert_eq!(s.iter_opt_mean, 15.0);
        assert_eq!(s.iter_default_mean, 40.0);
        assert_eq!(s.iter_auto_mean, 18.0);
        assert_eq!(s.speedup, s.time_default_mean / s.time_auto_mean);
    }

    #[test]
    fn training_log_handles_missing_validation() {
        let csv = training_log_csv(&[0.5, 0.25], &[]);
        assert_eq!(csv, "epoch,train_loss,val_loss\n0,0.5,\n1,0.25,\n");
        let csv = training_log_csv(&[0.5, 0.25], &[0.6, 0.3]);
        assert_eq!(csv, "epoch,train_loss,val_loss\n0,0.5,0.6\n1,0.25,0.3\n");
    }
}
