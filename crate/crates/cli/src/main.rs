use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use amgtheta::oracle::SolverParams;
use amgtheta_cli::commands;

/// AMG-preconditioned GMRES with a learned strong-threshold selector:
/// corpus generation, grid-search labeling, training, and evaluation.
#[derive(Parser)]
#[command(name = "amgtheta", version, about)]
struct Cli {
    /// Overrides the config seed for `gen` and `train`.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for grid searches and training batches.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Directory for generated corpora, models, and reports.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,

    #[command(subcommand)]
    cmd: Cmd,
}

/// Iterative-solver settings shared by the solving subcommands.
#[derive(Args)]
struct SolverOpts {
    /// Relative residual target.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,

    /// Iteration cap; failures are recorded at this count.
    #[arg(long, default_value_t = 500)]
    max_iter: usize,

    /// Restart length of the Krylov solver.
    #[arg(long, default_value_t = 30)]
    restart: usize,
}

impl From<&SolverOpts> for SolverParams {
    fn from(o: &SolverOpts) -> SolverParams {
        SolverParams {
            tol: o.tol,
            max_iter: o.max_iter,
            restart: o.restart,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a matrix corpus and manifest from a config file.
    Gen {
        /// Generation config JSON; desk-scale defaults when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Label manifest entries with grid-searched optimal thresholds.
    Gridsearch {
        #[arg(long)]
        manifest: PathBuf,

        /// Relabel entries that already carry a threshold.
        #[arg(long)]
        force: bool,

        #[command(flatten)]
        solver: SolverOpts,
    },
    /// Train the threshold selector on the labeled train split.
    Train {
        #[arg(long)]
        manifest: PathBuf,

        /// Training config JSON; defaults when omitted.
        #[arg(long)]
        config: Option<PathBuf>,

        /// Model output path (default: <out-dir>/model.json).
        #[arg(long)]
        model_out: Option<PathBuf>,

        /// Loss-curve CSV path (default: <out-dir>/training_log.csv).
        #[arg(long)]
        log_out: Option<PathBuf>,
    },
    /// Compare optimal, default, and predicted thresholds on the test split.
    Eval {
        #[arg(long)]
        manifest: PathBuf,

        /// Trained model JSON.
        #[arg(long)]
        model: PathBuf,

        /// Fixed thresholds to compare against, comma separated.
        #[arg(long, value_delimiter = ',', default_values_t = [0.25, 0.5])]
        defaults: Vec<f64>,

        /// Timing repeats per solve; the median is reported.
        #[arg(long, default_value_t = 3)]
        repeats: usize,

        #[command(flatten)]
        solver: SolverOpts,
    },
    /// Predict a threshold for one matrix file.
    Predict {
        /// Matrix Market file.
        #[arg(long)]
        matrix: PathBuf,

        /// Trained model JSON.
        #[arg(long)]
        model: PathBuf,

        /// Also solve at the predicted threshold and print the report.
        #[arg(long)]
        solve: bool,

        /// Also report the median feature-extraction inference time.
        #[arg(long)]
        time: bool,

        #[command(flatten)]
        solver: SolverOpts,
    },
    /// Threshold sweep: GMRES iterations per θ, or stationary two-grid with --tg.
    Sensitivity {
        /// Problem spec JSON to generate the matrix from.
        #[arg(long, conflicts_with = "matrix")]
        spec: Option<PathBuf>,

        /// Matrix Market file to sweep directly.
        #[arg(long)]
        matrix: Option<PathBuf>,

        /// Run the stationary two-grid boundary experiment instead of GMRES.
        #[arg(long)]
        tg: bool,

        /// Multiscale threshold for the boundary-matrix reduction.
        #[arg(long, default_value_t = 3.0)]
        delta: f64,

        /// Report path (default: <out-dir>/sensitivity.csv or boundary_sensitivity.csv).
        #[arg(long)]
        out: Option<PathBuf>,

        #[command(flatten)]
        solver: SolverOpts,
    },
}

fn main() -> Result<()> {
    match run() {
        // A reader that hangs up early (e.g. piping into `head`) is not
        // a failure of the command itself.
        Err(e)
            if e.downcast_ref::<std::io::Error>()
                .is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe) =>
        {
            Ok(())
        }
        other => other,
    }
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()?;
    }
    match &cli.cmd {
        Cmd::Gen { config } => commands::cmd_gen(config.as_deref(), &cli.out_dir, cli.seed),
        Cmd::Gridsearch {
            manifest,
            force,
            solver,
        } => commands::cmd_gridsearch(manifest, *force, &solver.into()),
        Cmd::Train {
            manifest,
            config,
            model_out,
            log_out,
        } => commands::cmd_train(
            manifest,
            config.as_deref(),
            cli.seed,
            model_out
                .clone()
                .unwrap_or_else(|| cli.out_dir.join("model.json"))
                .as_path(),
            log_out
                .clone()
                .unwrap_or_else(|| cli.out_dir.join("training_log.csv"))
                .as_path(),
        ),
        Cmd::Eval {
            manifest,
            model,
            defaults,
            repeats,
            solver,
        } => commands::cmd_eval(
            manifest,
            model,
            defaults,
            *repeats,
            &solver.into(),
            &cli.out_dir,
        ),
        Cmd::Predict {
            matrix,
            model,
            solve,
            time,
            solver,
        } => commands::cmd_predict(matrix, model, *solve, *time, &solver.into()),
        Cmd::Sensitivity {
            spec,
            matrix,
            tg,
            delta,
            out,
            solver,
        } => commands::cmd_sensitivity(
            spec.as_deref(),
            matrix.as_deref(),
            *tg,
            *delta,
            &solver.into(),
            out.as_deref(),
            &cli.out_dir,
        ),
    }
}
