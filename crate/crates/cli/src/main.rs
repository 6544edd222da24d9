//! Command line front end for the fording toolkit: builds vehicle assets,
//! prepares geometry, generates training data, trains and evaluates the
//! force model, and runs validation and latency checks.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fording_core::error::{Error, ErrorClass, Result};

use config::{load_file_config, resolve_out, DEFAULT_SEED};

#[derive(Parser)]
#[command(
    name = "fording",
    version,
    about = "Surrogate force prediction for partially submerged vehicles",
    after_help = "Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric error.\n\
                  Output directories may also come from a --config TOML file or the FORDING_OUT prefix."
)]
struct Cli {
    /// TOML file supplying defaults for any command.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Worker threads for parallel stages (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Base RNG seed; overrides the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write a built-in test vehicle (mesh, patch labels, spec) to a directory.
    Vehicle {
        /// mini-husky or mini-warthog.
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },

    /// Build the distance grid and per-patch depth samples for a vehicle.
    Prepare {
        /// Directory holding mesh.stl, patches.labels, spec.json.
        vehicle_dir: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,

        /// Depth-probe points per patch.
        #[arg(long)]
        samples: Option<usize>,

        /// Regenerate even if the output directory holds stale results.
        #[arg(long)]
        force: bool,
    },

    /// Run the synthetic force campaign and assemble the training set.
    Generate {
        /// Directory produced by prepare.
        prep_dir: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,

        /// Number of campaign cases before augmentation.
        #[arg(long)]
        cases: Option<usize>,

        /// Skip mirror/reverse augmentation.
        #[arg(long)]
        no_augment: bool,
    },

    /// Train the per-surface force model on a generated dataset.
    Train {
        /// Directory produced by generate.
        data_dir: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,

        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        batch_size: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        /// Hidden layer width.
        #[arg(long)]
        hidden: Option<usize>,
        /// full, stripped-dims, or global-only.
        #[arg(long)]
        variant: Option<String>,
        /// Fraction of cases used for training.
        #[arg(long)]
        split: Option<f64>,
        /// Stop once held-out net Fx sMAPE drops below this percentage.
        #[arg(long)]
        early_stop_smape: Option<f64>,
    },

    /// Report force errors of a trained model on a dataset.
    Eval {
        /// Directory produced by train.
        model_dir: PathBuf,
        /// Directory produced by generate.
        data_dir: PathBuf,

        /// all, train, or val (train/val reuse the training split).
        #[arg(long, default_value = "all")]
        split: String,

        /// Write the full report as JSON to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },

    /// Check drag and buoyancy scaling laws on constant-depth trials.
    Validate {
        /// Directory produced by train.
        model_dir: PathBuf,
        /// Directory produced by prepare.
        prep_dir: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,

        /// Directory of recorded trial traces (.csv); default is synthetic trials.
        #[arg(long)]
        traces: Option<PathBuf>,

        /// Water depths for synthetic trials, comma separated.
        #[arg(long, value_delimiter = ',')]
        depths: Option<Vec<f64>>,

        /// Speeds per depth for synthetic trials.
        #[arg(long)]
        speeds: Option<usize>,

        /// Exit nonzero when any physics check fails.
        #[arg(long)]
        strict: bool,
    },

    /// Measure single-prediction latency and sustained prediction rate.
    Bench {
        /// Directory produced by train.
        model_dir: PathBuf,
        /// Directory produced by prepare.
        prep_dir: PathBuf,

        /// Write stats and raw timings to this directory.
        #[arg(long)]
        out: Option<PathBuf>,

        /// Timed iterations for the latency distribution.
        #[arg(long)]
        iters: Option<usize>,

        /// Run a sustained throughput loop for this many seconds.
        #[arg(long)]
        sustained_secs: Option<f64>,

        /// constant or varying inputs for the sustained loop.
        #[arg(long, default_value = "constant")]
        mode: String,

        /// f64, f32, or both.
        #[arg(long, default_value = "both")]
        precision: String,
    },
}

fn run(cli: Cli) -> Result<()> {
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Error::Config(format!("cannot size the thread pool: {e}")))?;
    }
    let cfg = load_file_config(cli.config.as_deref())?;
    let seed = cli.seed.or(cfg.seed).unwrap_or(DEFAULT_SEED);

    match cli.cmd {
        Cmd::Vehicle { name, out } => {
            let out = resolve_out(out, &name)?;
            commands::cmd_vehicle(&name, out)
        }
        Cmd::Prepare { vehicle_dir, out, samples, force } => {
            let out = resolve_out(out, "prep")?;
            commands::cmd_prepare(&cfg, vehicle_dir, out, seed, samples, force)
        }
        Cmd::Generate { prep_dir, out, cases, no_augment } => {
            let out = resolve_out(out, "data")?;
            commands::cmd_generate(&cfg, prep_dir, out, seed, cases, no_augment)
        }
        Cmd::Train {
            data_dir,
            out,
            epochs,
            batch_size,
            lr,
            hidden,
            variant,
            split,
            early_stop_smape,
        } => {
            let out = resolve_out(out, "model")?;
            let eff = cfg.effective_train(
                seed,
                epochs,
                batch_size,
                lr,
                hidden,
                variant,
                split,
                early_stop_smape,
            )?;
            commands::cmd_train(data_dir, out, eff)
        }
        Cmd::Eval { model_dir, data_dir, split, out } => {
            commands::cmd_eval(model_dir, data_dir, &split, out)
        }
        Cmd::Validate { model_dir, prep_dir, out, traces, depths, speeds, strict } => {
            let out = resolve_out(out, "validation")?;
            commands::cmd_validate(
                &cfg, model_dir, prep_dir, out, seed, traces, depths, speeds, strict,
            )
        }
        Cmd::Bench { model_dir, prep_dir, out, iters, sustained_secs, mode, precision } => {
            commands::cmd_bench(
                &cfg,
                model_dir,
                prep_dir,
                out,
                seed,
                iters,
                sustained_secs,
                &mode,
                &precision,
            )
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e.class() {
                ErrorClass::Config => ExitCode::from(2),
                ErrorClass::Data => ExitCode::from(3),
                ErrorClass::Numeric => ExitCode::from(4),
            }
        }
    }
}
