use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mirnet_forge::ablate::{self, Which};
use mirnet_forge::gradcheck::{self, GradFault};
use mirnet_forge::train::{self, TrainFaults};
use mirnet_forge::{eval, infer, Failure, FailureKind, RunConfig};

#[derive(Parser)]
#[command(name = "mirnet-forge", version, about = "Train, evaluate and verify the multi-scale restoration network")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone)]
struct Common {
    /// Run configuration (`section.key = value` lines).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides train.seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Train a network; writes config.txt, loss.csv and model.ckpt into --out.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
        /// Test hook: `nan-loss@STEP`.
        #[arg(long, hide = true)]
        inject_fault: Option<String>,
    },
    /// Score a checkpoint on a manifest against the degraded-input baseline.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Overrides eval.manifest.
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Directory for config.txt and report.tsv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Restore a single PPM image.
    Infer {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        input: PathBuf,
        /// Output image path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Finite-difference gradient checks over every block.
    Gradcheck {
        /// Test hook: `dau`.
        #[arg(long, hide = true)]
        inject_fault: Option<String>,
    },
    /// Fusion-variant or layout ablation.
    Ablate {
        which: String,
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also train each fusion variant (layout always trains).
        #[arg(long)]
        train: bool,
    },
}

fn load_config(common: &Common) -> Result<RunConfig, Failure> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.train.seed = seed;
    }
    eprint!("{}", cfg.to_text());
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Train { common, out, inject_fault } => {
            let faults = match inject_fault.as_deref() {
                None => TrainFaults::default(),
                Some(spec) => {
                    let step = spec
                        .strip_prefix("nan-loss@")
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| Failure::config(format!("unknown fault {spec}")))?;
                    TrainFaults { nan_loss_at: Some(step) }
                }
            };
            let cfg = load_config(&common)?;
            let outcome = train::run(&cfg, &out, faults)?;
            println!("final_loss\t{}", outcome.final_loss);
            if let Some(path) = outcome.checkpoint {
                println!("checkpoint\t{}", path.display());
            }
        }
        Command::Eval { common, checkpoint, manifest, out } => {
            let cfg = load_config(&common)?;
            let report = eval::run(&cfg, &checkpoint, manifest.as_deref())?;
            let text = report.to_text();
            print!("{text}");
            if let Some(dir) = out {
                train::write_config(&cfg, &dir)?;
                std::fs::write(dir.join("report.tsv"), text)?;
            }
        }
        Command::Infer { common, checkpoint, input, out } => {
            let cfg = load_config(&common)?;
            infer::run(&cfg, &checkpoint, &input, &out)?;
        }
        Command::Gradcheck { inject_fault } => {
            let fault = match inject_fault.as_deref() {
                None => None,
                Some(s) => Some(GradFault::parse(s).ok_or_else(|| Failure::config(format!("unknown fault {s}")))?),
            };
            let checks = gradcheck::run_suite(fault)?;
            print!("{}", gradcheck::format_report(&checks));
            let failing = gradcheck::failing(&checks);
            if !failing.is_empty() {
                return Err(Failure::new(FailureKind::Verification, format!("gradient check failed: {}", failing.join(", "))));
            }
        }
        Command::Ablate { which, common, out, train } => {
            let which = Which::parse(&which)
                .ok_or_else(|| Failure::config(format!("unknown ablation {which:?}; expected aggregation or layout")))?;
            let cfg = load_config(&common)?;
            print!("{}", ablate::run(which, &cfg, out.as_deref(), train)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.exit_code() as u8)
        }
    }
}
