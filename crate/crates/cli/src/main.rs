use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

mod commands;
mod config;
mod manifest;
mod svg;

use commands::Ctx;
use config::{ConfigError, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "kilnopt", version, about = "Cement-kiln emission modelling, forecasting and NOx control")]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true, env = "KILNOPT_CONFIG")]
    config: Option<PathBuf>,
    #[arg(long, global = true, env = "KILNOPT_SEED")]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, env = "KILNOPT_OUT")]
    out: Option<PathBuf>,
    /// Worker threads; defaults to the available cores.
    #[arg(long, global = true, env = "KILNOPT_THREADS")]
    threads: Option<usize>,
    /// Input dataset CSV.
    #[arg(long, global = true, env = "KILNOPT_INPUT")]
    input: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a synthetic plant dataset.
    Generate {
        #[arg(long)]
        minutes: Option<usize>,
    },
    /// Consistency, physical limits, percentile bands and correlation pruning.
    Preprocess,
    /// Fit and save one emission surrogate with hold-out and CV metrics.
    Train,
    /// Compare model families over seeded hold-out splits.
    Benchmark,
    /// Test error against process-history length.
    SweepTau,
    /// Recursive and direct multi-step forecasts per emission channel.
    Forecast {
        #[arg(long)]
        channel: Vec<String>,
    },
    /// Constrained NOx minimisation trials.
    Optimize {
        #[arg(long)]
        trials: Option<usize>,
        /// normal, stress or both
        #[arg(long)]
        scenario: Option<String>,
    },
    /// Exact Shapley attributions for the DV surrogate.
    Explain,
    /// Annual NOx and ammonia accounting.
    Econ,
    /// Check manifests in the output directory and summarise them.
    Report,
}

/// Bad invocation: exit code 1.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<UsageError>() {
            return 1;
        }
        if cause.is::<ConfigError>() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<kilnopt_core::Error>() {
            return match e {
                kilnopt_core::Error::Numerical(_) => 3,
                _ => 2,
            };
        }
    }
    2
}

fn run(cli: Cli) -> Result<()> {
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let threads = cli.threads.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if threads == 0 {
        return Err(UsageError("--threads must be at least 1".into()).into());
    }
    // a second initialisation in the same process is harmless
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    let ctx = Ctx {
        seed: cli.seed.or(cfg.seed).unwrap_or(0),
        out: cli.out.clone().or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("kilnopt-out")),
        input: cli.input.clone().or_else(|| cfg.input.clone()),
        threads,
        args: std::env::args().skip(1).collect(),
        cfg,
    };
    match cli.command {
        Command::Generate { minutes } => commands::generate(&ctx, minutes),
        Command::Preprocess => commands::preprocess(&ctx),
        Command::Train => commands::train(&ctx),
        Command::Benchmark => commands::run_benchmark(&ctx),
        Command::SweepTau => commands::run_sweep_tau(&ctx),
        Command::Forecast { channel } => commands::run_forecast(&ctx, &channel),
        Command::Optimize { trials, scenario } => commands::optimize(&ctx, trials, scenario),
        Command::Explain => commands::explain(&ctx),
        Command::Econ => commands::econ(&ctx),
        Command::Report => commands::report(&ctx),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
