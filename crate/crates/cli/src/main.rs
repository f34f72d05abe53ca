//! `cbr`: run analogy-based effort estimation experiments from config files.

mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use cbr_core::Execution;
use clap::{Args, Parser, Subcommand};

use commands::{CliError, RunOptions};
use report::Format;

#[derive(Debug, Parser)]
#[command(name = "cbr", version, about = "Analogy-based software effort estimation: experiments, reports and an estimation API")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Report directory.
    #[arg(long, env = "CBR_OUT_DIR", default_value = "cbr-out")]
    out: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 0 picks one per core.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Table format.
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check datasets against their schemas and report every issue.
    Validate {
        /// Dataset CSV (with --schema), or omit and pass --config.
        csv: Option<PathBuf>,
        #[arg(long)]
        schema: Option<PathBuf>,
        #[arg(long, conflicts_with_all = ["csv", "schema"])]
        config: Option<PathBuf>,
    },
    /// Leave-one-out evaluation of every configured predictor.
    Loocv(ExperimentArgs),
    /// Paired comparison of predictors, with effect sizes and vote counts.
    Compare(ExperimentArgs),
    /// Wrapper feature-subset search for the analogy predictor.
    SubsetSearch(ExperimentArgs),
    /// Accuracy as a function of training-set size.
    Sensitivity(ExperimentArgs),
    /// Estimate one project and print the donors as JSON.
    Estimate {
        #[arg(long)]
        config: PathBuf,
        /// Dataset label; defaults to the first configured dataset.
        #[arg(long)]
        dataset: Option<String>,
        /// Analogy predictor label whose settings to use.
        #[arg(long)]
        predictor: Option<String>,
        #[arg(long)]
        k: Option<usize>,
        /// Feature value as NAME=VALUE; repeatable.
        #[arg(long = "target", value_name = "NAME=VALUE")]
        targets: Vec<String>,
    },
    /// Serve the estimation API until interrupted.
    Serve {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the configured listen address.
        #[arg(long)]
        address: Option<String>,
    },
}

type Experiment = fn(&RunOptions, Execution) -> Result<Vec<PathBuf>, CliError>;

fn run_experiment(args: ExperimentArgs, f: Experiment) -> Result<(), CliError> {
    let opts = RunOptions { config_path: args.config, out: args.out, seed: args.seed, format: args.format };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.threads)
        .build()
        .map_err(|e| CliError::Internal(format!("thread pool: {e}")))?;
    let written = pool.install(|| f(&opts, Execution::Parallel))?;
    for path in written {
        println!("{}", path.display());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Validate { csv, schema, config } => {
            let pairs = match (csv, schema, config) {
                (Some(csv), Some(schema), None) => vec![(csv, schema)],
                (None, None, Some(config)) => commands::validate_pairs_from_config(&config)?,
                _ => return Err(CliError::Usage("validate needs CSV --schema SCHEMA, or --config CONFIG".into())),
            };
            let (text, issues) = commands::cmd_validate(&pairs);
            print!("{text}");
            if issues > 0 {
                return Err(CliError::Data(format!("{issues} issue(s) found")));
            }
            Ok(())
        }
        Command::Loocv(a) => run_experiment(a, commands::cmd_loocv),
        Command::Compare(a) => run_experiment(a, commands::cmd_compare),
        Command::SubsetSearch(a) => run_experiment(a, commands::cmd_subset_search),
        Command::Sensitivity(a) => run_experiment(a, commands::cmd_sensitivity),
        Command::Estimate { config, dataset, predictor, k, targets } => {
            print!("{}", commands::cmd_estimate(&config, dataset.as_deref(), predictor.as_deref(), k, &targets)?);
            Ok(())
        }
        Command::Serve { config, address } => commands::cmd_serve(&config, address.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
