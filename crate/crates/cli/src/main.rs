use std::process::ExitCode;

use clap::{Parser, Subcommand};

use roundrank_cli::config::{parse_k, ExperimentFlags};
use roundrank_cli::suites::Suite;
use roundrank_cli::CliError;
use roundrank_core::KSpec;

#[derive(Parser)]
#[command(name = "roundrank", version, about = "Round-limited ranking and selection experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run trials of one configuration and emit a JSON line per trial.
    Run(ExperimentFlags),
    /// Run a grid over n (and optionally k) and fit a scaling exponent.
    Sweep {
        #[command(flatten)]
        flags: ExperimentFlags,
        /// Comma-separated values of n.
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<usize>>,
        /// Comma-separated values of k.
        #[arg(long, value_delimiter = ',', value_parser = parse_k)]
        k_grid: Option<Vec<KSpec>>,
    },
    /// Run property suites.
    Verify {
        /// exhaustive, oracle, adaptiveness, budgets or all.
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, env = "ROUNDRANK_SEED", default_value_t = 0)]
        seed: u64,
    },
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(flags) => {
            roundrank_cli::run(&flags.resolve()?)?;
        }
        Command::Sweep { flags, grid, k_grid } => {
            let mut resolved = flags.resolve()?;
            if grid.is_some() {
                resolved.n_grid = grid;
            }
            if k_grid.is_some() {
                resolved.k_grid = k_grid;
            }
            roundrank_cli::sweep(&resolved)?;
        }
        Command::Verify { suite, seed } => {
            let suites = if suite == "all" {
                Suite::ALL.to_vec()
            } else {
                vec![suite.parse::<Suite>().map_err(CliError::Usage)?]
            };
            roundrank_cli::verify(&suites, seed, &mut std::io::stdout().lock())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("roundrank: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
