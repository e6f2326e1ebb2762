//! `dephaser`: simulate rotational dephasing, synthesize measurement data,
//! estimate the bath distribution and coupling, export the process matrix,
//! and sample Wigner functions.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::{ChannelArgs, Env, WignerArgs};
use crate::config::Loaded;
use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "dephaser", version, about = "Rotational dephasing of molecular vibrations")]
struct Cli {
    /// JSON run configuration; built-in defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Seed for synthetic data (overrides the configuration).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory (overrides the configuration).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for parallel sweeps; 0 picks automatically.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evolve the initial state; write states, a decay table and Wigner grids.
    Simulate,
    /// Generate a synthetic dataset from the configured truth.
    Synth,
    /// Estimate the bath distribution and coupling from a dataset.
    Estimate,
    /// Build the process matrix of the dephasing channel.
    Channel {
        /// Coupling constant, 1/s.
        #[arg(long)]
        lambda: Option<f64>,
        /// Bath weights as a `j,p_j` CSV (for example an estimate's p_hat.csv).
        #[arg(long)]
        weights: Option<PathBuf>,
        /// Evolution time, s.
        #[arg(long)]
        t: Option<f64>,
    },
    /// Sample the Wigner function of a state.
    Wigner {
        /// State matrix file (CSV or JSON); defaults to the initial state.
        #[arg(long)]
        state: Option<PathBuf>,
        /// Evolve the state under the configured model for this time first.
        #[arg(long)]
        t: Option<f64>,
    },
}

fn run(cli: Cli) -> CliResult<()> {
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot configure {} threads: {e}", cli.threads)))?;
    }
    let loaded = Loaded::from_path(cli.config.as_deref())?;
    let out = match cli.out {
        Some(o) => o,
        None => loaded.resolve(&loaded.config.outputs),
    };
    let seed = cli.seed.unwrap_or(loaded.config.seed);
    let env = Env { loaded, out };
    match cli.command {
        Command::Simulate => commands::simulate(&env),
        Command::Synth => commands::synth(&env, seed),
        Command::Estimate => commands::estimate(&env).map(|_| ()),
        Command::Channel { lambda, weights, t } => {
            commands::channel(&env, &ChannelArgs { lambda, weights, t }).map(|_| ())
        }
        Command::Wigner { state, t } => commands::wigner(&env, &WignerArgs { state, t }),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("DEPHASER_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
