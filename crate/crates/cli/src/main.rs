//! `tpcm`: Bayesian paired-comparison analysis from the command line.

mod config;
mod render;
mod run;

use clap::{Parser, Subcommand};

use config::{RunArgs, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "tpcm", version, about = "Paired-comparison worth estimation with t-distributed preference curves")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Full analysis: one report per (model, prior) combination.
    Fit(RunArgs),
    /// Estimates across the nu list, one CSV per prior and estimator.
    Sweep(RunArgs),
    /// Chi-square goodness of fit for every combination, best p first.
    Gof(RunArgs),
}

type Handler = fn(&RunConfig) -> Result<(), config::CliError>;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (args, command): (&RunArgs, Handler) = match &cli.command {
        Command::Fit(a) => (a, run::cmd_fit),
        Command::Sweep(a) => (a, run::cmd_sweep),
        Command::Gof(a) => (a, run::cmd_gof),
    };
    let result = RunConfig::from_args(args).and_then(|cfg| command(&cfg));
    if let Err(e) = result {
        eprintln!("tpcm: {e}");
        std::process::exit(e.exit_code());
    }
}
