use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use spinbell_cli::{commands, CliResult, ExitStatus, Outcome, Run};

#[derive(Parser)]
#[command(name = "spinbell", version, about = "Bell locality certificates for quantum spin lattices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (TOML).
    config: PathBuf,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// CHSH supremum and static certificate for every region pair.
    ChshScan(RunArgs),
    /// Fit the clustering envelope of connected correlators.
    ClusteringFit(RunArgs),
    /// Fit the light-cone envelope after a quench.
    Quench(RunArgs),
    /// Certificates for a general inequality file.
    BellCertify(RunArgs),
    /// Classical bound of an inequality file.
    LocalBound {
        /// Inequality file (TOML).
        inequality: PathBuf,
    },
    /// Built-in numerical checks.
    SelfTest,
}

fn with_run(args: RunArgs, f: fn(&Run) -> CliResult<Outcome>) -> CliResult<Outcome> {
    let run = Run::from_path(&args.config, args.seed, args.out)?;
    f(&run)
}

fn dispatch(command: Command) -> CliResult<Outcome> {
    match command {
        Command::ChshScan(a) => with_run(a, commands::chsh_scan),
        Command::ClusteringFit(a) => with_run(a, commands::clustering_fit),
        Command::Quench(a) => with_run(a, commands::quench),
        Command::BellCertify(a) => with_run(a, commands::bell_certify),
        Command::LocalBound { inequality } => commands::local_bound(&inequality),
        Command::SelfTest => commands::self_test(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { ExitStatus::ConfigError as u8 } else { 0 });
        }
    };
    match dispatch(cli.command) {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            ExitCode::from(outcome.status as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_status() as u8)
        }
    }
}
