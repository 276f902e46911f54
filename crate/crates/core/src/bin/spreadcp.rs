use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use spreadcp::io::{run_experiment, ExperimentConfig, Store};

#[derive(Parser)]
#[command(name = "spreadcp", version, about = "Experiments on the discretized spread-out contact process")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        config: PathBuf,
        /// Output directory; overrides `output.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// `key.path=value` override, repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Parse and validate a config file; prints its hash.
    Validate {
        config: PathBuf,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Result store maintenance.
    Cache {
        #[command(subcommand)]
        action: CacheAction,
    },
}

#[derive(Subcommand)]
enum CacheAction {
    /// Remove corrupt entries and leftover scratch directories.
    Gc,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let store = Store::from_env();
    let res = match cli.command {
        Command::Run {
            config,
            out,
            overrides,
        } => ExperimentConfig::load_with_overrides(&config, &overrides)
            .and_then(|c| run_experiment(&c, out.as_deref(), &store))
            .map(|o| println!("{}", o.dir.join("summary.json").display())),
        Command::Validate { config, overrides } => {
            ExperimentConfig::load_with_overrides(&config, &overrides).and_then(|c| {
                c.validate()?;
                println!("{}", c.hash());
                Ok(())
            })
        }
        Command::Cache { action: CacheAction::Gc } => store.gc().map(|n| {
            println!("removed {n} entries from {}", store.root().display());
        }),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
