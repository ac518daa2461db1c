//! `fedhet` — deterministic federated-learning experiments over
//! heterogeneous client shards.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fedhet_cli::commands::{self, CliError};
use fedhet_cli::config::Overrides;

#[derive(Parser)]
#[command(name = "fedhet", version, about = "Federated-learning experiments over heterogeneous data shards")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run an experiment and write metrics.csv plus summary.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Coordinate remote client processes instead of simulating in-process.
        #[arg(long)]
        wire: bool,
        /// Listen address for --wire, e.g. 127.0.0.1:7007.
        #[arg(long)]
        listen: Option<String>,
        /// Override the config's size-table scale factor.
        #[arg(long)]
        scale: Option<f64>,
        /// Override the config's experiment seed.
        #[arg(long)]
        seed_override: Option<u64>,
        /// Override the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Client connection timeout in wire mode.
        #[arg(long, default_value_t = 30)]
        timeout_secs: u64,
    },
    /// Build shards and write per-client histograms and manifests; no training.
    Partition {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        scale: Option<f64>,
        #[arg(long)]
        seed_override: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabulate completed run outputs found under a directory.
    Compare {
        dir: PathBuf,
        /// Accuracy threshold for rounds-to-threshold when a run has no target.
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
        /// Also write the table as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Coordinate an experiment for remote clients.
    Serve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        listen: String,
        #[arg(long, default_value_t = 30)]
        timeout_secs: u64,
        #[arg(long)]
        scale: Option<f64>,
        #[arg(long)]
        seed_override: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Join a served experiment as one client.
    Client {
        #[arg(long)]
        config: PathBuf,
        /// Coordinator address, e.g. 127.0.0.1:7007.
        #[arg(long)]
        connect: String,
        /// Which scenario slot this process trains.
        #[arg(long)]
        client_id: usize,
        #[arg(long, default_value_t = 30)]
        timeout_secs: u64,
        #[arg(long)]
        scale: Option<f64>,
        #[arg(long)]
        seed_override: Option<u64>,
    },
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.cmd {
        Cmd::Run {
            config,
            wire,
            listen,
            scale,
            seed_override,
            out,
            timeout_secs,
        } => {
            let ov = Overrides { scale, seed: seed_override, out };
            commands::cmd_run(&config, &ov, wire, listen.as_deref(), timeout_secs)
        }
        Cmd::Partition {
            config,
            scale,
            seed_override,
            out,
        } => {
            let ov = Overrides { scale, seed: seed_override, out };
            commands::cmd_partition(&config, &ov)
        }
        Cmd::Compare { dir, threshold, out } => {
            commands::cmd_compare(&dir, threshold, out.as_deref())
        }
        Cmd::Serve {
            config,
            listen,
            timeout_secs,
            scale,
            seed_override,
            out,
        } => {
            let ov = Overrides { scale, seed: seed_override, out };
            commands::cmd_serve(&config, &ov, &listen, timeout_secs)
        }
        Cmd::Client {
            config,
            connect,
            client_id,
            timeout_secs,
            scale,
            seed_override,
        } => {
            let ov = Overrides { scale, seed: seed_override, out: None };
            commands::cmd_client(&config, &ov, &connect, client_id, timeout_secs)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
