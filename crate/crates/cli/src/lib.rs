//! Command-line front end for `maxent-cluster`.
//!
//! Exit codes: 0 success, 1 I/O or internal failure, 2 configuration error, 3 data or
//! validation error, 4 training divergence, 5 training stopped at `max_epochs` without
//! converging (outputs are still written), 6 gradient check failed.

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use config::RunConfig;
use error::CliResult;

#[derive(Debug, Parser)]
#[command(name = "maxent-cluster", version, about = "Entropy-trained feed-forward clustering")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a network and write the model and per-epoch report.
    Train {
        #[arg(short, long)]
        config: PathBuf,
    },
    /// Assign every sample to the cluster of its weakest output neuron.
    Cluster {
        #[arg(short, long)]
        config: PathBuf,
        /// Model file; defaults to the configured output.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Data file read with the configured layout; defaults to `data.path`.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score an assignments file by purity against the dataset labels.
    Eval {
        #[arg(short, long)]
        config: PathBuf,
        #[arg(long)]
        assignments: Option<PathBuf>,
        /// Print published purity figures for this dataset next to the result.
        #[arg(long)]
        compare: Option<String>,
        /// Also score against labels shuffled with this seed.
        #[arg(long)]
        shuffled_control: Option<u64>,
    },
    /// Train one single-hidden-layer network per width and record purity and objective.
    Sweep {
        #[arg(short, long)]
        config: PathBuf,
        /// Comma-separated widths, overriding `sweep.sizes`.
        #[arg(long, value_delimiter = ',')]
        sizes: Option<Vec<usize>>,
    },
    /// Compare backpropagated gradients with finite differences on random networks.
    Gradcheck {
        #[arg(short, long)]
        config: Option<PathBuf>,
    },
    /// Run the hyperparameter grid and k-means on one dataset and report the best purity.
    #[command(name = "compare-table1")]
    CompareTable1 {
        #[arg(short, long)]
        config: PathBuf,
    },
    /// Print the default configuration.
    PrintConfig,
}

pub fn run(cli: &Cli, out: &mut dyn Write) -> CliResult<()> {
    match &cli.command {
        Command::Train { config } => commands::cmd_train(&RunConfig::load(config)?, out),
        Command::Cluster {
            config,
            model,
            data,
            out: target,
        } => commands::cmd_cluster(
            &RunConfig::load(config)?,
            model.as_deref(),
            data.as_deref(),
            target.as_deref(),
            out,
        ),
        Command::Eval {
            config,
            assignments,
            compare,
            shuffled_control,
        } => commands::cmd_eval(
            &RunConfig::load(config)?,
            assignments.as_deref(),
            compare.as_deref(),
            *shuffled_control,
            out,
        ),
        Command::Sweep { config, sizes } => {
            commands::cmd_sweep(&RunConfig::load(config)?, sizes.as_deref(), out)
        }
        Command::Gradcheck { config } => {
            let cfg = match config {
                Some(p) => RunConfig::load(p)?,
                None => RunConfig::default(),
            };
            commands::cmd_gradcheck(&cfg, out)
        }
        Command::CompareTable1 { config } => {
            commands::cmd_compare_table1(&RunConfig::load(config)?, out)
        }
        Command::PrintConfig => commands::cmd_print_config(out),
    }
}
