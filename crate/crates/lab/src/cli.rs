//! Command-line front end of the `spdv` binary.

use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::commands::{self, Outcome, RunOptions};
use crate::config::{ExperimentConfig, SamplingConfig};
use crate::error::LabError;
use crate::exec::RayonExecutor;

#[derive(Debug, Parser)]
#[command(name = "spdv", version, about = "Monte Carlo experiments for stochastic path-dependent volatility models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate terminal states, optionally dumping every path node.
    Simulate(CommonArgs),
    /// Monte Carlo price of the configured payoff.
    Price(CommonArgs),
    /// Critical horizons per moment order.
    CriticalTime(CommonArgs),
    /// Strong error ladders and slopes, optionally over a k sweep.
    StrongOrder(CommonArgs),
    /// Weak error ladders and slopes.
    WeakOrder(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// TOML experiment file.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub paths: Option<u64>,
    /// Worker threads; 0 means one per core.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    /// Run strong and weak ladders even when the horizon is not admissible.
    #[arg(long)]
    pub force: bool,
    #[arg(long)]
    pub dump_paths: bool,
    /// Add a wall-clock stamp to the CSV headers.
    #[arg(long)]
    pub stamp: bool,
    /// Output directory, overriding `output.dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Weak-ladder sampling, overriding `experiment.sampling`.
    #[arg(long, value_enum)]
    pub sampling: Option<SamplingArg>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SamplingArg {
    Independent,
    Coupled,
}

impl CommonArgs {
    /// Loads the configuration and applies command-line overrides.
    pub fn resolve(&self) -> Result<(ExperimentConfig, RunOptions), LabError> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        if let Some(seed) = self.seed {
            cfg.set_seed(seed)?;
        }
        if let Some(paths) = self.paths {
            cfg.set_paths(paths)?;
        }
        if let Some(dir) = &self.out {
            cfg.output.dir = dir.clone();
        }
        if let Some(s) = self.sampling {
            cfg.experiment.sampling = match s {
                SamplingArg::Independent => SamplingConfig::Independent,
                SamplingArg::Coupled => SamplingConfig::Coupled,
            };
        }
        if self.dump_paths {
            cfg.output.dump_paths = true;
        }
        let stamp = self.stamp.then(|| {
            let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
            format!("{secs} (unix seconds)")
        });
        let opts = RunOptions { force: self.force, stamp, dump_paths: cfg.output.dump_paths };
        Ok((cfg, opts))
    }
}

pub fn execute(cli: &Cli) -> Result<Outcome, LabError> {
    let args = match &cli.command {
        Command::Simulate(a)
        | Command::Price(a)
        | Command::CriticalTime(a)
        | Command::StrongOrder(a)
        | Command::WeakOrder(a) => a,
    };
    let (cfg, opts) = args.resolve()?;
    let exec = RayonExecutor::new(args.workers)?;
    match &cli.command {
        Command::Simulate(_) => commands::simulate(&cfg, &opts, &exec),
        Command::Price(_) => commands::price(&cfg, &opts, &exec),
        Command::CriticalTime(_) => commands::critical_time(&cfg, &opts),
        Command::StrongOrder(_) => commands::strong_order(&cfg, &opts, &exec),
        Command::WeakOrder(_) => commands::weak_order(&cfg, &opts, &exec),
    }
}

/// Runs `cli`, reports to stdout/stderr and returns the exit status.
pub fn run(cli: &Cli) -> i32 {
    match execute(cli) {
        Ok(out) => {
            for w in &out.warnings {
                eprintln!("warning: {w}");
            }
            for line in &out.summary {
                println!("{line}");
            }
            for f in &out.files {
                println!("wrote {}", f.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
