//! Command-line interface.

use crate::config::{Config, Overrides, Settings};
use crate::stages::{self, fetch::FetchArgs, Context};
use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "crashnet", version, about = "Network and herding analysis of a crypto market crash")]
pub struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Output directory (`output.dir`).
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Layout seed (`output.seed`).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Weight decay parameter (`corr.theta`).
    #[arg(long, global = true)]
    pub theta: Option<f64>,
    /// Treat theta as the decay constant in hours rather than a fraction of the window.
    #[arg(long, global = true)]
    pub theta_literal: bool,
    /// Newey-West lag: `auto` or a number (`herd.lag`).
    #[arg(long, global = true)]
    pub lag: Option<String>,
    /// Drop a registry sector before the herding regressions; repeatable.
    #[arg(long = "exclude-sector", global = true, value_name = "SECTOR")]
    pub exclude_sector: Vec<String>,
    /// Override any configuration key, e.g. `--set corr.window=48`; repeatable.
    #[arg(long, global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct FetchCmd {
    /// `kraken`, `binance`, `synthetic` or `csv`; defaults to `data.exchange`.
    #[arg(long)]
    pub source: Option<String>,
    /// Directory of `<SYMBOL>.csv` candle and `<SYMBOL>.trades.csv` trade files.
    #[arg(long, value_name = "DIR")]
    pub import: Option<PathBuf>,
    /// Skip trade tapes.
    #[arg(long)]
    pub no_trades: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fill the local store.
    Fetch(FetchCmd),
    /// Descriptive statistics, average returns and rescaled prices.
    Stats,
    /// Rolling weighted correlations.
    Corr,
    /// Filtered networks and centrality.
    Tmfg,
    /// CSAD herding regressions.
    Herd,
    /// Hourly buy/sell imbalance.
    Imbalance,
    /// Bundle all stage outputs with an index.
    Report,
    /// Print the effective configuration.
    ShowConfig,
}

impl Cli {
    fn overrides(&self) -> Overrides {
        Overrides {
            out: self.out.clone(),
            seed: self.seed,
            theta: self.theta,
            theta_literal: self.theta_literal,
            lag: self.lag.clone(),
            exclude_sector: self.exclude_sector.clone(),
            set: self.set.clone(),
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let config = Config::load(cli.config.as_deref(), &cli.overrides())?;
    let settings = Settings::new(config)?;
    if let Command::ShowConfig = cli.command {
        print!("{}", settings.config.to_toml());
        return Ok(());
    }
    let ctx = Context::new(settings)?;
    match &cli.command {
        Command::Fetch(f) => {
            let args = FetchArgs { source: f.source.clone(), import: f.import.clone(), no_trades: f.no_trades };
            stages::fetch::run(&ctx, &args)
        }
        Command::Stats => stages::stats::run(&ctx),
        Command::Corr => stages::corr::run(&ctx),
        Command::Tmfg => stages::tmfg::run(&ctx),
        Command::Herd => stages::herd::run(&ctx),
        Command::Imbalance => stages::imbalance::run(&ctx),
        Command::Report => stages::report::run(&ctx),
        Command::ShowConfig => unreachable!(),
    }
}
