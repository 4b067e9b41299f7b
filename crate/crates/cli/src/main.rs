use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod config;
mod error;

use config::RunConfig;
use error::CliError;

#[derive(Parser, Debug)]
#[command(name = "groupdyn", version, about = "Dynamic multi-group membership model for networks")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
struct Common {
    /// Flat `key = value` config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    chains: Option<usize>,
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long = "mask-fraction", global = true)]
    mask_fraction: Option<f64>,
    #[arg(long, global = true)]
    tobs: Option<usize>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Output directory, or file for `evaluate`.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample a state and network from the prior.
    Generate,
    /// Run MCMC chains on a network.
    Fit {
        #[arg(long)]
        network: PathBuf,
    },
    /// Score held-out pairs from a fit and compare with the naive baseline.
    PredictMissing {
        #[arg(long)]
        network: PathBuf,
        /// Output directory of `fit`.
        #[arg(long)]
        fit: PathBuf,
    },
    /// Fit on the first T_obs snapshots and predict the next one.
    Forecast {
        #[arg(long)]
        network: PathBuf,
    },
    /// Metrics for a prediction file against the true network.
    Evaluate {
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        predictions: PathBuf,
        /// Held-out pair file; without it `--tobs` selects forecast mode.
        #[arg(long)]
        mask: Option<PathBuf>,
    },
    /// Check a fit against its network, or run the joint-distribution test.
    Validate {
        #[arg(long)]
        network: Option<PathBuf>,
        #[arg(long)]
        fit: Option<PathBuf>,
        /// Rounds for the joint-distribution test when no fit is given.
        #[arg(long, default_value_t = 5000)]
        rounds: usize,
    },
    /// Membership rasters and group summaries from a fit.
    Report {
        #[arg(long)]
        fit: PathBuf,
        /// Chain whose final draw is rendered.
        #[arg(long, default_value_t = 0)]
        chain: usize,
    },
}

fn resolve(common: &Common) -> Result<RunConfig, CliError> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    cfg.apply_env(std::env::vars())?;
    if let Some(v) = common.seed {
        cfg.set("run.seed", &v.to_string())?;
    }
    if let Some(v) = common.chains {
        cfg.set("sampler.chains", &v.to_string())?;
    }
    if let Some(v) = common.workers {
        cfg.set("run.workers", &v.to_string())?;
    }
    if let Some(v) = common.mask_fraction {
        cfg.set("run.mask_fraction", &v.to_string())?;
    }
    if let Some(v) = common.tobs {
        cfg.set("run.tobs", &v.to_string())?;
    }
    if let Some(v) = common.format {
        cfg.set("run.format", if v == Format::Json { "json" } else { "csv" })?;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = resolve(&cli.common)?;
    let output = cli.common.output.clone();
    match cli.command {
        Command::Generate => commands::generate(&cfg, &need_output(output)?),
        Command::Fit { network } => commands::fit(&cfg, &network, &need_output(output)?),
        Command::PredictMissing { network, fit } => {
            commands::predict_missing(&cfg, &network, &fit, &need_output(output)?)
        }
        Command::Forecast { network } => commands::forecast(&cfg, &network, &need_output(output)?),
        Command::Evaluate {
            truth,
            predictions,
            mask,
        } => commands::evaluate(&cfg, &truth, &predictions, mask.as_deref(), output.as_deref()),
        Command::Validate {
            network,
            fit,
            rounds,
        } => match (network, fit) {
            (Some(net), Some(fit)) => commands::validate_fit(&cfg, &net, &fit),
            (None, None) => commands::validate_sampler(&cfg, rounds),
            _ => Err(CliError::Config("validate needs both --network and --fit, or neither".into())),
        },
        Command::Report { fit, chain } => commands::report(&fit, chain, &need_output(output)?),
    }
}

fn need_output(output: Option<PathBuf>) -> Result<PathBuf, CliError> {
    output.ok_or_else(|| CliError::Config("--output is required".into()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(p) => p,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("groupdyn: {e}");
            e.exit_code()
        }
    }
}
