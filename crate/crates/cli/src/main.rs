use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod error;

use commands::Run;
use config::{RunConfig, DEFAULT_OUTPUT_DIR};
use error::CliError;

/// Ankle torque from a two-muscle winding-filament model: simulate, fit
/// activation amplitudes by particle swarm, and report train/test RMSE.
///
/// Exit status: 0 success, 1 usage error, 2 data or config error,
/// 3 numerical failure. Failed runs leave a FAILED file in the output
/// directory; every run writes manifest.toml.
#[derive(Parser)]
#[command(name = "ankle-wfm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Torque trace per trial at the configured activation amplitudes.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Anterior peak activation, overriding `activation.anterior`.
        #[arg(long)]
        anterior: Option<f64>,
        /// Posterior peak activation, overriding `activation.posterior`.
        #[arg(long)]
        posterior: Option<f64>,
    },
    /// Fit activation amplitudes to the training trials.
    Optimize {
        #[command(flatten)]
        common: Common,
        /// Swarm seed, overriding `pso.seed`.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Train/test RMSE report at the configured activation amplitudes.
    Evaluate {
        #[command(flatten)]
        common: Common,
    },
    /// Write synthetic trials and a config that fits them.
    GenSynthetic {
        /// Run configuration; defaults apply without one.
        #[arg(long, value_name = "FILE")]
        config: Option<PathBuf>,
        /// Output directory.
        #[arg(long, value_name = "DIR", env = "WFM_OUT_DIR")]
        out: Option<PathBuf>,
        /// Noise seed, overriding `synthetic.seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Gaussian noise standard deviation in torque units, overriding
        /// `synthetic.noise_sd`.
        #[arg(long)]
        noise_sd: Option<f64>,
    },
}

#[derive(Args)]
struct Common {
    /// Run configuration (TOML).
    #[arg(long, value_name = "FILE")]
    config: PathBuf,
    /// Output directory, overriding `output_dir`.
    #[arg(long, value_name = "DIR", env = "WFM_OUT_DIR")]
    out: Option<PathBuf>,
}

fn output_dir(flag: Option<PathBuf>, cfg: &RunConfig) -> PathBuf {
    flag.or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR))
}

fn prepare(
    name: &'static str,
    config: Option<PathBuf>,
    out: Option<PathBuf>,
    apply: impl FnOnce(&mut RunConfig),
) -> Result<Run<'static>, CliError> {
    let mut cfg = match config {
        Some(path) => RunConfig::load(&path)?,
        None => RunConfig::default(),
    };
    apply(&mut cfg);
    cfg.validate()?;
    let out = output_dir(out, &cfg);
    // snapshots written into the run refer to it by absolute path
    let out = std::path::absolute(&out).map_err(|e| CliError::io(&out, e))?;
    cfg.output_dir = Some(out.clone());
    Ok(Run {
        command: name,
        config: cfg,
        out,
    })
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Simulate {
            common,
            anterior,
            posterior,
        } => prepare("simulate", Some(common.config), common.out, |c| {
            c.activation.anterior = anterior.unwrap_or(c.activation.anterior);
            c.activation.posterior = posterior.unwrap_or(c.activation.posterior);
        })?
        .execute(commands::simulate),
        Command::Optimize { common, seed } => prepare("optimize", Some(common.config), common.out, |c| {
            c.pso.seed = seed.unwrap_or(c.pso.seed);
        })?
        .execute(commands::optimize),
        Command::Evaluate { common } => {
            prepare("evaluate", Some(common.config), common.out, |_| {})?.execute(commands::evaluate)
        }
        Command::GenSynthetic {
            config,
            out,
            seed,
            noise_sd,
        } => prepare("gen-synthetic", config, out, |c| {
            c.synthetic.seed = seed.unwrap_or(c.synthetic.seed);
            c.synthetic.noise_sd = noise_sd.unwrap_or(c.synthetic.noise_sd);
        })?
        .execute(commands::gen_synthetic),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(CliError::Usage(String::new()).exit_code()),
            };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
