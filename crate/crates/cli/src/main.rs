//! Command-line front end for the leafwave library. Subcommands map to
//! pipeline stages; `run` chains all of them. Exit codes: 0 when every
//! check passes, 1 when a verification fails, 2 for configuration errors,
//! 3 for numerical failures.

mod config;
mod io;
mod runner;

use clap::{Parser, Subcommand};
use config::{ExperimentConfig, Overrides};
use runner::{Failure, Outcome};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "leafwave", version, about = "Transverse spectral geometry experiments")]
struct Cli {
    /// JSON config file; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Model family.
    #[arg(long, global = true, value_parser = ["sphere", "torus", "product"])]
    model: Option<String>,

    /// Closed-form spectrum depth.
    #[arg(long, global = true)]
    k_max: Option<u32>,

    /// Transverse collocation grid size for the numeric spectrum.
    #[arg(long, global = true)]
    grid: Option<usize>,

    /// Upper end of the time range (also the return-time horizon).
    #[arg(long, global = true)]
    t_max: Option<f64>,

    /// Relative tolerance for spectrum checks and arc closure.
    #[arg(long, global = true)]
    tol: Option<f64>,

    /// Frequency cutoffs, comma separated and ascending.
    #[arg(long, global = true, value_delimiter = ',')]
    lambda_ladder: Option<Vec<f64>>,

    /// Frequency window shape.
    #[arg(long, global = true, value_parser = ["gaussian", "cosine"])]
    window: Option<String>,

    /// Lower end of the time range.
    #[arg(long, global = true)]
    t_min: Option<f64>,

    /// Time grid spacing.
    #[arg(long, global = true)]
    t_step: Option<f64>,

    /// Output directory for artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Multiplicity convention for spectra.
    #[arg(long, global = true, value_parser = ["basic", "ambient"])]
    convention: Option<String>,

    /// Worker threads (0 picks the hardware count).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form and collocation spectra, cross-checked.
    Spectrum,
    /// Catalog of transverse return times with witness arcs.
    Sojourn,
    /// Windowed trace series over the cutoff ladder.
    Trace,
    /// Detect trace singularities and match them to the catalog.
    Verify,
    /// Averaging projector identity and commutation checks.
    ProjectorCheck,
    /// Full pipeline: spectrum, sojourn, trace, detect, verify.
    Run,
}

impl Cli {
    fn overrides(&self) -> Overrides {
        Overrides {
            model: self.model.clone(),
            k_max: self.k_max,
            grid: self.grid,
            t_max: self.t_max,
            tol: self.tol,
            lambda_ladder: self.lambda_ladder.clone(),
            window: self.window.clone(),
            t_min: self.t_min,
            t_step: self.t_step,
            out: self.out.clone(),
            convention: self.convention.clone(),
            threads: self.threads,
        }
    }
}

fn execute(cli: &Cli) -> Result<Outcome, Failure> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path).map_err(Failure::Config)?,
        None => ExperimentConfig::default(),
    };
    cfg.apply(&cli.overrides());
    let validated = cfg.validate().map_err(Failure::Config)?;
    match cli.command {
        Command::Spectrum => runner::spectrum(&cfg, &validated),
        Command::Sojourn => runner::sojourn(&cfg, &validated),
        Command::Trace => runner::trace(&cfg, &validated),
        Command::Verify => runner::verify(&cfg, &validated),
        Command::ProjectorCheck => runner::projector_check(&cfg, &validated),
        Command::Run => runner::run_full(&cfg, &validated),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail(why)) => {
            eprintln!("verification failed: {why}");
            ExitCode::from(1)
        }
        Err(Failure::Config(why)) => {
            eprintln!("configuration error: {why}");
            ExitCode::from(2)
        }
        Err(Failure::Numeric(why)) => {
            eprintln!("numerical failure: {why}");
            ExitCode::from(3)
        }
    }
}
