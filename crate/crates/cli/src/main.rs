//! `bcpp`: simulate, fit, bootstrap and check bivariate compound Poisson
//! models with Lévy copula dependence.
//!
//! Exit status: 0 success, 2 invalid input or configuration, 3 numeric
//! failure (including non-convergence), 4 I/O error.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::Settings;
use crate::error::CliError;

#[derive(Parser, Debug)]
#[command(name = "bcpp", version, about = "Bivariate compound Poisson processes with a Lévy copula")]
struct Cli {
    /// Key-value config file; command-line flags override its keys.
    #[arg(long, global = true, env = "BCPP_CONFIG")]
    config: Option<PathBuf>,

    /// Maximum number of worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate a path and write its event list and/or interval panel.
    Simulate(SimulateArgs),
    /// Fit a model to a panel and the jump sizes behind it.
    Fit(FitArgs),
    /// Parametric bootstrap of an estimator under a given model.
    Bootstrap(BootstrapArgs),
    /// Goodness-of-fit tests of a fitted model on a panel.
    Gof(GofArgs),
    /// Turn a raw loss file into a monthly panel and jump-size files.
    ///
    /// Expects columns date, building, contents and optionally profit. The
    /// Danish fire insurance losses 1980-1990 are available for instance as
    /// `danishmulti` in the R packages fitdistrplus and CASdatasets; export
    /// them to CSV first. Nothing is downloaded.
    Ingest(IngestArgs),
    /// Render stored results as text tables.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Model file; defaults to the model keys of the config.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Length of the observation period [0, T] (default 1).
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Number of equal intervals M (default 100).
    #[arg(long)]
    pub intervals: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out_panel: Option<PathBuf>,
    #[arg(long)]
    pub out_events: Option<PathBuf>,
    /// Label each event with the subprocess it came from.
    #[arg(long)]
    pub keep_origins: bool,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    #[arg(long)]
    pub panel: Option<PathBuf>,
    /// Event list from which the jump sizes are taken.
    #[arg(long)]
    pub events: Option<PathBuf>,
    #[arg(long)]
    pub jumps1: Option<PathBuf>,
    #[arg(long)]
    pub jumps2: Option<PathBuf>,
    /// Defaults to the horizon recorded next to the panel.
    #[arg(long)]
    pub horizon: Option<f64>,
    /// clayton or pure-common-shock.
    #[arg(long)]
    pub copula: Option<String>,
    /// exponential or weibull.
    #[arg(long)]
    pub margin1: Option<String>,
    #[arg(long)]
    pub margin2: Option<String>,
    /// ifm or full-mle.
    #[arg(long)]
    pub method: Option<String>,
    /// Fit report; usable as a model file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BootstrapArgs {
    /// Generating model; defaults to the config's model.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub intervals: Option<usize>,
    /// Number of bootstrap samples R (default 100).
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub method: Option<String>,
    /// Value / bootstrap mean / bootstrap SD table.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-replicate estimates.
    #[arg(long)]
    pub out_replicates: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct GofArgs {
    /// Fitted model, e.g. the output of `fit`.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub panel: Option<PathBuf>,
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-row probabilities and normal scores.
    #[arg(long)]
    pub out_scores: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct IngestArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// First calendar year of the window (default 1980).
    #[arg(long)]
    pub start_year: Option<i32>,
    /// Last calendar year of the window (default 1990).
    #[arg(long)]
    pub end_year: Option<i32>,
    /// Amounts strictly above it are kept and log-transformed (default 1).
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub out_panel: Option<PathBuf>,
    #[arg(long)]
    pub out_jumps1: Option<PathBuf>,
    #[arg(long)]
    pub out_jumps2: Option<PathBuf>,
    #[arg(long)]
    pub out_events: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// Files written by fit, bootstrap, gof, simulate or ingest.
    pub inputs: Vec<PathBuf>,
    /// Also write the text to this file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let settings = Settings::load(cli.config.as_deref())?;
    let jobs = match cli.jobs.or(settings.usize("jobs")?) {
        Some(0) => return Err(CliError::Validation("--jobs must be >= 1".into())),
        other => other,
    };
    if let Some(n) = jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Numeric(format!("cannot start worker pool: {e}")))?;
    }
    match &cli.command {
        Command::Simulate(a) => commands::simulate(a, &settings),
        Command::Fit(a) => commands::fit_cmd(a, &settings),
        Command::Bootstrap(a) => commands::bootstrap_cmd(a, &settings, jobs),
        Command::Gof(a) => commands::gof_cmd(a, &settings),
        Command::Ingest(a) => commands::ingest_cmd(a, &settings),
        Command::Report(a) => commands::report_cmd(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
