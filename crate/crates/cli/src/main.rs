//! `sparsebench`: generate instances, run recovery, compute RICs, certify OMP
//! traces and reproduce the phase-transition and n_f-histogram experiments.

mod commands;
mod error;
mod inputs;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{Certify, GenMatrix, GenSignal, Hist, Phase, Plot, Recover, Ric};
use error::CliError;
use settings::{resolve, OutDir};

#[derive(Parser)]
#[command(name = "sparsebench", version, about = "Sparse recovery benchmarks and OMP guarantee checks")]
struct Cli {
    /// Output directory for every artifact.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// JSON settings file; flags given on the command line take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: available parallelism). Outputs do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a random dictionary.
    GenMatrix(GenMatrix),
    /// Draw a random sparse signal.
    GenSignal(GenSignal),
    /// Run OMP_K, OMP_e, SP or BP on one instance.
    Recover(Recover),
    /// Restricted isometry constants, exact or Monte-Carlo.
    Ric(Ric),
    /// Check the online recovery condition along OMP_e traces.
    Certify(Certify),
    /// Phase-transition grid, fitted curves and plot.
    Phase(Phase),
    /// Histogram of false selections in successful OMP_e runs.
    Hist(Hist),
    /// Re-render plots from saved curves or histograms.
    Plot(Plot),
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build_global()
            .map_err(|e| CliError::Solver(format!("thread pool: {e}")))?;
    }
    let cfg = cli.config.as_deref();
    let out = OutDir::create(&cli.out)?;
    match cli.command {
        Command::GenMatrix(a) => commands::gen_matrix_cmd(resolve(&a, cfg, "gen-matrix")?, &out),
        Command::GenSignal(a) => commands::gen_signal_cmd(resolve(&a, cfg, "gen-signal")?, &out),
        Command::Recover(a) => commands::recover_cmd(resolve(&a, cfg, "recover")?, &out),
        Command::Ric(a) => commands::ric_cmd(resolve(&a, cfg, "ric")?, &out),
        Command::Certify(a) => commands::certify_cmd(resolve(&a, cfg, "certify")?, &out),
        Command::Phase(a) => commands::phase_cmd(resolve(&a, cfg, "phase")?, &out),
        Command::Hist(a) => commands::hist_cmd(resolve(&a, cfg, "hist")?, &out),
        Command::Plot(a) => commands::plot_cmd(resolve(&a, cfg, "plot")?, &out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
