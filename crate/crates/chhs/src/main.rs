use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use chhs::config::RunConfig;
use chhs::driver;

#[derive(Parser)]
#[command(name = "chhs", about = "Cahn-Hilliard-Hele-Shaw spectral solver", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a config to completion, writing diagnostics and snapshots.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Override the output directory from the config.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Continue a run from a snapshot under the same config.
    Resume {
        #[arg(long)]
        snapshot: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Fit decay rates from a run directory and cross-check snapshots.
    Analyze {
        #[arg(long)]
        dir: PathBuf,
        /// Fit window as t0:t1 (defaults to the full recorded span).
        #[arg(long, value_parser = parse_window)]
        fit_window: Option<(f64, f64)>,
    },
    /// Report the long-time-theorem hypotheses for a config.
    Conditions {
        #[arg(long)]
        config: PathBuf,
    },
}

fn parse_window(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| format!("expected t0:t1, got '{s}'"))?;
    let t0: f64 = a.trim().parse().map_err(|_| format!("bad t0 '{a}'"))?;
    let t1: f64 = b.trim().parse().map_err(|_| format!("bad t1 '{b}'"))?;
    if t1 <= t0 {
        return Err(format!("empty window {t0}:{t1}"));
    }
    Ok((t0, t1))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { config, output } => RunConfig::parse_file(config)
            .and_then(|cfg| driver::cmd_run(&cfg, output.as_deref()).map(|_| ())),
        Command::Resume {
            snapshot,
            config,
            output,
        } => RunConfig::parse_file(config)
            .and_then(|cfg| driver::cmd_resume(snapshot, &cfg, output.as_deref()).map(|_| ())),
        Command::Analyze { dir, fit_window } => driver::cmd_analyze(dir, *fit_window),
        Command::Conditions { config } => {
            RunConfig::parse_file(config).and_then(|cfg| driver::cmd_conditions(&cfg))
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
