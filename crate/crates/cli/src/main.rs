use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;

/// Solve, sweep, compare and report on regularized Ostrovsky-Hunter runs.
///
/// Exit codes: 0 ok, 1 configuration or input error, 2 blow-up or
/// incomplete run, 3 every sweep cell failed.
#[derive(Debug, Parser)]
#[command(name = "ohlab", version)]
struct Cli {
    /// Print progress to stderr.
    #[arg(long, short, global = true)]
    verbose: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate one parameter set and write trajectory, diagnostics and bounds.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Parent directory; the run goes into `<out>/<config hash>`.
        #[arg(long)]
        out: PathBuf,
        /// Replace an existing run directory.
        #[arg(long)]
        force: bool,
    },
    /// Run a regime sweep against a reference entropy solution.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Number of sweep cells run concurrently.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long)]
        force: bool,
    },
    /// Print the windowed L^p distance between the final snapshots of two
    /// trajectory files.
    Compare {
        first: PathBuf,
        second: PathBuf,
        /// Norm exponent: a number >= 1 or `inf`.
        #[arg(long, default_value = "1")]
        norm: String,
        /// Window `lo,hi`; defaults to the whole cell.
        #[arg(long, allow_hyphen_values = true)]
        window: Option<String>,
    },
    /// Write plottable CSVs and a summary table for a run directory.
    Report { run_dir: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let log = commands::Log(cli.verbose);
    let outcome = match cli.command {
        Command::Solve { config, out, force } => commands::solve(&config, &out, force, log),
        Command::Sweep {
            config,
            out,
            jobs,
            force,
        } => commands::sweep(&config, &out, jobs, force, log),
        Command::Compare {
            first,
            second,
            norm,
            window,
        } => commands::compare(&first, &second, &norm, window.as_deref()),
        Command::Report { run_dir } => commands::report(&run_dir, log),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
