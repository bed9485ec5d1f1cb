use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use torus_mfg::io::Mode;
use torus_mfg_cli::{exit_code, run_path, RunOptions};

/// Primal-dual solver for first-order mean field games on the torus.
#[derive(Parser)]
#[command(name = "torus-mfg", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the time-dependent problem.
    Solve(Common),
    /// Solve the stationary ergodic problem.
    Ergodic(Common),
    /// Run the long-time experiment over the configured horizons.
    Longtime(Common),
    /// Check weak-solution residuals of a stored solution.
    Verify(Common),
}

#[derive(Args)]
struct Common {
    /// TOML configuration; defaults to the reference model.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, overriding `output.directory`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `solver.rng_seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Suppress the summary on stderr.
    #[arg(long)]
    quiet: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mode, common) = match cli.command {
        Command::Solve(c) => (Mode::Solve, c),
        Command::Ergodic(c) => (Mode::Ergodic, c),
        Command::Longtime(c) => (Mode::Longtime, c),
        Command::Verify(c) => (Mode::Verify, c),
    };
    let opts = RunOptions {
        out: common.out,
        seed: common.seed,
        quiet: common.quiet,
    };
    match run_path(common.config.as_deref(), mode, &opts) {
        Ok(outcome) => {
            if !opts.quiet {
                let c = &outcome.manifest.convergence;
                eprintln!(
                    "{}: converged={} iterations={} manifest={}",
                    mode.name(),
                    c.converged,
                    c.iterations,
                    outcome.manifest_path.display()
                );
                if let Some(reason) = &c.failure {
                    eprintln!("{reason}");
                }
            }
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err) as u8)
        }
    }
}
