use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use tevd_cli::config::{self, ConfigError};
use tevd_cli::runner;

/// Transmission-eigenvalue distribution solver for disordered waveguides
/// and slabs.
#[derive(Parser)]
#[command(name = "tevd", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured scan and write spectrum.csv / qtrace.csv plus
    /// summary.json.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (default: alongside the config file).
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Worker threads for independent scan points (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Validate a configuration and report every problem.
    Check {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the invariant suite for a configuration and print pass/fail.
    Invariants {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Solve { config, output_dir, threads } => {
            if let Some(n) = threads {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    eprintln!("cannot configure {n} worker threads: {e}");
                    return ExitCode::from(runner::EXIT_FATAL as u8);
                }
            }
            match config::load_config(&config) {
                Ok(cfg) => {
                    let out_dir = output_dir.unwrap_or_else(|| {
                        config.parent().map(PathBuf::from).unwrap_or_else(|| PathBuf::from("."))
                    });
                    let outcome = runner::run(&cfg, &out_dir);
                    match outcome.exit_code {
                        runner::EXIT_OK => {
                            println!("ok: {} points", outcome.summary.points.len())
                        }
                        runner::EXIT_PARTIAL => println!(
                            "partial: {} of {} points failed",
                            outcome.summary.failed_points,
                            outcome.summary.points.len()
                        ),
                        _ => eprintln!(
                            "failed: {}",
                            outcome.summary.error.as_deref().unwrap_or("unknown error")
                        ),
                    }
                    outcome.exit_code
                }
                Err(e) => {
                    eprintln!("{e}");
                    runner::EXIT_FATAL
                }
            }
        }
        Command::Check { config } => match config::load_config(&config) {
            Ok(cfg) => {
                println!("ok: mode={}", cfg.mode.as_str());
                runner::EXIT_OK
            }
            Err(e @ ConfigError::Validation(_)) => {
                eprintln!("{e}");
                runner::EXIT_FATAL
            }
            Err(e) => {
                eprintln!("{e}");
                runner::EXIT_FATAL
            }
        },
        Command::Invariants { config } => match config::load_config(&config) {
            Ok(cfg) => match runner::invariant_suite(&cfg) {
                Ok(checks) => {
                    let mut all_pass = true;
                    for c in &checks {
                        all_pass &= c.pass;
                        println!(
                            "{} {}: {:.3e} (threshold {:.1e})",
                            if c.pass { "PASS" } else { "FAIL" },
                            c.name,
                            c.value,
                            c.threshold
                        );
                    }
                    if all_pass {
                        runner::EXIT_OK
                    } else {
                        runner::EXIT_FATAL
                    }
                }
                Err(e) => {
                    eprintln!("invariant suite aborted: {e}");
                    runner::EXIT_FATAL
                }
            },
            Err(e) => {
                eprintln!("{e}");
                runner::EXIT_FATAL
            }
        },
    };
    ExitCode::from(code as u8)
}
