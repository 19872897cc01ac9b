use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use retroimaging::cli::config::{builtin, builtin_scenarios, load_config};
use retroimaging::cli::output::run;
use retroimaging::cli::verify::{run_verify, VerifyOptions};
use retroimaging::cli::{exit_code, EXIT_VERIFICATION_FAILED};

/// Two-photon imaging simulator: conditional arm-2 densities computed
/// retrodictively and checked against a predictive oracle.
#[derive(Parser)]
#[command(name = "retroimaging", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute P(x2|x1) for a scenario and write CSV (and optionally JSON).
    Run(RunArgs),
    /// Check retrodictive vs. predictive equivalence and report limit metrics.
    Verify {
        /// Smaller grids, no limit metrics.
        #[arg(long)]
        fast: bool,
    },
    /// List the built-in scenarios and their configurations.
    Scenarios,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Source {
    /// Scenario file (`key = value` lines).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Name of a built-in scenario.
    #[arg(long)]
    scenario: Option<String>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    source: Source,
    /// Output directory (overrides `output.dir`).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => {
            let config = match (&args.source.config, &args.source.scenario) {
                (Some(path), _) => load_config(path),
                (None, Some(name)) => builtin(name).map(|b| b.config).ok_or_else(|| {
                    retroimaging::Error::Config {
                        line: 0,
                        message: format!("no built-in scenario named '{name}' (see `retroimaging scenarios`)"),
                    }
                }),
                (None, None) => unreachable!("clap enforces one source"),
            };
            match config.and_then(|c| run(&c, args.out.as_deref())) {
                Ok(summary) => {
                    for f in &summary.files {
                        println!("wrote {}", f.display());
                    }
                    println!("max edge leakage {:.3e}", summary.max_edge_leakage);
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(exit_code(&e))
                }
            }
        }
        Command::Verify { fast } => {
            let start = Instant::now();
            match run_verify(VerifyOptions { fast }) {
                Ok(report) => {
                    println!("{report}");
                    eprintln!("elapsed {:.2} s", start.elapsed().as_secs_f64());
                    if report.passed() {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(EXIT_VERIFICATION_FAILED)
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(EXIT_VERIFICATION_FAILED)
                }
            }
        }
        Command::Scenarios => {
            for b in builtin_scenarios() {
                println!("## {} — {}", b.name, b.description);
                print!("{}", b.config.to_text());
                println!();
            }
            ExitCode::SUCCESS
        }
    }
}
