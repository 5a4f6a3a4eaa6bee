use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use hopfstar_cli::runner::{run, SuiteSelection, SuiteSource};
use hopfstar_cli::scenario;

#[derive(Parser)]
#[command(
    name = "hopfstar",
    about = "Exact-arithmetic verification of twist-deformed Hopf-algebra scenarios"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file's checks and print a report.
    ///
    /// Exit status: 0 when every executed check passes (skips do not fail),
    /// 1 when any check fails, 2 when the scenario cannot be loaded or run.
    Check {
        /// Path to the scenario file.
        file: PathBuf,
        /// Comma-separated check names or dotted prefixes to run
        /// (e.g. `hopf,twist.props,conn`).  Overrides HOPFSTAR_SUITE.
        #[arg(long)]
        suite: Option<String>,
        /// Report format.
        #[arg(long, value_enum, default_value_t = Format::Human)]
        format: Format,
        /// Override the scenario's sampling seed.
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Human,
    Machine,
}

fn split_tokens(raw: &str) -> Vec<String> {
    raw.split(',')
        .map(|t| t.trim().to_string())
        .filter(|t| !t.is_empty())
        .collect()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Check {
            file,
            suite,
            format,
            seed,
        } => {
            let shown = file.display().to_string();
            let text = match std::fs::read_to_string(&file) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("{shown}: cannot read scenario: {e}");
                    return ExitCode::from(2);
                }
            };
            let scn = match scenario::parse(&text) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("{shown}:{e}");
                    return ExitCode::from(2);
                }
            };
            let selection = match (&suite, std::env::var("HOPFSTAR_SUITE").ok()) {
                (Some(raw), _) => SuiteSelection {
                    tokens: Some(split_tokens(raw)),
                    source: SuiteSource::Flag,
                },
                (None, Some(raw)) if !raw.trim().is_empty() => SuiteSelection {
                    tokens: Some(split_tokens(&raw)),
                    source: SuiteSource::Env,
                },
                _ => SuiteSelection::all(),
            };
            let report = match run(&scn, &selection, seed) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("{shown}:{e}");
                    return ExitCode::from(2);
                }
            };
            match format {
                Format::Human => print!("{}", report.human()),
                Format::Machine => print!("{}", report.machine()),
            }
            if report.failed() > 0 {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
    }
}
