use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use degenlab_cli::config::Command;
use degenlab_cli::error::{CliError, EXIT_VALIDATION};
use degenlab_cli::run::{run_path, RunOptions};
use degenlab_cli::suite::verify_all;

/// Numerical experiments for degenerate dispersive flows.
#[derive(Parser, Debug)]
#[command(name = "degenlab", version)]
struct Args {
    /// One of the experiment commands, or `verify-all`.
    command: String,
    /// Experiment config (or suite file for `verify-all`).
    #[arg(long, alias = "suite")]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long)]
    seed: Option<u64>,
}

fn fail(e: &CliError) -> ExitCode {
    eprintln!("{}", e.to_json());
    ExitCode::from(e.code as u8)
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.render().to_string();
            return fail(&CliError { kind: "usage".into(), message: msg.trim().into(), k: None, code: EXIT_VALIDATION });
        }
    };
    let opts = RunOptions { out: args.out, jobs: args.jobs, seed: args.seed };
    if args.command == "verify-all" {
        return match verify_all(&args.config, &opts) {
            Ok(summary) => {
                print!("{}", summary.table());
                ExitCode::from(summary.exit_code() as u8)
            }
            Err(e) => fail(&e),
        };
    }
    let command = match Command::from_str(&args.command, false) {
        Ok(c) => c,
        Err(_) => {
            let known: Vec<&str> = Command::ALL.iter().map(|c| c.name()).collect();
            return fail(&CliError::validation(
                "usage",
                format!("unknown command {:?}; expected verify-all or one of {}", args.command, known.join(", ")),
            ));
        }
    };
    match run_path(&args.config, Some(command), &opts) {
        Ok(outcome) => {
            for c in &outcome.checks {
                println!("{:<20} {:>14.6e}  {:<14} {}", c.name, c.value, c.limit, if c.pass { "PASS" } else { "FAIL" });
            }
            println!("artifacts in {}", outcome.out_dir.display());
            if !outcome.passed() {
                let failed: Vec<&str> = outcome.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
                let e = CliError {
                    kind: "acceptance".into(),
                    message: format!("failed checks: {}", failed.join(", ")),
                    k: None,
                    code: outcome.exit_code(),
                };
                eprintln!("{}", e.to_json());
            }
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => fail(&e),
    }
}
