use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use torscalc::cli::{self, CliError};
use torscalc::verify::{run_suite, standard_theories, ExprSpec};

#[derive(Parser)]
#[command(name = "torscalc", version, about = "Exact higher torsion invariants of bundle expressions")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a script file.
    Run { file: PathBuf },
    /// Run statements given on the command line.
    Eval {
        #[arg(short = 'e', long = "expr")]
        statements: String,
    },
    /// Check the identity suite on generated expressions.
    Verify {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 4)]
        depth: usize,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
        k: u32,
        /// Print one JSON record per check.
        #[arg(long)]
        records: bool,
    },
}

fn script(src: &str) -> ExitCode {
    let mut out = String::new();
    let result = cli::parse(src).map_err(CliError::from).and_then(|s| cli::run_into(&s, &mut out));
    // a closed pipe is not an error worth reporting
    let _ = std::io::stdout().lock().write_all(out.as_bytes());
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn main() -> ExitCode {
    match Args::parse().command {
        Command::Run { file } => match std::fs::read_to_string(&file) {
            Ok(src) => script(&src),
            Err(e) => {
                eprintln!("cannot read {}: {e}", file.display());
                ExitCode::from(1)
            }
        },
        Command::Eval { statements } => script(&statements),
        Command::Verify { seed, depth, samples, k, records } => {
            let theories = standard_theories(seed, k, 10);
            let reports = run_suite(&ExprSpec::new(seed, depth), samples, &theories);
            let mut stdout = std::io::stdout().lock();
            for r in &reports {
                let line = if records { serde_json::to_string(r).expect("serializable report") } else { r.to_string() };
                if writeln!(stdout, "{line}").is_err() {
                    break;
                }
            }
            if reports.iter().all(|r| r.passed()) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(3)
            }
        }
    }
}
