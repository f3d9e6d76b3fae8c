use std::path::PathBuf;
use std::process::ExitCode;

use aggrahull::report::{Command, Mode, Report, RunOptions};
use aggrahull::run::{self, Failure, EXIT_COUNTEREXAMPLE, EXIT_INPUT, EXIT_OK};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "aggrahull", version, about = "Convex hulls of quadratically defined sets by aggregation")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args, Clone)]
struct Common {
    /// System file (JSON).
    system: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Relative strictness margin for sampling and verification.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    /// Report destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Emptiness, PDLC, full-space and HHC diagnostics.
    Check {
        #[command(flatten)]
        common: Common,
        /// Also search for an HHC counterexample.
        #[arg(long)]
        falsify: bool,
        #[arg(long, default_value_t = 100)]
        trials: usize,
    },
    /// Aggregations describing the convex hull.
    Hull {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Mode::Auto)]
        mode: Mode,
        /// Sample-based check of the description.
        #[arg(long)]
        verify: bool,
    },
    /// Search for hyperplanes on which the quadratic image is not convex.
    FalsifyHhc {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        /// Comma-separated normal tried first (n or n+1 entries); repeatable.
        #[arg(long, value_delimiter = ',', num_args = 1, action = clap::ArgAction::Append, allow_hyphen_values = true)]
        hyperplane: Vec<f64>,
    },
    /// Re-run a report and compare.
    Replay {
        report: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn configure_threads() {
    if let Ok(v) = std::env::var("AGGRAHULL_THREADS") {
        match v.trim().parse::<usize>() {
            Ok(k) if k > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
            }
            _ => eprintln!("warning: ignoring AGGRAHULL_THREADS={v:?}"),
        }
    }
}

fn emit(report: &Report, out: Option<&PathBuf>) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(report).expect("report serializes") + "\n";
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Input(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read(path: &PathBuf) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn main_inner(cli: Cli) -> Result<i32, Failure> {
    let (command, common, opts) = match cli.command {
        Cmd::Replay { report, out } => {
            let text = read(&report)?;
            let original: Report = serde_json::from_str(&text)
                .map_err(|e| Failure::Input(format!("{}: {e}", report.display())))?;
            let (fresh, diffs) = run::replay(&original)?;
            eprint!("{}", run::summary(&fresh));
            emit(&fresh, out.as_ref())?;
            if diffs.is_empty() {
                eprintln!("replay reproduced the report");
                return Ok(EXIT_OK);
            }
            eprintln!("replay differs at: {}", diffs.join(", "));
            return Ok(EXIT_COUNTEREXAMPLE);
        }
        Cmd::Check { common, falsify, trials } => {
            (Command::Check, common, RunOptions { falsify, trials, ..RunOptions::default() })
        }
        Cmd::Hull { common, mode, verify } => (Command::Hull, common, RunOptions { mode, verify, ..RunOptions::default() }),
        Cmd::FalsifyHhc { common, trials, hyperplane } => {
            let hyperplanes = if hyperplane.is_empty() { vec![] } else { vec![hyperplane] };
            (Command::FalsifyHhc, common, RunOptions { trials, hyperplanes, ..RunOptions::default() })
        }
    };
    let opts = RunOptions { seed: common.seed, tol: common.tol, samples: common.samples, ..opts };
    let text = read(&common.system)?;
    let report = run::execute_text(command, &text, Some(common.system.display().to_string()), opts)?;
    eprint!("{}", run::summary(&report));
    emit(&report, common.out.as_ref())?;
    Ok(report.exit_code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INPUT as u8 } else { EXIT_OK as u8 });
        }
    };
    configure_threads();
    match main_inner(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.exit_code() as u8)
        }
    }
}
