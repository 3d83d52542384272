use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use subrep_core::{CheckId, Status};

use subrep_cli::config;
use subrep_cli::eval::{evaluate, EvalArgs};
use subrep_cli::report::write_all;
use subrep_cli::runner::run_check;

#[derive(Parser)]
#[command(name = "subrep", version, about = "Numerical checks of pointwise subrepresentation inequalities")]
struct Cli {
    /// Worker threads (default: all cores). SUBREP_THREADS takes precedence.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the checks named in a TOML config and write reports.
    Run {
        config: PathBuf,
        /// Overrides `output.dir` from the config.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Evaluate one operator and print `value ± error`.
    Eval(EvalArgs),
    /// List check ids with what each one tests.
    ListChecks,
}

fn threads(flag: Option<usize>) -> Result<Option<usize>, String> {
    match std::env::var("SUBREP_THREADS") {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse::<usize>()
            .map(Some)
            .map_err(|_| format!("SUBREP_THREADS=`{v}` is not a thread count")),
        _ => Ok(flag),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match threads(cli.threads) {
        Ok(Some(t)) if t > 0 => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        }
        Ok(_) => {}
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match cli.command {
        Command::ListChecks => {
            for id in CheckId::ALL {
                println!("{:<30} {}", id.as_str(), id.anchor());
            }
            ExitCode::SUCCESS
        }
        Command::Eval(args) => match evaluate(&args) {
            Ok((v, e)) => {
                if e.is_nan() {
                    println!("{v:.15e}");
                } else {
                    println!("{v:.15e} ± {e:.3e}");
                }
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(2)
            }
        },
        Command::Run { config, output_dir } => run(&config, output_dir),
    }
}

fn run(path: &PathBuf, output_dir: Option<PathBuf>) -> ExitCode {
    let src = match std::fs::read_to_string(path) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", path.display());
            return ExitCode::from(2);
        }
    };
    let cfg = match config::parse(&src) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{}: {e}", path.display());
            return ExitCode::from(2);
        }
    };
    let reports: Vec<_> = cfg.checks.par_iter().map(|id| run_check(*id, &cfg)).collect();
    let dir = output_dir.unwrap_or_else(|| cfg.raw.output.dir.clone());
    let summary = match write_all(&reports, &dir, &cfg.raw.output.formats) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: writing reports to {}: {e}", dir.display());
            return ExitCode::from(2);
        }
    };
    for (r, s) in reports.iter().zip(&summary.checks) {
        let tag = match r.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Degenerate => "DEGENERATE",
            Status::ReportOnly => "REPORT",
        };
        println!(
            "{tag:<10} {:<30} constant={:<12.5e} [{:.2}s]",
            s.check_id, r.empirical_constant, s.wall_time_s
        );
        for note in r.notes.iter().filter(|_| r.status == Status::Fail) {
            println!("           {note}");
        }
    }
    println!("{} checks, {} passed, {} failed; reports in {}", summary.total, summary.passed, summary.failed, dir.display());
    if summary.all_pass() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
