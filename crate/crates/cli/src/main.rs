use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use liesys_cli::output::Status;
use liesys_cli::scenario::Overrides;
use liesys_cli::{batch_exit_code, catalog, run_batch, run_verify, EXIT_PASS, EXIT_THRESHOLD};

/// Numerical workbench for Lie systems: run scenarios, list the catalog, verify.
#[derive(Debug, Parser)]
#[command(name = "liesys", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one or more scenario files.
    Run {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Output directory; overrides the scenario's own setting.
        #[arg(long, env = "LIESYS_OUT_DIR")]
        out: Option<PathBuf>,
        /// Seed for random probes and initial states.
        #[arg(long)]
        seed: Option<u64>,
        /// Replace the integration tolerances (absolute and relative).
        #[arg(long)]
        tol_override: Option<f64>,
    },
    /// Print systems, frequency profiles, shapes and pipelines.
    List,
    /// Run the built-in acceptance suite.
    Verify {
        #[arg(long, env = "LIESYS_OUT_DIR", default_value = "out")]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::List => {
            print!("{}", catalog());
            ExitCode::from(EXIT_PASS)
        }
        Command::Run {
            files,
            out,
            seed,
            tol_override,
        } => {
            let items = run_batch(&files, out.as_deref(), Overrides { seed, tol: tol_override });
            for item in &items {
                let path = item.path.display();
                match &item.result {
                    Ok(s) => {
                        let tag = match s.status {
                            Status::Pass => "PASS",
                            Status::Fail => "FAIL",
                            Status::Error => "ERROR",
                        };
                        println!("[{tag}] {path}: {} ({}, {})", s.scenario, s.pipeline, s.system);
                        for c in s.thresholds.iter().filter(|c| !c.passed) {
                            println!("    {} = {:e} exceeds {:e}", c.name, c.value, c.limit);
                        }
                        if let Some(e) = &s.error {
                            let t = s.last_good_time.map_or(String::new(), |t| format!(" (last good t = {t})"));
                            println!("    {e}{t}");
                        }
                    }
                    Err(e) => eprintln!("[ERROR] {path}: {e}"),
                }
            }
            ExitCode::from(batch_exit_code(&items))
        }
        Command::Verify { out, seed } => match run_verify(seed, &out) {
            Ok((reports, _)) => {
                for r in &reports {
                    println!("{r}");
                }
                let all = reports.iter().all(|r| r.passed());
                ExitCode::from(if all { EXIT_PASS } else { EXIT_THRESHOLD })
            }
            Err(e) => {
                eprintln!("verify: {e}");
                ExitCode::from(e.exit_code())
            }
        },
    }
}
