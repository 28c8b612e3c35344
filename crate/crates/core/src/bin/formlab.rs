//! `formlab run <config>`, `formlab study <config> --refinements N`,
//! `formlab catalog`.
//!
//! Exit codes: 0 ok, 1 operation failure, 2 config error, 3 I/O error.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use formlab::scenario::{convergence_study, emit_catalog, run_scenario, Scenario, ScenarioError};

#[derive(Parser)]
#[command(name = "formlab", version, about = "Form bounds, positive solutions and diagnostics for Schrodinger-type forms")]
struct Cli {
    /// Directory for run records and study tables.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its record (JSON).
    Run { config: PathBuf },
    /// Rerun a scenario on successively halved meshes and emit a CSV table.
    Study {
        config: PathBuf,
        #[arg(long, default_value_t = 4)]
        refinements: usize,
    },
    /// List the catalogued examples.
    Catalog,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("formlab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn target(dir: &Path, name: &str, suffix: &str) -> Result<PathBuf, ScenarioError> {
    std::fs::create_dir_all(dir).map_err(|e| ScenarioError::Io(format!("{}: {e}", dir.display())))?;
    Ok(dir.join(format!("{name}{suffix}")))
}

fn run(cli: Cli) -> Result<u8, ScenarioError> {
    match cli.command {
        Command::Catalog => {
            print!("{}", emit_catalog());
            Ok(0)
        }
        Command::Run { config } => {
            let scenario = Scenario::from_path(&config)?;
            let record = run_scenario(&scenario)?;
            let path = match (&cli.out, &scenario.output) {
                (Some(dir), _) => Some(target(dir, &scenario.name, ".json")?),
                (None, Some(path)) => Some(path.clone()),
                (None, None) => None,
            };
            match path {
                Some(path) => {
                    record.write(&path)?;
                    for op in &record.operations {
                        eprintln!("{:<10} {:?}", op.operation.name(), op.verdict);
                    }
                }
                None => println!("{}", record.to_json()),
            }
            Ok(record.exit_code() as u8)
        }
        Command::Study { config, refinements } => {
            let scenario = Scenario::from_path(&config)?;
            match &cli.out {
                Some(dir) => {
                    let path = target(dir, &scenario.name, "_study.csv")?;
                    let file = std::fs::File::create(&path)
                        .map_err(|e| ScenarioError::Io(format!("{}: {e}", path.display())))?;
                    convergence_study(&scenario, refinements, file)?;
                }
                None => {
                    let stdout = std::io::stdout();
                    convergence_study(&scenario, refinements, stdout.lock())?;
                    let _ = std::io::stdout().flush();
                }
            }
            Ok(0)
        }
    }
}
