//! `qpt` — scenario runner for the process-tomography library. Loads a
//! scenario (builtin tag or JSON file), executes it, and writes a JSON
//! report plus a human-readable summary.

mod runner;
mod scenario;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sha2::{Digest, Sha256};

use runner::{run_scenario, RunError};
use scenario::{Scenario, BUILTINS};

#[derive(Parser)]
#[command(name = "qpt", version, about = "quantum process tomography scenario runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario (builtin tag or JSON file) and write its reports
    Run {
        /// Builtin tag or path to a scenario file
        scenario: String,
        /// Override the scenario seed
        #[arg(long)]
        seed: Option<u64>,
        /// Override the scenario tolerance
        #[arg(long)]
        tol: Option<f64>,
        /// Directory for the report files
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Write only the JSON report, skip the text summary
        #[arg(long)]
        json_only: bool,
    },
    /// Show the builtin scenarios
    List {
        /// Emit the list as a JSON array
        #[arg(long)]
        json: bool,
    },
    /// Parse and check a scenario file without running it
    Validate {
        /// Path to the scenario file
        scenario: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            scenario,
            seed,
            tol,
            out_dir,
            json_only,
        } => match run(&scenario, seed, tol, &out_dir, json_only) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("{e}");
                ExitCode::from(match e {
                    RunError::Definition(_) => 2,
                    RunError::Numerical(_) => 3,
                })
            }
        },
        Command::List { json } => {
            if json {
                let list: Vec<_> = BUILTINS
                    .iter()
                    .map(|(name, about)| serde_json::json!({"name": name, "about": about}))
                    .collect();
                println!("{}", serde_json::to_string(&list).expect("list serialization"));
            } else {
                for (name, about) in BUILTINS {
                    println!("{name:26} {about}");
                }
            }
            ExitCode::SUCCESS
        }
        Command::Validate { scenario } => {
            match Scenario::load(&scenario, None, None) {
                Ok(_) => {
                    println!("ok");
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("scenario error: {e}");
                    ExitCode::from(2)
                }
            }
        }
    }
}

fn run(
    reference: &str,
    seed: Option<u64>,
    tol: Option<f64>,
    out_dir: &PathBuf,
    json_only: bool,
) -> Result<(), RunError> {
    let scenario = Scenario::load(reference, seed, tol)
        .map_err(|e| RunError::Definition(e.to_string()))?;
    let output = run_scenario(&scenario)?;

    let hash = {
        let mut hasher = Sha256::new();
        hasher.update(scenario.canonical.as_bytes());
        format!("{:x}", hasher.finalize())
    };
    let envelope = serde_json::json!({
        "schema": 1,
        "name": scenario.name,
        "scenarioHash": hash,
        "seed": scenario.seed,
        "tolerance": scenario.tolerance,
        "version": env!("CARGO_PKG_VERSION"),
        "report": output.payload,
    });

    std::fs::create_dir_all(out_dir)
        .map_err(|e| RunError::Definition(format!("out dir: {e}")))?;
    let json_path = out_dir.join(format!("{}.report.json", scenario.name));
    let json_text =
        serde_json::to_string_pretty(&envelope).expect("report serialization");
    std::fs::write(&json_path, json_text.as_bytes())
        .map_err(|e| RunError::Definition(format!("{}: {e}", json_path.display())))?;
    if !json_only {
        let txt_path = out_dir.join(format!("{}.report.txt", scenario.name));
        std::fs::write(&txt_path, output.text.as_bytes())
            .map_err(|e| RunError::Definition(format!("{}: {e}", txt_path.display())))?;
    }
    println!("wrote {}", json_path.display());
    Ok(())
}
