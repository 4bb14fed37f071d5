use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use densitylab::geometry::PRESETS;
use densitylab_cli::{explore, run_scenario, CliError, Family, RunOptions, Status, EXIT_ERROR};

#[derive(Parser)]
#[command(name = "lab", version, about = "Audits of weighted Sobolev and isoperimetric inequalities on model spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the checks of a scenario file.
    Run {
        scenario: PathBuf,
        /// Output directory (default: the scenario's output_dir, else lab-out/<name>).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Multiplies every audit tolerance.
        #[arg(long)]
        tol_scale: Option<f64>,
    },
    /// Search a parameter family for CD-certified spaces with positive AVR.
    Explore {
        family: PathBuf,
        #[arg(long)]
        budget: usize,
        /// Also write explore.json and explore.csv here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the profile presets.
    Presets,
}

fn explore_cmd(family: &PathBuf, budget: usize, out: Option<PathBuf>) -> Result<(), CliError> {
    let family = Family::load(family)?;
    let table = explore(&family, budget)?;
    print!("{}", table.to_text());
    if let Some(dir) = out {
        std::fs::create_dir_all(&dir).map_err(|e| CliError::Io { path: dir.clone(), source: e })?;
        let mut json = serde_json::to_string_pretty(&table)?;
        json.push('\n');
        for (name, body) in [("explore.json", json), ("explore.csv", table.to_csv())] {
            let path = dir.join(name);
            std::fs::write(&path, body).map_err(|e| CliError::Io { path, source: e })?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run { scenario, out, seed, tol_scale } => {
            match run_scenario(&scenario, &RunOptions { out, seed, tol_scale }) {
                Ok(output) => {
                    for c in &output.report.checks {
                        let notes = c.notes.join("; ");
                        println!("{:<16} {:<20} {notes}", c.check, c.status.as_str());
                    }
                    let label = match output.report.status {
                        Status::Error => "error",
                        Status::Violation => "violation",
                        _ => "ok",
                    };
                    println!("overall: {label} (hypothesis {})", output.report.hypothesis.verdict.as_str());
                    output.exit_code()
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    e.exit_code()
                }
            }
        }
        Command::Explore { family, budget, out } => match explore_cmd(&family, budget, out) {
            Ok(()) => 0,
            Err(e) => {
                eprintln!("error: {e}");
                e.exit_code()
            }
        },
        Command::Presets => {
            for (name, doc) in PRESETS {
                println!("{name:<18} {doc}");
            }
            0
        }
    };
    ExitCode::from(u8::try_from(code).unwrap_or(EXIT_ERROR as u8))
}
