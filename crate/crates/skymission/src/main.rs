//! `skymission` — mission toolchain CLI.
//!
//! Exit codes: 0 success, 1 diagnostics with errors (or failed run),
//! 2 usage error, 3 I/O error.

use clap::{Parser, Subcommand};
use skymission::analyzer::{analyze, AnalysisReport};
use skymission::diag::Diagnostic;
use skymission::model::Mission;
use skymission::registry::{builtin_catalog, load_extensions, Registry};
use skymission::sim::{run, Outcome, Scenario, SimConfig};
use skymission::{codegen, parser, printer, script};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "skymission", version, about = "Mission DSL toolchain: check, simulate, and compile .msn missions")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse and analyze a mission, printing diagnostics
    Check {
        mission: PathBuf,
        /// Emit the diagnostic report as JSON
        #[arg(long)]
        json: bool,
    },
    /// Simulate a mission (.msn) or flight script (.fls) against a scenario
    Run {
        mission: PathBuf,
        /// Scenario JSON file
        #[arg(long)]
        scenario: PathBuf,
        /// Trace output path (default: <mission>.trace.jsonl)
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Simulated-time limit in seconds
        #[arg(long, value_name = "SECONDS")]
        max_time: Option<f64>,
    },
    /// Generate a flight script
    Gen {
        mission: PathBuf,
        /// Output path (default: standard output)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Export the mission graph as Graphviz DOT
    Graph {
        mission: PathBuf,
        /// Output path (default: standard output)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reformat a mission canonically
    Fmt {
        mission: PathBuf,
        /// Rewrite the file in place instead of printing
        #[arg(long)]
        write: bool,
    },
}

const EXIT_DIAGNOSTICS: u8 = 1;
const EXIT_IO: u8 = 3;

struct Failure {
    code: u8,
    message: Option<String>,
}

impl Failure {
    fn io(e: impl std::fmt::Display) -> Failure {
        Failure {
            code: EXIT_IO,
            message: Some(e.to_string()),
        }
    }

    /// Diagnostics were already printed; just set the exit code.
    fn reported() -> Failure {
        Failure {
            code: EXIT_DIAGNOSTICS,
            message: None,
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .map_err(|e| Failure::io(format!("cannot read {}: {e}", path.display())))
}

fn write_out(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text)
        .map_err(|e| Failure::io(format!("cannot write {}: {e}", path.display())))
}

/// Builtin catalog plus the extension file named by `SKYMISSION_ACTIONS`.
fn load_registry() -> Result<Registry, Failure> {
    let mut reg = builtin_catalog();
    if let Ok(path) = std::env::var("SKYMISSION_ACTIONS") {
        let text = read(Path::new(&path))?;
        load_extensions(&mut reg, &text).map_err(|e| Failure {
            code: EXIT_DIAGNOSTICS,
            message: Some(format!("{path}: {e}")),
        })?;
    }
    Ok(reg)
}

fn print_diagnostics(file: &Path, diags: &[Diagnostic]) {
    for d in diags {
        eprintln!("{}:{d}", file.display());
    }
}

fn parse_mission(path: &Path, source: &str) -> Result<Mission, Failure> {
    parser::parse(source).map_err(|diags| {
        print_diagnostics(path, &diags);
        Failure::reported()
    })
}

/// Parses and analyzes, failing on the first stage with printed diagnostics.
fn load_checked(path: &Path, reg: &Registry) -> Result<Mission, Failure> {
    let source = read(path)?;
    let m = parse_mission(path, &source)?;
    let report = analyze(&m, reg);
    if report.has_errors() {
        print_diagnostics(path, &report.diagnostics);
        return Err(Failure::reported());
    }
    Ok(m)
}

fn cmd_check(path: &Path, json: bool, reg: &Registry) -> Result<(), Failure> {
    let source = read(path)?;
    let (diagnostics, report): (Vec<Diagnostic>, Option<AnalysisReport>) =
        match parser::parse(&source) {
            Ok(m) => {
                let report = analyze(&m, reg);
                (report.diagnostics.clone(), Some(report))
            }
            Err(diags) => (diags, None),
        };
    let errors = diagnostics.iter().filter(|d| d.is_error()).count();
    if json {
        let payload = serde_json::json!({
            "file": path.display().to_string(),
            "diagnostics": diagnostics,
            "errors": errors,
            "resolved_results": report.map(|r| r.resolved_types
                .iter()
                .map(|(k, v)| (k.clone(), v.to_string()))
                .collect::<std::collections::BTreeMap<_, _>>()),
        });
        println!("{}", serde_json::to_string_pretty(&payload).unwrap());
    } else {
        print_diagnostics(path, &diagnostics);
        println!("{errors} error{}", if errors == 1 { "" } else { "s" });
    }
    if errors > 0 {
        Err(Failure::reported())
    } else {
        Ok(())
    }
}

fn cmd_run(
    path: &Path,
    scenario_path: &Path,
    trace_path: Option<PathBuf>,
    max_time: Option<f64>,
    reg: &Registry,
) -> Result<(), Failure> {
    let scenario = Scenario::from_json(&read(scenario_path)?).map_err(|e| Failure {
        code: EXIT_DIAGNOSTICS,
        message: Some(format!("{}: {e}", scenario_path.display())),
    })?;

    // .fls files replay through the script interpreter; anything else is
    // treated as mission source.
    let m = if path.extension().is_some_and(|e| e == "fls") {
        script::parse_script(&read(path)?).map_err(|e| Failure {
            code: EXIT_DIAGNOSTICS,
            message: Some(format!("{}:{e}", path.display())),
        })?
    } else {
        load_checked(path, reg)?
    };

    let mut cfg = SimConfig::default();
    if let Some(t) = max_time {
        cfg.max_sim_time = t;
    }
    let trace = run(&m, &scenario, reg, &cfg);

    let trace_path = trace_path.unwrap_or_else(|| path.with_extension("trace.jsonl"));
    write_out(&trace_path, &trace.to_jsonl())?;

    match &trace.outcome {
        Outcome::Completed => {
            println!("Completed");
            Ok(())
        }
        Outcome::Aborted(reason) => {
            println!("Aborted: {reason}");
            Ok(())
        }
        Outcome::Error(msg) => {
            println!("Error: {msg}");
            Err(Failure::reported())
        }
    }
}

fn emit(out: Option<PathBuf>, text: String) -> Result<(), Failure> {
    match out {
        Some(path) => write_out(&path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_fmt(path: &Path, write: bool) -> Result<(), Failure> {
    let source = read(path)?;
    let m = parse_mission(path, &source)?;
    let formatted = printer::format(&m);
    if write {
        write_out(path, &formatted)
    } else {
        print!("{formatted}");
        Ok(())
    }
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    let reg = load_registry()?;
    match cli.cmd {
        Cmd::Check { mission, json } => cmd_check(&mission, json, &reg),
        Cmd::Run {
            mission,
            scenario,
            trace,
            max_time,
        } => cmd_run(&mission, &scenario, trace, max_time, &reg),
        Cmd::Gen { mission, out } => {
            let m = load_checked(&mission, &reg)?;
            emit(out, codegen::gen_flightscript(&m))
        }
        Cmd::Graph { mission, out } => {
            let m = load_checked(&mission, &reg)?;
            emit(out, codegen::gen_dot(&m))
        }
        Cmd::Fmt { mission, write } => cmd_fmt(&mission, write),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse(); // clap exits with code 2 on usage errors
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            if let Some(msg) = f.message {
                eprintln!("error: {msg}");
            }
            ExitCode::from(f.code)
        }
    }
}
