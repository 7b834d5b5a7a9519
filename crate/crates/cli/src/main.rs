use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use jetforms::corpus;
use jetforms::problem::{parse_problem, Problem};
use jetforms::report::{render_text, run_stages, Report, Stages};
use jetforms::Error;

/// Unified velocity-momentum treatment of higher-order Lagrangians.
#[derive(Parser)]
#[command(name = "jetforms", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the whole pipeline on a problem file.
    Run {
        file: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        format: Format,
    },
    /// Run built-in examples and compare them with their stored reports.
    Corpus {
        /// Example name, or `all`.
        name: String,
        #[command(flatten)]
        format: Format,
    },
    /// Print only the Euler-Lagrange equations.
    El {
        file: PathBuf,
        #[command(flatten)]
        format: Format,
    },
    /// Regularity, B-system analysis and kernel checks only.
    Analyze {
        file: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        format: Format,
    },
}

#[derive(Args, Clone, Copy)]
#[group(multiple = false)]
struct Format {
    /// JSON output (the default).
    #[arg(long)]
    json: bool,
    /// Human-readable output.
    #[arg(long)]
    text: bool,
}

const EXIT_MISMATCH: u8 = 1;
const EXIT_PARSE: u8 = 2;
const EXIT_PRECONDITION: u8 = 3;
const EXIT_INTERNAL: u8 = 4;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse { .. } => EXIT_PARSE,
        Error::Internal(_) => EXIT_INTERNAL,
        _ => EXIT_PRECONDITION,
    }
}

fn load(path: &PathBuf) -> Result<Problem, Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Usage(format!("cannot read {}: {e}", path.display())))?;
    parse_problem(&text)
}

fn print_report(report: &Report, format: Format) {
    if format.text {
        print!("{}", render_text(report));
    } else {
        print!("{}", report.to_json_string());
    }
}

fn finish(report: &Report) -> u8 {
    for f in &report.consistency_failures {
        eprintln!("consistency failure: {f}");
    }
    if report.consistency_failures.is_empty() {
        0
    } else {
        EXIT_INTERNAL
    }
}

fn execute(command: Command) -> Result<u8, Error> {
    match command {
        Command::Run { file, seed, format } => {
            let report = run_stages(&load(&file)?, seed, Stages::ALL)?;
            print_report(&report, format);
            Ok(finish(&report))
        }
        Command::Analyze { file, seed, format } => {
            let stages = Stages { assembly: false, analysis: true, euler_lagrange: false };
            let report = run_stages(&load(&file)?, seed, stages)?;
            print_report(&report, format);
            Ok(finish(&report))
        }
        Command::El { file, format } => {
            let problem = load(&file)?;
            let el = jetforms::eleuler::euler_lagrange(&problem.lagrangian, problem.spec())?;
            let lines: Vec<String> =
                el.components.iter().map(|e| e.normalize().map(|n| n.to_string())).collect::<Result<_, _>>()?;
            if format.text {
                for (a, e) in lines.iter().enumerate() {
                    println!("EL[{}] = {e}", a + 1);
                }
            } else {
                println!("{}", serde_json::to_string_pretty(&lines).expect("strings serialize"));
            }
            Ok(0)
        }
        Command::Corpus { name, format } => {
            let selected: Vec<&corpus::Example> = if name == "all" {
                corpus::EXAMPLES.iter().collect()
            } else {
                vec![corpus::example(&name)?]
            };
            let mut code = 0;
            let mut reports = serde_json::Map::new();
            for ex in selected {
                let outcome = corpus::run_example(ex)?;
                if outcome.passed() {
                    eprintln!("PASS {}", ex.name);
                } else {
                    eprintln!("FAIL {}", ex.name);
                    for line in outcome.diff.iter().chain(&outcome.report.consistency_failures) {
                        eprintln!("  {line}");
                    }
                    let this = if outcome.report.consistency_failures.is_empty() { EXIT_MISMATCH } else { EXIT_INTERNAL };
                    code = code.max(this);
                }
                if format.text {
                    print!("{}", render_text(&outcome.report));
                } else {
                    reports.insert(ex.name.to_string(), outcome.report.to_json());
                }
            }
            if !format.text {
                println!("{}", serde_json::to_string_pretty(&reports).expect("reports serialize"));
            }
            Ok(code)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
