//! Command-line front end: batch-check assertion scripts, dump serialized
//! process tables, and export automata as text graphs.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use bricc::ioproc::serialize;
use bricc::lts::{compile_named, failures_model, normalize};
use bricc::script::{self, RunFlags};

#[derive(Parser)]
#[command(name = "bricc", version, about = "Refinement, deadlock and convergence checking for buffered I/O-process components")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Structured,
}

#[derive(Subcommand)]
enum Command {
    /// Load specifications and evaluate every assertion they contain.
    Check {
        /// Specification files (`.iop`).
        files: Vec<PathBuf>,
        /// Deviation bound for convergence checks (default: depth difference).
        #[arg(long)]
        gap: Option<u32>,
        /// Buffer capacity for compositions.
        #[arg(long, default_value_t = 1)]
        buffer_size: u32,
        /// State budget for compilation and bound construction.
        #[arg(long)]
        max_states: Option<usize>,
        /// Force the brute-force method for convergence checks.
        #[arg(long)]
        oracle: bool,
        /// Seed echoed into the report (reserved for generator-backed runs).
        #[arg(long)]
        seed: Option<u64>,
        /// Report format.
        #[arg(long, value_enum, default_value_t = Format::Text)]
        report: Format,
    },
    /// Print the serialized table of a process.
    Serialize {
        file: PathBuf,
        process: String,
        #[arg(long)]
        max_states: Option<usize>,
    },
    /// Export an automaton as a text graph.
    Lts {
        file: PathBuf,
        process: String,
        /// Export the normalized failures automaton instead of the raw LTS.
        #[arg(long)]
        normalized: bool,
        #[arg(long)]
        max_states: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Check {
            files,
            gap,
            buffer_size,
            max_states,
            oracle,
            seed,
            report,
        } => {
            if files.is_empty() {
                eprintln!("no input files");
                return ExitCode::from(2);
            }
            let flags = RunFlags {
                gap,
                buffer: buffer_size,
                max_states,
                oracle,
                seed,
            };
            let (rep, code) = script::run(&files, flags);
            if let Some(rep) = rep {
                match report {
                    Format::Text => print!("{}", rep.render_text()),
                    Format::Structured => println!("{}", rep.to_json()),
                }
            }
            ExitCode::from(code as u8)
        }
        Command::Serialize {
            file,
            process,
            max_states,
        } => with_norm(&file, &process, max_states, |norm| match serialize(norm) {
            Ok(sp) => {
                print!("{}", sp.to_table());
                0
            }
            Err(e) => {
                eprintln!("{e}");
                2
            }
        }),
        Command::Lts {
            file,
            process,
            normalized,
            max_states,
        } => with_lts(&file, &process, max_states, |lts| {
            if normalized {
                let norm = failures_model(lts);
                print!("{}", bricc::lts::export::norm_graph(&norm, &process));
            } else {
                print!("{}", bricc::lts::export::lts_graph(lts, &process));
            }
            0
        }),
    }
}

fn with_lts(
    file: &PathBuf,
    process: &str,
    max_states: Option<usize>,
    f: impl FnOnce(&bricc::lts::Lts) -> u8,
) -> ExitCode {
    let spec = match script::load_spec(file) {
        Ok(s) => s,
        Err(diags) => {
            for d in diags {
                eprintln!("{d}");
            }
            return ExitCode::from(2);
        }
    };
    let budget = max_states.unwrap_or(bricc::lts::DEFAULT_MAX_STATES);
    match compile_named(&spec, process, budget) {
        Ok(lts) => ExitCode::from(f(&lts)),
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
    }
}

fn with_norm(
    file: &PathBuf,
    process: &str,
    max_states: Option<usize>,
    f: impl FnOnce(&bricc::lts::NormLts) -> u8,
) -> ExitCode {
    with_lts(file, process, max_states, |lts| match normalize(lts) {
        Ok(norm) => f(&norm),
        Err(e) => {
            eprintln!("{e}");
            2
        }
    })
}
