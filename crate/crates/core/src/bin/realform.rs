use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use realform::cli::{self, ConeFile, PipelineOptions, ReebMode, EXIT_INPUT};

#[derive(Parser)]
#[command(
    name = "realform",
    version,
    about = "Good toric cones, Reeb vectors and real links"
)]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check that a cone file describes a good cone.
    Validate { path: PathBuf },
    /// Write the cone file of Y^{p,q}.
    Ypq {
        p: i64,
        q: i64,
        /// Write to this file instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every stage on a cone file and emit a JSON report.
    Pipeline {
        path: PathBuf,
        #[arg(long, value_enum, default_value_t = Reeb::Minimize)]
        reeb: Reeb,
        #[arg(long, default_value_t = 500)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Override every verification tolerance.
        #[arg(long)]
        tol: Option<f64>,
        /// Also write the sampled points as JSON.
        #[arg(long)]
        export_samples: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Reeb {
    Closed,
    Minimize,
}

fn input_error(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("realform: {msg}");
    ExitCode::from(EXIT_INPUT as u8)
}

fn configure_workers() -> Result<(), String> {
    let Ok(raw) = std::env::var("REALFORM_WORKERS") else {
        return Ok(());
    };
    let n: usize = raw
        .parse()
        .map_err(|_| format!("REALFORM_WORKERS must be a positive integer, got {raw:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

/// Prints to standard output; a closed pipe is not an error.
fn emit(text: &str) {
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn write_or_print(out: Option<PathBuf>, text: &str) -> ExitCode {
    match out {
        Some(p) => match std::fs::write(&p, text) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => input_error(format!("cannot write {}: {e}", p.display())),
        },
        None => {
            emit(text);
            ExitCode::SUCCESS
        }
    }
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INPUT as u8 } else { 0 });
        }
    };
    if let Err(e) = configure_workers() {
        return input_error(e);
    }
    match args.command {
        Command::Validate { path } => match cli::cmd_validate(&path) {
            Ok((out, code)) => {
                emit(&serde_json::to_string_pretty(&out).expect("serializes"));
                ExitCode::from(code as u8)
            }
            Err(e) => input_error(e),
        },
        Command::Ypq { p, q, out } => match cli::cmd_ypq(p, q) {
            Ok(file) => write_or_print(out, &file.to_json()),
            Err(e) => input_error(e),
        },
        Command::Pipeline {
            path,
            reeb,
            samples,
            seed,
            tol,
            export_samples,
        } => {
            let file = match ConeFile::read(&path) {
                Ok(f) => f,
                Err(e) => return input_error(e),
            };
            let opts = PipelineOptions {
                reeb: match reeb {
                    Reeb::Closed => ReebMode::Closed,
                    Reeb::Minimize => ReebMode::Minimize,
                },
                samples,
                seed,
                tol,
            };
            let out = cli::run_pipeline(file, &opts);
            if let (Some(p), Some(s)) = (export_samples, &out.samples) {
                if let Err(e) = std::fs::write(&p, s.to_json()) {
                    return input_error(format!("cannot write {}: {e}", p.display()));
                }
            }
            emit(&out.report.to_json());
            ExitCode::from(out.report.exit_code() as u8)
        }
    }
}
