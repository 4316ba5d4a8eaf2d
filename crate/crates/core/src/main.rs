use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qres_core::cli::{self, FanSource, GlueOptions};
use qres_core::{Error, Result};

#[derive(Parser)]
#[command(name = "qres", version, about = "Resolve cyclic quotient singularities by weighted blow-ups")]
struct Cli {
    /// Print machine-readable JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Input {
    /// Fan file.
    path: Option<PathBuf>,
    /// Quotient type such as 1/5(2,1), used instead of a file.
    #[arg(long = "type", conflicts_with = "path")]
    ty: Option<String>,
    /// Residue characteristic (0 or a prime); overrides the file.
    #[arg(long = "char")]
    characteristic: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Describe the quotient group of every cone in a fan file.
    Classify {
        path: PathBuf,
        #[arg(long = "char")]
        characteristic: Option<u64>,
    },
    /// Resolve to a smooth fan.
    Resolve {
        #[command(flatten)]
        input: Input,
        /// Write the trace (JSON Lines) here.
        #[arg(long)]
        emit_trace: Option<PathBuf>,
        /// In rank 2, check the result against the continued fraction.
        #[arg(long)]
        oracle_check: bool,
    },
    /// Perform one blow-up step and print the resulting fan file.
    Blowup {
        #[command(flatten)]
        input: Input,
    },
    /// Minimal invariant monomials of a quotient type.
    Hilbert {
        #[arg(value_name = "TYPE")]
        ty: String,
        /// Degree bound (default from QRES_MAX_DEGREE, else 12).
        #[arg(long)]
        bound: Option<u32>,
        /// Compare with the dual cone lattice points.
        #[arg(long)]
        oracle_check: bool,
    },
    /// Continued fraction of l/a.
    Hj {
        l: u64,
        a: u64,
        /// Also print the resolution rays.
        #[arg(long)]
        rays: bool,
    },
    /// Kernel of the character of one coordinate.
    Cartify {
        #[arg(value_name = "TYPE")]
        ty: String,
        /// Coordinate, counted from 1.
        #[arg(long)]
        ray: usize,
    },
    /// Check random equivariant automorphisms against the weighted filtration.
    GlueCheck {
        #[arg(value_name = "TYPE")]
        ty: String,
        /// Divisor coordinate, counted from 1 (default: last unit character).
        #[arg(long)]
        divisor: Option<usize>,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Truncation degree (default from QRES_MAX_DEGREE, else 12).
        #[arg(long)]
        truncation: Option<u32>,
    },
    /// Re-run a trace against its input fan file.
    Replay { input: PathBuf, trace: PathBuf },
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn with_source<T>(input: &Input, f: impl FnOnce(&FanSource<'_>, Option<u64>) -> Result<T>) -> Result<T> {
    match (&input.path, &input.ty) {
        (Some(p), None) => {
            let text = read(p)?;
            f(&FanSource::File(&text), input.characteristic)
        }
        (None, Some(t)) => f(&FanSource::Type(t), input.characteristic),
        _ => Err(Error::Invalid("give a fan file or --type".into())),
    }
}

fn run(cli: Cli) -> Result<String> {
    let json = cli.json;
    match cli.command {
        Command::Classify { path, characteristic } => cli::classify(&read(&path)?, characteristic, json),
        Command::Resolve {
            input,
            emit_trace,
            oracle_check,
        } => {
            let out = with_source(&input, |s, p| cli::resolve_command(s, p, oracle_check, json))?;
            if let Some(path) = emit_trace {
                fs::write(&path, &out.trace).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            }
            Ok(out.report)
        }
        Command::Blowup { input } => with_source(&input, |s, p| cli::blowup_command(s, p, json)),
        Command::Hilbert { ty, bound, oracle_check } => cli::hilbert_command(&ty, bound, oracle_check, json),
        Command::Hj { l, a, rays } => cli::hj_command(l, a, rays, json),
        Command::Cartify { ty, ray } => cli::cartify_command(&ty, ray, json),
        Command::GlueCheck {
            ty,
            divisor,
            samples,
            seed,
            truncation,
        } => cli::glue_command(
            &ty,
            &GlueOptions {
                divisor,
                samples,
                seed,
                truncation,
            },
            json,
        ),
        Command::Replay { input, trace } => cli::replay_command(&read(&input)?, &read(&trace)?, json),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
