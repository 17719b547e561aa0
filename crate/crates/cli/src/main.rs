use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use neumann_widths::spline::DerivativePath;
use nwidth::sweep::{run_sweep, SweepConfig};
use nwidth::{cmd_cvd, cmd_threshold, cmd_verify_cy2n, cmd_width, CliResult, CvdOptions};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "nwidth", version, about = "Exact widths of Neumann-kernel classes and the checks behind them")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum PathArg {
    Direct,
    Lemma1,
    Lemma2,
}

impl From<PathArg> for DerivativePath {
    fn from(p: PathArg) -> Self {
        match p {
            PathArg::Direct => DerivativePath::Direct,
            PathArg::Lemma1 => DerivativePath::Lemma1,
            PathArg::Lemma2 => DerivativePath::Lemma2,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Width, extremal point and sandwich bounds for one (q, beta, n).
    Width {
        #[arg(long)]
        q: f64,
        #[arg(long, allow_hyphen_values = true)]
        beta: f64,
        #[arg(long)]
        n: u32,
        /// Compare against the grid + golden-section sup-norm oracle.
        #[arg(long)]
        verify: bool,
    },
    /// Smallest n from which both sufficient conditions hold.
    Threshold {
        #[arg(long)]
        q: f64,
        /// Apply the small-q case split for this beta.
        #[arg(long, allow_hyphen_values = true)]
        beta: Option<f64>,
        #[arg(long, default_value_t = 1_000_000)]
        cap: u64,
        /// Include the per-n verdicts (at most 10000 of them).
        #[arg(long)]
        trace: bool,
    },
    /// Sign pattern of the fundamental spline's derivative at the midpoints.
    VerifyCy2n {
        #[arg(long)]
        q: f64,
        #[arg(long, allow_hyphen_values = true)]
        beta: f64,
        #[arg(long)]
        n: u32,
        /// Shift; defaults to the extremal point y0.
        #[arg(long)]
        y: Option<f64>,
        #[arg(long, value_enum, default_value_t = PathArg::Lemma1)]
        path: PathArg,
    },
    /// Determinant test for the CVD property of N_{q,beta}.
    Cvd {
        #[arg(long)]
        q: f64,
        #[arg(long, allow_hyphen_values = true)]
        beta: f64,
        /// Use the two built-in separating configurations.
        #[arg(long = "reference-vectors", alias = "paper-vectors")]
        reference_vectors: bool,
        /// JSON file with a list of {"x": [[num, den], ...], "y": [...]} node sets.
        #[arg(long)]
        vectors: Option<PathBuf>,
        /// Search for configurations of both signs.
        #[arg(long)]
        witness: bool,
        #[arg(long, default_value_t = 1)]
        l: usize,
        #[arg(long, default_value_t = 100_000)]
        budget: u64,
        #[arg(long, default_value_t = 0x5eed)]
        seed: u64,
    },
    /// Parallel sweep over a (q, beta, n) grid described by a JSON config.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Omit the generation timestamp so reruns are byte-identical.
        #[arg(long)]
        no_timestamp: bool,
    },
}

fn emit<T: Serialize>(r: CliResult<T>) -> ExitCode {
    match r {
        Ok(v) => {
            // a closed pipe downstream is not an error worth reporting
            let _ = writeln!(std::io::stdout().lock(), "{}", serde_json::to_string_pretty(&v).expect("output serializes"));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Width { q, beta, n, verify } => emit(cmd_width(q, beta, n, verify)),
        Command::Threshold { q, beta, cap, trace } => emit(cmd_threshold(q, beta, cap, trace)),
        Command::VerifyCy2n { q, beta, n, y, path } => emit(cmd_verify_cy2n(q, beta, n, y, path.into())),
        Command::Cvd {
            q,
            beta,
            reference_vectors,
            vectors,
            witness,
            l,
            budget,
            seed,
        } => emit(cmd_cvd(
            q,
            beta,
            &CvdOptions {
                reference_vectors,
                vectors_file: vectors,
                witness,
                l,
                budget,
                seed,
            },
        )),
        Command::Sweep { config, no_timestamp } => {
            emit(SweepConfig::load(&config).and_then(|c| run_sweep(&c, !no_timestamp)))
        }
    }
}
