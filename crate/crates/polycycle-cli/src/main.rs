//! Batch driver over the polycycle laboratory. Subcommands read a JSON
//! config, run the corresponding pipeline, and write CSV or JSON tables.
//!
//! Exit codes: 0 success, 2 validation failure (a certified property was
//! violated by the data), 1 I/O or domain error. Outputs are byte-identical
//! across reruns of the same config and seed.

mod commands;
mod inputs;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{Failure, Format, Output};

#[derive(Parser)]
#[command(name = "polycycle", version, about = "polycycle connection-sequence laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Path to the JSON input config.
    #[arg(long)]
    input: PathBuf,
    /// Output path; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Output format.
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Tolerance (meaning is per subcommand).
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Depth / number of solved indices.
    #[arg(long, default_value_t = 10_000)]
    depth: u64,
    /// Seed for the randomized grid jitter in certify (0 = no jitter).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Run the module's invariant suite on this config instead of the
    /// pipeline; prints one PASS/FAIL line per property.
    #[arg(long)]
    check: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Build a rectifying chart for a map model and tabulate (x, xi, residual).
    Rectify(CommonArgs),
    /// Solve the connection roots of one family over a range of n.
    Sparkle(CommonArgs),
    /// Full scenario pipeline: sequences, arc assignment, visit frequencies.
    ThRun {
        #[command(flatten)]
        common: CommonArgs,
        /// Also write the generated connection table as CSV to this path.
        #[arg(long)]
        table: Option<PathBuf>,
    },
    /// Invariant vector, projective class, rationality; optional comparison.
    Freq {
        #[command(flatten)]
        common: CommonArgs,
        /// Second config to compare against (equivalence obstruction).
        #[arg(long)]
        compare: Option<PathBuf>,
    },
    /// Count rotation-orbit visits against a target interval.
    Rotate(CommonArgs),
    /// Certify a map model against the power-law estimate contract.
    Certify(CommonArgs),
}

fn main() -> ExitCode {
    configure_threads();
    let cli = Cli::parse();
    let (common, result) = dispatch(&cli);
    match result {
        Ok(output) => match deliver(common, output) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e:#}");
                ExitCode::from(1)
            }
        },
        Err(Failure::Validation(msg)) => {
            eprintln!("validation failure: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Error(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cli: &Cli) -> (&CommonArgs, commands::RunResult) {
    match &cli.command {
        Command::Rectify(c) => {
            let r = read_input(&c.input)
                .and_then(|input| commands::run_rectify(&input, c.tol, c.format, c.check));
            (c, r)
        }
        Command::Sparkle(c) => {
            let r = read_input(&c.input).and_then(|input| {
                commands::run_sparkle(&input, clamp_u32(c.depth), c.tol, c.format, c.check)
            });
            (c, r)
        }
        Command::ThRun { common: c, table } => {
            let r = read_input(&c.input).and_then(|spec| {
                commands::run_th(
                    &spec,
                    clamp_u32(c.depth),
                    c.tol,
                    c.format,
                    c.check,
                    table.clone(),
                )
            });
            (c, r)
        }
        Command::Freq { common: c, compare } => {
            let r = read_input(&c.input).and_then(|spec| {
                let other = match compare {
                    None => None,
                    Some(path) => Some(read_input(path)?),
                };
                commands::run_freq(&spec, other.as_ref(), c.tol, c.format, c.check)
            });
            (c, r)
        }
        Command::Rotate(c) => {
            let r = read_input(&c.input)
                .and_then(|input| commands::run_rotate(&input, c.depth, c.format, c.check));
            (c, r)
        }
        Command::Certify(c) => {
            let r = read_input(&c.input)
                .and_then(|input| commands::run_certify(&input, c.seed, c.format, c.check));
            (c, r)
        }
    }
}

/// Read and parse a JSON input file; malformed JSON reports line and field.
fn read_input<T: serde::de::DeserializeOwned>(path: &PathBuf) -> Result<T, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        Failure::Error(anyhow::anyhow!("cannot read {}: {e}", path.display()))
    })?;
    serde_json::from_str(&text).map_err(|e| {
        Failure::Error(anyhow::anyhow!("malformed config {}: {e}", path.display()))
    })
}

fn deliver(common: &CommonArgs, output: Output) -> anyhow::Result<()> {
    match &common.output {
        None => {
            std::io::stdout().write_all(output.primary.as_bytes())?;
        }
        Some(path) => {
            std::fs::write(path, output.primary.as_bytes())
                .map_err(|e| anyhow::anyhow!("cannot write {}: {e}", path.display()))?;
        }
    }
    for (path, content) in &output.extra_files {
        std::fs::write(path, content.as_bytes())
            .map_err(|e| anyhow::anyhow!("cannot write {}: {e}", path.display()))?;
    }
    Ok(())
}

fn clamp_u32(depth: u64) -> u32 {
    depth.min(u32::MAX as u64) as u32
}

/// POLYCYCLE_LAB_THREADS caps parallelism; 0 or unset means automatic.
fn configure_threads() {
    if let Ok(v) = std::env::var("POLYCYCLE_LAB_THREADS") {
        if let Ok(n) = v.trim().parse::<usize>() {
            if n > 0 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}
