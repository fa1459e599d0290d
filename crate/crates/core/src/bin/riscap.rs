//! Command-line front end for the capacity experiments.
//!
//! - `validate` / `sweep` / `optimize` run a JSON spec (or the built-in
//!   defaults) with the subcommand's mode filled in when the spec omits one
//! - `fig2`..`fig9` run the named figure presets; `fig4`/`fig9` take
//!   `--axis` to pick the growing array dimension
//! - results go to `--out` (or stdout) as CSV/JSON; logs and timing go to
//!   stderr, and failures print a machine-readable error object there
//! - `--seed`, `--trials`, and `--threads` override the spec; worker count
//!   never changes the output bytes

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use riscap::experiment::{
    emit, figure_preset, parse_spec_with_default_mode, run_experiment, ExperimentSpec, Mode,
    OutputFormat, SweepAxis,
};
use riscap::Error;

#[derive(Parser)]
#[command(
    name = "riscap",
    version,
    about = "Ergodic-capacity evaluation and joint covariance/phase optimization \
             for RIS-assisted mmWave MIMO links"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate capacity quantities at the unoptimized reference point.
    Validate(RunArgs),
    /// Sweep one axis from a config file (reference-point evaluation).
    Sweep(RunArgs),
    /// Run the alternating optimizer per angle realization.
    Optimize(RunArgs),
    /// Approximation tightness vs transmit SNR (reference defaults).
    Fig2(PresetArgs),
    /// High-SNR upper bound vs transmit SNR (4/4 paths).
    Fig3(PresetArgs),
    /// Upper-bound saturation vs one growing array dimension.
    Fig4(GrowthArgs),
    /// Optimizer convergence trace at 10 dB.
    Fig5(PresetArgs),
    /// Optimized capacity vs transmit SNR.
    Fig6(PresetArgs),
    /// Optimization-influence comparison at 16 BS antennas.
    Fig7(PresetArgs),
    /// Optimization-influence comparison at 32 BS antennas.
    Fig8(PresetArgs),
    /// Optimized capacity vs one growing array dimension.
    Fig9(GrowthArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Output file; the table goes to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format: csv or json.
    #[arg(long, default_value = "csv")]
    format: OutputFormat,
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Monte-Carlo trial count override.
    #[arg(long)]
    trials: Option<usize>,
    /// Rayon worker threads (default: all cores). Does not affect results.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment spec; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct PresetArgs {
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct GrowthArgs {
    /// Growing dimension: n_b, n_r, or n_u.
    #[arg(long)]
    axis: Option<SweepAxis>,
    #[command(flatten)]
    common: CommonArgs,
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli.command) {
        let detail = serde_json::json!({"error": {"kind": e.kind(), "message": e.to_string()}});
        eprintln!("{detail}");
        std::process::exit(1);
    }
}

fn run(command: Command) -> riscap::Result<()> {
    let (spec, common) = build_spec(command)?;
    if let Some(threads) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Error::Config { path: "threads".to_string(), detail: e.to_string() })?;
    }

    let started = Instant::now();
    let table = run_experiment(&spec)?;
    eprintln!(
        "riscap: {} rows x {} columns in {:.3} s",
        table.rows.len(),
        table.columns.len(),
        started.elapsed().as_secs_f64()
    );

    match &common.out {
        Some(path) => {
            emit(&table, common.format, path)?;
            eprintln!("riscap: wrote {}", path.display());
        }
        None => {
            let text = match common.format {
                OutputFormat::Csv => table.to_csv_string()?,
                OutputFormat::Json => table.to_json_string()?,
            };
            print!("{text}");
        }
    }
    Ok(())
}

fn build_spec(command: Command) -> riscap::Result<(ExperimentSpec, CommonArgs)> {
    let (mut spec, common) = match command {
        Command::Validate(args) => spec_from_config(args.config.as_deref(), Mode::Validate)
            .map(|s| (s, args.common))?,
        Command::Sweep(args) => {
            spec_from_config(args.config.as_deref(), Mode::Sweep).map(|s| (s, args.common))?
        }
        Command::Optimize(args) => spec_from_config(args.config.as_deref(), Mode::Optimize)
            .map(|s| (s, args.common))?,
        Command::Fig2(args) => (figure_preset(2, None)?, args.common),
        Command::Fig3(args) => (figure_preset(3, None)?, args.common),
        Command::Fig4(args) => (figure_preset(4, args.axis)?, args.common),
        Command::Fig5(args) => (figure_preset(5, None)?, args.common),
        Command::Fig6(args) => (figure_preset(6, None)?, args.common),
        Command::Fig7(args) => (figure_preset(7, None)?, args.common),
        Command::Fig8(args) => (figure_preset(8, None)?, args.common),
        Command::Fig9(args) => (figure_preset(9, args.axis)?, args.common),
    };
    if let Some(seed) = common.seed {
        spec.master_seed = seed;
    }
    if let Some(trials) = common.trials {
        spec.trials = trials;
    }
    spec.validate()?;
    Ok((spec, common))
}

fn spec_from_config(path: Option<&std::path::Path>, mode: Mode) -> riscap::Result<ExperimentSpec> {
    let text = match path {
        Some(p) => std::fs::read_to_string(p).map_err(|e| Error::Config {
            path: "config".to_string(),
            detail: format!("{}: {e}", p.display()),
        })?,
        None => "{}".to_string(),
    };
    parse_spec_with_default_mode(&text, mode)
}
