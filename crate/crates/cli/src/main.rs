//! `ptopo`: progressive critical points and persistence diagrams of raw
//! volumes, with time budgets and Ctrl-C interruption.

mod commands;
mod input;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ptopo_core::lifetime::DEFAULT_LMAX;
use ptopo_core::{DiagramFormat, Dtype, PairSelection, Synthetic};

use crate::input::parse_dims;

#[derive(Parser, Debug)]
#[command(name = "ptopo", version, about = "Progressive topological analysis of scalar fields")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Extremum-saddle persistence diagram, coarse to fine.
    Diagram(RunArgs),
    /// Critical points per level and invariant-vertex statistics.
    CriticalPoints(RunArgs),
    /// Times progressive vs non-progressive runs on 1 and N threads.
    Bench(BenchArgs),
    /// Writes a synthetic raw volume and its JSON sidecar.
    Synth(SynthArgs),
}

#[derive(Args, Debug, Clone)]
pub struct InputArgs {
    /// Raw volume (x fastest, little-endian).
    #[arg(long)]
    pub input: PathBuf,
    /// Vertex counts `X,Y,Z` (or `X,Y`); read from `<input>.json` if omitted.
    #[arg(long, value_parser = parse_dims)]
    pub dims: Option<[usize; 3]>,
    /// Element type: u8, i16, u16, f32 or f64.
    #[arg(long)]
    pub dtype: Option<Dtype>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Progressive,
    Nonprogressive,
}

#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Pair classes: min-saddle, saddle-max or both.
    #[arg(long, default_value = "both")]
    pub pairs: PairSelection,
    /// Stop refining once this many milliseconds have elapsed; the level in
    /// progress still completes.
    #[arg(long)]
    pub budget_ms: Option<u64>,
    /// Last level to compute (0 is the coarsest).
    #[arg(long)]
    pub levels: Option<usize>,
    /// Worker threads (default: all cores).
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub threads: Option<u32>,
    /// Output directory.
    #[arg(long, default_value = "ptopo-out")]
    pub out: PathBuf,
    /// Also write the result of every level.
    #[arg(long)]
    pub per_level: bool,
    /// Write a convergence report against the last computed diagram.
    #[arg(long)]
    pub metrics: bool,
    /// Track extremum lifetimes across levels.
    #[arg(long)]
    pub lifetime: bool,
    /// Hop bound for lifetime tracking.
    #[arg(long, default_value_t = DEFAULT_LMAX)]
    pub lmax: usize,
    #[arg(long, value_enum, default_value_t = Mode::Progressive)]
    pub mode: Mode,
    /// Diagram file format: csv or json.
    #[arg(long, default_value = "csv")]
    pub format: DiagramFormat,
}

#[derive(Args, Debug, Clone)]
pub struct BenchArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value = "both")]
    pub pairs: PairSelection,
    /// Thread count for the parallel runs (default: all cores).
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub threads: Option<u32>,
    /// Runs per configuration; the best time is reported.
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..))]
    pub repeat: u32,
    /// Optional directory for `bench.csv`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct SynthArgs {
    /// minmax, random, hills or hills:K.
    pub name: Synthetic,
    /// Vertex counts `X,Y,Z` (or `X,Y`).
    #[arg(long, value_parser = parse_dims)]
    pub dims: [usize; 3],
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "f64")]
    pub dtype: Dtype,
    /// Volume path; the sidecar goes to `<out>.json`.
    #[arg(long)]
    pub out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Diagram(args) => commands::diagram(&args),
        Command::CriticalPoints(args) => commands::critical_points(&args),
        Command::Bench(args) => commands::bench(&args),
        Command::Synth(args) => commands::synth(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
