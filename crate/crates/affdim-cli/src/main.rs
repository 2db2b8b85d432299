//! Command-line front end for the `affdim` library.
//!
//! Every subcommand reads a JSON system description (see the library's
//! `schema` module for the format), runs one pipeline, and writes its
//! results into an output directory: a `report.json` manifest that records
//! the system, every knob, and the headline numbers — enough to re-run the
//! command exactly — plus fixed-format CSV tables and a gnuplot script that
//! references them. Seeded commands are bit-reproducible: the same flags
//! produce byte-identical CSVs.
//!
//! Exit codes: 0 on success, 2 for input errors (malformed files, bad
//! flags, dimension caps), 3 when a budget is exceeded, 4 when a computed
//! quantity violates a property the library guarantees.

use std::path::PathBuf;
use std::process::ExitCode;

use affdim::ifs::DEFAULT_BUDGET;
use clap::{Args, Parser, Subcommand};

mod commands;

/// Default seed shared with the library's experiments.
const DEFAULT_SEED: u64 = affdim::experiments::DEFAULT_SEED;

#[derive(Parser)]
#[command(
    name = "affdim",
    version,
    about = "Dimension theory of diagonal self-affine sets and measures",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Dimension report: Lyapunov exponents, affinity and Lyapunov
    /// dimensions, the entropy-rate constant, natural weights, and the
    /// predicted set and measure dimensions.
    Dims(DimsArgs),
    /// Overlap and separation diagnostics for every coordinate subsystem:
    /// exact-overlap search, separation constants per level, and the
    /// signed-unit polynomial root check where it applies.
    Overlaps(OverlapsArgs),
    /// Entropy of a proxy measure across partition steps, against the
    /// predicted limiting rate.
    EntropyCurve(CurveArgs),
    /// Covering counts of the attractor over dyadic levels, with a
    /// box-dimension regression.
    Boxdim(BoxdimArgs),
    /// Slice entropy rates of a repeated self-convolution of the word
    /// proxy, per coordinate.
    Slice(SliceArgs),
    /// Smoothing-inequality check on seeded random lattice measure pairs;
    /// a negative gap is a property violation.
    Kvtest(KvtestArgs),
    /// Seeded draw from the self-affine measure, one CSV row per atom.
    Sample(SampleArgs),
}

/// Flags that locate and interpret the system file.
#[derive(Args)]
struct SystemOpts {
    /// System description file (JSON).
    #[arg(long, value_name = "PATH")]
    ifs: PathBuf,
    /// Require the exact rational backend; errors if any coefficient is a
    /// non-integer decimal.
    #[arg(long, conflicts_with = "float")]
    exact: bool,
    /// Force plain floats even when the file is fully rational.
    #[arg(long)]
    float: bool,
}

/// Weight override for commands that use a measure on the system.
#[derive(Args)]
struct WeightOpt {
    /// Weight vector, comma-separated decimals or num/den ratios;
    /// defaults to the file's "p", then to uniform.
    #[arg(long, value_name = "LIST")]
    p: Option<String>,
}

/// Output directory flag shared by every command.
#[derive(Args)]
struct OutputOpt {
    /// Directory for report.json, CSV tables, and the plot script.
    #[arg(long, value_name = "DIR", default_value = "affdim-out")]
    out: PathBuf,
}

fn budget_parser() -> clap::builder::RangedU64ValueParser {
    clap::value_parser!(u64).range(1..)
}

#[derive(Args)]
struct DimsArgs {
    #[command(flatten)]
    system: SystemOpts,
    #[command(flatten)]
    weights: WeightOpt,
    #[command(flatten)]
    output: OutputOpt,
}

#[derive(Args)]
struct OverlapsArgs {
    #[command(flatten)]
    system: SystemOpts,
    #[command(flatten)]
    output: OutputOpt,
    /// Longest word length scanned for overlaps and separation constants.
    #[arg(long, default_value_t = 8)]
    max_len: usize,
    /// Degree cap for the signed-unit polynomial root check.
    #[arg(long, default_value_t = 11)]
    max_degree: usize,
    /// Cap on enumerated words and same-slope pairs per level.
    #[arg(long, default_value_t = DEFAULT_BUDGET, value_parser = budget_parser())]
    budget: u64,
}

#[derive(Args)]
struct CurveArgs {
    #[command(flatten)]
    system: SystemOpts,
    #[command(flatten)]
    weights: WeightOpt,
    #[command(flatten)]
    output: OutputOpt,
    /// Deepest partition step of the curve.
    #[arg(long, default_value_t = 10)]
    n: usize,
    /// Sample count: draws this many seeded points instead of enumerating
    /// words exactly.
    #[arg(long)]
    count: Option<usize>,
    /// Word depth of the sampled proxy; 0 picks twice the deepest step.
    #[arg(long, default_value_t = 0)]
    depth: usize,
    /// Seed for the sampled proxy.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Cap on enumerated words and convolution products.
    #[arg(long, default_value_t = DEFAULT_BUDGET, value_parser = budget_parser())]
    budget: u64,
}

#[derive(Args)]
struct BoxdimArgs {
    #[command(flatten)]
    system: SystemOpts,
    #[command(flatten)]
    output: OutputOpt,
    /// Finest dyadic level counted.
    #[arg(long, default_value_t = 12)]
    n: usize,
    /// Regression window "a:b" (inclusive levels); defaults to 4:n.
    #[arg(long, value_name = "A:B")]
    window: Option<String>,
    /// Cap on visited word-tree nodes.
    #[arg(long, default_value_t = 4_000_000_000, value_parser = budget_parser())]
    budget: u64,
}

#[derive(Args)]
struct SliceArgs {
    #[command(flatten)]
    system: SystemOpts,
    #[command(flatten)]
    weights: WeightOpt,
    #[command(flatten)]
    output: OutputOpt,
    /// Word depth of the proxy measure that gets self-convolved.
    #[arg(long, default_value_t = 5)]
    depth: usize,
    /// Number of self-convolution factors.
    #[arg(long, default_value_t = 3)]
    count: usize,
    /// Deepest partition step scanned.
    #[arg(long, default_value_t = 6)]
    n: i64,
    /// Levels of extra resolution measured per step.
    #[arg(long, default_value_t = 2)]
    mstep: i64,
    /// Slack below the per-coordinate rate that still counts as saturated.
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    /// Cap on enumerated words and convolution products.
    #[arg(long, default_value_t = DEFAULT_BUDGET, value_parser = budget_parser())]
    budget: u64,
}

#[derive(Args)]
struct KvtestArgs {
    #[command(flatten)]
    output: OutputOpt,
    /// Number of random measure pairs tested.
    #[arg(long, default_value_t = 100)]
    count: usize,
    /// Dyadic lattice level the measures live on.
    #[arg(long, default_value_t = 4)]
    n: i64,
    /// Seed for the measure generator.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Cap on convolution products.
    #[arg(long, default_value_t = DEFAULT_BUDGET, value_parser = budget_parser())]
    budget: u64,
}

#[derive(Args)]
struct SampleArgs {
    #[command(flatten)]
    system: SystemOpts,
    #[command(flatten)]
    weights: WeightOpt,
    #[command(flatten)]
    output: OutputOpt,
    /// Word depth of each draw.
    #[arg(long, default_value_t = 12)]
    depth: usize,
    /// Number of points drawn.
    #[arg(long, default_value_t = 10_000)]
    count: usize,
    /// Seed for the draws.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

/// Exit code for a library error: input problems are 2, blown budgets 3,
/// violated guarantees 4.
fn exit_code(e: &affdim::Error) -> u8 {
    use affdim::Error::*;
    match e {
        InvalidInput(_) | SubgroupViolation | NotOnLattice(_) => 2,
        BudgetExceeded(_) => 3,
        PropertyViolation(_) => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Dims(args) => commands::dims(&args),
        Command::Overlaps(args) => commands::overlaps(&args),
        Command::EntropyCurve(args) => commands::entropy_curve(&args),
        Command::Boxdim(args) => commands::boxdim(&args),
        Command::Slice(args) => commands::slice(&args),
        Command::Kvtest(args) => commands::kvtest(&args),
        Command::Sample(args) => commands::sample(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
