use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use sfpa_core::law::MixtureH;
use sfpa_core::pa::{Comparison, NullMethod};
use sfpa_core::Preprocess;

#[derive(Debug, Parser)]
#[command(name = "sfpa", version, about = "Signflip and permutation parallel analysis")]
pub struct Cli {
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true, env = "SFPA_THREADS", value_parser = clap::value_parser!(u64).range(1..))]
    pub threads: Option<u64>,

    /// Record wall time in reports (makes reports differ between runs).
    #[arg(long, global = true)]
    pub timing: bool,

    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Select the number of factors in a data matrix.
    Select(SelectArgs),
    /// Run a simulation experiment and write its tables.
    Simulate(SimulateArgs),
    /// Solve a limiting spectral law and report its upper edge.
    Law(LawArgs),
    /// Signal-destruction diagnostics for a matrix.
    Diagnose(DiagnoseArgs),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// CSV table or SFPA binary matrix.
    #[arg(long)]
    pub input: PathBuf,

    /// Comma-separated steps: center_rows, center_columns,
    /// scale_columns_unit_variance, impute_missing_zero, or `standard`.
    #[arg(long, default_value = "none", value_parser = parse_preprocess)]
    pub preprocess: Preprocess,

    #[arg(long, default_value = ",", value_parser = parse_delimiter)]
    pub delimiter: u8,

    #[arg(long)]
    pub has_header: bool,

    /// Cell content marking a missing value.
    #[arg(long, default_value = "")]
    pub missing_token: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Signflip,
    Permutation,
}

impl From<MethodArg> for NullMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Signflip => NullMethod::Signflip,
            MethodArg::Permutation => NullMethod::Permutation,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ComparisonArg {
    Pairwise,
    UpperEdge,
}

impl From<ComparisonArg> for Comparison {
    fn from(c: ComparisonArg) -> Self {
        match c {
            ComparisonArg::Pairwise => Comparison::Pairwise,
            ComparisonArg::UpperEdge => Comparison::UpperEdge,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[command(flatten)]
    pub input: InputArgs,

    #[arg(long, value_enum, default_value_t = MethodArg::Signflip)]
    pub method: MethodArg,

    #[arg(long, value_enum, default_value_t = ComparisonArg::Pairwise)]
    pub comparison: ComparisonArg,

    /// Percentile of the null singular values, in (0, 100].
    #[arg(long, default_value_t = 95.0, value_parser = parse_alpha)]
    pub alpha: f64,

    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: u64,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Largest rank that may be selected (default min(n, p) - 1).
    #[arg(long)]
    pub max_rank: Option<usize>,

    /// File for the full selection report.
    #[arg(long)]
    pub output: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    pub format: FormatArg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ExperimentArg {
    Homogeneous,
    HeteroRows,
    HeteroGrid,
    NoiseSv,
    HomogenizationDemo,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ProfileArg {
    Homogeneous,
    HeteroRows,
    HeteroGrid,
    HalfSplit,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub experiment: ExperimentArg,

    /// Runs per strength, or Monte Carlo draws for noise-sv.
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    pub runs: u64,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[arg(long)]
    pub out_dir: PathBuf,

    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: u64,

    #[arg(long, default_value_t = 95.0, value_parser = parse_alpha)]
    pub alpha: f64,

    /// Spike strengths as start:stop:step.
    #[arg(long, default_value = "0:4:0.25")]
    pub theta_grid: String,

    #[arg(long, default_value_t = 500, value_parser = clap::value_parser!(u64).range(1..))]
    pub n: u64,

    #[arg(long, default_value_t = 300, value_parser = clap::value_parser!(u64).range(1..))]
    pub p: u64,

    /// Noise profile for noise-sv (defaults to hetero-rows).
    #[arg(long, value_enum)]
    pub profile: Option<ProfileArg>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum LawArg {
    Row,
    Permuted,
}

/// Evaluation points parsed from `min:max:steps`.
#[derive(Clone, Debug)]
pub struct Grid(pub Vec<f64>);

#[derive(Debug, Args)]
pub struct LawArgs {
    #[arg(long, value_enum)]
    pub law: LawArg,

    /// Aspect ratio p/n.
    #[arg(long, value_parser = parse_positive)]
    pub gamma: f64,

    /// Mixture atoms as t1:w1,t2:w2,... with weights summing to 1.
    #[arg(long, value_parser = parse_atoms)]
    pub atoms: MixtureH,

    /// Evaluation grid as min:max:steps (default: 400 points covering the support).
    #[arg(long, value_parser = parse_grid)]
    pub grid: Option<Grid>,

    /// Imaginary offset of the inversion line (default 1e-8 times the grid span).
    #[arg(long, value_parser = parse_positive)]
    pub epsilon: Option<f64>,

    /// Density level defining the support edges.
    #[arg(long, default_value_t = 1e-4, value_parser = parse_positive)]
    pub threshold: f64,

    /// CSV file for the density.
    #[arg(long)]
    pub output: Option<PathBuf>,

    /// JSON file for the full law report.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    #[command(flatten)]
    pub input: InputArgs,

    /// Monte Carlo draws for the mean of ||R o S||.
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
    pub flip_trials: Option<u64>,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Exponent of the entrywise norm, at least 2.
    #[arg(long, default_value_t = 4.0, value_parser = parse_entrywise_k)]
    pub k: f64,

    /// JSON file for the report; printed to stdout when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

fn parse_alpha(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v > 0.0 && v <= 100.0 {
        Ok(v)
    } else {
        Err(format!("alpha must lie in (0, 100], got {v}"))
    }
}

fn parse_positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("expected a positive number, got {v}"))
    }
}

fn parse_entrywise_k(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v >= 2.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("k must be at least 2, got {v}"))
    }
}

fn parse_atoms(s: &str) -> Result<MixtureH, String> {
    s.parse().map_err(|e: sfpa_core::Error| e.to_string())
}

fn parse_preprocess(s: &str) -> Result<Preprocess, String> {
    s.parse().map_err(|e: sfpa_core::Error| e.to_string())
}

fn parse_delimiter(s: &str) -> Result<u8, String> {
    match s.as_bytes() {
        [b] => Ok(*b),
        _ if s == "\\t" => Ok(b'\t'),
        _ => Err(format!("delimiter must be a single byte, got `{s}`")),
    }
}

fn parse_grid(s: &str) -> Result<Grid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, steps] = parts[..] else {
        return Err(format!("grid `{s}` is not of the form min:max:steps"));
    };
    let lo: f64 = lo.trim().parse().map_err(|_| format!("invalid grid minimum `{lo}`"))?;
    let hi: f64 = hi.trim().parse().map_err(|_| format!("invalid grid maximum `{hi}`"))?;
    let steps: usize = steps
        .trim()
        .parse()
        .map_err(|_| format!("invalid step count `{steps}`"))?;
    if !lo.is_finite() || !hi.is_finite() || hi <= lo || steps < 2 {
        return Err(format!("grid `{s}` needs min < max and at least 2 steps"));
    }
    Ok(Grid(
        (0..steps)
            .map(|k| lo + (hi - lo) * k as f64 / (steps - 1) as f64)
            .collect(),
    ))
}
