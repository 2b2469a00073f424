use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ega_core::baselines::{EigenBasis, Method};
use ega_core::ega::CorrelationChoice;

#[derive(Debug, Parser)]
#[command(name = "ega", version, about = "Estimate the number of dimensions in item data")]
pub struct Cli {
    /// Worker threads for simulation studies (defaults to all cores).
    #[arg(long, global = true, env = "EGA_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit one method to a dataset and report its estimate.
    Fit(FitArgs),
    /// Run a Monte Carlo study over simulated conditions.
    Simulate(SimulateArgs),
    /// Per-k statistics of every retention method on one dataset.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CorrelationArg {
    Auto,
    Pearson,
    Tetrachoric,
}

impl From<CorrelationArg> for CorrelationChoice {
    fn from(c: CorrelationArg) -> Self {
        match c {
            CorrelationArg::Auto => CorrelationChoice::Auto,
            CorrelationArg::Pearson => CorrelationChoice::Pearson,
            CorrelationArg::Tetrachoric => CorrelationChoice::Tetrachoric,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BasisArg {
    Component,
    Factor,
    Communality,
}

impl From<BasisArg> for EigenBasis {
    fn from(b: BasisArg) -> Self {
        match b {
            BasisArg::Component => EigenBasis::Component,
            BasisArg::Factor => EigenBasis::Factor,
            BasisArg::Communality => EigenBasis::Communality,
        }
    }
}

pub fn parse_method(s: &str) -> Result<Method, String> {
    s.parse::<Method>().map_err(|e| e.to_string())
}

/// Tuning shared by `fit` and `compare`.
#[derive(Debug, Clone, Args)]
pub struct MethodOptions {
    /// EBIC hyperparameter for both the network and the factor-model EBIC.
    #[arg(long, default_value_t = 0.5)]
    pub gamma: f64,

    /// Random-walk length for walktrap.
    #[arg(long, default_value_t = 4)]
    pub steps: usize,

    /// Number of regularization values on the glasso path.
    #[arg(long, default_value_t = 100)]
    pub n_lambda: usize,

    /// Largest factor count tried by VSS, MAP, BIC and EBIC.
    #[arg(long, default_value_t = 10)]
    pub kmax: usize,

    /// Null datasets for parallel analysis.
    #[arg(long, default_value_t = 20)]
    pub pa_iterations: usize,

    /// Seed for parallel analysis permutations.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,

    /// Correlations for EGA (parallel analysis and the Kaiser rule always use
    /// tetrachoric correlations for 0/1 data and Pearson otherwise).
    #[arg(long, value_enum, default_value_t = CorrelationArg::Auto)]
    pub correlation: CorrelationArg,

    /// Correlations for VSS, MAP, BIC and EBIC.
    #[arg(long, value_enum, default_value_t = CorrelationArg::Pearson)]
    pub factor_correlation: CorrelationArg,

    /// Matrix whose eigenvalues parallel analysis and the Kaiser rule use.
    #[arg(long, value_enum, default_value_t = BasisArg::Communality)]
    pub eigen_basis: BasisArg,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// CSV with a header row of item names and one row per observation.
    pub data: PathBuf,

    #[arg(long, value_parser = parse_method, default_value = "ega")]
    pub method: Method,

    /// JSON report path (stdout when omitted).
    #[arg(short, long)]
    pub output: Option<PathBuf>,

    /// Edge list CSV (item_i, item_j, weight); EGA only.
    #[arg(long)]
    pub edges: Option<PathBuf>,

    #[command(flatten)]
    pub options: MethodOptions,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    pub data: PathBuf,

    /// Table CSV path (stdout when omitted).
    #[arg(short, long)]
    pub output: Option<PathBuf>,

    /// Also write every estimate as JSON.
    #[arg(long)]
    pub json: Option<PathBuf>,

    #[command(flatten)]
    pub options: MethodOptions,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// TOML run configuration; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Use the full 64-condition design.
    #[arg(long, value_parser = ["paper"])]
    pub grid: Option<String>,

    #[arg(long, value_delimiter = ',')]
    pub factors: Vec<usize>,

    #[arg(long, value_delimiter = ',')]
    pub items: Vec<usize>,

    #[arg(long = "n", value_delimiter = ',')]
    pub sample_sizes: Vec<usize>,

    #[arg(long, value_delimiter = ',')]
    pub corr: Vec<f64>,

    #[arg(long)]
    pub reps: Option<usize>,

    #[arg(long)]
    pub seed: Option<u64>,

    #[arg(long, value_delimiter = ',', value_parser = parse_method)]
    pub methods: Vec<Method>,

    #[arg(long)]
    pub gamma: Option<f64>,

    #[arg(long)]
    pub steps: Option<usize>,

    #[arg(long)]
    pub n_lambda: Option<usize>,

    #[arg(long)]
    pub kmax: Option<usize>,

    #[arg(long)]
    pub pa_iterations: Option<usize>,

    #[arg(long, value_enum)]
    pub factor_correlation: Option<CorrelationArg>,

    #[arg(long, value_enum)]
    pub eigen_basis: Option<BasisArg>,

    /// Output directory for summary.csv, rollup.csv and manifest.json.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}
