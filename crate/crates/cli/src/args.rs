use std::f64::consts::PI;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

pub const DEFAULT_SEED: u64 = 1;

#[derive(Parser, Debug)]
#[command(name = "sparse-recovery", version, about = "Exact recovery certificates and experiments for OMP, OLS and basis pursuit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Evaluate a recovery certificate and print its report as JSON
    Cert(CertArgs),
    /// Run OMP or OLS on a seeded sparse input and print the trace as JSON
    Greedy(GreedyArgs),
    /// Build an input that reaches a subset, then fails at the next iteration
    Construct(ConstructArgs),
    /// Factor triples for dictionaries with a single wrong atom
    Scatter(ScatterArgs),
    /// Certificate rate as a function of the number of selected true atoms
    PhaseCurve(PhaseCurveArgs),
    /// Mean first certified iteration over an (n, k) grid
    PhaseDiagram(PhaseDiagramArgs),
    /// Largest factor along a chain of contiguous supports of a convolution dictionary
    FVsQ(FVsQArgs),
    /// Rate of the OMP bad-recovery condition over an (m, n) grid, k = 2
    BrcMap(BrcMapArgs),
    /// OMP bad-recovery condition over pulse widths and support spacings
    BrcSigma(BrcSigmaArgs),
    /// Null space property and basis pursuit bad-recovery condition
    BpCheck(BpCheckArgs),
    /// Spark of a dictionary by exhaustive search
    Spark(SparkArgs),
}

#[derive(ValueEnum, Serialize, Clone, Copy, Debug, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum DictChoice {
    Gaussian,
    Hybrid,
    Convolutive,
    Example1,
    File,
}

#[derive(Args, Serialize, Clone, Debug)]
pub struct DictArgs {
    /// Dictionary family
    #[arg(long = "dict", value_enum, default_value_t = DictChoice::Gaussian)]
    pub dict: DictChoice,
    /// Rows (gaussian, hybrid)
    #[arg(long, default_value_t = 50)]
    pub m: usize,
    /// Atoms (gaussian, hybrid, convolutive)
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    /// Upper bound of the uniform drift factor (hybrid)
    #[arg(long, default_value_t = 10.0)]
    pub t_max: f64,
    /// Pulse width in samples (convolutive)
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// Row downsampling factor (convolutive)
    #[arg(long, default_value_t = 1)]
    pub downsample: usize,
    /// Angle of the first atom pair in radians (example1)
    #[arg(long, default_value_t = PI / 12.0)]
    pub theta1: f64,
    /// Angle of the second atom pair in radians (example1)
    #[arg(long, default_value_t = PI / 4.0)]
    pub theta2: f64,
    /// Whitespace-separated matrix, one row per line (file)
    #[arg(long)]
    pub matrix_file: Option<PathBuf>,
    /// Rescale the columns of --matrix-file to unit norm instead of rejecting them
    #[arg(long)]
    pub normalize: bool,
    /// Seed for random dictionaries, supports and amplitudes
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
}

#[derive(ValueEnum, Serialize, Clone, Copy, Debug, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum AlgChoice {
    Omp,
    Ols,
}

#[derive(ValueEnum, Serialize, Clone, Copy, Debug, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum Condition {
    /// Iteration-independent condition on the full support
    Erc,
    /// Iteration-aware condition at the subset given by --q
    Subset,
    /// Iteration-aware condition over every subset of size --cardinality
    Cardinality,
    /// OMP bad-recovery condition
    Brc,
}

#[derive(ValueEnum, Serialize, Clone, Copy, Debug, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum EvalChoice {
    /// Both factor forms, failing when they disagree
    Checked,
    /// Definitional form only
    Fast,
}

#[derive(Args, Serialize, Clone, Debug)]
pub struct CertArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub dict: DictArgs,
    /// True support, comma-separated 0-based atom indices
    #[arg(long, value_delimiter = ',', required = true)]
    pub qstar: Vec<usize>,
    /// Selected true atoms, comma-separated (default: none)
    #[arg(long, value_delimiter = ',')]
    pub q: Vec<usize>,
    /// Algorithm for iteration-aware conditions
    #[arg(long, value_enum, default_value_t = AlgChoice::Omp)]
    pub alg: AlgChoice,
    /// Condition to evaluate
    #[arg(long, value_enum, default_value_t = Condition::Subset)]
    pub condition: Condition,
    /// Subset size for --condition cardinality
    #[arg(long, default_value_t = 1)]
    pub cardinality: usize,
    /// Factor evaluation mode
    #[arg(long, value_enum, default_value_t = EvalChoice::Checked)]
    pub eval: EvalChoice,
    /// Output file (default: standard output)
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Serialize, Clone, Debug)]
pub struct GreedyArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub dict: DictArgs,
    #[arg(long, value_enum, default_value_t = AlgChoice::Omp)]
    pub alg: AlgChoice,
    /// Support size when --qstar is absent
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    /// True support, comma-separated (default: k atoms drawn from --seed)
    #[arg(long, value_delimiter = ',')]
    pub qstar: Vec<usize>,
    /// Iteration budget (default: support size)
    #[arg(long)]
    pub iters: Option<usize>,
    /// Output file (default: standard output)
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Serialize, Clone, Debug)]
pub struct ConstructArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub dict: DictArgs,
    /// True support, comma-separated
    #[arg(long, value_delimiter = ',', required = true)]
    pub qstar: Vec<usize>,
    /// Subset to reach first, in selection order (default: none)
    #[arg(long, value_delimiter = ',')]
    pub q: Vec<usize>,
    #[arg(long, value_enum, default_value_t = AlgChoice::Omp)]
    pub alg: AlgChoice,
    /// Only build the input that reaches --q
    #[arg(long)]
    pub reach_only: bool,
    /// Output file (default: standard output)
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Serialize, Clone, Debug)]
pub struct BpCheckArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub dict: DictArgs,
    /// True support, comma-separated
    #[arg(long, value_delimiter = ',', required = true)]
    pub qstar: Vec<usize>,
    /// Output file (default: standard output)
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Serialize, Clone, Debug)]
pub struct SparkArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub dict: DictArgs,
    /// Largest subset size searched (default: rows + 1)
    #[arg(long)]
    pub max_size: Option<usize>,
    /// Output file (default: standard output)
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
    Both,
}

#[derive(Args, Clone, Debug)]
pub struct RunArgs {
    /// Reuse the configuration echoed in a previous CSV or JSON output; other
    /// experiment flags are then ignored
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Worker threads, 0 for one per available core
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    /// Directory receiving <kind>_seed<seed>.csv and .json
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Files to write
    #[arg(long, value_enum, default_value_t = OutputFormat::Both)]
    pub format: OutputFormat,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum FamilyChoice {
    Gaussian,
    Hybrid,
}

#[derive(Args, Clone, Debug)]
pub struct FamilyArgs {
    /// Random dictionary family
    #[arg(long = "dict", value_enum, default_value_t = FamilyChoice::Gaussian)]
    pub dict: FamilyChoice,
    /// Upper bound of the uniform drift factor (hybrid)
    #[arg(long, default_value_t = 10.0)]
    pub t_max: f64,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlacementChoice {
    Random,
    FirstAtoms,
    Spaced,
}

#[derive(Args, Clone, Debug)]
pub struct PhaseCurveArgs {
    #[command(flatten)]
    pub family: FamilyArgs,
    /// Rows
    #[arg(long, default_value_t = 200)]
    pub m: usize,
    /// Atoms
    #[arg(long, default_value_t = 600)]
    pub n: usize,
    /// Support size
    #[arg(long, default_value_t = 40)]
    pub k: usize,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    /// Base seed; trial t uses seed + t
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Support placement
    #[arg(long, value_enum, default_value_t = PlacementChoice::Random)]
    pub placement: PlacementChoice,
    /// Atom spacing for --placement spaced
    #[arg(long, default_value_t = 1)]
    pub delta: usize,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Args, Clone, Debug)]
pub struct PhaseDiagramArgs {
    #[command(flatten)]
    pub family: FamilyArgs,
    /// Rows
    #[arg(long, default_value_t = 100)]
    pub m: usize,
    /// Atom counts, comma-separated
    #[arg(long, value_delimiter = ',', default_value = "200,400,800")]
    pub n_grid: Vec<usize>,
    /// Support sizes, comma-separated
    #[arg(long, value_delimiter = ',', default_value = "5,10,20,40")]
    pub k_grid: Vec<usize>,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    /// Base seed; task t (cells in row-major order, trials within) uses seed + t
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = PlacementChoice::Random)]
    pub placement: PlacementChoice,
    /// Atom spacing for --placement spaced
    #[arg(long, default_value_t = 1)]
    pub delta: usize,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Args, Clone, Debug)]
pub struct ScatterArgs {
    /// Rows
    #[arg(long, default_value_t = 100)]
    pub m: usize,
    /// Atoms; must equal k + 1
    #[arg(long, default_value_t = 11)]
    pub n: usize,
    /// Support size
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    #[arg(long, default_value_t = 2000)]
    pub trials: usize,
    /// Base seed; trial t uses seed + t
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Args, Clone, Debug)]
pub struct FVsQArgs {
    /// Atoms (shifts of the pulse)
    #[arg(long, default_value_t = 300)]
    pub n: usize,
    /// Pulse width in samples
    #[arg(long, default_value_t = 10.0)]
    pub sigma: f64,
    /// Row downsampling factor
    #[arg(long, default_value_t = 1)]
    pub downsample: usize,
    /// Support size
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    #[arg(long, value_enum, default_value_t = PlacementChoice::FirstAtoms)]
    pub placement: PlacementChoice,
    /// Atom spacing for --placement spaced
    #[arg(long, default_value_t = 1)]
    pub delta: usize,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Args, Clone, Debug)]
pub struct BrcMapArgs {
    #[command(flatten)]
    pub family: FamilyArgs,
    /// Row counts, comma-separated
    #[arg(long, value_delimiter = ',', default_value = "5,10,20,40")]
    pub m_grid: Vec<usize>,
    /// Atom counts, comma-separated
    #[arg(long, value_delimiter = ',', default_value = "50,100,200,400")]
    pub n_grid: Vec<usize>,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    /// Base seed; task t (cells in row-major order, trials within) uses seed + t
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = PlacementChoice::FirstAtoms)]
    pub placement: PlacementChoice,
    /// Atom spacing for --placement spaced
    #[arg(long, default_value_t = 1)]
    pub delta: usize,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Args, Clone, Debug)]
pub struct BrcSigmaArgs {
    /// Atoms (shifts of the pulse)
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    /// Pulse widths in samples, comma-separated
    #[arg(long, value_delimiter = ',', default_value = "1,1.4,1.5,2,3,5,10")]
    pub sigmas: Vec<f64>,
    /// Spacings Δ of the support {0, Δ}, comma-separated
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub spacings: Vec<usize>,
    /// Row downsampling factor
    #[arg(long, default_value_t = 1)]
    pub downsample: usize,
    #[command(flatten)]
    pub run: RunArgs,
}
