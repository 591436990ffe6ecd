use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::io::Format;

#[derive(Debug, Parser)]
#[command(name = "fdbscan", version, about = "Parallel DBSCAN clustering")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Cluster a point file and write one label per point.
    Cluster(ClusterArgs),
    /// Cross-check both algorithms and the brute-force reference.
    Verify(VerifyArgs),
    /// Write a synthetic dataset.
    Generate(GenerateArgs),
    /// Run parameter sweeps and print timings as CSV.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlgoChoice {
    Fdbscan,
    Densebox,
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BenchAlgo {
    Fdbscan,
    Densebox,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DatasetKind {
    /// Gaussian blobs with well-separated centers.
    Blobs,
    /// Uniform noise in a cube.
    Noise,
    /// Regular grid.
    Lattice,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Point file (CSV or binary).
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "auto")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct ParamArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub eps: f64,
    #[arg(long)]
    pub minpts: usize,
    /// Worker threads, 0 for the hardware default.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long, value_enum, default_value = "fdbscan")]
    pub algo: AlgoChoice,
    /// Label file; labels go to stdout (and stats to stderr) when omitted.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Relabel clusters 0..k-1 by first occurrence.
    #[arg(long)]
    pub renumber: bool,
    /// Largest input the brute-force algorithm accepts.
    #[arg(long, default_value_t = fdbscan::oracle::DEFAULT_ORACLE_CAP)]
    pub verify_cap: usize,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub params: ParamArgs,
    /// Largest input checked against the brute-force reference.
    #[arg(long, default_value_t = fdbscan::oracle::DEFAULT_ORACLE_CAP)]
    pub verify_cap: usize,
}

#[derive(Debug, Clone, Args)]
pub struct DatasetArgs {
    #[arg(long, value_enum, default_value = "blobs")]
    pub kind: DatasetKind,
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of blobs.
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    /// Minimum distance between blob centers.
    #[arg(long, default_value_t = 10.0)]
    pub separation: f64,
    /// Blob standard deviation.
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// Cube side for uniform noise.
    #[arg(long, default_value_t = 100.0)]
    pub extent: f64,
    /// Lattice spacing.
    #[arg(long, default_value_t = 1.0)]
    pub spacing: f64,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub dataset: DatasetArgs,
    /// Number of points. Lattices are truncated from the smallest cube
    /// holding `n` points.
    #[arg(long, short, default_value_t = 10_000)]
    pub n: usize,
    #[arg(long, short)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "auto")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub dataset: DatasetArgs,
    /// Comma-separated point counts.
    #[arg(long, short, value_delimiter = ',', default_value = "100000")]
    pub n: Vec<usize>,
    /// Comma-separated eps values.
    #[arg(long, value_delimiter = ',', required = true)]
    pub eps: Vec<f64>,
    /// Comma-separated minpts values.
    #[arg(long, value_delimiter = ',', required = true)]
    pub minpts: Vec<usize>,
    #[arg(long, value_delimiter = ',', value_enum, default_value = "fdbscan,densebox")]
    pub algo: Vec<BenchAlgo>,
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    /// CSV destination; stdout when omitted.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}
