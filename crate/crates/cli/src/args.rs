use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Output directory used when neither `--out` nor the environment sets one.
pub const DEFAULT_OUT: &str = "bsz-out";

#[derive(Debug, Parser)]
#[command(
    name = "bsz",
    version,
    about = "Simulate the evolving Bolthausen-Sznitman coalescent and its limits"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one of the processes and write its paths.
    Simulate(SimulateArgs),
    /// Run verification tests and write a JSON report plus a summary CSV.
    Verify(VerifyArgs),
    /// Run the coupled population/stable experiment over a grid of sizes.
    Coupling(CouplingArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    /// Block-counting chain of the coalescent started from `n` singletons.
    Coalescent,
    /// Recursive tree: cutting construction and the evolving tree.
    Rrt,
    /// Population model event log and its genealogies.
    Population,
    /// MRCA-age process `R`.
    #[value(name = "R")]
    R,
    /// Time-reversed process `A`.
    #[value(name = "A")]
    A,
    /// Truncated stable path.
    Stable,
    /// Branch-length limit process `L`.
    LimitLength,
}

impl Kind {
    pub fn file_stem(self) -> &'static str {
        match self {
            Kind::Coalescent => "coalescent",
            Kind::Rrt => "rrt",
            Kind::Population => "population",
            Kind::R => "r",
            Kind::A => "a",
            Kind::Stable => "stable",
            Kind::LimitLength => "limit_length",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Master seed; replicate `i` uses a stream derived from it.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Output directory.
    #[arg(long, env = "BSZ_OUT_DIR", default_value = DEFAULT_OUT)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(value_enum)]
    pub kind: Kind,
    /// Population size or number of leaves.
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    /// Length of the simulated time window.
    #[arg(long, default_value_t = 1.0)]
    pub horizon: f64,
    /// Jump truncation for the stable paths.
    #[arg(long, default_value_t = 1e-3)]
    pub eps: f64,
    #[arg(long, default_value_t = 1)]
    pub replicates: usize,
    /// Start `R`/`A` from the Gumbel law (the default unless `--x0` is given).
    #[arg(long, conflicts_with = "x0")]
    pub stationary: bool,
    /// Start `R`/`A` from this level.
    #[arg(long, allow_hyphen_values = true)]
    pub x0: Option<f64>,
    /// Grid spacing for `limit-length`.
    #[arg(long, default_value_t = 1e-2)]
    pub step: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// `fast` (acceptance criteria), `all`, or comma-separated test names.
    #[arg(long, default_value = "fast")]
    pub suite: String,
    /// TOML file overriding the bundled verification settings.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct CouplingArgs {
    /// Population sizes, non-decreasing.
    #[arg(long, value_delimiter = ',', default_value = "1000,10000,100000")]
    pub n_grid: Vec<usize>,
    #[arg(long, default_value_t = 100)]
    pub replicates: usize,
    /// Evaluation points per path, on top of the jump times.
    #[arg(long, default_value_t = 2000)]
    pub grid_points: usize,
    #[command(flatten)]
    pub common: Common,
}

/// Parameters shared by every simulation kind, after validation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub n: usize,
    pub horizon: f64,
    pub eps: f64,
    pub replicates: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub format: Format,
}

impl RunConfig {
    pub fn from_args(a: &SimulateArgs) -> Result<Self, String> {
        let cfg = RunConfig {
            n: a.n,
            horizon: a.horizon,
            eps: a.eps,
            replicates: a.replicates,
            seed: a.common.seed,
            out: a.common.out.clone(),
            format: a.common.format,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.n < 2 {
            return Err(format!("--n must be at least 2, got {}", self.n));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(format!("--horizon must be positive and finite, got {}", self.horizon));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(format!("--eps must lie in (0, 1), got {}", self.eps));
        }
        if self.replicates < 1 {
            return Err("--replicates must be at least 1".into());
        }
        Ok(())
    }
}
