use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cyclefactor::Backend;

#[derive(Debug, Parser)]
#[command(
    name = "cyclefactor",
    version,
    about = "Cycle-factors, path-factors and tours of regular graphs, with exact checks"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalOpts {
    /// Seed for every random choice. Required by commands that sample.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Output format (default: JSON, or a table for `verify`).
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    /// Sampler backend.
    #[arg(long, global = true, value_enum)]
    pub backend: Option<BackendArg>,

    /// Number of independent draws `k` for best-of-k selection.
    #[arg(long, global = true)]
    pub samples: Option<usize>,

    /// Markov chain steps per draw.
    #[arg(long, global = true)]
    pub mcmc_steps: Option<u64>,

    /// Sampler settings as `key = value` lines; flags override the file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendArg {
    Exact,
    Mcmc,
    Auto,
}

impl From<BackendArg> for Backend {
    fn from(b: BackendArg) -> Self {
        match b {
            BackendArg::Exact => Backend::Exact,
            BackendArg::Mcmc => Backend::Mcmc,
            BackendArg::Auto => Backend::Auto,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a graph file.
    Gen(GenArgs),
    /// Exact audit of an instance: counts, expectation and bounds.
    Verify { path: PathBuf },
    /// Best-of-k cycle-factor.
    Cyclefactor { path: PathBuf },
    /// Path-factor of an undirected graph.
    Pathfactor { path: PathBuf },
    /// Tour of a connected undirected graph.
    Tour { path: PathBuf },
    /// Cycle counts of repeated draws, compared with the exact law when feasible.
    SampleStats {
        path: PathBuf,
        /// Number of draws.
        #[arg(long, default_value_t = 1000)]
        draws: usize,
    },
    /// Randomised checks of the entropy inequalities.
    EntropyCheck {
        /// Random distributions per support size.
        #[arg(long, default_value_t = 100_000)]
        trials: usize,
        /// Largest support size tested (from 2).
        #[arg(long, default_value_t = 64)]
        max_support: usize,
    },
    /// Run every instance of a manifest and append result records.
    Bench { manifest: PathBuf },
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// A family name, `random` (directed) or `random-undirected`.
    pub family: String,
    #[arg(long)]
    pub n: usize,
    /// Degree; defaults to the only value the family allows, if any.
    #[arg(long)]
    pub d: Option<usize>,
    /// Forbid loops in random directed graphs.
    #[arg(long)]
    pub no_loops: bool,
}
