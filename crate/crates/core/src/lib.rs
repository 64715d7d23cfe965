//! Cycle-factors with few cycles in regular digraphs.
//!
//! * [`graph`], [`generate`], [`format`]: graph types, test families and the
//!   text file format.
//! * [`oracle`]: exact permanents, enumeration, expected cycle counts and
//!   bound audits.
//! * [`sampler`]: uniform (exact) and near-uniform (Markov chain) random
//!   cycle-factors, and the best-of-`k` selection.
//! * [`factor`]: path-factors and tours built from cycle-factors, plus
//!   independent checkers.
//! * [`entropy`]: entropy primitives and the reveal-process audit.

pub mod entropy;
pub mod factor;
pub mod format;
pub mod generate;
pub mod graph;
pub mod matching;
pub mod oracle;
pub mod sampler;
pub mod stats;

pub use generate::{
    gen_family, gen_random_regular_digraph, gen_random_regular_graph, Family, Graph,
};
pub use graph::{
    double_undirected, validate_digraph, BipartiteGraph, CycleFactor, GraphError, RegularDigraph,
    UndirectedRegularGraph,
};
pub use oracle::{
    audit_bounds, entropy_loss, enumerate_cycle_factors, exact_expected_cycles, permanent,
    OracleError, OracleReport,
};
pub use sampler::{
    min_cycle_factor, sample_exact, sample_mcmc, Backend, SamplerConfig, SamplerError,
};
