//! Random cycle-factors.
//!
//! Two backends draw a perfect matching of the bipartite double cover:
//!
//! * **exact**: sequential sampling from a subset-count table. Row `r` picks
//!   column `j` with probability `count(mask \ j) / count(mask)`, which is the
//!   ratio of the minor's permanent to the current permanent. Exactly uniform.
//! * **mcmc**: a lazy chain on perfect and near-perfect matchings (at most
//!   one hole on each side), started from a Hopcroft–Karp matching. It is
//!   unweighted, so there is no mixing-time guarantee; its accuracy is
//!   measured empirically against the exact backend.
//!
//! All randomness comes from `ChaCha8Rng` seeded with the configured seed;
//! sample `k` uses stream `k`, so every draw is replayable on its own.

use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{BipartiteGraph, CycleFactor, RegularDigraph};
use crate::matching::perfect_matching;
use crate::oracle::{MatchingTable, OracleError, TABLE_MAX_N};

/// Largest `n` for which `auto` picks the exact backend.
pub const AUTO_EXACT_MAX_N: usize = TABLE_MAX_N;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SamplerError {
    #[error(transparent)]
    SizeLimitExceeded(#[from] OracleError),
    #[error("no perfect matching found; the input is not a valid regular digraph")]
    NoPerfectMatchingFound,
    #[error("no perfect state reached within {0} steps past the budget")]
    StepBudgetExhausted(u64),
    #[error("invalid sampler configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Exact,
    Mcmc,
    #[default]
    Auto,
}

impl Backend {
    pub fn resolve(self, n: usize) -> Backend {
        match self {
            Backend::Auto if n <= AUTO_EXACT_MAX_N => Backend::Exact,
            Backend::Auto => Backend::Mcmc,
            other => other,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Backend::Exact => "exact",
            Backend::Mcmc => "mcmc",
            Backend::Auto => "auto",
        }
    }
}

impl FromStr for Backend {
    type Err = SamplerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" => Ok(Backend::Exact),
            "mcmc" => Ok(Backend::Mcmc),
            "auto" => Ok(Backend::Auto),
            other => Err(SamplerError::InvalidConfig(format!(
                "unknown backend '{other}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub backend: Backend,
    /// Chain length per draw; `None` means `50 n^2 d`.
    pub mcmc_steps: Option<u64>,
    /// Number of draws `k` for [`min_cycle_factor`]; `None` means
    /// `max(10, ceil(4 log2 n))`.
    pub num_samples: Option<usize>,
    pub seed: u64,
    /// Target total-variation distance. Recorded in reports only.
    pub tv_target: f64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            backend: Backend::Auto,
            mcmc_steps: None,
            num_samples: None,
            seed: 0,
            tv_target: 0.05,
        }
    }
}

pub fn default_mcmc_steps(n: usize, d: usize) -> u64 {
    50 * (n as u64).pow(2) * d as u64
}

/// `ceil(4 log2 n)`, at least 1.
pub fn log_sample_count(n: usize) -> usize {
    ((4.0 * (n.max(1) as f64).log2()).ceil() as usize).max(1)
}

pub fn default_num_samples(n: usize) -> usize {
    log_sample_count(n).max(10)
}

impl SamplerConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn steps_for(&self, n: usize, d: usize) -> u64 {
        self.mcmc_steps.unwrap_or_else(|| default_mcmc_steps(n, d))
    }

    pub fn samples_for(&self, n: usize) -> usize {
        self.num_samples.unwrap_or_else(|| default_num_samples(n))
    }

    pub fn validate(&self) -> Result<(), SamplerError> {
        if self.num_samples == Some(0) {
            return Err(SamplerError::InvalidConfig(
                "num_samples must be >= 1".into(),
            ));
        }
        if self.mcmc_steps == Some(0) {
            return Err(SamplerError::InvalidConfig(
                "mcmc_steps must be >= 1".into(),
            ));
        }
        if !(self.tv_target > 0.0 && self.tv_target < 1.0) {
            return Err(SamplerError::InvalidConfig(
                "tv_target must lie in (0, 1)".into(),
            ));
        }
        Ok(())
    }

    /// Parses `key = value` lines (`#` comments allowed). Keys: `backend`,
    /// `mcmc_steps`, `samples`, `seed`, `tv_target`. Unset keys keep the
    /// values already in `self`.
    pub fn apply_kv(&mut self, text: &str) -> Result<(), SamplerError> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad =
                |what: &str| SamplerError::InvalidConfig(format!("line {}: {what}", lineno + 1));
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad("expected key = value"))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "backend" => self.backend = value.parse()?,
                "mcmc_steps" => {
                    self.mcmc_steps = Some(value.parse().map_err(|_| bad("bad mcmc_steps"))?)
                }
                "samples" | "num_samples" => {
                    self.num_samples = Some(value.parse().map_err(|_| bad("bad samples"))?)
                }
                "seed" => self.seed = value.parse().map_err(|_| bad("bad seed"))?,
                "tv_target" => self.tv_target = value.parse().map_err(|_| bad("bad tv_target"))?,
                other => return Err(bad(&format!("unknown key '{other}'"))),
            }
        }
        self.validate()
    }

    /// Generator for draw number `index`.
    pub fn rng_for(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        rng
    }
}

/// Exactly uniform sampler over the cycle-factors of one digraph.
#[derive(Debug, Clone)]
pub struct ExactSampler {
    table: MatchingTable,
}

impl ExactSampler {
    pub fn new(g: &RegularDigraph) -> Result<Self, SamplerError> {
        Ok(Self {
            table: MatchingTable::new(&g.to_bipartite())?,
        })
    }

    /// Number of cycle-factors.
    pub fn total(&self) -> u64 {
        self.table.total()
    }

    pub fn sample_sigma<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<usize> {
        let n = self.table.n();
        let mut mask = self.table.full_mask();
        let mut sigma = Vec::with_capacity(n);
        for row in 0..n {
            let mut x = rng.random_range(0..self.table.count(mask));
            let mut avail = self.table.row_mask(row) as usize & mask;
            loop {
                debug_assert!(avail != 0);
                let j = avail.trailing_zeros() as usize;
                let c = self.table.count(mask & !(1 << j));
                if x < c {
                    sigma.push(j);
                    mask &= !(1 << j);
                    break;
                }
                x -= c;
                avail &= avail - 1;
            }
        }
        sigma
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> CycleFactor {
        CycleFactor::from_permutation_unchecked(self.sample_sigma(rng))
    }
}

const NIL: usize = usize::MAX;

/// State of the near-perfect matching chain.
///
/// `match_u[u]` is the V-partner of `u` (or `NIL`); `match_v` is the inverse.
/// The state is either perfect or has exactly one unmatched vertex per side.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchingState {
    match_u: Vec<usize>,
    match_v: Vec<usize>,
    holes: Option<(usize, usize)>,
}

impl MatchingState {
    pub fn from_perfect(partner: &[usize]) -> Self {
        let mut match_v = vec![NIL; partner.len()];
        for (u, &v) in partner.iter().enumerate() {
            match_v[v] = u;
        }
        Self {
            match_u: partner.to_vec(),
            match_v,
            holes: None,
        }
    }

    pub fn is_perfect(&self) -> bool {
        self.holes.is_none()
    }

    /// Unmatched `(u, v)` pair, if any.
    pub fn holes(&self) -> Option<(usize, usize)> {
        self.holes
    }

    pub fn partner_of_u(&self, u: usize) -> Option<usize> {
        let v = self.match_u[u];
        (v != NIL).then_some(v)
    }

    /// Checks the matching invariants against `bip`. Returns a description of
    /// the first problem found.
    pub fn check(&self, bip: &BipartiteGraph) -> Result<(), String> {
        let n = bip.n();
        let mut free_u = Vec::new();
        let mut free_v = Vec::new();
        for u in 0..n {
            match self.match_u[u] {
                NIL => free_u.push(u),
                v => {
                    if !bip.has_edge(u, v) {
                        return Err(format!("{u}-{v} is not an edge"));
                    }
                    if self.match_v[v] != u {
                        return Err(format!("match_v[{v}] != {u}"));
                    }
                }
            }
        }
        for v in 0..n {
            if self.match_v[v] == NIL {
                free_v.push(v);
            }
        }
        match (self.holes, free_u.as_slice(), free_v.as_slice()) {
            (None, [], []) => Ok(()),
            (Some((hu, hv)), [fu], [fv]) if hu == *fu && hv == *fv => Ok(()),
            _ => Err(format!(
                "holes {:?} but free U {free_u:?}, free V {free_v:?}",
                self.holes
            )),
        }
    }

    /// Perfect matching as a permutation, if the state is perfect.
    pub fn permutation(&self) -> Option<&[usize]> {
        self.is_perfect().then_some(self.match_u.as_slice())
    }
}

/// Lazy near-perfect matching chain on a fixed bipartite graph.
#[derive(Debug, Clone)]
pub struct NearPerfectChain {
    bip: BipartiteGraph,
    /// U-neighbours of each V vertex.
    v_adj: Vec<Vec<usize>>,
    start: MatchingState,
}

impl NearPerfectChain {
    pub fn new(g: &RegularDigraph) -> Result<Self, SamplerError> {
        let bip = g.to_bipartite();
        let start = perfect_matching(&bip).ok_or(SamplerError::NoPerfectMatchingFound)?;
        Ok(Self {
            v_adj: g.transpose().out_adj().to_vec(),
            start: MatchingState::from_perfect(&start),
            bip,
        })
    }

    pub fn bipartite(&self) -> &BipartiteGraph {
        &self.bip
    }

    pub fn initial_state(&self) -> MatchingState {
        self.start.clone()
    }

    /// One transition. With probability 1/2 nothing happens. Otherwise a
    /// perfect state drops a uniformly random matched edge, and a near-perfect
    /// state with holes `(hu, hv)` picks one of the `2d` edges at a hole
    /// uniformly: the edge `hu-hv` closes the matching, any other edge is
    /// rotated in and its old partner becomes the new hole.
    pub fn step<R: Rng + ?Sized>(&self, state: &mut MatchingState, rng: &mut R) {
        match state.holes {
            None => {
                let n = self.bip.n();
                let r = rng.random_range(0..2 * n);
                if r >= n {
                    return;
                }
                let v = state.match_u[r];
                state.match_u[r] = NIL;
                state.match_v[v] = NIL;
                state.holes = Some((r, v));
            }
            Some((hu, hv)) => {
                let d = self.bip.d();
                let r = rng.random_range(0..4 * d);
                if r >= 2 * d {
                    return;
                }
                if r < d {
                    let v = self.bip.neighbours(hu)[r];
                    if v == hv {
                        state.match_u[hu] = hv;
                        state.match_v[hv] = hu;
                        state.holes = None;
                    } else {
                        let w = state.match_v[v];
                        state.match_u[hu] = v;
                        state.match_v[v] = hu;
                        state.match_u[w] = NIL;
                        state.holes = Some((w, hv));
                    }
                } else {
                    let u = self.v_adj[hv][r - d];
                    if u == hu {
                        state.match_u[hu] = hv;
                        state.match_v[hv] = hu;
                        state.holes = None;
                    } else {
                        let z = state.match_u[u];
                        state.match_u[u] = hv;
                        state.match_v[hv] = u;
                        state.match_v[z] = NIL;
                        state.holes = Some((hu, z));
                    }
                }
            }
        }
    }

    /// Runs `steps` transitions from the Hopcroft–Karp start, then continues
    /// until the first perfect state, allowing at most `100 * steps` extra.
    pub fn sample_sigma<R: Rng + ?Sized>(
        &self,
        steps: u64,
        rng: &mut R,
    ) -> Result<Vec<usize>, SamplerError> {
        let mut state = self.initial_state();
        for _ in 0..steps {
            self.step(&mut state, rng);
        }
        let extra = steps.saturating_mul(100);
        let mut taken = 0u64;
        while !state.is_perfect() {
            if taken >= extra {
                return Err(SamplerError::StepBudgetExhausted(extra));
            }
            self.step(&mut state, rng);
            taken += 1;
        }
        Ok(state.match_u)
    }
}

/// A prepared sampler for one digraph and configuration.
#[derive(Debug, Clone)]
pub enum Sampler {
    Exact(ExactSampler),
    Mcmc { chain: NearPerfectChain, steps: u64 },
}

impl Sampler {
    pub fn new(g: &RegularDigraph, cfg: &SamplerConfig) -> Result<Self, SamplerError> {
        cfg.validate()?;
        Ok(match cfg.backend.resolve(g.n()) {
            Backend::Exact => Sampler::Exact(ExactSampler::new(g)?),
            _ => Sampler::Mcmc {
                chain: NearPerfectChain::new(g)?,
                steps: cfg.steps_for(g.n(), g.d()),
            },
        })
    }

    pub fn backend(&self) -> Backend {
        match self {
            Sampler::Exact(_) => Backend::Exact,
            Sampler::Mcmc { .. } => Backend::Mcmc,
        }
    }

    /// Chain length per draw (0 for the exact backend).
    pub fn steps(&self) -> u64 {
        match self {
            Sampler::Exact(_) => 0,
            Sampler::Mcmc { steps, .. } => *steps,
        }
    }

    pub fn draw_sigma<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<usize>, SamplerError> {
        match self {
            Sampler::Exact(s) => Ok(s.sample_sigma(rng)),
            Sampler::Mcmc { chain, steps } => chain.sample_sigma(*steps, rng),
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<CycleFactor, SamplerError> {
        self.draw_sigma(rng)
            .map(CycleFactor::from_permutation_unchecked)
    }
}

/// One exactly uniform cycle-factor. Requires `n <= 20`.
pub fn sample_exact(g: &RegularDigraph, seed: u64) -> Result<CycleFactor, SamplerError> {
    let sampler = ExactSampler::new(g)?;
    let mut rng = SamplerConfig::with_seed(seed).rng_for(0);
    Ok(sampler.sample(&mut rng))
}

/// One cycle-factor from the near-perfect chain, using `cfg.seed` and
/// `cfg.mcmc_steps`.
pub fn sample_mcmc(g: &RegularDigraph, cfg: &SamplerConfig) -> Result<CycleFactor, SamplerError> {
    let cfg = SamplerConfig {
        backend: Backend::Mcmc,
        ..cfg.clone()
    };
    let sampler = Sampler::new(g, &cfg)?;
    sampler.draw(&mut cfg.rng_for(0))
}

/// Result of [`min_cycle_factor`].
#[derive(Debug, Clone, Serialize)]
pub struct MinCycleReport {
    pub factor: CycleFactor,
    /// Cycle count of every draw, in draw order.
    pub cycle_counts: Vec<usize>,
    /// Index of the returned draw (first minimum).
    pub chosen: usize,
    pub backend: Backend,
    pub steps: u64,
    pub seed: u64,
}

/// Draws `k` independent cycle-factors and keeps one with fewest cycles.
/// Draw `i` uses stream `i` of the configured seed; ties go to the earliest
/// draw.
pub fn min_cycle_factor(
    g: &RegularDigraph,
    cfg: &SamplerConfig,
) -> Result<MinCycleReport, SamplerError> {
    let sampler = Sampler::new(g, cfg)?;
    let k = cfg.samples_for(g.n());
    let mut best: Option<(usize, Vec<usize>)> = None;
    let mut counts = Vec::with_capacity(k);
    for i in 0..k {
        let sigma = sampler.draw_sigma(&mut cfg.rng_for(i as u64))?;
        let c = crate::graph::count_cycles(&sigma);
        counts.push(c);
        if best.as_ref().is_none_or(|(b, _)| c < counts[*b]) {
            best = Some((i, sigma));
        }
    }
    let (chosen, sigma) = best.expect("k >= 1");
    Ok(MinCycleReport {
        factor: CycleFactor::from_permutation_unchecked(sigma),
        cycle_counts: counts,
        chosen,
        backend: sampler.backend(),
        steps: sampler.steps(),
        seed: cfg.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::gen_random_regular_digraph;
    use crate::oracle::enumerate_cycle_factors;
    use crate::stats::{chi_square_uniform, tv_distance_uniform};
    use std::collections::HashMap;

    fn frequencies(
        g: &RegularDigraph,
        draws: usize,
        mut draw: impl FnMut(u64) -> Vec<usize>,
    ) -> Vec<u64> {
        let all = enumerate_cycle_factors(g).unwrap();
        let index: HashMap<Vec<usize>, usize> = all
            .iter()
            .enumerate()
            .map(|(i, cf)| (cf.sigma().to_vec(), i))
            .collect();
        let mut counts = vec![0u64; all.len()];
        for t in 0..draws {
            let sigma = draw(t as u64);
            counts[index[&sigma]] += 1;
        }
        counts
    }

    #[test]
    fn unique_factor_always_returned() {
        let g = RegularDigraph::directed_cycle(3);
        for seed in 0..10 {
            assert_eq!(sample_exact(&g, seed).unwrap().sigma(), &[1, 2, 0]);
            let cfg = SamplerConfig {
                mcmc_steps: Some(37),
                ..SamplerConfig::with_seed(seed)
            };
            assert_eq!(sample_mcmc(&g, &cfg).unwrap().sigma(), &[1, 2, 0]);
        }
    }

    #[test]
    fn exact_sampler_uniform_on_s3() {
        let g = RegularDigraph::complete_with_loops(3);
        let s = ExactSampler::new(&g).unwrap();
        let cfg = SamplerConfig::with_seed(11);
        let counts = frequencies(&g, 60_000, |t| s.sample_sigma(&mut cfg.rng_for(t)));
        // each of 6 outcomes: 10^4 expected, binomial sd ~ 91
        for &c in &counts {
            assert!((c as f64 - 10_000.0).abs() < 3.0 * 91.3, "{counts:?}");
        }
    }

    #[test]
    fn exact_sampler_mean_matches_h5() {
        let g = RegularDigraph::complete_with_loops(5);
        let s = ExactSampler::new(&g).unwrap();
        let mut rng = SamplerConfig::with_seed(5).rng_for(0);
        let draws = 100_000;
        let xs: Vec<f64> = (0..draws)
            .map(|_| s.sample(&mut rng).cycle_count() as f64)
            .collect();
        let mean = xs.iter().sum::<f64>() / draws as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (draws - 1) as f64;
        let h5 = 137.0 / 60.0;
        assert!(
            (mean - h5).abs() < 3.0 * (var / draws as f64).sqrt(),
            "{mean}"
        );
    }

    #[test]
    fn chain_preserves_invariants() {
        let g = gen_random_regular_digraph(9, 3, 4, true).unwrap();
        let chain = NearPerfectChain::new(&g).unwrap();
        let mut st = chain.initial_state();
        let mut rng = SamplerConfig::with_seed(2).rng_for(0);
        let mut saw_holes = false;
        for _ in 0..20_000 {
            chain.step(&mut st, &mut rng);
            st.check(chain.bipartite()).unwrap();
            saw_holes |= !st.is_perfect();
        }
        assert!(saw_holes);
    }

    #[test]
    fn mcmc_close_to_uniform_on_s4() {
        let g = RegularDigraph::complete_with_loops(4);
        let chain = NearPerfectChain::new(&g).unwrap();
        let cfg = SamplerConfig::with_seed(3);
        let counts = frequencies(&g, 20_000, |t| {
            chain.sample_sigma(2_000, &mut cfg.rng_for(t)).unwrap()
        });
        assert!(tv_distance_uniform(&counts) <= 0.05);
        assert!(chi_square_uniform(&counts).p_value > 1e-4);
    }

    #[test]
    fn min_of_one_is_first_draw() {
        let g = RegularDigraph::complete_with_loops(6);
        let cfg = SamplerConfig {
            num_samples: Some(1),
            ..SamplerConfig::with_seed(77)
        };
        let rep = min_cycle_factor(&g, &cfg).unwrap();
        let single = Sampler::new(&g, &cfg)
            .unwrap()
            .draw(&mut cfg.rng_for(0))
            .unwrap();
        assert_eq!(rep.factor, single);
        assert_eq!(rep.cycle_counts, vec![single.cycle_count()]);
    }

    #[test]
    fn min_cycle_factor_on_k8() {
        let g = RegularDigraph::complete_with_loops(8);
        let cfg = SamplerConfig {
            backend: Backend::Exact,
            num_samples: Some(12),
            ..SamplerConfig::with_seed(8)
        };
        let rep = min_cycle_factor(&g, &cfg).unwrap();
        let mut sorted = rep.cycle_counts.clone();
        sorted.sort_unstable();
        assert_eq!(rep.factor.cycle_count(), sorted[0]);
        assert!(rep.factor.cycle_count() <= sorted[sorted.len() / 2]);
        assert!(rep.factor.cycle_count() as f64 <= 16.0);
        assert_eq!(
            rep.chosen,
            rep.cycle_counts
                .iter()
                .position(|&c| c == sorted[0])
                .unwrap()
        );
    }

    #[test]
    fn components_force_cycles() {
        let Ok(crate::generate::Graph::Directed(g)) =
            crate::generate::gen_family(crate::generate::Family::CompleteLoops, 8, 4)
        else {
            panic!()
        };
        for seed in 0..20 {
            let cfg = SamplerConfig::with_seed(seed);
            assert!(min_cycle_factor(&g, &cfg).unwrap().factor.cycle_count() >= 2);
        }
    }

    #[test]
    fn config_parsing() {
        let mut cfg = SamplerConfig::default();
        cfg.apply_kv("# comment\nbackend = mcmc\nmcmc_steps=500\nsamples = 3\nseed = 9\n")
            .unwrap();
        assert_eq!(cfg.backend, Backend::Mcmc);
        assert_eq!(cfg.mcmc_steps, Some(500));
        assert_eq!(cfg.num_samples, Some(3));
        assert_eq!(cfg.seed, 9);
        assert!(cfg.clone().apply_kv("samples = 0").is_err());
        assert!(cfg.clone().apply_kv("colour = red").is_err());
        assert_eq!(Backend::Auto.resolve(20), Backend::Exact);
        assert_eq!(Backend::Auto.resolve(21), Backend::Mcmc);
        assert_eq!(default_num_samples(8), 12);
        assert_eq!(default_num_samples(4), 10);
        assert_eq!(default_mcmc_steps(4, 4), 3_200);
    }
}
