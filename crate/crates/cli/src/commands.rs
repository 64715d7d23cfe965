//! One function per subcommand. Each returns the rendered output; nothing
//! here prints.

use std::fmt::Write as _;
use std::path::Path;

use cyclefactor::entropy::{
    binary_entropy, chain_rule_check, check_skew_lemma, reveal_audit, shannon_entropy,
    Distribution, RevealReport, REVEAL_MAX_N,
};
use cyclefactor::factor::{
    to_path_factor, to_tour, to_undirected_cycle_factor, verify_cycle_factor, verify_path_factor,
    verify_tour, Verdict,
};
use cyclefactor::format::{read_graph, render_graph};
use cyclefactor::oracle::{
    cycle_bound_ln, cycle_bound_log2, cycle_count_histogram, oracle_report, ExactValue,
    OracleReport,
};
use cyclefactor::sampler::{MinCycleReport, Sampler};
use cyclefactor::stats::{mean_var, tv_distance};
use cyclefactor::{
    gen_family, gen_random_regular_digraph, gen_random_regular_graph, min_cycle_factor, Family,
    Graph, RegularDigraph, SamplerConfig, UndirectedRegularGraph,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::args::{Format, GenArgs, GlobalOpts};
use crate::error::CliError;
use crate::{instance_hash, Outcome};

/// Sampler settings from `--config` and the flags, flags winning.
pub fn sampler_config(opts: &GlobalOpts) -> Result<SamplerConfig, CliError> {
    let mut cfg = SamplerConfig::default();
    if let Some(path) = &opts.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::io(format!("reading {}", path.display()), e))?;
        cfg.apply_kv(&text)?;
    }
    if let Some(b) = opts.backend {
        cfg.backend = b.into();
    }
    if let Some(k) = opts.samples {
        cfg.num_samples = Some(k);
    }
    if let Some(m) = opts.mcmc_steps {
        cfg.mcmc_steps = Some(m);
    }
    cfg.seed = require_seed(opts)?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn require_seed(opts: &GlobalOpts) -> Result<u64, CliError> {
    opts.seed
        .ok_or_else(|| CliError::Usage("this command is random: pass --seed <u64>".into()))
}

fn load(path: &Path) -> Result<Graph, CliError> {
    if !path.exists() {
        return Err(CliError::io(
            format!("reading {}", path.display()),
            std::io::Error::new(std::io::ErrorKind::NotFound, "no such file"),
        ));
    }
    Ok(read_graph(path)?)
}

fn load_undirected(path: &Path) -> Result<UndirectedRegularGraph, CliError> {
    match load(path)? {
        Graph::Undirected(g) => Ok(g),
        Graph::Directed(_) => Err(CliError::Validation(
            "expected an undirected graph file (header `graph n d`)".into(),
        )),
    }
}

fn to_json(value: &impl Serialize) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn to_csv<R: Serialize>(rows: impl IntoIterator<Item = R>) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::io("writing csv", e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn ensure_valid(what: &str, verdict: &Verdict) -> Result<(), CliError> {
    if verdict.is_valid() {
        Ok(())
    } else {
        Err(CliError::Validation(format!(
            "{what} failed independent check: {}",
            serde_json::to_string(&verdict.violations)?
        )))
    }
}

/// The expected-cycle bound in both logarithm bases.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CycleBound {
    /// `4 (n/d)(log2 d + 1)`
    pub log2: f64,
    /// `4 (n/d)(ln d + 1)`
    pub ln: f64,
}

impl CycleBound {
    pub fn new(n: usize, d: usize) -> Self {
        Self {
            log2: cycle_bound_log2(n, d),
            ln: cycle_bound_ln(n, d),
        }
    }
}

fn default_degree(family: Family, n: usize) -> Option<usize> {
    match family {
        Family::CompleteLoops => Some(n),
        Family::Cycle => Some(2),
        Family::Complete => Some(n.saturating_sub(1)),
        Family::Petersen => Some(3),
        Family::DirectedCycle => Some(1),
        Family::CliqueUnion | Family::CompleteBipartiteLike => None,
    }
}

pub fn generate(args: &GenArgs, opts: &GlobalOpts) -> Result<Graph, CliError> {
    let need_d = || {
        args.d
            .ok_or_else(|| CliError::Usage(format!("`{}` needs --d", args.family)))
    };
    let graph = match args.family.replace('-', "_").as_str() {
        "random" | "random_digraph" => Graph::Directed(gen_random_regular_digraph(
            args.n,
            need_d()?,
            require_seed(opts)?,
            !args.no_loops,
        )?),
        "random_undirected" | "random_graph" => Graph::Undirected(gen_random_regular_graph(
            args.n,
            need_d()?,
            require_seed(opts)?,
        )?),
        name => {
            let family = Family::from_name(name).ok_or_else(|| {
                let known: Vec<&str> = Family::ALL.iter().map(|f| f.name()).collect();
                CliError::Usage(format!(
                    "unknown family `{name}`; expected random, random_undirected or one of {}",
                    known.join(", ")
                ))
            })?;
            let d = match args.d {
                Some(d) => d,
                None => default_degree(family, args.n)
                    .ok_or_else(|| CliError::Usage(format!("`{}` needs --d", family.name())))?,
            };
            gen_family(family, args.n, d)?
        }
    };
    Ok(graph)
}

pub fn cmd_gen(args: &GenArgs, opts: &GlobalOpts) -> Result<Outcome, CliError> {
    let g = generate(args, opts)?;
    // read the text back through the strict parser before handing it out
    let text = render_graph(&g);
    if cyclefactor::format::parse_graph(&text)? != g {
        return Err(CliError::Validation(
            "generated graph does not round-trip".into(),
        ));
    }
    Ok(Outcome::ok(text))
}

#[derive(Debug, Serialize)]
pub struct VerifyReport {
    pub instance_hash: String,
    pub kind: &'static str,
    pub n: usize,
    pub d: usize,
    pub oracle: OracleReport,
    /// Present when `n` is small enough for the exhaustive reveal audit.
    pub reveal: Option<RevealReport>,
    pub all_hold: bool,
}

pub fn verify_report(g: &Graph) -> Result<VerifyReport, CliError> {
    let dg = g.as_digraph();
    let oracle = oracle_report(&dg)?;
    let reveal = if dg.n() <= REVEAL_MAX_N {
        Some(reveal_audit(&dg)?)
    } else {
        None
    };
    let all_hold = oracle.all_hold() && reveal.as_ref().is_none_or(|r| r.holds());
    Ok(VerifyReport {
        instance_hash: instance_hash(g),
        kind: kind_name(g),
        n: dg.n(),
        d: dg.d(),
        oracle,
        reveal,
        all_hold,
    })
}

fn kind_name(g: &Graph) -> &'static str {
    match g {
        Graph::Directed(_) => "digraph",
        Graph::Undirected(_) => "graph",
    }
}

fn pass(b: bool) -> &'static str {
    if b {
        "PASS"
    } else {
        "FAIL"
    }
}

fn verify_table(r: &VerifyReport) -> String {
    let o = &r.oracle;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "instance         {} n={} d={} hash={}",
        r.kind, r.n, r.d, r.instance_hash
    );
    let _ = writeln!(s, "cycle-factors    {}", o.matching_count);
    let _ = writeln!(
        s,
        "expected cycles  {} = {}",
        o.expected_cycles.fraction,
        &o.expected_cycles.decimal[..o.expected_cycles.decimal.len().min(22)]
    );
    let _ = writeln!(
        s,
        "entropy loss     {:.6} bits (ceiling {:.6})",
        o.entropy_loss, o.entropy_loss_ceiling
    );
    let _ = writeln!(s);
    let _ = writeln!(s, "{:<26} {:>14} {:>14}  result", "check", "lhs", "rhs");
    for b in &o.bound_audit {
        let verdict = if b.informational {
            format!("{} (info)", pass(b.holds))
        } else {
            pass(b.holds).to_string()
        };
        let _ = writeln!(
            s,
            "{:<26} {:>14.6} {:>14.6}  {}",
            b.name, b.lhs, b.rhs, verdict
        );
    }
    if let Some(rv) = &r.reveal {
        let _ = writeln!(
            s,
            "{:<26} {:>14} {:>14}  {}",
            "reveal_uniformity",
            rv.tallies_checked,
            rv.tally_violations.len(),
            pass(rv.uniform())
        );
        let _ = writeln!(
            s,
            "{:<26} {:>14.6} {:>14.6}  {}",
            "reveal_loss_agreement",
            rv.loss_from_reveal,
            rv.loss_from_count,
            pass(rv.loss_agrees)
        );
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "overall          {}", pass(r.all_hold));
    s
}

#[derive(Serialize)]
struct BoundRow<'a> {
    check: &'a str,
    lhs: f64,
    rhs: f64,
    holds: bool,
    informational: bool,
}

pub fn cmd_verify(path: &Path, opts: &GlobalOpts) -> Result<Outcome, CliError> {
    let g = load(path)?;
    let r = verify_report(&g)?;
    let text = match opts.format {
        None => verify_table(&r),
        Some(Format::Json) => to_json(&r)?,
        Some(Format::Csv) => {
            let mut rows: Vec<BoundRow> = r
                .oracle
                .bound_audit
                .iter()
                .map(|b| BoundRow {
                    check: b.name,
                    lhs: b.lhs,
                    rhs: b.rhs,
                    holds: b.holds,
                    informational: b.informational,
                })
                .collect();
            if let Some(rv) = &r.reveal {
                rows.push(BoundRow {
                    check: "reveal_loss_agreement",
                    lhs: rv.loss_from_reveal,
                    rhs: rv.loss_from_count,
                    holds: rv.holds(),
                    informational: false,
                });
            }
            to_csv(rows)?
        }
    };
    if r.all_hold {
        Ok(Outcome::ok(text))
    } else {
        Ok(Outcome::failed(text, "at least one bound check failed"))
    }
}

/// Everything the three factor commands share.
#[derive(Debug, Clone, Serialize)]
pub struct SamplingSummary {
    pub instance_hash: String,
    pub n: usize,
    pub d: usize,
    pub seed: u64,
    pub backend: &'static str,
    pub steps: u64,
    pub samples: usize,
    pub cycle_counts: Vec<usize>,
    pub chosen: usize,
    pub bound: CycleBound,
}

fn best_factor(
    g: &Graph,
    cfg: &SamplerConfig,
) -> Result<(RegularDigraph, MinCycleReport, SamplingSummary), CliError> {
    let dg = g.as_digraph();
    let rep = min_cycle_factor(&dg, cfg)?;
    ensure_valid(
        "cycle-factor",
        &verify_cycle_factor(rep.factor.sigma(), &dg),
    )?;
    let summary = SamplingSummary {
        instance_hash: instance_hash(g),
        n: dg.n(),
        d: dg.d(),
        seed: rep.seed,
        backend: rep.backend.name(),
        steps: rep.steps,
        samples: rep.cycle_counts.len(),
        cycle_counts: rep.cycle_counts.clone(),
        chosen: rep.chosen,
        bound: CycleBound::new(dg.n(), dg.d()),
    };
    Ok((dg, rep, summary))
}

#[derive(Serialize)]
struct DrawRow<'a> {
    instance_hash: &'a str,
    seed: u64,
    backend: &'a str,
    steps: u64,
    draw: usize,
    cycle_count: usize,
    chosen: bool,
}

fn draw_rows(s: &SamplingSummary) -> Vec<DrawRow<'_>> {
    s.cycle_counts
        .iter()
        .enumerate()
        .map(|(i, &c)| DrawRow {
            instance_hash: &s.instance_hash,
            seed: s.seed,
            backend: s.backend,
            steps: s.steps,
            draw: i,
            cycle_count: c,
            chosen: i == s.chosen,
        })
        .collect()
}

#[derive(Serialize)]
pub struct CycleFactorOutput {
    #[serde(flatten)]
    pub sampling: SamplingSummary,
    pub sigma: Vec<usize>,
    pub cycles: Vec<Vec<usize>>,
    pub cycle_count: usize,
    pub verified: bool,
}

pub fn cmd_cyclefactor(path: &Path, opts: &GlobalOpts) -> Result<Outcome, CliError> {
    let g = load(path)?;
    let cfg = sampler_config(opts)?;
    let (_, rep, sampling) = best_factor(&g, &cfg)?;
    let text = match opts.format {
        Some(Format::Csv) => to_csv(draw_rows(&sampling))?,
        _ => to_json(&CycleFactorOutput {
            cycle_count: rep.factor.cycle_count(),
            sigma: rep.factor.sigma().to_vec(),
            cycles: rep.factor.cycles().to_vec(),
            sampling,
            verified: true,
        })?,
    };
    Ok(Outcome::ok(text))
}

#[derive(Serialize)]
pub struct PathFactorOutput {
    #[serde(flatten)]
    pub sampling: SamplingSummary,
    pub paths: Vec<Vec<usize>>,
    pub path_count: usize,
    pub verified: bool,
}

#[derive(Serialize)]
struct PathRow {
    path: usize,
    vertices: usize,
    walk: String,
}

pub fn cmd_pathfactor(path: &Path, opts: &GlobalOpts) -> Result<Outcome, CliError> {
    let ug = load_undirected(path)?;
    let cfg = sampler_config(opts)?;
    let g = Graph::Undirected(ug.clone());
    let (_, rep, sampling) = best_factor(&g, &cfg)?;
    let cycles = to_undirected_cycle_factor(&rep.factor, &ug)?;
    let pf = to_path_factor(&cycles);
    ensure_valid("path-factor", &verify_path_factor(&pf, &ug))?;
    let text = match opts.format {
        Some(Format::Csv) => to_csv(pf.paths.iter().enumerate().map(|(i, p)| PathRow {
            path: i,
            vertices: p.len(),
            walk: join(p),
        }))?,
        _ => to_json(&PathFactorOutput {
            path_count: pf.len(),
            paths: pf.paths,
            sampling,
            verified: true,
        })?,
    };
    Ok(Outcome::ok(text))
}

fn join(vs: &[usize]) -> String {
    vs.iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Serialize)]
pub struct TourOutput {
    #[serde(flatten)]
    pub sampling: SamplingSummary,
    pub walk: Vec<usize>,
    pub length: usize,
    pub cycle_count: usize,
    /// `n + 2(c - 1)` for the cycle-factor used.
    pub length_bound: usize,
    pub verified: bool,
}

#[derive(Serialize)]
struct TourRow {
    step: usize,
    vertex: usize,
}

pub fn cmd_tour(path: &Path, opts: &GlobalOpts) -> Result<Outcome, CliError> {
    let ug = load_undirected(path)?;
    let components = ug.components().len();
    if components > 1 {
        return Err(cyclefactor::factor::FactorError::GraphDisconnected { components }.into());
    }
    let cfg = sampler_config(opts)?;
    let g = Graph::Undirected(ug.clone());
    let (_, rep, sampling) = best_factor(&g, &cfg)?;
    let cycles = to_undirected_cycle_factor(&rep.factor, &ug)?;
    let tour = to_tour(&cycles, &ug)?;
    ensure_valid("tour", &verify_tour(&tour, &ug))?;
    let length_bound = ug.n() + 2 * (cycles.len() - 1);
    if tour.length > length_bound {
        return Err(CliError::Validation(format!(
            "tour length {} exceeds n + 2(c - 1) = {length_bound}",
            tour.length
        )));
    }
    let text = match opts.format {
        Some(Format::Csv) => to_csv(
            tour.walk
                .iter()
                .enumerate()
                .map(|(step, &vertex)| TourRow { step, vertex }),
        )?,
        _ => to_json(&TourOutput {
            cycle_count: cycles.len(),
            length: tour.length,
            walk: tour.walk,
            length_bound,
            sampling,
            verified: true,
        })?,
    };
    Ok(Outcome::ok(text))
}

#[derive(Debug, Serialize)]
pub struct ExactComparison {
    pub expected_cycles: ExactValue,
    /// Number of cycle-factors with `k` cycles, indexed by `k`.
    pub cycle_histogram: Vec<u64>,
    /// Total variation between the sampled and exact laws of the cycle count.
    pub tv_distance: f64,
}

#[derive(Debug, Serialize)]
pub struct SampleStats {
    pub instance_hash: String,
    pub seed: u64,
    pub backend: &'static str,
    pub steps: u64,
    pub cycle_counts: Vec<usize>,
    pub mean: f64,
    pub variance: f64,
    pub exact: Option<ExactComparison>,
}

pub fn sample_stats(g: &Graph, cfg: &SamplerConfig, draws: usize) -> Result<SampleStats, CliError> {
    let dg = g.as_digraph();
    let sampler = Sampler::new(&dg, cfg)?;
    let counts: Vec<usize> = (0..draws)
        .into_par_iter()
        .map(|t| {
            let sigma = sampler.draw_sigma(&mut cfg.rng_for(t as u64))?;
            ensure_valid("cycle-factor", &verify_cycle_factor(&sigma, &dg))?;
            Ok(cyclefactor::graph::count_cycles(&sigma))
        })
        .collect::<Result<_, CliError>>()?;
    let xs: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    let (mean, variance) = mean_var(&xs);
    // the exact comparison is a bonus: skip it quietly when out of reach
    let exact = cycle_count_histogram(&dg).ok().map(|hist| {
        let total: u64 = hist.iter().sum();
        let mut sampled = vec![0u64; hist.len().max(counts.iter().max().map_or(0, |m| m + 1))];
        for &c in &counts {
            sampled[c] += 1;
        }
        let probs: Vec<f64> = (0..sampled.len())
            .map(|k| hist.get(k).copied().unwrap_or(0) as f64 / total as f64)
            .collect();
        let tv = tv_distance(&sampled, &probs);
        let weighted: u64 = hist.iter().enumerate().map(|(k, &h)| k as u64 * h).sum();
        let e = num_rational::BigRational::new(weighted.into(), total.into());
        ExactComparison {
            expected_cycles: ExactValue::from_rational(&e),
            cycle_histogram: hist,
            tv_distance: tv,
        }
    });
    Ok(SampleStats {
        instance_hash: instance_hash(g),
        seed: cfg.seed,
        backend: sampler.backend().name(),
        steps: sampler.steps(),
        cycle_counts: counts,
        mean,
        variance,
        exact,
    })
}

pub fn cmd_sample_stats(path: &Path, draws: usize, opts: &GlobalOpts) -> Result<Outcome, CliError> {
    if draws == 0 {
        return Err(CliError::Usage("--draws must be at least 1".into()));
    }
    let g = load(path)?;
    let cfg = sampler_config(opts)?;
    let st = sample_stats(&g, &cfg, draws)?;
    let text = match opts.format {
        Some(Format::Csv) => {
            #[derive(Serialize)]
            struct Row<'a> {
                instance_hash: &'a str,
                seed: u64,
                backend: &'a str,
                steps: u64,
                draw: usize,
                cycle_count: usize,
            }
            to_csv(st.cycle_counts.iter().enumerate().map(|(draw, &c)| Row {
                instance_hash: &st.instance_hash,
                seed: st.seed,
                backend: st.backend,
                steps: st.steps,
                draw,
                cycle_count: c,
            }))?
        }
        _ => to_json(&st)?,
    };
    Ok(Outcome::ok(text))
}

#[derive(Debug, Clone, Serialize)]
pub struct SkewSweep {
    pub support_size: usize,
    pub trials: usize,
    pub violations: usize,
    /// Smallest `bound - max_p` seen.
    pub min_slack: f64,
}

#[derive(Debug, Serialize)]
pub struct EntropyCheck {
    pub seed: u64,
    pub skew: Vec<SkewSweep>,
    pub skew_violations: usize,
    pub binary_grid_points: usize,
    pub binary_max_error: f64,
    pub chain_rule_trials: usize,
    pub chain_rule_violations: usize,
}

impl EntropyCheck {
    pub fn holds(&self) -> bool {
        self.skew_violations == 0
            && self.binary_max_error <= 1e-12
            && self.chain_rule_violations == 0
    }
}

fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Skew-lemma sweep for one support size; deterministic in `(seed, s)`.
pub fn skew_sweep(seed: u64, s: usize, trials: usize) -> SkewSweep {
    let mut rng = stream(seed, s as u64);
    let mut violations = 0;
    let mut min_slack = f64::INFINITY;
    for _ in 0..trials {
        let v = check_skew_lemma(&Distribution::random(s, &mut rng));
        if !v.holds {
            violations += 1;
        }
        min_slack = min_slack.min(v.bound - v.max_p);
    }
    SkewSweep {
        support_size: s,
        trials,
        violations,
        min_slack,
    }
}

pub fn entropy_check(
    seed: u64,
    trials: usize,
    max_support: usize,
) -> Result<EntropyCheck, CliError> {
    if max_support < 2 {
        return Err(CliError::Usage("--max-support must be at least 2".into()));
    }
    let skew: Vec<SkewSweep> = (2..=max_support)
        .into_par_iter()
        .map(|s| skew_sweep(seed, s, trials))
        .collect();
    let skew_violations = skew.iter().map(|s| s.violations).sum();

    let grid = 1000;
    let mut binary_max_error: f64 = 0.0;
    for k in 0..=grid {
        let p = k as f64 / grid as f64;
        let h = binary_entropy(p)?;
        let via = shannon_entropy(&Distribution::new(vec![p, 1.0 - p])?);
        binary_max_error = binary_max_error.max((h - via).abs());
    }

    let chain_trials = 1000;
    let mut rng = stream(seed, 0);
    let mut chain_rule_violations = 0;
    for _ in 0..chain_trials {
        let (rows, cols) = (rng.random_range(1..=6), rng.random_range(1..=6));
        let flat = Distribution::random(rows * cols, &mut rng);
        let joint: Vec<Vec<f64>> = flat.probs().chunks(cols).map(|c| c.to_vec()).collect();
        if !chain_rule_check(&joint)?.holds {
            chain_rule_violations += 1;
        }
    }
    Ok(EntropyCheck {
        seed,
        skew,
        skew_violations,
        binary_grid_points: grid + 1,
        binary_max_error,
        chain_rule_trials: chain_trials,
        chain_rule_violations,
    })
}

pub fn cmd_entropy_check(
    trials: usize,
    max_support: usize,
    opts: &GlobalOpts,
) -> Result<Outcome, CliError> {
    let r = entropy_check(require_seed(opts)?, trials, max_support)?;
    let text = match opts.format {
        Some(Format::Csv) => to_csv(r.skew.iter())?,
        _ => to_json(&r)?,
    };
    if r.holds() {
        Ok(Outcome::ok(text))
    } else {
        Ok(Outcome::failed(text, "entropy inequality violated"))
    }
}
