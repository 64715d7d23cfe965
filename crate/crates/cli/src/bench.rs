//! Manifest-driven experiment runs.
//!
//! A manifest is JSON:
//!
//! ```json
//! {
//!   "defaults": { "backend": "auto", "samples": 12, "seed": 1 },
//!   "instances": [
//!     { "source": "family", "family": "clique_union", "n": 8, "d": 3 },
//!     { "source": "random", "n": 8, "d": 3, "seed": 5 },
//!     { "source": "random_undirected", "n": 20, "d": 4, "seed": 9,
//!       "config": { "backend": "mcmc" } },
//!     { "source": "file", "path": "graphs/k8.txt" }
//!   ]
//! }
//! ```
//!
//! Every instance produces one [`ExperimentRecord`]. Records are keyed by a
//! hash of the instance and its resolved configuration; a rerun against the
//! same results file skips keys already present.

use std::collections::HashSet;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use cyclefactor::factor::{
    to_path_factor, to_tour, to_undirected_cycle_factor, verify_cycle_factor, verify_path_factor,
    verify_tour,
};
use cyclefactor::format::read_graph;
use cyclefactor::oracle::{oracle_report, OracleReport};
use cyclefactor::{
    gen_family, gen_random_regular_digraph, gen_random_regular_graph, min_cycle_factor, Backend,
    Family, Graph, SamplerConfig,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::args::Format;
use crate::commands::CycleBound;
use crate::error::CliError;
use crate::{instance_hash, short_hash};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backend: Option<Backend>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mcmc_steps: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl RunConfig {
    /// Fields of `self` win over `base`.
    fn over(&self, base: &RunConfig) -> RunConfig {
        RunConfig {
            backend: self.backend.or(base.backend),
            samples: self.samples.or(base.samples),
            mcmc_steps: self.mcmc_steps.or(base.mcmc_steps),
            seed: self.seed.or(base.seed),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum InstanceSpec {
    Family {
        family: String,
        n: usize,
        d: usize,
    },
    Random {
        n: usize,
        d: usize,
        seed: u64,
        #[serde(default = "yes")]
        loops: bool,
    },
    RandomUndirected {
        n: usize,
        d: usize,
        seed: u64,
    },
    File {
        path: PathBuf,
    },
}

fn yes() -> bool {
    true
}

impl InstanceSpec {
    fn build(&self, base_dir: &Path) -> Result<Graph, CliError> {
        Ok(match self {
            InstanceSpec::Family { family, n, d } => {
                let f = Family::from_name(family)
                    .ok_or_else(|| CliError::Usage(format!("unknown family `{family}`")))?;
                gen_family(f, *n, *d)?
            }
            InstanceSpec::Random { n, d, seed, loops } => {
                Graph::Directed(gen_random_regular_digraph(*n, *d, *seed, *loops)?)
            }
            InstanceSpec::RandomUndirected { n, d, seed } => {
                Graph::Undirected(gen_random_regular_graph(*n, *d, *seed)?)
            }
            InstanceSpec::File { path } => read_graph(base_dir.join(path))?,
        })
    }

    fn source(&self) -> &'static str {
        match self {
            InstanceSpec::Family { .. } => "family",
            InstanceSpec::Random { .. } => "random",
            InstanceSpec::RandomUndirected { .. } => "random_undirected",
            InstanceSpec::File { .. } => "file",
        }
    }

    fn label(&self) -> String {
        match self {
            InstanceSpec::Family { family, .. } => family.clone(),
            InstanceSpec::Random { seed, .. } | InstanceSpec::RandomUndirected { seed, .. } => {
                format!("seed={seed}")
            }
            InstanceSpec::File { path } => path.display().to_string(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct InstanceEntry {
    #[serde(flatten)]
    pub spec: InstanceSpec,
    #[serde(default)]
    pub config: RunConfig,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    #[serde(default)]
    pub defaults: RunConfig,
    #[serde(default)]
    pub instances: Vec<InstanceEntry>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::io(format!("reading {}", path.display()), e))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Validation(format!("manifest {}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct InstanceDescriptor {
    pub spec: InstanceSpec,
    pub kind: &'static str,
    pub n: usize,
    pub d: usize,
    pub instance_hash: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResolvedConfig {
    pub backend: Backend,
    pub samples: usize,
    pub mcmc_steps: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Outputs {
    /// Backend actually used (`auto` resolved).
    pub backend: Backend,
    pub cycle_counts: Vec<usize>,
    pub min_cycles: usize,
    pub chosen: usize,
    pub path_count: Option<usize>,
    pub tour_length: Option<usize>,
    pub bound: CycleBound,
    /// Exact report, when enumeration is feasible.
    pub oracle: Option<OracleReport>,
}

/// One result line. `wall_ms` is the only field that varies between
/// identical runs and is serialized last.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentRecord {
    pub key: String,
    pub instance: InstanceDescriptor,
    pub config: ResolvedConfig,
    pub outputs: Outputs,
    pub tool_version: &'static str,
    pub wall_ms: u64,
}

#[derive(Debug, Serialize)]
struct CsvRow<'a> {
    key: &'a str,
    source: &'static str,
    label: String,
    kind: &'static str,
    n: usize,
    d: usize,
    instance_hash: &'a str,
    seed: u64,
    backend: &'static str,
    samples: usize,
    mcmc_steps: u64,
    min_cycles: usize,
    path_count: Option<usize>,
    tour_length: Option<usize>,
    bound_log2: f64,
    bound_ln: f64,
    matching_count: Option<String>,
    expected_cycles: Option<String>,
    entropy_loss: Option<f64>,
    bounds_hold: Option<bool>,
    tool_version: &'static str,
    wall_ms: u64,
}

impl ExperimentRecord {
    fn csv_row(&self) -> CsvRow<'_> {
        let oracle = self.outputs.oracle.as_ref();
        CsvRow {
            key: &self.key,
            source: self.instance.spec.source(),
            label: self.instance.spec.label(),
            kind: self.instance.kind,
            n: self.instance.n,
            d: self.instance.d,
            instance_hash: &self.instance.instance_hash,
            seed: self.config.seed,
            backend: self.outputs.backend.name(),
            samples: self.config.samples,
            mcmc_steps: self.config.mcmc_steps,
            min_cycles: self.outputs.min_cycles,
            path_count: self.outputs.path_count,
            tour_length: self.outputs.tour_length,
            bound_log2: self.outputs.bound.log2,
            bound_ln: self.outputs.bound.ln,
            matching_count: oracle.map(|o| o.matching_count.to_string()),
            expected_cycles: oracle.map(|o| o.expected_cycles.fraction.clone()),
            entropy_loss: oracle.map(|o| o.entropy_loss),
            bounds_hold: oracle.map(|o| o.all_hold()),
            tool_version: self.tool_version,
            wall_ms: self.wall_ms,
        }
    }
}

struct Prepared {
    index: usize,
    key: String,
    spec: InstanceSpec,
    graph: Graph,
    config: SamplerConfig,
}

fn prepare(
    index: usize,
    entry: &InstanceEntry,
    defaults: &RunConfig,
    base_dir: &Path,
) -> Result<Prepared, CliError> {
    let rc = entry.config.over(defaults);
    let seed = rc.seed.ok_or_else(|| {
        CliError::Usage("no seed: set one in the manifest defaults or pass --seed".into())
    })?;
    let graph = entry.spec.build(base_dir)?;
    let config = SamplerConfig {
        backend: rc.backend.unwrap_or_default(),
        mcmc_steps: rc.mcmc_steps,
        num_samples: rc.samples,
        ..SamplerConfig::with_seed(seed)
    };
    config.validate()?;
    let key_src = serde_json::to_string(&(
        &entry.spec,
        instance_hash(&graph),
        &resolve(&config, &graph),
    ))?;
    Ok(Prepared {
        index,
        key: short_hash(key_src.as_bytes()),
        spec: entry.spec.clone(),
        graph,
        config,
    })
}

fn resolve(cfg: &SamplerConfig, g: &Graph) -> ResolvedConfig {
    ResolvedConfig {
        backend: cfg.backend,
        samples: cfg.samples_for(g.n()),
        mcmc_steps: cfg.steps_for(g.n(), g.d()),
        seed: cfg.seed,
    }
}

fn check(what: &str, verdict: cyclefactor::factor::Verdict) -> Result<(), CliError> {
    if verdict.is_valid() {
        Ok(())
    } else {
        Err(CliError::Validation(format!(
            "{what} failed independent check"
        )))
    }
}

fn run_one(p: &Prepared) -> Result<ExperimentRecord, CliError> {
    let start = Instant::now();
    let dg = p.graph.as_digraph();
    let rep = min_cycle_factor(&dg, &p.config)?;
    check("cycle-factor", verify_cycle_factor(rep.factor.sigma(), &dg))?;

    let (mut path_count, mut tour_length) = (None, None);
    if let Graph::Undirected(ug) = &p.graph {
        let cycles = to_undirected_cycle_factor(&rep.factor, ug)?;
        let pf = to_path_factor(&cycles);
        check("path-factor", verify_path_factor(&pf, ug))?;
        path_count = Some(pf.len());
        if ug.is_connected() {
            let tour = to_tour(&cycles, ug)?;
            check("tour", verify_tour(&tour, ug))?;
            tour_length = Some(tour.length);
        }
    }
    let outputs = Outputs {
        backend: rep.backend,
        min_cycles: rep.factor.cycle_count(),
        chosen: rep.chosen,
        cycle_counts: rep.cycle_counts,
        path_count,
        tour_length,
        bound: CycleBound::new(dg.n(), dg.d()),
        oracle: oracle_report(&dg).ok(),
    };
    Ok(ExperimentRecord {
        key: p.key.clone(),
        instance: InstanceDescriptor {
            spec: p.spec.clone(),
            kind: match p.graph {
                Graph::Directed(_) => "digraph",
                Graph::Undirected(_) => "graph",
            },
            n: dg.n(),
            d: dg.d(),
            instance_hash: instance_hash(&p.graph),
        },
        config: resolve(&p.config, &p.graph),
        outputs,
        tool_version: env!("CARGO_PKG_VERSION"),
        wall_ms: start.elapsed().as_millis() as u64,
    })
}

/// Keys already stored in a results file.
fn existing_keys(path: &Path, format: Format) -> Result<HashSet<String>, CliError> {
    let mut keys = HashSet::new();
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(keys),
        Err(e) => return Err(CliError::io(format!("reading {}", path.display()), e)),
    };
    match format {
        Format::Json => {
            for line in BufReader::new(file).lines() {
                let line =
                    line.map_err(|e| CliError::io(format!("reading {}", path.display()), e))?;
                if line.trim().is_empty() {
                    continue;
                }
                let v: serde_json::Value = serde_json::from_str(&line)?;
                if let Some(k) = v.get("key").and_then(|k| k.as_str()) {
                    keys.insert(k.to_string());
                }
            }
        }
        Format::Csv => {
            let mut r = csv::Reader::from_reader(file);
            for rec in r.records() {
                if let Some(k) = rec?.get(0) {
                    keys.insert(k.to_string());
                }
            }
        }
    }
    Ok(keys)
}

/// Where records go. All writes happen on one thread, in manifest order.
enum Sink {
    Json(Box<dyn Write>),
    Csv(Box<csv::Writer<Box<dyn Write>>>),
}

impl Sink {
    fn open(out: Option<&Path>, format: Format) -> Result<Self, CliError> {
        let (writer, fresh): (Box<dyn Write>, bool) = match out {
            None => (Box::new(std::io::stdout().lock()), true),
            Some(path) => {
                let fresh = std::fs::metadata(path).map_or(true, |m| m.len() == 0);
                let f = OpenOptions::new()
                    .create(true)
                    .append(true)
                    .open(path)
                    .map_err(|e| CliError::io(format!("opening {}", path.display()), e))?;
                (Box::new(std::io::BufWriter::new(f)), fresh)
            }
        };
        Ok(match format {
            Format::Json => Sink::Json(writer),
            Format::Csv => Sink::Csv(Box::new(
                csv::WriterBuilder::new()
                    .has_headers(fresh)
                    .from_writer(writer),
            )),
        })
    }

    fn write(&mut self, rec: &ExperimentRecord) -> Result<(), CliError> {
        match self {
            Sink::Json(w) => {
                serde_json::to_writer(&mut *w, rec)?;
                w.write_all(b"\n")
                    .map_err(|e| CliError::io("writing results", e))
            }
            Sink::Csv(w) => Ok(w.serialize(rec.csv_row())?),
        }
    }

    fn finish(self) -> Result<(), CliError> {
        match self {
            Sink::Json(mut w) => w.flush(),
            Sink::Csv(mut w) => w.flush(),
        }
        .map_err(|e| CliError::io("writing results", e))
    }
}

#[derive(Debug, Default, Serialize)]
pub struct BenchSummary {
    pub instances: usize,
    pub written: usize,
    pub skipped: usize,
    pub failures: Vec<BenchFailure>,
}

#[derive(Debug, Serialize)]
pub struct BenchFailure {
    pub index: usize,
    pub error: String,
}

/// Runs `manifest`, writing records to `out` (appending) or stdout.
/// Failed instances are reported in the summary and never written.
pub fn run_bench(
    manifest_path: &Path,
    out: Option<&Path>,
    format: Format,
    fallback_seed: Option<u64>,
) -> Result<BenchSummary, CliError> {
    let manifest = Manifest::load(manifest_path)?;
    let base_dir = manifest_path.parent().unwrap_or(Path::new("."));
    let defaults = manifest.defaults.over(&RunConfig {
        seed: fallback_seed,
        ..RunConfig::default()
    });
    let mut seen = match out {
        Some(p) => existing_keys(p, format)?,
        None => HashSet::new(),
    };

    let mut summary = BenchSummary {
        instances: manifest.instances.len(),
        ..BenchSummary::default()
    };
    let mut pending = Vec::new();
    for (i, entry) in manifest.instances.iter().enumerate() {
        match prepare(i, entry, &defaults, base_dir) {
            Ok(p) if !seen.insert(p.key.clone()) => summary.skipped += 1,
            Ok(p) => pending.push(p),
            Err(e) => summary.failures.push(BenchFailure {
                index: i,
                error: e.to_string(),
            }),
        }
    }

    let results: Vec<Result<ExperimentRecord, CliError>> =
        pending.par_iter().map(run_one).collect();

    let mut sink = Sink::open(out, format)?;
    for (p, r) in pending.iter().zip(results) {
        match r {
            Ok(rec) => {
                sink.write(&rec)?;
                summary.written += 1;
            }
            Err(e) => summary.failures.push(BenchFailure {
                index: p.index,
                error: e.to_string(),
            }),
        }
    }
    sink.finish()?;
    summary.failures.sort_by_key(|f| f.index);
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn instance_config_overrides_defaults() {
        let defaults = RunConfig {
            backend: Some(Backend::Exact),
            samples: Some(5),
            mcmc_steps: None,
            seed: Some(1),
        };
        let local = RunConfig {
            samples: Some(2),
            ..RunConfig::default()
        };
        let merged = local.over(&defaults);
        assert_eq!(merged.backend, Some(Backend::Exact));
        assert_eq!(merged.samples, Some(2));
        assert_eq!(merged.seed, Some(1));
    }

    #[test]
    fn manifest_parsing() {
        let m: Manifest = serde_json::from_str(
            r#"{"instances": [
                {"source": "random", "n": 8, "d": 3, "seed": 2},
                {"source": "family", "family": "petersen", "n": 10, "d": 3, "config": {"seed": 4}}
            ]}"#,
        )
        .unwrap();
        assert_eq!(m.instances.len(), 2);
        assert_eq!(
            m.instances[0].spec,
            InstanceSpec::Random {
                n: 8,
                d: 3,
                seed: 2,
                loops: true
            }
        );
        assert_eq!(m.instances[1].config.seed, Some(4));
        assert!(serde_json::from_str::<Manifest>(r#"{"instance": []}"#).is_err());
    }

    #[test]
    fn keys_depend_on_config() {
        let entry: InstanceEntry =
            serde_json::from_str(r#"{"source": "family", "family": "cycle", "n": 6, "d": 2}"#)
                .unwrap();
        let dir = Path::new(".");
        let a = prepare(
            0,
            &entry,
            &RunConfig {
                seed: Some(1),
                ..Default::default()
            },
            dir,
        )
        .unwrap();
        let b = prepare(
            0,
            &entry,
            &RunConfig {
                seed: Some(1),
                ..Default::default()
            },
            dir,
        )
        .unwrap();
        let c = prepare(
            0,
            &entry,
            &RunConfig {
                seed: Some(2),
                ..Default::default()
            },
            dir,
        )
        .unwrap();
        assert_eq!(a.key, b.key);
        assert_ne!(a.key, c.key);
        assert!(prepare(0, &entry, &RunConfig::default(), dir).is_err());
    }
}
