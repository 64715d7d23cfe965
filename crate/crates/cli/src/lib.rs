//! Command-line harness for the `cyclefactor` library: graph generation,
//! exact verification, sampling commands and manifest-driven benchmarks.

pub mod args;
pub mod bench;
pub mod commands;
pub mod error;

use std::io::Write;

use cyclefactor::format::render_graph;
use cyclefactor::Graph;
use sha2::{Digest, Sha256};

pub use args::Cli;
pub use error::CliError;

use args::{Command, Format};

/// Environment variable capping the worker pool.
pub const THREADS_ENV: &str = "CYCLEFACTOR_THREADS";

/// Rendered output of one command, plus an optional failure to report
/// after the output is written.
#[derive(Debug)]
pub struct Outcome {
    pub text: String,
    pub failure: Option<String>,
}

impl Outcome {
    pub fn ok(text: String) -> Self {
        Self {
            text,
            failure: None,
        }
    }

    pub fn failed(text: String, why: impl Into<String>) -> Self {
        Self {
            text,
            failure: Some(why.into()),
        }
    }
}

/// First 16 hex digits of a SHA-256.
pub fn short_hash(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    hex::encode(&digest[..8])
}

/// Hash of the canonical file rendering of `g`.
pub fn instance_hash(g: &Graph) -> String {
    short_hash(render_graph(g).as_bytes())
}

/// Builds the global rayon pool, honouring [`THREADS_ENV`].
pub fn init_thread_pool() -> Result<(), CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
            CliError::Usage(format!(
                "{THREADS_ENV} must be a positive integer, got `{v}`"
            ))
        })?;
        builder = builder.num_threads(n);
    }
    // a second call in the same process keeps the first pool
    let _ = builder.build_global();
    Ok(())
}

fn emit(text: &str, out: Option<&std::path::Path>) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::io(format!("writing {}", path.display()), e)),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::io("writing stdout", e))
        }
    }
}

/// Runs one parsed command line. Output goes to `--out` or stdout; the
/// returned error (if any) decides the exit code.
pub fn run(cli: &Cli) -> Result<(), CliError> {
    let opts = &cli.global;
    let outcome = match &cli.command {
        Command::Gen(a) => commands::cmd_gen(a, opts)?,
        Command::Verify { path } => commands::cmd_verify(path, opts)?,
        Command::Cyclefactor { path } => commands::cmd_cyclefactor(path, opts)?,
        Command::Pathfactor { path } => commands::cmd_pathfactor(path, opts)?,
        Command::Tour { path } => commands::cmd_tour(path, opts)?,
        Command::SampleStats { path, draws } => commands::cmd_sample_stats(path, *draws, opts)?,
        Command::EntropyCheck {
            trials,
            max_support,
        } => commands::cmd_entropy_check(*trials, *max_support, opts)?,
        Command::Bench { manifest } => {
            let format = opts.format.unwrap_or(Format::Json);
            let summary = bench::run_bench(manifest, opts.out.as_deref(), format, opts.seed)?;
            eprintln!(
                "bench: {} instances, {} written, {} already present, {} failed",
                summary.instances,
                summary.written,
                summary.skipped,
                summary.failures.len()
            );
            for f in &summary.failures {
                eprintln!("  instance {}: {}", f.index, f.error);
            }
            if summary.failures.is_empty() {
                return Ok(());
            }
            return Err(CliError::Validation(format!(
                "{} of {} instances failed",
                summary.failures.len(),
                summary.instances
            )));
        }
    };
    emit(&outcome.text, opts.out.as_deref())?;
    match outcome.failure {
        Some(why) => Err(CliError::Validation(why)),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use cyclefactor::{gen_family, Family};

    #[test]
    fn hash_is_16_hex_digits_of_sha256() {
        // sha256("abc") = ba7816bf8f01cfea...
        assert_eq!(short_hash(b"abc"), "ba7816bf8f01cfea");
        let g = gen_family(Family::Cycle, 5, 2).unwrap();
        assert_eq!(instance_hash(&g), short_hash(render_graph(&g).as_bytes()));
    }

    #[test]
    fn exit_codes_by_kind() {
        assert_eq!(CliError::Usage("x".into()).exit_code(), 2);
        assert_eq!(CliError::Validation("x".into()).exit_code(), 2);
        assert_eq!(CliError::Infeasible("x".into()).exit_code(), 3);
        let io = CliError::io("x", std::io::Error::other("boom"));
        assert_eq!(io.exit_code(), 4);
        let oracle = cyclefactor::OracleError::SizeLimitExceeded {
            what: "permanent",
            got: "30".into(),
            limit: "24".into(),
        };
        assert_eq!(CliError::from(oracle).exit_code(), 3);
    }
}
