//! Run context: usage-error typing, the optional JSON config file, and
//! thread-pool resolution.

use std::fmt;
use std::path::{Path, PathBuf};

#[cfg(feature = "parallel")]
use anyhow::Context as _;
use serde::Deserialize;

/// Error marker for misuse (bad flag combinations, malformed config);
/// mapped to exit code 2 instead of 1.
#[derive(Debug)]
pub struct Usage(pub String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(Usage(msg.into()))
}

/// Flat config-file schema: one optional entry per long flag, kebab-case,
/// shared across subcommands (`tau` configures both `build-hier` and the
/// analysis commands, for example). Flags always win over the file.
#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct FileConfig {
    pub threads: Option<usize>,
    pub seed: Option<u64>,
    // build-hier
    pub measure: Option<String>,
    pub tau: Option<f64>,
    pub rounds: Option<usize>,
    pub radius: Option<usize>,
    pub nbits: Option<usize>,
    pub policy: Option<String>,
    pub weight_tol: Option<f64>,
    pub ring_tol: Option<usize>,
    pub atom_tol: Option<usize>,
    pub node_tol: Option<f64>,
    pub edge_tol: Option<f64>,
    pub max_candidates: Option<usize>,
    pub masses: Option<PathBuf>,
    // sample / stats
    pub strategy: Option<String>,
    pub pos_count: Option<usize>,
    pub walk_len: Option<usize>,
    pub walk_count: Option<usize>,
    pub neg_policy: Option<String>,
    pub neg_count: Option<usize>,
    pub batch_size: Option<usize>,
    // mask
    pub steps: Option<usize>,
    pub ratio: Option<f64>,
    // sweep
    pub kinds: Option<Vec<String>>,
    pub ratios: Option<Vec<f64>>,
    pub seeds: Option<Vec<u64>>,
    pub sample_size: Option<usize>,
    pub valences: Option<PathBuf>,
    // analyze-bias
    pub mu_pos: Option<f64>,
    pub sigma_pos: Option<f64>,
    pub mu_neg: Option<f64>,
    pub sigma_neg: Option<f64>,
    pub n_pos: Option<f64>,
    pub n_neg: Option<f64>,
    pub taus: Option<Vec<f64>>,
    pub posterior_points: Option<usize>,
    // analyze-grad
    pub configs: Option<usize>,
    pub instances: Option<usize>,
    pub dim: Option<usize>,
    pub step: Option<f64>,
    pub temperature: Option<f64>,
    // oracle-exp
    pub classes: Option<usize>,
    pub per_class: Option<usize>,
    pub noise: Option<f64>,
}

pub fn load_file_config(path: Option<&Path>) -> anyhow::Result<FileConfig> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read config file {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| usage(format!("invalid config file {}: {e}", path.display())))
}

/// Resolved per-run context shared by every command.
pub struct Context {
    pub threads: usize,
}

pub const THREADS_ENV: &str = "HIER_SAMPLER_THREADS";

impl Context {
    pub fn resolve(flag: Option<usize>, file: &FileConfig) -> anyhow::Result<Self> {
        let threads = match flag.or(file.threads) {
            Some(t) => t,
            None => match std::env::var(THREADS_ENV) {
                Ok(raw) => raw.parse().map_err(|_| {
                    usage(format!("{THREADS_ENV} must be a positive integer, got `{raw}`"))
                })?,
                Err(_) => 1,
            },
        };
        if threads == 0 {
            return Err(usage("thread count must be at least 1"));
        }
        #[cfg(not(feature = "parallel"))]
        if threads > 1 {
            return Err(usage(format!(
                "this build is sequential (compiled without the `parallel` feature); \
                 thread count {threads} is unavailable"
            )));
        }
        Ok(Self { threads })
    }

    /// Install the global worker pool. The CLI owns the pool; the library
    /// only ever uses whatever pool is current.
    pub fn install_pool(&self) -> anyhow::Result<()> {
        #[cfg(feature = "parallel")]
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.threads)
            .build_global()
            .context("worker pool initialisation failed")?;
        Ok(())
    }
}

/// First value that is present: flag, then config file, then the default.
pub fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

/// Like [`pick`] but with no default: the value must come from the flag or
/// the config file.
pub fn require<T>(flag: Option<T>, file: Option<T>, name: &str) -> anyhow::Result<T> {
    flag.or(file)
        .ok_or_else(|| usage(format!("--{name} is required (flag or config file)")))
}
