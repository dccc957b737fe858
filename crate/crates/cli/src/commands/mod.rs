//! One module per subcommand, plus the type resolution they share.

pub mod analyze_bias;
pub mod analyze_grad;
pub mod build_hier;
pub mod mask;
pub mod oracle_exp;
pub mod sample;
pub mod stats;
pub mod sweep;

use hiersample::sampler::{NegativePolicy, SamplerConfig, Strategy};
use hiersample::similarity::{MorganTanimoto, SimilarityMeasure, WlKernel};
use serde::Serialize;

use crate::context::{pick, usage, FileConfig};

/// Parse a measure stored in a hierarchy header, e.g. `wl/rounds=3` or
/// `fp/radius=2/bits=2048`. This is how `sample` and `stats` recover the
/// exact measure a hierarchy was built with.
pub fn measure_from_digest(digest: &str) -> anyhow::Result<Box<dyn SimilarityMeasure>> {
    let bad = || anyhow::anyhow!("unrecognised measure digest `{digest}` in hierarchy header");
    if let Some(rest) = digest.strip_prefix("wl/rounds=") {
        let rounds = rest.parse().map_err(|_| bad())?;
        return Ok(Box::new(WlKernel::new(rounds)));
    }
    if let Some(rest) = digest.strip_prefix("fp/radius=") {
        let (radius, bits) = rest.split_once("/bits=").ok_or_else(bad)?;
        return Ok(Box::new(MorganTanimoto::new(
            radius.parse().map_err(|_| bad())?,
            bits.parse().map_err(|_| bad())?,
        )));
    }
    Err(bad())
}

fn parse_strategy(s: &str) -> anyhow::Result<Strategy> {
    match s {
        "first-order" => Ok(Strategy::FirstOrder),
        "high-order" => Ok(Strategy::HighOrder),
        other => Err(usage(format!(
            "unknown strategy `{other}` (expected first-order or high-order)"
        ))),
    }
}

fn parse_neg_policy(s: &str) -> anyhow::Result<NegativePolicy> {
    match s {
        "in-batch" => Ok(NegativePolicy::InBatch),
        "degree-weighted" => Ok(NegativePolicy::DegreeWeighted),
        other => Err(usage(format!(
            "unknown negative policy `{other}` (expected in-batch or degree-weighted)"
        ))),
    }
}

/// Sampler flags shared verbatim by `sample` and `stats`.
#[derive(Debug, clap::Args)]
pub struct SamplerFlags {
    /// Positive strategy: first-order or high-order
    #[arg(long)]
    strategy: Option<String>,
    /// Positives per target
    #[arg(long)]
    pos_count: Option<usize>,
    /// Walk length (high-order)
    #[arg(long)]
    walk_len: Option<usize>,
    /// Walk count (high-order)
    #[arg(long)]
    walk_count: Option<usize>,
    /// Negative policy: in-batch or degree-weighted
    #[arg(long)]
    neg_policy: Option<String>,
    /// Negatives per target (degree-weighted)
    #[arg(long)]
    neg_count: Option<usize>,
    /// Batch size (in-batch)
    #[arg(long)]
    batch_size: Option<usize>,
    /// Sampling seed
    #[arg(long)]
    seed: Option<u64>,
}

impl SamplerFlags {
    pub fn resolve(&self, file: &FileConfig) -> anyhow::Result<SamplerConfig> {
        let defaults = SamplerConfig::default();
        let strategy = match (self.strategy.as_deref(), file.strategy.as_deref()) {
            (Some(s), _) | (None, Some(s)) => parse_strategy(s)?,
            (None, None) => defaults.strategy,
        };
        let neg_policy = match (self.neg_policy.as_deref(), file.neg_policy.as_deref()) {
            (Some(s), _) | (None, Some(s)) => parse_neg_policy(s)?,
            (None, None) => defaults.neg_policy,
        };
        Ok(SamplerConfig {
            strategy,
            pos_count: pick(self.pos_count, file.pos_count, defaults.pos_count),
            walk_len: pick(self.walk_len, file.walk_len, defaults.walk_len),
            walk_count: pick(self.walk_count, file.walk_count, defaults.walk_count),
            neg_policy,
            neg_count: pick(self.neg_count, file.neg_count, defaults.neg_count),
            batch_size: pick(self.batch_size, file.batch_size, defaults.batch_size),
            seed: pick(self.seed, file.seed, defaults.seed),
        })
    }
}

/// The resolved configuration embedded in a sampling manifest.
#[derive(Serialize)]
pub struct SamplerRunConfig {
    pub hier: String,
    pub ds: String,
    pub sampler: SamplerConfig,
}
