//! `stats`: neighbourhood statistics of the positives a sampler
//! configuration would draw, printed as JSON and optionally written out.

use std::path::PathBuf;

use hiersample::graph::GraphDataset;
use hiersample::hier::SimilarityHierarchy;
use hiersample::sampler::sampler_stats;

use super::{measure_from_digest, SamplerFlags, SamplerRunConfig};
use crate::context::{Context, FileConfig};
use crate::manifest::Emitter;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Similarity hierarchy (JSON lines)
    #[arg(long)]
    hier: PathBuf,
    /// The graph dataset the hierarchy was built from (JSON lines)
    #[arg(long)]
    ds: PathBuf,
    /// Statistics output path (JSON); omit to print only
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    sampler: SamplerFlags,
}

pub fn run(ctx: &Context, file: &FileConfig, args: Args) -> anyhow::Result<()> {
    let cfg = args.sampler.resolve(file)?;

    let mut emitter = Emitter::new("stats", ctx);
    emitter.record_input(&args.hier)?;
    emitter.record_input(&args.ds)?;
    let hier = SimilarityHierarchy::load_jsonl(&args.hier)?;
    let ds = GraphDataset::load_graph_jsonl(&args.ds)?;
    let sim = measure_from_digest(hier.measure())?;

    let targets: Vec<String> = hier.ids().to_vec();
    let stats = sampler_stats(&hier, &ds, sim.as_ref(), &cfg, &targets)?;
    let mut rendered = serde_json::to_string_pretty(&stats)?;
    rendered.push('\n');

    if let Some(out) = &args.out {
        let config = SamplerRunConfig {
            hier: args.hier.display().to_string(),
            ds: args.ds.display().to_string(),
            sampler: cfg,
        };
        emitter.write_output(out, rendered.as_bytes(), &config)?;
    }
    print!("{rendered}");
    Ok(())
}
