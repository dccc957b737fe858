//! `sample`: draw positive and negative pairs for every hierarchy vertex.

use std::path::PathBuf;

use hiersample::graph::GraphDataset;
use hiersample::hier::SimilarityHierarchy;
use hiersample::sampler;

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
    /// Pair samples output path (JSON lines)
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    sampler: SamplerFlags,
}

pub fn run(ctx: &Context, file: &FileConfig, args: Args) -> anyhow::Result<()> {
    let cfg = args.sampler.resolve(file)?;

    let mut emitter = Emitter::new("sample", ctx);
    emitter.record_input(&args.hier)?;
    emitter.record_input(&args.ds)?;
    let hier = SimilarityHierarchy::load_jsonl(&args.hier)?;
    let ds = GraphDataset::load_graph_jsonl(&args.ds)?;
    let sim = measure_from_digest(hier.measure())?;

    let targets: Vec<String> = hier.ids().to_vec();
    let samples = sampler::sample_pairs(&hier, &ds, sim.as_ref(), &cfg, &targets)?;
    let isolated = samples.iter().filter(|s| s.isolated).count();

    let config = SamplerRunConfig {
        hier: args.hier.display().to_string(),
        ds: args.ds.display().to_string(),
        sampler: cfg,
    };
    emitter.write_output(
        &args.out,
        sampler::pairs_to_jsonl(&samples).as_bytes(),
        &config,
    )?;
    println!(
        "samples: {} targets ({} isolated) -> {}",
        samples.len(),
        isolated,
        args.out.display()
    );
    Ok(())
}
