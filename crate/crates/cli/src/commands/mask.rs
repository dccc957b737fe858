//! `mask`: plan adaptive attribute masks for every graph in a dataset.

use std::path::PathBuf;

use hiersample::graph::GraphDataset;
use hiersample::masking::{plan_masks, plans_to_jsonl, ReferencePredictor};
use serde::Serialize;

use crate::context::{pick, Context, FileConfig};
use crate::manifest::Emitter;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Graph dataset (JSON lines)
    #[arg(long = "in")]
    input: PathBuf,
    /// Mask plans output path (JSON lines)
    #[arg(long)]
    out: PathBuf,
    /// Masking steps; 1 selects the whole budget uniformly at random
    #[arg(long)]
    steps: Option<usize>,
    /// Fraction of each graph's nodes to mask
    #[arg(long)]
    ratio: Option<f64>,
    /// Seed for both the reference predictor and the mask draws
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Serialize)]
struct RunConfig {
    input: String,
    steps: usize,
    ratio: f64,
    seed: u64,
}

pub fn run(ctx: &Context, file: &FileConfig, args: Args) -> anyhow::Result<()> {
    let steps = pick(args.steps, file.steps, 5);
    let ratio = pick(args.ratio, file.ratio, 0.15);
    let seed = pick(args.seed, file.seed, 0);

    let mut emitter = Emitter::new("mask", ctx);
    emitter.record_input(&args.input)?;
    let ds = GraphDataset::load_graph_jsonl(&args.input)?;
    let vocab = ds
        .node_vocab()
        .first()
        .copied()
        .ok_or_else(|| anyhow::anyhow!("dataset has no node attributes to mask"))?;
    let predictor = ReferencePredictor::new(vocab, seed);
    let plans = plan_masks(&ds, &predictor, steps, ratio, seed)?;

    let with_metric: Vec<f64> = plans.iter().filter_map(|p| p.metric).collect();
    let mean_metric = (!with_metric.is_empty())
        .then(|| with_metric.iter().sum::<f64>() / with_metric.len() as f64);

    let config = RunConfig {
        input: args.input.display().to_string(),
        steps,
        ratio,
        seed,
    };
    emitter.write_output(&args.out, plans_to_jsonl(&plans).as_bytes(), &config)?;
    match mean_metric {
        Some(m) => println!(
            "masks: {} plans, mean dispersion {m:.4} -> {}",
            plans.len(),
            args.out.display()
        ),
        None => println!("masks: {} plans -> {}", plans.len(), args.out.display()),
    }
    Ok(())
}
