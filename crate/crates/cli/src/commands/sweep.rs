//! `sweep`: augmentation similarity/legality sweep over a ratio grid.

use std::path::PathBuf;
use std::str::FromStr;

use hiersample::augment::{similarity_sweep, sweep_to_csv, Augmentation, ValenceTable};
use hiersample::graph::GraphDataset;
use hiersample::similarity::{MorganTanimoto, SimilarityMeasure, WlKernel};
use serde::Serialize;

use crate::context::{pick, usage, Context, FileConfig};
use crate::manifest::Emitter;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Graph dataset (JSON lines)
    #[arg(long = "in")]
    input: PathBuf,
    /// Sweep report output path (CSV)
    #[arg(long)]
    out: PathBuf,
    /// Augmentation kinds (comma separated): drop-node, drop-edge,
    /// mask-attr, rwr-subgraph
    #[arg(long, value_delimiter = ',')]
    kinds: Option<Vec<String>>,
    /// Ratio grid, strictly ascending (comma separated)
    #[arg(long, value_delimiter = ',')]
    ratios: Option<Vec<f64>>,
    /// Seeds to average over (comma separated)
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Number of leading graphs to sweep (defaults to the whole dataset)
    #[arg(long)]
    sample_size: Option<usize>,
    /// Similarity measure scoring original vs augmented: fp or wl
    #[arg(long)]
    measure: Option<String>,
    /// Valence table (JSON); defaults to the built-in table
    #[arg(long)]
    valences: Option<PathBuf>,
}

#[derive(Serialize)]
struct RunConfig {
    input: String,
    kinds: Vec<Augmentation>,
    ratios: Vec<f64>,
    seeds: Vec<u64>,
    sample_size: usize,
    measure: String,
    valences: Option<String>,
}

pub fn run(ctx: &Context, file: &FileConfig, args: Args) -> anyhow::Result<()> {
    let kind_names = args
        .kinds
        .or_else(|| file.kinds.clone())
        .unwrap_or_else(|| vec!["drop-node".into(), "drop-edge".into()]);
    let kinds: Vec<Augmentation> = kind_names
        .iter()
        .map(|s| Augmentation::from_str(s).map_err(|e| usage(e.to_string())))
        .collect::<anyhow::Result<_>>()?;
    let ratios = pick(
        args.ratios,
        file.ratios.clone(),
        vec![0.05, 0.10, 0.15, 0.20, 0.25, 0.30],
    );
    let seeds = pick(args.seeds, file.seeds.clone(), vec![0, 1, 2]);
    let measure_name = pick(args.measure, file.measure.clone(), "fp".into());
    let sim: Box<dyn SimilarityMeasure> = match measure_name.as_str() {
        "fp" | "fingerprint" => Box::new(MorganTanimoto::default()),
        "wl" => Box::new(WlKernel::default()),
        other => return Err(usage(format!("unknown measure `{other}` (expected fp or wl)"))),
    };
    let valences_path = args.valences.or_else(|| file.valences.clone());

    let mut emitter = Emitter::new("sweep", ctx);
    emitter.record_input(&args.input)?;
    let ds = GraphDataset::load_graph_jsonl(&args.input)?;
    let valences = match &valences_path {
        Some(p) => {
            emitter.record_input(p)?;
            ValenceTable::from_json_file(p)?
        }
        None => ValenceTable::standard(),
    };
    let sample_size = pick(args.sample_size, file.sample_size, ds.len());

    let rows = similarity_sweep(&ds, sim.as_ref(), &valences, &kinds, &ratios, &seeds, sample_size)?;

    let config = RunConfig {
        input: args.input.display().to_string(),
        kinds,
        ratios,
        seeds,
        sample_size,
        measure: sim.digest(),
        valences: valences_path.map(|p| p.display().to_string()),
    };
    emitter.write_output(&args.out, sweep_to_csv(&rows).as_bytes(), &config)?;

    println!("{:<14} {:>6} {:>10} {:>10}", "kind", "ratio", "mean_sim", "legal");
    for row in &rows {
        let legal = row
            .legal_frac
            .map(|v| format!("{v:.4}"))
            .unwrap_or_else(|| "-".into());
        println!(
            "{:<14} {:>6.2} {:>10.4} {:>10}",
            row.kind.to_string(),
            row.ratio,
            row.mean_sim,
            legal
        );
    }
    Ok(())
}
