//! `oracle-exp`: false-positive rate of first-order sampling against a
//! planted-class ground truth, swept over the similarity threshold.

use std::path::PathBuf;

use hiersample::analysis::oracle::{oracle_to_csv, synthetic_oracle_experiment, OracleConfig};

use crate::context::{pick, Context, FileConfig};
use crate::manifest::Emitter;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Per-threshold report output path (CSV)
    #[arg(long)]
    out: PathBuf,
    /// Planted classes
    #[arg(long)]
    classes: Option<usize>,
    /// Instances per class
    #[arg(long)]
    per_class: Option<usize>,
    /// Fraction of each instance's edges rewired and node attributes
    /// reassigned away from its class base
    #[arg(long)]
    noise: Option<f64>,
    /// Similarity thresholds to sweep (comma separated)
    #[arg(long, value_delimiter = ',')]
    taus: Option<Vec<f64>>,
    /// Positives sampled per target
    #[arg(long)]
    pos_count: Option<usize>,
    /// Generator and sampler seed
    #[arg(long)]
    seed: Option<u64>,
}

pub fn run(ctx: &Context, file: &FileConfig, args: Args) -> anyhow::Result<()> {
    let defaults = OracleConfig::default();
    let cfg = OracleConfig {
        classes: pick(args.classes, file.classes, defaults.classes),
        per_class: pick(args.per_class, file.per_class, defaults.per_class),
        noise: pick(args.noise, file.noise, defaults.noise),
        taus: pick(args.taus, file.taus.clone(), defaults.taus),
        pos_count: pick(args.pos_count, file.pos_count, defaults.pos_count),
        seed: pick(args.seed, file.seed, defaults.seed),
    };

    let rows = synthetic_oracle_experiment(&cfg)?;
    let emitter = Emitter::new("oracle-exp", ctx);
    emitter.write_output(&args.out, oracle_to_csv(&rows).as_bytes(), &cfg)?;

    println!("{:>6} {:>10} {:>10} {:>8}", "tau", "fp_rate", "coverage", "edges");
    for r in &rows {
        println!(
            "{:>6.2} {:>10.4} {:>10.4} {:>8}",
            r.tau, r.false_positive_rate, r.coverage, r.edges
        );
    }
    Ok(())
}
