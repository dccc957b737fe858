//! `analyze-grad`: closed-form loss checks and finite-difference
//! verification of both contrastive gradients over random configurations.

use std::path::PathBuf;

use hiersample::analysis::contrast::{
    self, ContrastConfig, EmbeddingSet,
};
use hiersample::rng;
use rand::Rng as _;
use serde::Serialize;

use crate::context::{pick, Context, FileConfig};
use crate::manifest::Emitter;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Per-configuration check report output path (CSV)
    #[arg(long)]
    out: PathBuf,
    /// Random configurations to check
    #[arg(long)]
    configs: Option<usize>,
    /// Embedded instances per configuration
    #[arg(long)]
    instances: Option<usize>,
    /// Embedding dimension
    #[arg(long)]
    dim: Option<usize>,
    /// Finite-difference step
    #[arg(long)]
    step: Option<f64>,
    /// Softmax temperature
    #[arg(long)]
    temperature: Option<f64>,
    /// Negative count scaling the pool mean
    #[arg(long)]
    neg_count: Option<usize>,
    /// Seed for the random configurations
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Serialize)]
struct RunConfig {
    configs: usize,
    instances: usize,
    dim: usize,
    step: f64,
    temperature: f64,
    neg_count: usize,
    seed: u64,
}

fn rel_err(got: &[f64], oracle: &[f64]) -> f64 {
    let diff: f64 = got
        .iter()
        .zip(oracle)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    let scale: f64 = oracle.iter().map(|x| x * x).sum::<f64>().sqrt();
    diff / scale.max(1e-300)
}

pub fn run(ctx: &Context, file: &FileConfig, args: Args) -> anyhow::Result<()> {
    let configs = pick(args.configs, file.configs, 50);
    let instances = pick(args.instances, file.instances, 8);
    let dim = pick(args.dim, file.dim, 16);
    let step = pick(args.step, file.step, 1e-5);
    let seed = pick(args.seed, file.seed, 0);
    let cfg = ContrastConfig {
        temperature: pick(args.temperature, file.temperature, ContrastConfig::default().temperature),
        neg_count: pick(args.neg_count, file.neg_count, ContrastConfig::default().neg_count),
    };
    if instances < 4 {
        return Err(crate::context::usage(
            "gradient checks need at least 4 instances",
        ));
    }

    // Closed-form anchors: a positive tied with one equally-scored
    // pool vector gives exactly ln 2; an anchor that is its own positive
    // against an orthogonal pool gives ln(1 + N exp(-1/t)).
    let ln2_err = {
        let es = EmbeddingSet::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]])?;
        let loss = contrast::infonce_expected_loss(
            &es,
            0,
            &[(1, 1.0)],
            &[1],
            &ContrastConfig {
                temperature: cfg.temperature,
                neg_count: 1,
            },
        )?;
        (loss - std::f64::consts::LN_2).abs()
    };
    let closed_err = {
        let mut basis = vec![vec![0.0; instances]; instances];
        for (i, row) in basis.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        let es = EmbeddingSet::new(basis)?;
        let pool: Vec<usize> = (1..instances).collect();
        let loss = contrast::infonce_expected_loss(&es, 0, &[(0, 1.0)], &pool, &cfg)?;
        let expected = (cfg.neg_count as f64 * (-1.0 / cfg.temperature).exp()).ln_1p();
        (loss - expected).abs()
    };

    let mut csv = String::from("case,loss,self_rel_err,cross_rel_err,tangency\n");
    let mut seed_rng = rng::substream(seed, &[0x57a7]);
    let (mut max_self, mut max_cross, mut max_tan) = (0.0f64, 0.0f64, 0.0f64);
    for case in 0..configs {
        let es = EmbeddingSet::random(instances, dim, seed_rng.gen())?;
        let i = case % instances;
        let positives = [((i + 1) % instances, 0.6), ((i + 3) % instances, 0.4)];
        let pool: Vec<usize> = (0..instances).filter(|&k| k != i).collect();

        let loss = contrast::infonce_expected_loss(&es, i, &positives, &pool, &cfg)?;
        let grad = contrast::self_gradient(&es, i, &positives, &pool, &cfg)?;
        let fd = contrast::fd_self_gradient(&es, i, &positives, &pool, &cfg, step)?;
        let self_err = rel_err(&grad, &fd);
        let tangency: f64 = grad
            .iter()
            .zip(es.unit(i))
            .map(|(g, z)| g * z)
            .sum::<f64>()
            .abs();

        let j = (i + 1) % instances;
        let pool_j: Vec<usize> = (0..instances).filter(|&k| k != i && k != j).collect();
        let cross = contrast::cross_gradient(&es, i, j, 1.0, &pool_j, &cfg)?;
        let cross_fd = contrast::fd_cross_gradient(&es, i, j, &pool_j, &cfg, step)?;
        let cross_err = rel_err(&cross, &cross_fd);

        max_self = max_self.max(self_err);
        max_cross = max_cross.max(cross_err);
        max_tan = max_tan.max(tangency);
        csv.push_str(&format!("{case},{loss},{self_err},{cross_err},{tangency}\n"));
    }

    let config = RunConfig {
        configs,
        instances,
        dim,
        step,
        temperature: cfg.temperature,
        neg_count: cfg.neg_count,
        seed,
    };
    let emitter = Emitter::new("analyze-grad", ctx);
    emitter.write_output(&args.out, csv.as_bytes(), &config)?;

    println!("symmetric loss |err| = {ln2_err:.3e} (vs ln 2)");
    println!("closed-form loss |err| = {closed_err:.3e}");
    println!(
        "{configs} configs: max self rel err {max_self:.3e}, max cross rel err {max_cross:.3e}, \
         max |tangency| {max_tan:.3e} -> {}",
        args.out.display()
    );
    Ok(())
}
