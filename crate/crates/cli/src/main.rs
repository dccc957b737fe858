//! Batch command line for the similarity-hierarchy pipeline: build a
//! hierarchy over a graph dataset, sample positive/negative pairs, plan
//! adaptive masks, sweep augmentation strength, and run the numerical
//! analysis suite.
//!
//! Every output file is written atomically (temp-then-rename) and is
//! accompanied by `<output>.manifest.json` recording the tool version, the
//! fully resolved configuration with its SHA-256 digest, the SHA-256 of
//! every input file, and the explicit thread count, so a run can be
//! reproduced byte-for-byte from its manifest.
//!
//! Exit codes: 0 success, 1 data error (unreadable or invalid inputs,
//! infeasible parameters), 2 usage error (bad flags or config file).

mod commands;
mod context;
mod manifest;

use clap::{Parser, Subcommand};

use crate::commands::{
    analyze_bias, analyze_grad, build_hier, mask, oracle_exp, sample, stats, sweep,
};
use crate::context::{Context, Usage};

#[derive(Parser)]
#[command(
    name = "hiersample",
    version,
    about = "Similarity hierarchies, pair samplers, and contrastive numerics for graph corpora"
)]
struct Cli {
    /// Worker threads. Precedence: this flag, then the config file, then
    /// HIER_SAMPLER_THREADS, then 1.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// JSON config file supplying any long flag's value; explicit flags
    /// win over the file.
    #[arg(long, global = true)]
    config: Option<std::path::PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a similarity hierarchy over a graph dataset
    BuildHier(build_hier::Args),
    /// Sample positive and negative pairs from a hierarchy
    Sample(sample::Args),
    /// Plan adaptive attribute masks for every graph
    Mask(mask::Args),
    /// Sweep augmentation kinds over a ratio grid
    Sweep(sweep::Args),
    /// Threshold-bias decomposition and posterior grids for a score model
    AnalyzeBias(analyze_bias::Args),
    /// Contrastive gradient checks against finite differences
    AnalyzeGrad(analyze_grad::Args),
    /// Synthetic planted-class oracle experiment
    OracleExp(oracle_exp::Args),
    /// Neighbourhood statistics of sampled positives
    Stats(stats::Args),
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        // Clap exits 0 for --help/--version and 2 for usage errors.
        Err(e) => e.exit(),
    };
    if let Err(e) = run(cli) {
        eprintln!("error: {e:#}");
        let code = if e.is::<Usage>() { 2 } else { 1 };
        std::process::exit(code);
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let file = context::load_file_config(cli.config.as_deref())?;
    let ctx = Context::resolve(cli.threads, &file)?;
    ctx.install_pool()?;
    match cli.command {
        Command::BuildHier(args) => build_hier::run(&ctx, &file, args),
        Command::Sample(args) => sample::run(&ctx, &file, args),
        Command::Mask(args) => mask::run(&ctx, &file, args),
        Command::Sweep(args) => sweep::run(&ctx, &file, args),
        Command::AnalyzeBias(args) => analyze_bias::run(&ctx, &file, args),
        Command::AnalyzeGrad(args) => analyze_grad::run(&ctx, &file, args),
        Command::OracleExp(args) => oracle_exp::run(&ctx, &file, args),
        Command::Stats(args) => stats::run(&ctx, &file, args),
    }
}
