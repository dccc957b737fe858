//! `build-hier`: score candidate pairs of a dataset and write the
//! similarity hierarchy.

use std::path::PathBuf;

use hiersample::graph::{GraphDataset, MassTable};
use hiersample::hier::{CandidatePolicy, SimilarityHierarchy};
use hiersample::similarity::{MorganTanimoto, SimilarityMeasure, WlKernel};
use serde::Serialize;

use crate::context::{pick, require, usage, Context, FileConfig};
use crate::manifest::Emitter;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Graph dataset (JSON lines)
    #[arg(long = "in")]
    input: PathBuf,
    /// Hierarchy output path (JSON lines)
    #[arg(long)]
    out: PathBuf,
    /// Similarity measure: wl or fp
    #[arg(long)]
    measure: Option<String>,
    /// Similarity threshold in [0, 1]; pairs scoring at least this much
    /// become edges
    #[arg(long)]
    tau: Option<f64>,
    /// Refinement rounds (wl)
    #[arg(long)]
    rounds: Option<usize>,
    /// Neighbourhood radius (fp)
    #[arg(long)]
    radius: Option<usize>,
    /// Fingerprint width in bits (fp)
    #[arg(long)]
    nbits: Option<usize>,
    /// Candidate policy: molecular or structural
    #[arg(long)]
    policy: Option<String>,
    /// Max weight difference fraction (molecular policy)
    #[arg(long)]
    weight_tol: Option<f64>,
    /// Max ring-count difference (molecular policy)
    #[arg(long)]
    ring_tol: Option<usize>,
    /// Max node-count difference (molecular policy)
    #[arg(long)]
    atom_tol: Option<usize>,
    /// Max node-count difference fraction (structural policy)
    #[arg(long)]
    node_tol: Option<f64>,
    /// Max edge-count difference fraction (structural policy)
    #[arg(long)]
    edge_tol: Option<f64>,
    /// Candidate list cap per instance
    #[arg(long)]
    max_candidates: Option<usize>,
    /// Attribute-code mass table (JSON); defaults to the built-in table
    #[arg(long)]
    masses: Option<PathBuf>,
}

#[derive(Serialize)]
struct RunConfig {
    input: String,
    /// Resolved measure as its digest, e.g. `wl/rounds=3`.
    measure: String,
    tau: f64,
    policy: CandidatePolicy,
    masses: Option<String>,
}

fn resolve_measure(
    args: &Args,
    file: &FileConfig,
) -> anyhow::Result<Box<dyn SimilarityMeasure>> {
    let name = require(args.measure.clone(), file.measure.clone(), "measure")?;
    match name.as_str() {
        "wl" => {
            let d = WlKernel::default();
            Ok(Box::new(WlKernel::new(pick(args.rounds, file.rounds, d.rounds))))
        }
        "fp" | "fingerprint" => {
            let d = MorganTanimoto::default();
            Ok(Box::new(MorganTanimoto::new(
                pick(args.radius, file.radius, d.radius),
                pick(args.nbits, file.nbits, d.nbits),
            )))
        }
        other => Err(usage(format!("unknown measure `{other}` (expected wl or fp)"))),
    }
}

fn resolve_policy(args: &Args, file: &FileConfig) -> anyhow::Result<CandidatePolicy> {
    let name = pick(args.policy.clone(), file.policy.clone(), "molecular".into());
    match name.as_str() {
        "molecular" => {
            let CandidatePolicy::Molecular {
                weight_tol,
                ring_tol,
                atom_tol,
                max_candidates,
            } = CandidatePolicy::molecular()
            else {
                unreachable!()
            };
            Ok(CandidatePolicy::Molecular {
                weight_tol: pick(args.weight_tol, file.weight_tol, weight_tol),
                ring_tol: pick(args.ring_tol, file.ring_tol, ring_tol),
                atom_tol: pick(args.atom_tol, file.atom_tol, atom_tol),
                max_candidates: pick(args.max_candidates, file.max_candidates, max_candidates),
            })
        }
        "structural" => {
            let CandidatePolicy::Structural {
                node_tol,
                edge_tol,
                max_candidates,
            } = CandidatePolicy::structural()
            else {
                unreachable!()
            };
            Ok(CandidatePolicy::Structural {
                node_tol: pick(args.node_tol, file.node_tol, node_tol),
                edge_tol: pick(args.edge_tol, file.edge_tol, edge_tol),
                max_candidates: pick(args.max_candidates, file.max_candidates, max_candidates),
            })
        }
        other => Err(usage(format!(
            "unknown policy `{other}` (expected molecular or structural)"
        ))),
    }
}

pub fn run(ctx: &Context, file: &FileConfig, args: Args) -> anyhow::Result<()> {
    let measure = resolve_measure(&args, file)?;
    let tau = require(args.tau, file.tau, "tau")?;
    let policy = resolve_policy(&args, file)?;
    let masses_path = args.masses.clone().or_else(|| file.masses.clone());

    let mut emitter = Emitter::new("build-hier", ctx);
    emitter.record_input(&args.input)?;
    let ds = GraphDataset::load_graph_jsonl(&args.input)?;
    let masses = match &masses_path {
        Some(p) => {
            emitter.record_input(p)?;
            MassTable::from_json_file(p)?
        }
        None => MassTable::standard(),
    };

    let hier = SimilarityHierarchy::build(&ds, measure.as_ref(), tau, &policy, &masses)?;
    let config = RunConfig {
        input: args.input.display().to_string(),
        measure: measure.digest(),
        tau,
        policy,
        masses: masses_path.map(|p| p.display().to_string()),
    };
    emitter.write_output(&args.out, hier.to_jsonl().as_bytes(), &config)?;
    println!(
        "hierarchy: {} vertices, {} edges, tau {}, measure {} -> {}",
        hier.len(),
        hier.edge_count(),
        tau,
        hier.measure(),
        args.out.display()
    );
    Ok(())
}
