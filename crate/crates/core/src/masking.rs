//! Multi-step adaptive mask selection and the mask-dispersion metric.
//!
//! Masking proceeds in steps. Step 1 draws uniformly; every later step
//! scores the remaining nodes by how little a node predictor's output for
//! them changed when the previous step's nodes were masked, then draws
//! proportionally to those scores. Nodes whose predictions were perturbed
//! (typically close to the masked region) score low, so masks spread out
//! across the graph instead of clumping, which is measurable with
//! [`avg_min_masked_distance`].

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::collections::HashSet;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{AttributedGraph, GraphDataset};
use crate::par;
use crate::rng::{self, stream};

/// Per-node attribute predictor used as the perturbation probe.
pub trait NodePredictor: Sync {
    /// One probability row per node over the primary-attribute vocabulary,
    /// predicting under the given masked node set. Pure: identical inputs
    /// yield bit-identical rows.
    fn predict(&self, g: &AttributedGraph, masked: &[u32]) -> Result<Vec<Vec<f64>>>;
}

/// Untrained deterministic message-passing predictor.
///
/// Three rounds of closed-neighbourhood sum aggregation with seeded
/// Gaussian affine maps and ReLU, then an affine head whose logits are
/// sharpened by a fixed gain before the softmax. The gain stands in for
/// training: it makes the rows confident the way a fitted attribute
/// predictor's would be, so an unchanged prediction has small
/// cross-entropy against itself and the perturbation score stays
/// discriminative rather than clamping to zero everywhere.
pub struct ReferencePredictor {
    vocab: u32,
    width: usize,
    embed: Vec<Vec<f64>>,
    layers: Vec<(Vec<Vec<f64>>, Vec<f64>)>,
    out_w: Vec<Vec<f64>>,
    out_b: Vec<f64>,
}

const PREDICTOR_LAYERS: usize = 3;
const PREDICTOR_WIDTH: usize = 32;
/// Logit multiplier of the output head; keeps typical self cross-entropy
/// well under the score's clamping point of 1 nat.
const PREDICTOR_GAIN: f64 = 32.0;

impl ReferencePredictor {
    /// Build the predictor for a primary-attribute vocabulary of size
    /// `vocab` (codes `0..vocab`; code `vocab` is the reserved mask code).
    pub fn new(vocab: u32, seed: u64) -> Self {
        let width = PREDICTOR_WIDTH;
        let mut rng = rng::substream(seed, &[stream::PREDICTOR]);
        let scale = 1.0 / (width as f64).sqrt();
        let mut matrix = |rows: usize, cols: usize| -> Vec<Vec<f64>> {
            (0..rows)
                .map(|_| {
                    (0..cols)
                        .map(|_| rng::standard_normal(&mut rng) * scale)
                        .collect()
                })
                .collect()
        };
        let embed = matrix(vocab as usize + 1, width);
        let mut layers = Vec::with_capacity(PREDICTOR_LAYERS);
        for _ in 0..PREDICTOR_LAYERS {
            let w = matrix(width, width);
            let b = matrix(1, width).remove(0);
            layers.push((w, b));
        }
        let out_w = matrix(vocab as usize, width);
        let out_b = matrix(1, vocab as usize).remove(0);
        Self {
            vocab,
            width,
            embed,
            layers,
            out_w,
            out_b,
        }
    }

    pub fn vocab(&self) -> u32 {
        self.vocab
    }
}

impl NodePredictor for ReferencePredictor {
    fn predict(&self, g: &AttributedGraph, masked: &[u32]) -> Result<Vec<Vec<f64>>> {
        if g.node_arity() == 0 {
            return Err(Error::Unattributed(g.id().to_owned()));
        }
        let n = g.node_count();
        let masked_set: HashSet<u32> = masked.iter().copied().collect();
        if let Some(&v) = masked.iter().find(|&&v| v as usize >= n) {
            return Err(Error::InvalidArgument(format!(
                "masked node {v} out of range for graph `{}` with {n} nodes",
                g.id()
            )));
        }
        let mut h: Vec<Vec<f64>> = Vec::with_capacity(n);
        for v in 0..n as u32 {
            let code = if masked_set.contains(&v) {
                self.vocab
            } else {
                g.node_attr(v)[0]
            };
            if code > self.vocab {
                return Err(Error::InvalidArgument(format!(
                    "attribute code {code} of node {v} in `{}` exceeds predictor vocabulary {}",
                    g.id(),
                    self.vocab
                )));
            }
            h.push(self.embed[code as usize].clone());
        }
        for (w, b) in &self.layers {
            let mut next = Vec::with_capacity(n);
            for v in 0..n as u32 {
                let mut m = h[v as usize].clone();
                for &u in g.neighbors(v) {
                    for (slot, x) in m.iter_mut().zip(&h[u as usize]) {
                        *slot += x;
                    }
                }
                let row: Vec<f64> = (0..self.width)
                    .map(|r| {
                        let z: f64 = w[r].iter().zip(&m).map(|(a, x)| a * x).sum::<f64>() + b[r];
                        z.max(0.0)
                    })
                    .collect();
                next.push(row);
            }
            h = next;
        }
        let mut out = Vec::with_capacity(n);
        for hv in &h {
            let logits: Vec<f64> = self
                .out_w
                .iter()
                .zip(&self.out_b)
                .map(|(row, b)| {
                    PREDICTOR_GAIN * (row.iter().zip(hv).map(|(a, x)| a * x).sum::<f64>() + b)
                })
                .collect();
            let peak = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = logits.iter().map(|&z| (z - peak).exp()).collect();
            let total: f64 = exps.iter().sum();
            out.push(exps.into_iter().map(|e| e / total).collect());
        }
        Ok(out)
    }
}

/// Perturbation score of one node: `max(0, 1 - CE(y_prev, y_cur))` with
/// `y_prev` as the target distribution and natural-log cross-entropy.
/// A prediction that collapses probability away from the previous winner
/// drives the cross-entropy above 1 and the score clamps to 0.
pub fn perturbation_score(y_prev: &[f64], y_cur: &[f64]) -> f64 {
    let mut ce = 0.0;
    for (&p, &q) in y_prev.iter().zip(y_cur) {
        if p > 0.0 {
            if q > 0.0 {
                ce -= p * q.ln();
            } else {
                return 0.0;
            }
        }
    }
    (1.0 - ce).max(0.0)
}

/// Perturbation scores of every node: predictions under `s_cur` scored
/// against predictions under `s_prev`.
pub fn perturbation_scores(
    m: &dyn NodePredictor,
    g: &AttributedGraph,
    s_cur: &[u32],
    s_prev: &[u32],
) -> Result<Vec<f64>> {
    let y_prev = m.predict(g, s_prev)?;
    let y_cur = m.predict(g, s_cur)?;
    Ok(y_prev
        .iter()
        .zip(&y_cur)
        .map(|(p, q)| perturbation_score(p, q))
        .collect())
}

/// A planned multi-step mask for one graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskPlan {
    pub id: String,
    /// Disjoint node sets, one per step, each sorted ascending.
    pub steps: Vec<Vec<u32>>,
    /// Scores that drove each step's draw (empty for step 1), keyed by
    /// candidate node. Not part of the serialised form.
    #[serde(skip)]
    pub scores: Vec<BTreeMap<u32, f64>>,
    /// Mask dispersion of the final set, when defined.
    pub metric: Option<f64>,
}

impl MaskPlan {
    /// Union of all steps, sorted.
    pub fn masked_set(&self) -> Vec<u32> {
        let mut all: Vec<u32> = self.steps.iter().flatten().copied().collect();
        all.sort_unstable();
        all
    }

    pub fn total(&self) -> usize {
        self.steps.iter().map(Vec::len).sum()
    }
}

/// Uniform mask of `count` nodes (the single-step baseline).
pub fn uniform_mask(g: &AttributedGraph, count: usize, rng: &mut impl Rng) -> Result<Vec<u32>> {
    if count > g.node_count() {
        return Err(Error::InvalidArgument(format!(
            "cannot mask {count} of {} nodes",
            g.node_count()
        )));
    }
    let order = rng::shuffled_indices(rng, g.node_count());
    let mut picks: Vec<u32> = order[..count].iter().map(|&v| v as u32).collect();
    picks.sort_unstable();
    Ok(picks)
}

/// Plan a mask with explicit per-step counts. Step 1 is uniform; later
/// steps draw without replacement proportional to perturbation scores,
/// falling back to uniform when every remaining score is zero. Zero
/// counts are skipped without consuming randomness.
pub fn adaptive_mask_counts(
    g: &AttributedGraph,
    m: &dyn NodePredictor,
    counts: &[usize],
    rng: &mut impl Rng,
) -> Result<MaskPlan> {
    let n = g.node_count();
    let total: usize = counts.iter().sum();
    if total == 0 {
        return Err(Error::InvalidArgument("mask plan with zero total".into()));
    }
    if total > n {
        return Err(Error::InvalidArgument(format!(
            "cannot mask {total} of {n} nodes"
        )));
    }
    let mut steps: Vec<Vec<u32>> = Vec::new();
    let mut scores: Vec<BTreeMap<u32, f64>> = Vec::new();
    let mut cur: Vec<u32> = Vec::new();
    let mut prev: Vec<u32> = Vec::new();
    let mut first = true;
    for &count in counts {
        if count == 0 {
            continue;
        }
        let mut step: Vec<u32>;
        if first {
            step = uniform_mask(g, count, rng)?;
            scores.push(BTreeMap::new());
            first = false;
        } else {
            let node_scores = perturbation_scores(m, g, &cur, &prev)?;
            let masked: HashSet<u32> = cur.iter().copied().collect();
            let candidates: Vec<u32> =
                (0..n as u32).filter(|v| !masked.contains(v)).collect();
            let weights: Vec<f64> = candidates
                .iter()
                .map(|&v| node_scores[v as usize])
                .collect();
            scores.push(candidates.iter().map(|&v| (v, node_scores[v as usize])).collect());
            let picks = rng::weighted_without_replacement(rng, &weights, count);
            step = picks.into_iter().map(|k| candidates[k]).collect();
            step.sort_unstable();
        }
        prev = cur.clone();
        cur.extend(&step);
        steps.push(step);
    }
    Ok(MaskPlan {
        id: g.id().to_owned(),
        steps,
        scores,
        metric: None,
    })
}

/// Plan a mask of exactly `steps * alpha` nodes in `steps` equal steps.
pub fn adaptive_mask(
    g: &AttributedGraph,
    m: &dyn NodePredictor,
    steps: usize,
    alpha: usize,
    rng: &mut impl Rng,
) -> Result<MaskPlan> {
    if steps == 0 || alpha == 0 {
        return Err(Error::InvalidArgument(
            "steps and alpha must both be at least 1".into(),
        ));
    }
    adaptive_mask_counts(g, m, &vec![alpha; steps], rng)
}

/// Per-step counts for masking a `ratio` fraction of `n` nodes in at most
/// `steps` steps, as equal as possible: every step gets
/// `floor(total / steps)` and the first `total % steps` steps one more, so
/// the total is exactly `ceil(ratio * n)` and raising `steps` never
/// collapses trailing steps to zero until the step count exceeds the
/// total.
pub fn ratio_step_counts(n: usize, ratio: f64, steps: usize) -> Result<Vec<usize>> {
    if steps == 0 {
        return Err(Error::InvalidArgument("steps must be at least 1".into()));
    }
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "mask ratio must lie in (0, 1], got {ratio}"
        )));
    }
    let total = ((ratio * n as f64).ceil() as usize).min(n);
    if total == 0 {
        return Err(Error::InvalidArgument(format!(
            "mask ratio {ratio} selects no nodes of {n}"
        )));
    }
    let base = total / steps;
    let extra = total % steps;
    Ok((0..steps).map(|i| base + usize::from(i < extra)).collect())
}

/// Plan a mask covering a `ratio` fraction of the graph in `steps` steps.
pub fn adaptive_mask_ratio(
    g: &AttributedGraph,
    m: &dyn NodePredictor,
    steps: usize,
    ratio: f64,
    rng: &mut impl Rng,
) -> Result<MaskPlan> {
    let counts = ratio_step_counts(g.node_count(), ratio, steps)?;
    adaptive_mask_counts(g, m, &counts, rng)
}

/// Mask dispersion: the mean over masked nodes of the hop distance to the
/// nearest other masked node. Nodes that reach no other masked node are
/// left out of the mean and counted in `excluded`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Dispersion {
    pub mean: f64,
    pub excluded: usize,
}

pub fn avg_min_masked_distance(g: &AttributedGraph, masked: &[u32]) -> Result<Dispersion> {
    let masked: BTreeSet<u32> = masked.iter().copied().collect();
    if masked.len() < 2 {
        return Err(Error::InvalidArgument(
            "dispersion needs at least 2 masked nodes".into(),
        ));
    }
    if let Some(&v) = masked.iter().find(|&&v| v as usize >= g.node_count()) {
        return Err(Error::InvalidArgument(format!(
            "masked node {v} out of range for graph `{}`",
            g.id()
        )));
    }
    let mut total = 0.0;
    let mut included = 0usize;
    let mut excluded = 0usize;
    for &v in &masked {
        let dist = g.bfs_distances(v);
        let nearest = masked
            .iter()
            .filter(|&&u| u != v)
            .filter_map(|&u| dist[u as usize])
            .min();
        match nearest {
            Some(d) => {
                total += f64::from(d);
                included += 1;
            }
            None => excluded += 1,
        }
    }
    if included == 0 {
        return Err(Error::InvalidArgument(
            "no masked node reaches another masked node".into(),
        ));
    }
    Ok(Dispersion {
        mean: total / included as f64,
        excluded,
    })
}

/// Plan masks for a whole dataset, one isolated substream per graph, and
/// record each plan's dispersion (absent where it is undefined, e.g. a
/// single masked node).
pub fn plan_masks(
    ds: &GraphDataset,
    m: &dyn NodePredictor,
    steps: usize,
    ratio: f64,
    seed: u64,
) -> Result<Vec<MaskPlan>> {
    let plans = par::map_range(ds.len(), |i| -> Result<MaskPlan> {
        let g = ds.graph(i);
        let mut rng = rng::substream(seed, &[stream::MASK, i as u64]);
        let mut plan = adaptive_mask_ratio(g, m, steps, ratio, &mut rng)?;
        plan.metric = avg_min_masked_distance(g, &plan.masked_set())
            .ok()
            .map(|d| d.mean);
        Ok(plan)
    });
    plans.into_iter().collect()
}

/// Serialise plans as JSON lines (`{"id", "steps", "metric"}`).
pub fn plans_to_jsonl(plans: &[MaskPlan]) -> String {
    let mut out = String::new();
    for p in plans {
        out.push_str(&serde_json::to_string(p).expect("mask plans serialise"));
        out.push('\n');
    }
    out
}

pub fn save_plans_jsonl(plans: &[MaskPlan], path: impl AsRef<Path>) -> Result<()> {
    let mut file = fs::File::create(path)?;
    file.write_all(plans_to_jsonl(plans).as_bytes())?;
    Ok(())
}

pub fn load_plans_jsonl(path: impl AsRef<Path>) -> Result<Vec<MaskPlan>> {
    let path = path.as_ref();
    let shown = path.display().to_string();
    let file = fs::File::open(path)?;
    let mut plans = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let plan: MaskPlan = serde_json::from_str(&line)
            .map_err(|e| Error::parse(&shown, lineno + 1, e.to_string()))?;
        plans.push(plan);
    }
    Ok(plans)
}
