//! Positive-pair samplers over a similarity hierarchy, negative selection,
//! and neighbourhood statistics.
//!
//! First-order sampling draws direct hierarchy neighbours without
//! replacement with probability proportional to edge similarity. High-order
//! sampling runs similarity-weighted random walks and keeps the most
//! frequently visited vertices, which approaches the exact second-order
//! rate `P(j) + sum_k P(k) * P_k(j)` as the walk budget grows.
//!
//! Randomness: every target owns isolated substreams derived from the
//! config seed (one per walk for the walk sampler), so targets can be
//! processed on any thread in any order with identical results.

use std::collections::BTreeMap;
use std::collections::HashMap;
use std::collections::HashSet;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::GraphDataset;
use crate::hier::SimilarityHierarchy;
use crate::par;
use crate::rng::{self, stream};
use crate::similarity::SimilarityMeasure;

/// Positive-sampling strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    FirstOrder,
    HighOrder,
}

/// Negative-selection policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NegativePolicy {
    /// Every other batch member and its positives.
    InBatch,
    /// Draws with replacement, proportional to hierarchy degree.
    DegreeWeighted,
}

/// Settings shared by the samplers and the statistics pass.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub strategy: Strategy,
    /// Positives requested per target.
    pub pos_count: usize,
    /// Walk length for the high-order strategy.
    pub walk_len: usize,
    /// Walk count for the high-order strategy.
    pub walk_count: usize,
    pub neg_policy: NegativePolicy,
    /// Negatives per target under the degree-weighted policy.
    pub neg_count: usize,
    /// Batch size for in-batch negatives.
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            strategy: Strategy::FirstOrder,
            pos_count: 3,
            walk_len: 2,
            walk_count: 5,
            neg_policy: NegativePolicy::DegreeWeighted,
            neg_count: 255,
            batch_size: 256,
            seed: 0,
        }
    }
}

/// One target's sampled positives (with weights) and negatives.
#[derive(Debug, Clone, PartialEq)]
pub struct PairSample {
    pub target: String,
    /// `(id, weight)`; weights are positive and sum to 1 when nonempty.
    pub positives: Vec<(String, f64)>,
    pub negatives: Vec<String>,
    /// True when the target had no hierarchy neighbours to sample from.
    pub isolated: bool,
}

#[derive(Serialize, Deserialize)]
struct PairRecord {
    t: String,
    pos: Vec<String>,
    w: Vec<f64>,
    neg: Vec<String>,
}

/// Serialise samples as JSON lines (`{"t", "pos", "w", "neg"}`).
pub fn pairs_to_jsonl(samples: &[PairSample]) -> String {
    let mut out = String::new();
    for s in samples {
        let rec = PairRecord {
            t: s.target.clone(),
            pos: s.positives.iter().map(|(id, _)| id.clone()).collect(),
            w: s.positives.iter().map(|&(_, w)| w).collect(),
            neg: s.negatives.clone(),
        };
        out.push_str(&serde_json::to_string(&rec).expect("pair records serialise"));
        out.push('\n');
    }
    out
}

pub fn save_pairs_jsonl(samples: &[PairSample], path: impl AsRef<Path>) -> Result<()> {
    let mut file = fs::File::create(path)?;
    file.write_all(pairs_to_jsonl(samples).as_bytes())?;
    Ok(())
}

pub fn load_pairs_jsonl(path: impl AsRef<Path>) -> Result<Vec<PairSample>> {
    let path = path.as_ref();
    let shown = path.display().to_string();
    let file = fs::File::open(path)?;
    let mut samples = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: PairRecord = serde_json::from_str(&line)
            .map_err(|e| Error::parse(&shown, lineno + 1, e.to_string()))?;
        if rec.pos.len() != rec.w.len() {
            return Err(Error::parse(&shown, lineno + 1, "pos and w lengths differ"));
        }
        samples.push(PairSample {
            target: rec.t,
            positives: rec.pos.into_iter().zip(rec.w).collect(),
            negatives: rec.neg,
            isolated: false,
        });
    }
    Ok(samples)
}

/// First-order transition distribution: direct neighbours weighted by
/// similarity, normalised to sum 1. Empty for isolated vertices.
pub fn first_order_distribution(h: &SimilarityHierarchy, target: usize) -> Vec<(usize, f64)> {
    let nbrs = h.neighbors(target);
    let total: f64 = nbrs.iter().map(|&(_, w)| w).sum();
    if total <= 0.0 {
        return Vec::new();
    }
    nbrs.iter()
        .map(|&(j, w)| (j as usize, w / total))
        .collect()
}

/// Sample positives among direct neighbours, without replacement, with
/// probability proportional to edge similarity. Fewer than `count`
/// neighbours yields them all; an isolated target yields an empty, flagged
/// sample. Reported weights are the chosen similarities renormalised.
pub fn first_order_positives(
    h: &SimilarityHierarchy,
    target: usize,
    count: usize,
    seed: u64,
) -> Result<PairSample> {
    if count == 0 {
        return Err(Error::InvalidArgument("pos_count must be at least 1".into()));
    }
    let nbrs = h.neighbors(target);
    if nbrs.is_empty() {
        return Ok(PairSample {
            target: h.id(target).to_owned(),
            positives: Vec::new(),
            negatives: Vec::new(),
            isolated: true,
        });
    }
    let weights: Vec<f64> = nbrs.iter().map(|&(_, w)| w).collect();
    let mut rng = rng::substream(seed, &[stream::FIRST_ORDER, target as u64]);
    let picks = rng::weighted_without_replacement(&mut rng, &weights, count);
    let total: f64 = picks.iter().map(|&k| weights[k]).sum();
    let positives = picks
        .iter()
        .map(|&k| {
            let (j, w) = nbrs[k];
            (h.id(j as usize).to_owned(), w / total)
        })
        .collect();
    Ok(PairSample {
        target: h.id(target).to_owned(),
        positives,
        negatives: Vec::new(),
        isolated: false,
    })
}

/// Aggregate visit counts of `walk_count` similarity-weighted walks of
/// `walk_len` steps from `target`. Visits to the target itself are not
/// counted; walks stop early at dead ends.
fn walk_visit_counts(
    h: &SimilarityHierarchy,
    target: usize,
    walk_len: usize,
    walk_count: usize,
    seed: u64,
) -> BTreeMap<usize, u64> {
    let mut visits: BTreeMap<usize, u64> = BTreeMap::new();
    for walk in 0..walk_count {
        let mut rng = rng::substream(
            seed,
            &[stream::HIGH_ORDER, target as u64, walk as u64],
        );
        let mut cur = target;
        for _ in 0..walk_len {
            let nbrs = h.neighbors(cur);
            if nbrs.is_empty() {
                break;
            }
            let weights: Vec<f64> = nbrs.iter().map(|&(_, w)| w).collect();
            let Some(k) = rng::weighted_index(&mut rng, &weights) else {
                break;
            };
            cur = nbrs[k].0 as usize;
            if cur != target {
                *visits.entry(cur).or_default() += 1;
            }
        }
    }
    visits
}

/// Sample positives by walk visit frequency: the `count` most visited
/// vertices, ties broken by higher similarity to the target and then by
/// id. Reported weights are the chosen visit counts renormalised.
pub fn high_order_positives(
    h: &SimilarityHierarchy,
    ds: &GraphDataset,
    sim: &dyn SimilarityMeasure,
    target: usize,
    count: usize,
    walk_len: usize,
    walk_count: usize,
    seed: u64,
) -> Result<PairSample> {
    if count == 0 || walk_len == 0 || walk_count == 0 {
        return Err(Error::InvalidArgument(
            "pos_count, walk_len, and walk_count must all be at least 1".into(),
        ));
    }
    if h.neighbors(target).is_empty() {
        return Ok(PairSample {
            target: h.id(target).to_owned(),
            positives: Vec::new(),
            negatives: Vec::new(),
            isolated: true,
        });
    }
    let visits = walk_visit_counts(h, target, walk_len, walk_count, seed);
    let tg = ds
        .get(h.id(target))
        .ok_or_else(|| Error::UnknownId(h.id(target).to_owned()))?;
    let mut ranked: Vec<(usize, u64, f64)> = Vec::with_capacity(visits.len());
    for (&j, &c) in &visits {
        let other = ds
            .get(h.id(j))
            .ok_or_else(|| Error::UnknownId(h.id(j).to_owned()))?;
        ranked.push((j, c, sim.similarity(tg, other)?));
    }
    ranked.sort_by(|a, b| {
        b.1.cmp(&a.1)
            .then_with(|| b.2.total_cmp(&a.2))
            .then_with(|| h.id(a.0).cmp(h.id(b.0)))
    });
    ranked.truncate(count);
    let total: f64 = ranked.iter().map(|&(_, c, _)| c as f64).sum();
    let positives = ranked
        .iter()
        .map(|&(j, c, _)| (h.id(j).to_owned(), c as f64 / total))
        .collect();
    Ok(PairSample {
        target: h.id(target).to_owned(),
        positives,
        negatives: Vec::new(),
        isolated: false,
    })
}

/// Exact second-order visit rate from `target`:
/// `rate(j) = P(j) + sum_k P(k) * P_k(j)` over first-order transition
/// distributions. The map covers every vertex with a nonzero rate,
/// including two-hop-only vertices (first term zero) and the target itself
/// when a return path exists. When the target has neighbours and each
/// neighbour has any neighbour, the rates sum to exactly 2.
pub fn second_order_rate(h: &SimilarityHierarchy, target: usize) -> Vec<(usize, f64)> {
    let first = first_order_distribution(h, target);
    let mut rate: BTreeMap<usize, f64> = first.iter().copied().collect();
    for &(k, pk) in &first {
        for (j, pkj) in first_order_distribution(h, k) {
            *rate.entry(j).or_insert(0.0) += pk * pkj;
        }
    }
    rate.into_iter().collect()
}

/// In-batch negatives for `member`: every other batch member's target and
/// positives, in batch order, deduplicated, excluding the member's own
/// target and positives.
pub fn in_batch_negatives(batch: &[PairSample], member: usize) -> Result<Vec<String>> {
    if batch.len() < 2 {
        return Err(Error::InvalidArgument(
            "in-batch negatives need a batch of at least 2".into(),
        ));
    }
    let own = &batch[member];
    let mut excluded: HashSet<&str> = HashSet::with_capacity(own.positives.len() + 1);
    excluded.insert(own.target.as_str());
    for (id, _) in &own.positives {
        excluded.insert(id.as_str());
    }
    let mut seen = HashSet::new();
    let mut negatives = Vec::new();
    for (k, other) in batch.iter().enumerate() {
        if k == member {
            continue;
        }
        for id in std::iter::once(&other.target).chain(other.positives.iter().map(|(id, _)| id)) {
            if !excluded.contains(id.as_str()) && seen.insert(id.clone()) {
                negatives.push(id.clone());
            }
        }
    }
    Ok(negatives)
}

/// Draw `count` negatives with replacement, proportional to hierarchy
/// degree, never returning an excluded id. Fails when no eligible vertex
/// has positive degree.
pub fn degree_weighted_negatives(
    h: &SimilarityHierarchy,
    count: usize,
    exclude: &HashSet<String>,
    seed: u64,
    target: usize,
) -> Result<Vec<String>> {
    if count == 0 {
        return Err(Error::InvalidArgument("neg_count must be at least 1".into()));
    }
    let mut eligible: Vec<usize> = Vec::new();
    let mut weights: Vec<f64> = Vec::new();
    for i in 0..h.len() {
        if h.degree(i) > 0 && !exclude.contains(h.id(i)) {
            eligible.push(i);
            weights.push(h.degree(i) as f64);
        }
    }
    if eligible.is_empty() {
        return Err(Error::InvalidArgument(
            "no eligible vertex with positive degree for negative sampling".into(),
        ));
    }
    let mut rng = rng::substream(seed, &[stream::NEGATIVES, target as u64]);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let k = rng::weighted_index(&mut rng, &weights).expect("weights are positive");
        out.push(h.id(eligible[k]).to_owned());
    }
    Ok(out)
}

fn positives_for(
    h: &SimilarityHierarchy,
    ds: &GraphDataset,
    sim: &dyn SimilarityMeasure,
    cfg: &SamplerConfig,
    target: usize,
) -> Result<PairSample> {
    match cfg.strategy {
        Strategy::FirstOrder => first_order_positives(h, target, cfg.pos_count, cfg.seed),
        Strategy::HighOrder => high_order_positives(
            h,
            ds,
            sim,
            target,
            cfg.pos_count,
            cfg.walk_len,
            cfg.walk_count,
            cfg.seed,
        ),
    }
}

/// Sample positives and negatives for every target id.
///
/// Targets are processed in the given order; under the in-batch policy
/// they are chunked into batches of `cfg.batch_size`.
pub fn sample_pairs(
    h: &SimilarityHierarchy,
    ds: &GraphDataset,
    sim: &dyn SimilarityMeasure,
    cfg: &SamplerConfig,
    targets: &[String],
) -> Result<Vec<PairSample>> {
    let indices: Vec<usize> = targets
        .iter()
        .map(|id| h.index_of(id).ok_or_else(|| Error::UnknownId(id.clone())))
        .collect::<Result<_>>()?;
    let sampled = par::map_slice(&indices, |&t| positives_for(h, ds, sim, cfg, t));
    let mut samples: Vec<PairSample> = sampled.into_iter().collect::<Result<_>>()?;

    match cfg.neg_policy {
        NegativePolicy::DegreeWeighted => {
            let negs = par::map_range(samples.len(), |k| -> Result<Vec<String>> {
                let s = &samples[k];
                if s.isolated {
                    return Ok(Vec::new());
                }
                let mut exclude: HashSet<String> =
                    s.positives.iter().map(|(id, _)| id.clone()).collect();
                exclude.insert(s.target.clone());
                degree_weighted_negatives(h, cfg.neg_count, &exclude, cfg.seed, indices[k])
            });
            for (s, neg) in samples.iter_mut().zip(negs) {
                s.negatives = neg?;
            }
        }
        NegativePolicy::InBatch => {
            if cfg.batch_size < 2 {
                return Err(Error::InvalidArgument(
                    "in-batch negatives need batch_size of at least 2".into(),
                ));
            }
            let mut start = 0;
            while start < samples.len() {
                let end = (start + cfg.batch_size).min(samples.len());
                if end - start >= 2 {
                    let negs: Vec<Vec<String>> = (0..end - start)
                        .map(|m| in_batch_negatives(&samples[start..end], m))
                        .collect::<Result<_>>()?;
                    for (s, neg) in samples[start..end].iter_mut().zip(negs) {
                        s.negatives = neg;
                    }
                }
                start = end;
            }
        }
    }
    Ok(samples)
}

/// Aggregate neighbourhood statistics of sampled positives.
///
/// Only positives that are direct hierarchy neighbours of their target
/// enter the statistics. Each value is a mean of per-target means over the
/// targets where the quantity is defined, and is `None` when it never is
/// (for example `inter_pos_sim` when no target keeps two positives).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SamplerStats {
    /// Mean pairwise similarity among a target's positives.
    pub inter_pos_sim: Option<f64>,
    /// Mean similarity between targets and their positives.
    pub target_sim: Option<f64>,
    /// Fraction of positive pairs directly connected in the hierarchy.
    pub connected_ratio: Option<f64>,
}

pub fn sampler_stats(
    h: &SimilarityHierarchy,
    ds: &GraphDataset,
    sim: &dyn SimilarityMeasure,
    cfg: &SamplerConfig,
    targets: &[String],
) -> Result<SamplerStats> {
    let indices: Vec<usize> = targets
        .iter()
        .map(|id| h.index_of(id).ok_or_else(|| Error::UnknownId(id.clone())))
        .collect::<Result<_>>()?;

    struct Row {
        target_sim: Option<f64>,
        inter: Option<f64>,
        connected: Option<f64>,
    }

    let rows = par::map_slice(&indices, |&t| -> Result<Row> {
        let sample = positives_for(h, ds, sim, cfg, t)?;
        // Keep only direct neighbours of the target.
        let nbr_sims: HashMap<usize, f64> = h
            .neighbors(t)
            .iter()
            .map(|&(j, w)| (j as usize, w))
            .collect();
        let kept: Vec<usize> = sample
            .positives
            .iter()
            .filter_map(|(id, _)| h.index_of(id))
            .filter(|j| nbr_sims.contains_key(j))
            .collect();
        let target_sim = (!kept.is_empty()).then(|| {
            kept.iter().map(|j| nbr_sims[j]).sum::<f64>() / kept.len() as f64
        });
        let mut inter = None;
        let mut connected = None;
        if kept.len() >= 2 {
            let mut sim_total = 0.0;
            let mut edge_total = 0usize;
            let mut pairs = 0usize;
            for (a, &p) in kept.iter().enumerate() {
                for &q in &kept[a + 1..] {
                    let gp = ds.get(h.id(p)).ok_or_else(|| Error::UnknownId(h.id(p).into()))?;
                    let gq = ds.get(h.id(q)).ok_or_else(|| Error::UnknownId(h.id(q).into()))?;
                    sim_total += sim.similarity(gp, gq)?;
                    if h.neighbors(p).iter().any(|&(x, _)| x as usize == q) {
                        edge_total += 1;
                    }
                    pairs += 1;
                }
            }
            inter = Some(sim_total / pairs as f64);
            connected = Some(edge_total as f64 / pairs as f64);
        }
        Ok(Row {
            target_sim,
            inter,
            connected,
        })
    });

    let mut acc = [(0.0, 0usize); 3];
    for row in rows {
        let row = row?;
        for (slot, value) in acc
            .iter_mut()
            .zip([row.inter, row.target_sim, row.connected])
        {
            if let Some(v) = value {
                slot.0 += v;
                slot.1 += 1;
            }
        }
    }
    let mean = |slot: (f64, usize)| (slot.1 > 0).then(|| slot.0 / slot.1 as f64);
    Ok(SamplerStats {
        inter_pos_sim: mean(acc[0]),
        target_sim: mean(acc[1]),
        connected_ratio: mean(acc[2]),
    })
}
