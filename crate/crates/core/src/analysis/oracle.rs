//! Synthetic labeled-class experiment: plant one base graph per class,
//! derive noisy instances by edge rewiring, build the similarity
//! hierarchy at each threshold, and measure how often first-order
//! positive sampling crosses class boundaries (false positives) versus
//! how much of each class it can still reach (coverage).

use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{AttributedGraph, GraphDataset, MassTable};
use crate::hier::{CandidatePolicy, SimilarityHierarchy};
use crate::par;
use crate::rng::{self, stream};
use crate::sampler;
use crate::similarity::WlKernel;

/// Parameters of the planted-class experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OracleConfig {
    pub classes: usize,
    pub per_class: usize,
    /// Fraction of each instance's edges rewired away from its class base
    /// and of its node attributes reassigned over the palette.
    pub noise: f64,
    /// Hierarchy thresholds to evaluate, each in [0, 1].
    pub taus: Vec<f64>,
    /// Positives sampled per target at each threshold.
    pub pos_count: usize,
    pub seed: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            classes: 4,
            per_class: 50,
            noise: 0.1,
            taus: vec![0.3, 0.45, 0.6, 0.75, 0.9],
            pos_count: 3,
            seed: 0,
        }
    }
}

/// Measurements at one threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleRow {
    pub tau: f64,
    /// Fraction of all sampled positives whose class differs from their
    /// target's; 0 when nothing was sampled.
    pub false_positive_rate: f64,
    /// Mean fraction of each target's same-class peers adjacent in the
    /// hierarchy.
    pub coverage: f64,
    /// Hierarchy edge count.
    pub edges: usize,
}

/// Class index encoded in a planted id (`"c{class}-g{instance}"`).
pub fn class_label(id: &str) -> Option<usize> {
    id.strip_prefix('c')?.split_once('-')?.0.parse().ok()
}

/// Ring of `node_count` nodes plus `node_count / 2` random chords.
fn class_base<R: Rng>(node_count: u32, rng: &mut R) -> BTreeSet<(u32, u32)> {
    let mut edges: BTreeSet<(u32, u32)> =
        (0..node_count).map(|v| canonical(v, (v + 1) % node_count)).collect();
    let chords = (node_count / 2) as usize;
    let mut added = 0;
    while added < chords {
        let u = rng.gen_range(0..node_count);
        let v = rng.gen_range(0..node_count);
        if u != v && edges.insert(canonical(u, v)) {
            added += 1;
        }
    }
    edges
}

fn canonical(u: u32, v: u32) -> (u32, u32) {
    (u.min(v), u.max(v))
}

/// Replace `count` edges of `edges` with random non-edges, preserving the
/// edge count.
fn rewire<R: Rng>(
    edges: &[(u32, u32)],
    node_count: u32,
    count: usize,
    rng: &mut R,
) -> Result<Vec<(u32, u32)>> {
    let mut set: BTreeSet<(u32, u32)> = edges.iter().copied().collect();
    for &k in rng::shuffled_indices(rng, edges.len()).iter().take(count) {
        set.remove(&edges[k]);
    }
    for _ in 0..count {
        let mut placed = false;
        for _ in 0..10_000 {
            let u = rng.gen_range(0..node_count);
            let v = rng.gen_range(0..node_count);
            if u != v && set.insert(canonical(u, v)) {
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(Error::InvalidArgument(
                "graph too dense to rewire without duplicating edges".into(),
            ));
        }
    }
    Ok(set.into_iter().collect())
}

/// Attribute palette size shared by all planted classes.
const PALETTE_CODES: u32 = 6;

/// Base attribute of node `v` in class `class`: the class's two adjacent
/// palette codes, alternating around the ring. Neighbouring classes share
/// one code, so cross-class similarity falls off gradually rather than
/// collapsing to zero.
fn palette(class: u32, v: u32) -> u32 {
    if v % 2 == 0 {
        class % PALETTE_CODES
    } else {
        (class + 1) % PALETTE_CODES
    }
}

/// Generate the planted dataset: class `c` is a ring of `12 + 2c` nodes
/// with chords whose nodes alternate the class's two palette codes. Each
/// instance rewires `ceil(noise * m)` of the base's edges (redrawn up to
/// 50 times if the result is disconnected) and reassigns `ceil(noise * n)`
/// node attributes uniformly over the palette, so classes separate
/// through both structure and attributes while `noise` controls the
/// within-class spread.
pub fn planted_dataset(
    classes: usize,
    per_class: usize,
    noise: f64,
    seed: u64,
) -> Result<GraphDataset> {
    if classes < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 classes, got {classes}"
        )));
    }
    if per_class == 0 {
        return Err(Error::InvalidArgument("per_class must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&noise) {
        return Err(Error::InvalidArgument(format!(
            "noise must lie in [0, 1], got {noise}"
        )));
    }
    let mut graphs = Vec::with_capacity(classes * per_class);
    for c in 0..classes {
        let node_count = 12 + 2 * c as u32;
        let mut base_rng = rng::substream(seed, &[stream::ORACLE, c as u64]);
        let base: Vec<(u32, u32)> = class_base(node_count, &mut base_rng).into_iter().collect();
        let rewires = (noise * base.len() as f64).ceil().min(base.len() as f64) as usize;
        for i in 0..per_class {
            let mut rng = rng::substream(seed, &[stream::ORACLE, c as u64, i as u64]);
            let id = format!("c{c}-g{i:03}");
            let mut chosen = None;
            for _attempt in 0..50 {
                let edges = rewire(&base, node_count, rewires, &mut rng)?;
                let probe =
                    AttributedGraph::new(&id, node_count as usize, edges.clone(), None, None)?;
                let connected = probe.is_connected();
                chosen = Some(edges);
                if connected {
                    break;
                }
            }
            let edges = chosen.expect("at least one rewiring attempt runs");
            let mut attrs: Vec<Vec<u32>> = (0..node_count)
                .map(|v| vec![palette(c as u32, v)])
                .collect();
            let flips =
                ((noise * node_count as f64).ceil() as usize).min(node_count as usize);
            for &v in rng::shuffled_indices(&mut rng, node_count as usize)
                .iter()
                .take(flips)
            {
                attrs[v] = vec![rng.gen_range(0..PALETTE_CODES)];
            }
            graphs.push(AttributedGraph::new(
                &id,
                node_count as usize,
                edges,
                Some(attrs),
                None,
            )?);
        }
    }
    GraphDataset::from_graphs(graphs)
}

/// Run the experiment: one hierarchy per threshold (all pairs admitted as
/// candidates, so the threshold alone decides edges), first-order
/// positives for every target, and the per-threshold false-positive rate
/// and class coverage.
pub fn synthetic_oracle_experiment(cfg: &OracleConfig) -> Result<Vec<OracleRow>> {
    if cfg.per_class < 2 {
        return Err(Error::InvalidArgument(
            "per_class must be at least 2 so targets have same-class peers".into(),
        ));
    }
    if cfg.taus.is_empty() {
        return Err(Error::InvalidArgument("no thresholds given".into()));
    }
    if cfg.pos_count == 0 {
        return Err(Error::InvalidArgument("pos_count must be at least 1".into()));
    }
    let ds = planted_dataset(cfg.classes, cfg.per_class, cfg.noise, cfg.seed)?;
    let labels: Vec<usize> = ds
        .graphs()
        .iter()
        .map(|g| {
            class_label(g.id()).ok_or_else(|| {
                Error::InvalidArgument(format!("id {} does not encode a class", g.id()))
            })
        })
        .collect::<Result<_>>()?;
    let sim = WlKernel::default();
    let policy = CandidatePolicy::Structural {
        node_tol: 1.0,
        edge_tol: 1.0,
        max_candidates: ds.len(),
    };
    let masses = MassTable::standard();
    let peers = (cfg.per_class - 1) as f64;

    let mut rows = Vec::with_capacity(cfg.taus.len());
    for &tau in &cfg.taus {
        let h = SimilarityHierarchy::build(&ds, &sim, tau, &policy, &masses)?;
        let per_target = par::map_range(ds.len(), |t| -> Result<(usize, usize, f64)> {
            let same = h
                .neighbors(t)
                .iter()
                .filter(|&&(j, _)| labels[j as usize] == labels[t])
                .count();
            let sample = sampler::first_order_positives(&h, t, cfg.pos_count, cfg.seed)?;
            let mismatched = sample
                .positives
                .iter()
                .filter(|(id, _)| class_label(id) != Some(labels[t]))
                .count();
            Ok((sample.positives.len(), mismatched, same as f64 / peers))
        });
        let (mut sampled, mut mismatched, mut coverage) = (0usize, 0usize, 0.0f64);
        for r in per_target {
            let (s, m, c) = r?;
            sampled += s;
            mismatched += m;
            coverage += c;
        }
        rows.push(OracleRow {
            tau,
            false_positive_rate: if sampled == 0 {
                0.0
            } else {
                mismatched as f64 / sampled as f64
            },
            coverage: coverage / ds.len() as f64,
            edges: h.edge_count(),
        });
    }
    Ok(rows)
}

pub fn oracle_to_csv(rows: &[OracleRow]) -> String {
    let mut out = String::from("tau,false_positive_rate,coverage,edges\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.tau, r.false_positive_rate, r.coverage, r.edges
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planted_dataset_is_deterministic_and_shaped() {
        let a = planted_dataset(3, 4, 0.2, 7).unwrap();
        let b = planted_dataset(3, 4, 0.2, 7).unwrap();
        assert_eq!(a.len(), 12);
        for (ga, gb) in a.graphs().iter().zip(b.graphs()) {
            assert_eq!(ga.id(), gb.id());
            assert_eq!(ga.edges(), gb.edges());
        }
        for (i, g) in a.graphs().iter().enumerate() {
            let class = i / 4;
            let n = 12 + 2 * class;
            assert_eq!(class_label(g.id()), Some(class));
            assert_eq!(g.node_count(), n);
            assert_eq!(g.edge_count(), n + n / 2);
            assert!(g.is_connected(), "{} is disconnected", g.id());
        }
    }

    #[test]
    fn zero_noise_copies_the_class_base() {
        let ds = planted_dataset(2, 3, 0.0, 5).unwrap();
        let first = ds.get("c0-g000").unwrap();
        for i in 1..3 {
            let g = ds.get(&format!("c0-g{i:03}")).unwrap();
            assert_eq!(g.edges(), first.edges());
        }
    }

    #[test]
    fn zero_noise_top_threshold_keeps_classes_pure() {
        // Identical copies have similarity exactly 1, so a threshold just
        // below 1 keeps every intra-class edge; cross-class bases differ
        // and fall below it.
        let cfg = OracleConfig {
            classes: 3,
            per_class: 5,
            noise: 0.0,
            taus: vec![0.5, 0.9999],
            pos_count: 3,
            seed: 1,
        };
        let rows = synthetic_oracle_experiment(&cfg).unwrap();
        let top = &rows[1];
        assert_eq!(top.false_positive_rate, 0.0);
        assert_eq!(top.coverage, 1.0);
        assert!(top.edges >= 3 * (5 * 4) / 2);
        assert!(top.false_positive_rate <= rows[0].false_positive_rate);
    }

    #[test]
    fn rising_thresholds_only_remove_edges() {
        let cfg = OracleConfig {
            classes: 3,
            per_class: 8,
            noise: 0.1,
            taus: vec![0.3, 0.6, 0.9],
            pos_count: 3,
            seed: 0,
        };
        let rows = synthetic_oracle_experiment(&cfg).unwrap();
        assert_eq!(rows.len(), 3);
        for pair in rows.windows(2) {
            assert!(pair[1].edges <= pair[0].edges);
        }
        for r in &rows {
            assert!((0.0..=1.0).contains(&r.false_positive_rate));
            assert!((0.0..=1.0).contains(&r.coverage));
        }
    }

    #[test]
    fn invalid_configs_are_rejected() {
        assert!(planted_dataset(1, 5, 0.1, 0).is_err());
        assert!(planted_dataset(2, 0, 0.1, 0).is_err());
        assert!(planted_dataset(2, 5, 1.5, 0).is_err());
        let bad = OracleConfig {
            taus: Vec::new(),
            ..OracleConfig::default()
        };
        assert!(synthetic_oracle_experiment(&bad).is_err());
        let bad = OracleConfig {
            pos_count: 0,
            ..OracleConfig::default()
        };
        assert!(synthetic_oracle_experiment(&bad).is_err());
        let bad = OracleConfig {
            per_class: 1,
            ..OracleConfig::default()
        };
        assert!(synthetic_oracle_experiment(&bad).is_err());
    }

    #[test]
    fn csv_has_one_row_per_threshold() {
        let rows = vec![
            OracleRow {
                tau: 0.3,
                false_positive_rate: 0.25,
                coverage: 0.9,
                edges: 100,
            },
            OracleRow {
                tau: 0.6,
                false_positive_rate: 0.1,
                coverage: 0.7,
                edges: 60,
            },
        ];
        let csv = oracle_to_csv(&rows);
        assert!(csv.starts_with("tau,false_positive_rate,coverage,edges\n"));
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.contains("0.3,0.25,0.9,100"));
    }
}
