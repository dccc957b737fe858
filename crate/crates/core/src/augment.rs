//! Augmentation baselines, molecule legality, and the similarity sweep.
//!
//! The four augmentations are deliberately naive: uniform node drops,
//! uniform edge drops, attribute masking, and random-walk-with-restart
//! subgraph extraction. The sweep harness measures how quickly each one
//! destroys similarity to the source graph and how often the result is
//! still a legal molecule, which is exactly the failure mode that
//! similarity-aware positive sampling avoids.

use std::collections::BTreeMap;
use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{AttributedGraph, GraphDataset};
use crate::par;
use crate::rng::{self, stream};
use crate::similarity::SimilarityMeasure;

/// Restart probability of the subgraph random walk: each step returns to
/// the seed node with this probability, otherwise moves to a uniformly
/// random neighbour.
pub const RWR_RESTART: f64 = 0.8;

// The walk repeats until enough distinct nodes are visited; this budget
// (steps per call, scaled by graph size) bounds pathological cases such as
// long chains where far nodes are effectively unreachable under a 0.8
// restart rate. When the budget runs out the subgraph is simply smaller
// than requested.
const RWR_STEP_BUDGET_PER_NODE: usize = 200;

/// Reserved attribute codes for masking: one-past-the-end of each
/// attribute position's vocabulary, so masked rows stay schema-valid and
/// can never collide with a real code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskCodes {
    pub node: Vec<u32>,
    pub edge: Vec<u32>,
}

impl MaskCodes {
    /// Mask codes for a dataset: its per-position vocabulary sizes.
    pub fn from_dataset(ds: &GraphDataset) -> Self {
        Self {
            node: ds.node_vocab().to_vec(),
            edge: ds.edge_vocab().to_vec(),
        }
    }
}

/// Augmentation kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Augmentation {
    DropNode,
    DropEdge,
    MaskAttr,
    RwrSubgraph,
}

impl Augmentation {
    pub const ALL: [Augmentation; 4] = [
        Augmentation::DropNode,
        Augmentation::DropEdge,
        Augmentation::MaskAttr,
        Augmentation::RwrSubgraph,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Augmentation::DropNode => "drop-node",
            Augmentation::DropEdge => "drop-edge",
            Augmentation::MaskAttr => "mask-attr",
            Augmentation::RwrSubgraph => "rwr-subgraph",
        }
    }

    fn tag(self) -> u64 {
        match self {
            Augmentation::DropNode => 0,
            Augmentation::DropEdge => 1,
            Augmentation::MaskAttr => 2,
            Augmentation::RwrSubgraph => 3,
        }
    }
}

impl fmt::Display for Augmentation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Augmentation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Augmentation::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "unknown augmentation `{s}` (expected drop-node, drop-edge, mask-attr, or rwr-subgraph)"
                ))
            })
    }
}

fn ceil_fraction(ratio: f64, total: usize) -> usize {
    (ratio * total as f64).ceil() as usize
}

/// Distinct nodes visited by a random walk with restart from `start`,
/// walking until `target_count` distinct nodes are visited (capped by the
/// reachable component and a step budget). The result is sorted and always
/// contains `start`.
pub fn rwr_nodes(
    g: &AttributedGraph,
    start: u32,
    target_count: usize,
    rng: &mut impl Rng,
) -> Vec<u32> {
    let reachable = g
        .bfs_distances(start)
        .iter()
        .filter(|d| d.is_some())
        .count();
    let cap = target_count.clamp(1, reachable);
    let budget = RWR_STEP_BUDGET_PER_NODE * g.node_count().max(1);
    let mut visited: HashSet<u32> = HashSet::from([start]);
    let mut cur = start;
    let mut steps = 0;
    while visited.len() < cap && steps < budget {
        steps += 1;
        if rng.gen::<f64>() < RWR_RESTART {
            cur = start;
            continue;
        }
        let nbrs = g.neighbors(cur);
        if nbrs.is_empty() {
            break;
        }
        cur = nbrs[rng.gen_range(0..nbrs.len())];
        visited.insert(cur);
    }
    let mut out: Vec<u32> = visited.into_iter().collect();
    out.sort_unstable();
    out
}

fn induced_subgraph(
    g: &AttributedGraph,
    keep: &[u32],
    id: String,
    node_row: impl Fn(u32) -> Vec<u32>,
    edge_row: impl Fn(usize) -> Vec<u32>,
) -> Result<AttributedGraph> {
    let mut remap = vec![u32::MAX; g.node_count()];
    for (new, &v) in keep.iter().enumerate() {
        remap[v as usize] = new as u32;
    }
    let node_attrs = keep.iter().map(|&v| node_row(v)).collect();
    let mut edges = Vec::new();
    let mut edge_attrs = Vec::new();
    for (k, &(u, v)) in g.edges().iter().enumerate() {
        let (nu, nv) = (remap[u as usize], remap[v as usize]);
        if nu != u32::MAX && nv != u32::MAX {
            edges.push((nu, nv));
            edge_attrs.push(edge_row(k));
        }
    }
    AttributedGraph::new(id, keep.len(), edges, Some(node_attrs), Some(edge_attrs))
}

/// Apply one augmentation at strength `ratio`.
///
/// `ratio` is the fraction of nodes (drop-node, mask-attr), edges
/// (drop-edge), or retained nodes (rwr-subgraph), with counts rounded up.
/// The result carries the source id suffixed with the augmentation name.
/// Masked rows (mask-attr, and every row of an rwr-subgraph extraction)
/// use the reserved codes in `mask`.
pub fn augment(
    g: &AttributedGraph,
    kind: Augmentation,
    ratio: f64,
    mask: &MaskCodes,
    rng: &mut impl Rng,
) -> Result<AttributedGraph> {
    if !(0.0..=1.0).contains(&ratio) {
        return Err(Error::InvalidArgument(format!(
            "ratio must lie in [0, 1], got {ratio}"
        )));
    }
    if g.node_count() == 0 {
        return Err(Error::EmptyGraph(g.id().to_owned()));
    }
    let n = g.node_count();
    let id = format!("{}#{}", g.id(), kind.name());
    match kind {
        Augmentation::DropNode => {
            let count = ceil_fraction(ratio, n);
            if count >= n {
                return Err(Error::InvalidArgument(format!(
                    "dropping {count} of {n} nodes would remove every node of `{}`",
                    g.id()
                )));
            }
            let order = rng::shuffled_indices(rng, n);
            let mut keep: Vec<u32> = order[count..].iter().map(|&v| v as u32).collect();
            keep.sort_unstable();
            induced_subgraph(
                g,
                &keep,
                id,
                |v| g.node_attr(v).to_vec(),
                |k| g.edge_attr(k).to_vec(),
            )
        }
        Augmentation::DropEdge => {
            let m = g.edge_count();
            let count = ceil_fraction(ratio, m);
            let dropped: HashSet<usize> = rng::shuffled_indices(rng, m)[..count]
                .iter()
                .copied()
                .collect();
            let mut edges = Vec::with_capacity(m - count);
            let mut edge_attrs = Vec::with_capacity(m - count);
            for (k, &e) in g.edges().iter().enumerate() {
                if !dropped.contains(&k) {
                    edges.push(e);
                    edge_attrs.push(g.edge_attr(k).to_vec());
                }
            }
            AttributedGraph::new(
                id,
                n,
                edges,
                Some(g.node_attrs().to_vec()),
                Some(edge_attrs),
            )
        }
        Augmentation::MaskAttr => {
            if g.node_arity() == 0 {
                return Err(Error::Unattributed(g.id().to_owned()));
            }
            if mask.node.len() != g.node_arity() {
                return Err(Error::InvalidArgument(format!(
                    "mask codes have arity {}, graph `{}` has arity {}",
                    mask.node.len(),
                    g.id(),
                    g.node_arity()
                )));
            }
            let count = ceil_fraction(ratio, n);
            let order = rng::shuffled_indices(rng, n);
            let mut node_attrs = g.node_attrs().to_vec();
            for &v in &order[..count] {
                node_attrs[v] = mask.node.clone();
            }
            AttributedGraph::new(
                id,
                n,
                g.edges().to_vec(),
                Some(node_attrs),
                Some(g.edge_attrs().to_vec()),
            )
        }
        Augmentation::RwrSubgraph => {
            if mask.node.len() != g.node_arity() || mask.edge.len() != g.edge_arity() {
                return Err(Error::InvalidArgument(format!(
                    "mask codes (node {}, edge {}) do not match graph `{}` arities (node {}, edge {})",
                    mask.node.len(),
                    mask.edge.len(),
                    g.id(),
                    g.node_arity(),
                    g.edge_arity()
                )));
            }
            let start = rng.gen_range(0..n) as u32;
            let keep = rwr_nodes(g, start, ceil_fraction(ratio, n), rng);
            // The extraction is structural: every attribute row of the
            // subgraph is replaced by the reserved mask codes, so these
            // positives carry the walk's topology and nothing else.
            induced_subgraph(g, &keep, id, |_| mask.node.clone(), |_| mask.edge.clone())
        }
    }
}

/// Maximum bond-order sum per node attribute code (position 0).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValenceTable {
    max_bond_sum: BTreeMap<u32, u32>,
}

impl ValenceTable {
    /// Valences of the common organic-chemistry elements, keyed by the
    /// atomic-number-minus-one codes the bundled corpus uses.
    pub fn standard() -> Self {
        let entries = [
            (0, 1),   // H
            (4, 3),   // B
            (5, 4),   // C
            (6, 3),   // N
            (7, 2),   // O
            (8, 1),   // F
            (13, 4),  // Si
            (14, 5),  // P
            (15, 6),  // S
            (16, 1),  // Cl
            (34, 1),  // Br
            (52, 1),  // I
        ];
        Self {
            max_bond_sum: entries.into_iter().collect(),
        }
    }

    pub fn from_entries(entries: impl IntoIterator<Item = (u32, u32)>) -> Result<Self> {
        let max_bond_sum: BTreeMap<u32, u32> = entries.into_iter().collect();
        if max_bond_sum.values().any(|&v| v == 0) {
            return Err(Error::InvalidArgument(
                "valence entries must be positive".into(),
            ));
        }
        Ok(Self { max_bond_sum })
    }

    /// Load `{"code": max, ...}` from a JSON file.
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        let raw: BTreeMap<String, u32> = serde_json::from_str(&text)
            .map_err(|e| Error::parse(&path.display().to_string(), 1, e.to_string()))?;
        let mut entries = Vec::with_capacity(raw.len());
        for (key, max) in raw {
            let code: u32 = key.parse().map_err(|_| {
                Error::parse(
                    &path.display().to_string(),
                    1,
                    format!("attribute code `{key}` is not an unsigned integer"),
                )
            })?;
            entries.push((code, max));
        }
        Self::from_entries(entries)
    }

    pub fn max_bond_sum(&self, code: u32) -> Option<u32> {
        self.max_bond_sum.get(&code).copied()
    }
}

/// Outcome of a legality check: the flag and the first violation found.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Legality {
    pub legal: bool,
    pub violation: Option<String>,
}

impl Legality {
    fn legal() -> Self {
        Self {
            legal: true,
            violation: None,
        }
    }

    fn violated(msg: String) -> Self {
        Self {
            legal: false,
            violation: Some(msg),
        }
    }
}

/// Check molecule legality: every node's incident bond-order sum must stay
/// within its valence, the graph must be nonempty and connected.
///
/// Edge attribute position 0 encodes bond order as `code + 1`; edges
/// without attributes count as single bonds. A node code missing from the
/// table (including reserved mask codes) is a violation, not an error.
pub fn legality_check(g: &AttributedGraph, valences: &ValenceTable) -> Result<Legality> {
    if g.node_count() == 0 {
        return Ok(Legality::violated("graph has no nodes".into()));
    }
    if g.node_arity() == 0 {
        return Err(Error::Unattributed(g.id().to_owned()));
    }
    let mut bond_sum = vec![0u64; g.node_count()];
    for (k, &(u, v)) in g.edges().iter().enumerate() {
        let order = if g.edge_arity() == 0 {
            1
        } else {
            u64::from(g.edge_attr(k)[0]) + 1
        };
        bond_sum[u as usize] += order;
        bond_sum[v as usize] += order;
    }
    for v in 0..g.node_count() {
        let code = g.node_attr(v as u32)[0];
        let Some(max) = valences.max_bond_sum(code) else {
            return Ok(Legality::violated(format!(
                "node {v}: no valence entry for attribute code {code}"
            )));
        };
        if bond_sum[v] > u64::from(max) {
            return Ok(Legality::violated(format!(
                "node {v}: bond order sum {} exceeds valence {max}",
                bond_sum[v]
            )));
        }
    }
    if !g.is_connected() {
        return Ok(Legality::violated("graph is disconnected".into()));
    }
    Ok(Legality::legal())
}

/// One sweep measurement: an augmentation kind at one strength, averaged
/// over the sampled graphs and seeds. `legal_frac` is absent for datasets
/// without node attributes, where legality is undefined.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub kind: Augmentation,
    pub ratio: f64,
    pub mean_sim: f64,
    pub legal_frac: Option<f64>,
    pub seed_count: usize,
}

/// Measure `sim(original, augmented)` and the legal fraction for every
/// `(kind, ratio)` over the first `sample_size` graphs and all seeds.
///
/// Substreams are keyed by `(seed, graph, kind)` but not by ratio, so a
/// graph's removal sets nest across the ascending ratio grid: each higher
/// ratio extends the same shuffle prefix instead of redrawing, which makes
/// per-graph degradation monotone rather than noisy.
pub fn similarity_sweep(
    ds: &GraphDataset,
    sim: &dyn SimilarityMeasure,
    valences: &ValenceTable,
    kinds: &[Augmentation],
    ratios: &[f64],
    seeds: &[u64],
    sample_size: usize,
) -> Result<Vec<SweepRow>> {
    if ds.is_empty() {
        return Err(Error::InvalidArgument("sweep needs a nonempty dataset".into()));
    }
    if seeds.is_empty() {
        return Err(Error::InvalidArgument("sweep needs at least one seed".into()));
    }
    if ratios.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(
            "ratios must be strictly ascending".into(),
        ));
    }
    let sample = &ds.graphs()[..sample_size.min(ds.len())];
    let mask = MaskCodes::from_dataset(ds);
    let molecular = sample.iter().all(|g| g.node_arity() >= 1);
    let mut rows = Vec::with_capacity(kinds.len() * ratios.len());
    for &kind in kinds {
        for &ratio in ratios {
            let cells = par::map_range(sample.len() * seeds.len(), |u| -> Result<(f64, bool)> {
                let (gi, si) = (u / seeds.len(), u % seeds.len());
                let g = &sample[gi];
                let mut rng = rng::substream(seeds[si], &[stream::AUGMENT, gi as u64, kind.tag()]);
                let aug = augment(g, kind, ratio, &mask, &mut rng)?;
                let s = sim.similarity(g, &aug)?;
                let legal = molecular && legality_check(&aug, valences)?.legal;
                Ok((s, legal))
            });
            let mut sim_total = 0.0;
            let mut legal_total = 0usize;
            let mut count = 0usize;
            for cell in cells {
                let (s, legal) = cell?;
                sim_total += s;
                legal_total += usize::from(legal);
                count += 1;
            }
            rows.push(SweepRow {
                kind,
                ratio,
                mean_sim: sim_total / count as f64,
                legal_frac: molecular.then(|| legal_total as f64 / count as f64),
                seed_count: seeds.len(),
            });
        }
    }
    Ok(rows)
}

/// Render sweep rows as CSV (`kind,ratio,mean_sim,legal_frac,seed_count`);
/// `legal_frac` is left empty when undefined.
pub fn sweep_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("kind,ratio,mean_sim,legal_frac,seed_count\n");
    for r in rows {
        let legal = r.legal_frac.map(|v| v.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.kind, r.ratio, r.mean_sim, legal, r.seed_count
        ));
    }
    out
}
