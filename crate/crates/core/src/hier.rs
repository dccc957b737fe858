//! Similarity hierarchies: graphs over dataset instances whose edges join
//! similar pairs.
//!
//! Construction is two-phase. A cheap candidate filter first restricts each
//! instance's comparison set using coarse size statistics, then the
//! similarity measure scores every surviving unordered pair once and pairs
//! at or above the threshold become edges. The hierarchy keeps every
//! dataset id as a vertex, so isolated instances stay visible.

use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{GraphDataset, MassTable};
use crate::par;
use crate::similarity::SimilarityMeasure;

/// Candidate filtering policy for hierarchy construction.
///
/// Tolerances are checked against the anchor instance `A`: a candidate `B`
/// passes when every absolute difference is within the stated bound.
/// Survivors are taken in ascending sort-key order (graph weight for the
/// molecular policy, node count for the structural policy; ties break by
/// id) until `max_candidates` are collected.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum CandidatePolicy {
    Molecular {
        /// Max weight difference as a fraction of the anchor's weight.
        weight_tol: f64,
        /// Max independent-cycle-count difference.
        ring_tol: usize,
        /// Max node-count difference.
        atom_tol: usize,
        max_candidates: usize,
    },
    Structural {
        /// Max node-count difference as a fraction of the anchor's count.
        node_tol: f64,
        /// Max edge-count difference as a fraction of the anchor's count.
        edge_tol: f64,
        max_candidates: usize,
    },
}

impl CandidatePolicy {
    /// Molecular defaults: 10% weight tolerance, one ring, seven atoms,
    /// seventy candidates.
    pub fn molecular() -> Self {
        CandidatePolicy::Molecular {
            weight_tol: 0.10,
            ring_tol: 1,
            atom_tol: 7,
            max_candidates: 70,
        }
    }

    /// Structural defaults: 10% node and edge tolerances, seventy
    /// candidates.
    pub fn structural() -> Self {
        CandidatePolicy::Structural {
            node_tol: 0.10,
            edge_tol: 0.10,
            max_candidates: 70,
        }
    }

    pub fn max_candidates(&self) -> usize {
        match *self {
            CandidatePolicy::Molecular { max_candidates, .. }
            | CandidatePolicy::Structural { max_candidates, .. } => max_candidates,
        }
    }
}

/// Per-instance statistics consumed by the candidate filter.
struct Profile {
    weight: f64,
    nodes: usize,
    edges: usize,
    rings: usize,
}

fn profiles(
    ds: &GraphDataset,
    policy: &CandidatePolicy,
    masses: &MassTable,
) -> Result<Vec<Profile>> {
    let molecular = matches!(policy, CandidatePolicy::Molecular { .. });
    let rows = par::map_range(ds.len(), |i| -> Result<Profile> {
        let g = ds.graph(i);
        Ok(Profile {
            weight: if molecular { g.graph_weight(masses)? } else { 0.0 },
            nodes: g.node_count(),
            edges: g.edge_count(),
            rings: g.ring_count(),
        })
    });
    rows.into_iter().collect()
}

/// Scan order shared by every anchor: ascending sort key, ties by id.
fn scan_order(ds: &GraphDataset, policy: &CandidatePolicy, profiles: &[Profile]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..ds.len()).collect();
    match policy {
        CandidatePolicy::Molecular { .. } => order.sort_by(|&a, &b| {
            profiles[a]
                .weight
                .total_cmp(&profiles[b].weight)
                .then_with(|| ds.graph(a).id().cmp(ds.graph(b).id()))
        }),
        CandidatePolicy::Structural { .. } => order.sort_by(|&a, &b| {
            profiles[a]
                .nodes
                .cmp(&profiles[b].nodes)
                .then_with(|| ds.graph(a).id().cmp(ds.graph(b).id()))
        }),
    }
    order
}

fn candidates_for(
    anchor: usize,
    policy: &CandidatePolicy,
    profiles: &[Profile],
    order: &[usize],
) -> Vec<usize> {
    let a = &profiles[anchor];
    let mut picked = Vec::new();
    for &j in order {
        if picked.len() >= policy.max_candidates() {
            break;
        }
        if j == anchor {
            continue;
        }
        let b = &profiles[j];
        let passes = match *policy {
            CandidatePolicy::Molecular {
                weight_tol,
                ring_tol,
                atom_tol,
                ..
            } => {
                (a.weight - b.weight).abs() <= weight_tol * a.weight
                    && a.rings.abs_diff(b.rings) <= ring_tol
                    && a.nodes.abs_diff(b.nodes) <= atom_tol
            }
            CandidatePolicy::Structural {
                node_tol, edge_tol, ..
            } => {
                a.nodes.abs_diff(b.nodes) as f64 <= node_tol * a.nodes as f64
                    && a.edges.abs_diff(b.edges) as f64 <= edge_tol * a.edges as f64
            }
        };
        if passes {
            picked.push(j);
        }
    }
    picked
}

/// Candidate ids for one instance under `policy`. The anchor itself is
/// never a candidate.
pub fn select_candidates(
    ds: &GraphDataset,
    id: &str,
    policy: &CandidatePolicy,
    masses: &MassTable,
) -> Result<Vec<String>> {
    let anchor = ds
        .get_index(id)
        .ok_or_else(|| Error::UnknownId(id.to_owned()))?;
    let profiles = profiles(ds, policy, masses)?;
    let order = scan_order(ds, policy, &profiles);
    Ok(candidates_for(anchor, policy, &profiles, &order)
        .into_iter()
        .map(|j| ds.graph(j).id().to_owned())
        .collect())
}

#[derive(Serialize, Deserialize)]
struct HierHeader {
    tau: f64,
    measure: String,
    n: usize,
}

#[derive(Serialize, Deserialize)]
struct HierRow {
    id: String,
    nbrs: Vec<String>,
    w: Vec<f64>,
}

/// A similarity hierarchy over dataset instances.
///
/// Vertices are all dataset ids in dataset order; an edge joins `i` and `j`
/// when either appears in the other's candidate list and their similarity
/// reaches the threshold. Adjacency is symmetric and edge weights are the
/// similarities.
#[derive(Debug, Clone)]
pub struct SimilarityHierarchy {
    tau: f64,
    measure: String,
    ids: Vec<String>,
    index: HashMap<String, usize>,
    adj: Vec<Vec<(u32, f64)>>,
}

impl SimilarityHierarchy {
    /// Build the hierarchy for `ds` under `sim` and threshold `tau`.
    ///
    /// Pair similarities are evaluated once per unordered pair, in
    /// parallel; the pair list, edge filter, and adjacency assembly are all
    /// order-deterministic, so repeated builds are byte-identical at any
    /// thread count.
    pub fn build(
        ds: &GraphDataset,
        sim: &dyn SimilarityMeasure,
        tau: f64,
        policy: &CandidatePolicy,
        masses: &MassTable,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&tau) {
            return Err(Error::InvalidArgument(format!(
                "tau must lie in [0, 1], got {tau}"
            )));
        }
        let profiles = profiles(ds, policy, masses)?;
        let order = scan_order(ds, policy, &profiles);
        let cand_lists =
            par::map_range(ds.len(), |i| candidates_for(i, policy, &profiles, &order));

        let mut pairs: Vec<(u32, u32)> = Vec::new();
        for (i, cands) in cand_lists.iter().enumerate() {
            for &j in cands {
                let (a, b) = (i.min(j) as u32, i.max(j) as u32);
                pairs.push((a, b));
            }
        }
        pairs.sort_unstable();
        pairs.dedup();

        let scored = par::map_slice(&pairs, |&(a, b)| {
            sim.similarity(ds.graph(a as usize), ds.graph(b as usize))
        });

        let mut adj: Vec<Vec<(u32, f64)>> = vec![Vec::new(); ds.len()];
        for (&(a, b), value) in pairs.iter().zip(scored) {
            let value = value?;
            if value >= tau {
                adj[a as usize].push((b, value));
                adj[b as usize].push((a, value));
            }
        }
        for nbrs in &mut adj {
            nbrs.sort_by_key(|&(j, _)| j);
        }

        let ids: Vec<String> = ds.ids().map(str::to_owned).collect();
        let index = ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i))
            .collect();
        Ok(Self {
            tau,
            measure: sim.digest(),
            ids,
            index,
            adj,
        })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn measure(&self) -> &str {
        &self.measure
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn id(&self, i: usize) -> &str {
        &self.ids[i]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    /// Neighbours of vertex `i` with edge similarities, ascending by
    /// neighbour index.
    pub fn neighbors(&self, i: usize) -> &[(u32, f64)] {
        &self.adj[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adj[i].len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Serialise as JSON lines: a header `{tau, measure, n}` followed by
    /// one `{id, nbrs, w}` row per vertex in dataset order.
    pub fn to_jsonl(&self) -> String {
        let header = HierHeader {
            tau: self.tau,
            measure: self.measure.clone(),
            n: self.ids.len(),
        };
        let mut out = serde_json::to_string(&header).expect("header serialises");
        out.push('\n');
        for (i, id) in self.ids.iter().enumerate() {
            let row = HierRow {
                id: id.clone(),
                nbrs: self.adj[i]
                    .iter()
                    .map(|&(j, _)| self.ids[j as usize].clone())
                    .collect(),
                w: self.adj[i].iter().map(|&(_, w)| w).collect(),
            };
            out.push_str(&serde_json::to_string(&row).expect("rows serialise"));
            out.push('\n');
        }
        out
    }

    pub fn save_jsonl(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut file = fs::File::create(path)?;
        file.write_all(self.to_jsonl().as_bytes())?;
        Ok(())
    }

    /// Load and validate a serialised hierarchy: weights must lie in
    /// `[tau, 1]`, neighbour ids must resolve, and adjacency must be
    /// symmetric with matching weights.
    pub fn load_jsonl(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let shown = path.display().to_string();
        let file = fs::File::open(path)?;
        let mut lines = BufReader::new(file).lines().enumerate();
        let header: HierHeader = match lines.next() {
            Some((_, line)) => serde_json::from_str(&line?)
                .map_err(|e| Error::parse(&shown, 1, e.to_string()))?,
            None => return Err(Error::parse(&shown, 1, "missing hierarchy header")),
        };
        let mut ids = Vec::with_capacity(header.n);
        let mut raw_rows: Vec<HierRow> = Vec::with_capacity(header.n);
        for (lineno, line) in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let row: HierRow = serde_json::from_str(&line)
                .map_err(|e| Error::parse(&shown, lineno + 1, e.to_string()))?;
            ids.push(row.id.clone());
            raw_rows.push(row);
        }
        if ids.len() != header.n {
            return Err(Error::parse(
                &shown,
                1,
                format!("header declares {} rows, found {}", header.n, ids.len()),
            ));
        }
        let index: HashMap<String, usize> = ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i))
            .collect();
        if index.len() != ids.len() {
            return Err(Error::parse(&shown, 1, "duplicate ids in hierarchy"));
        }
        let mut adj: Vec<Vec<(u32, f64)>> = vec![Vec::new(); ids.len()];
        for (i, row) in raw_rows.iter().enumerate() {
            if row.nbrs.len() != row.w.len() {
                return Err(Error::parse(
                    &shown,
                    i + 2,
                    "nbrs and w lengths differ".to_owned(),
                ));
            }
            for (nbr, &w) in row.nbrs.iter().zip(&row.w) {
                let j = *index
                    .get(nbr)
                    .ok_or_else(|| Error::UnknownId(nbr.clone()))?;
                if !(header.tau..=1.0).contains(&w) {
                    return Err(Error::parse(
                        &shown,
                        i + 2,
                        format!("edge weight {w} outside [{}, 1]", header.tau),
                    ));
                }
                adj[i].push((j as u32, w));
            }
        }
        for (i, nbrs) in adj.iter().enumerate() {
            for &(j, w) in nbrs {
                let back = adj[j as usize]
                    .iter()
                    .find(|&&(k, _)| k as usize == i)
                    .map(|&(_, v)| v);
                if back != Some(w) {
                    return Err(Error::parse(
                        &shown,
                        i + 2,
                        format!("asymmetric edge between `{}` and `{}`", ids[i], ids[j as usize]),
                    ));
                }
            }
        }
        Ok(Self {
            tau: header.tau,
            measure: header.measure,
            ids,
            index,
            adj,
        })
    }

    /// Hop distances from vertex `start` over hierarchy edges.
    pub fn bfs_distances(&self, start: usize) -> Vec<Option<u32>> {
        let mut dist = vec![None; self.ids.len()];
        dist[start] = Some(0);
        let mut queue = std::collections::VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].expect("queued vertices have distances");
            for &(v, _) in &self.adj[u] {
                if dist[v as usize].is_none() {
                    dist[v as usize] = Some(du + 1);
                    queue.push_back(v as usize);
                }
            }
        }
        dist
    }
}

/// Mean similarity to targets at exact BFS hop distances `1..=max_hop`.
///
/// For each target the mean of `sim(target, x)` is taken over the vertices
/// `x` at hop `d`; the profile averages those per-target means over the
/// targets that have any vertex at hop `d`. `None` marks hops no target
/// reaches.
pub fn hop_similarity_profile(
    h: &SimilarityHierarchy,
    ds: &GraphDataset,
    sim: &dyn SimilarityMeasure,
    targets: &[String],
    max_hop: usize,
) -> Result<Vec<Option<f64>>> {
    let per_target = par::map_slice(targets, |id| -> Result<Vec<Option<f64>>> {
        let t = h
            .index_of(id)
            .ok_or_else(|| Error::UnknownId(id.clone()))?;
        let tg = ds.get(id).ok_or_else(|| Error::UnknownId(id.clone()))?;
        let dist = h.bfs_distances(t);
        let mut sums = vec![(0.0, 0usize); max_hop];
        for (x, d) in dist.iter().enumerate() {
            let Some(d) = *d else { continue };
            if d == 0 || d as usize > max_hop {
                continue;
            }
            let other = ds
                .get(h.id(x))
                .ok_or_else(|| Error::UnknownId(h.id(x).to_owned()))?;
            let s = sim.similarity(tg, other)?;
            let slot = &mut sums[d as usize - 1];
            slot.0 += s;
            slot.1 += 1;
        }
        Ok(sums
            .into_iter()
            .map(|(total, count)| (count > 0).then(|| total / count as f64))
            .collect())
    });

    let mut acc = vec![(0.0, 0usize); max_hop];
    for row in per_target {
        for (slot, mean) in acc.iter_mut().zip(row?) {
            if let Some(mean) = mean {
                slot.0 += mean;
                slot.1 += 1;
            }
        }
    }
    Ok(acc
        .into_iter()
        .map(|(total, count)| (count > 0).then(|| total / count as f64))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::AttributedGraph;

    /// Table-backed measure for fixtures with prescribed similarities.
    pub(crate) struct FixedSim {
        pub table: HashMap<(String, String), f64>,
    }

    impl FixedSim {
        pub fn new(entries: &[(&str, &str, f64)]) -> Self {
            let mut table = HashMap::new();
            for &(a, b, s) in entries {
                table.insert((a.to_owned(), b.to_owned()), s);
                table.insert((b.to_owned(), a.to_owned()), s);
            }
            Self { table }
        }
    }

    impl SimilarityMeasure for FixedSim {
        fn similarity(&self, a: &AttributedGraph, b: &AttributedGraph) -> Result<f64> {
            Ok(self.table[&(a.id().to_owned(), b.id().to_owned())])
        }

        fn digest(&self) -> String {
            "fixed".to_owned()
        }
    }

    fn path_graph(id: &str, n: usize) -> AttributedGraph {
        let edges = (0..n.saturating_sub(1) as u32).map(|i| (i, i + 1)).collect();
        AttributedGraph::new(id, n, edges, None, None).unwrap()
    }

    fn weighted_graph(id: &str, n: usize, code: u32) -> AttributedGraph {
        AttributedGraph::new(
            id,
            n,
            (0..n.saturating_sub(1) as u32).map(|i| (i, i + 1)).collect(),
            Some(vec![vec![code]; n]),
            None,
        )
        .unwrap()
    }

    #[test]
    fn molecular_candidates_respect_weight_tolerance() {
        // Ten nodes each; per-code masses 10.0 / 10.9 / 11.1 give graph
        // weights 100, 109, and 111. At 10% tolerance of the anchor's 100,
        // 109 passes and 111 does not. Ring and atom counts are equal, so
        // the weight filter decides alone.
        let ds = GraphDataset::from_graphs(vec![
            weighted_graph("a", 10, 0),
            weighted_graph("b", 10, 1),
            weighted_graph("c", 10, 2),
        ])
        .unwrap();
        let masses = MassTable::from_entries([(0, 10.0), (1, 10.9), (2, 11.1)]);
        let got = select_candidates(&ds, "a", &CandidatePolicy::molecular(), &masses).unwrap();
        assert_eq!(got, vec!["b".to_owned()]);
        // From c's side (weight 111), 10% is 11.1, so both others pass.
        let got = select_candidates(&ds, "c", &CandidatePolicy::molecular(), &masses).unwrap();
        assert_eq!(got, vec!["a".to_owned(), "b".to_owned()]);
    }

    #[test]
    fn structural_candidates_cap_and_exclude_self() {
        let graphs: Vec<_> = (0..8).map(|i| path_graph(&format!("g{i}"), 10)).collect();
        let ds = GraphDataset::from_graphs(graphs).unwrap();
        let policy = CandidatePolicy::Structural {
            node_tol: 0.5,
            edge_tol: 0.5,
            max_candidates: 3,
        };
        let got = select_candidates(&ds, "g0", &policy, &MassTable::standard()).unwrap();
        assert_eq!(got.len(), 3);
        assert!(!got.contains(&"g0".to_owned()));
        // Equal keys order by id.
        assert_eq!(got, vec!["g1", "g2", "g3"]);
    }

    fn toy_hierarchy(tau: f64) -> SimilarityHierarchy {
        let ds = GraphDataset::from_graphs(vec![
            path_graph("a", 3),
            path_graph("b", 3),
            path_graph("c", 3),
        ])
        .unwrap();
        let sim = FixedSim::new(&[("a", "b", 0.9), ("a", "c", 0.4), ("b", "c", 0.8)]);
        let policy = CandidatePolicy::Structural {
            node_tol: 1.0,
            edge_tol: 1.0,
            max_candidates: 10,
        };
        SimilarityHierarchy::build(&ds, &sim, tau, &policy, &MassTable::standard()).unwrap()
    }

    #[test]
    fn build_keeps_edges_at_or_above_tau() {
        let h = toy_hierarchy(0.5);
        assert_eq!(h.len(), 3);
        assert_eq!(h.edge_count(), 2);
        assert_eq!(h.neighbors(0), &[(1, 0.9)]);
        assert_eq!(h.neighbors(1), &[(0, 0.9), (2, 0.8)]);
        assert_eq!(h.neighbors(2), &[(1, 0.8)]);
    }

    #[test]
    fn build_with_tau_above_max_yields_isolated_vertices() {
        let h = toy_hierarchy(0.95);
        assert_eq!(h.edge_count(), 0);
        assert_eq!(h.len(), 3);
    }

    #[test]
    fn tau_inclusive_boundary() {
        let h = toy_hierarchy(0.8);
        assert_eq!(h.edge_count(), 2);
    }

    #[test]
    fn rejects_tau_outside_unit_interval() {
        let ds = GraphDataset::from_graphs(vec![path_graph("a", 3)]).unwrap();
        let sim = FixedSim::new(&[]);
        let err = SimilarityHierarchy::build(
            &ds,
            &sim,
            1.5,
            &CandidatePolicy::structural(),
            &MassTable::standard(),
        );
        assert!(err.is_err());
    }

    #[test]
    fn jsonl_round_trip_preserves_bytes() {
        let h = toy_hierarchy(0.5);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("h.jsonl");
        h.save_jsonl(&path).unwrap();
        let loaded = SimilarityHierarchy::load_jsonl(&path).unwrap();
        assert_eq!(loaded.to_jsonl(), h.to_jsonl());
        assert_eq!(loaded.tau(), 0.5);
        assert_eq!(loaded.measure(), "fixed");
    }

    #[test]
    fn load_rejects_asymmetric_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.jsonl");
        std::fs::write(
            &path,
            concat!(
                "{\"tau\":0.5,\"measure\":\"fixed\",\"n\":2}\n",
                "{\"id\":\"a\",\"nbrs\":[\"b\"],\"w\":[0.9]}\n",
                "{\"id\":\"b\",\"nbrs\":[],\"w\":[]}\n",
            ),
        )
        .unwrap();
        let err = SimilarityHierarchy::load_jsonl(&path).unwrap_err();
        assert!(err.to_string().contains("asymmetric"), "{err}");
    }

    #[test]
    fn hop_profile_on_a_fixed_chain() {
        // Chain a-b-c with sims 0.9 and 0.8, plus a-c scored 0.4 (below
        // tau, so c sits at hop 2 from a).
        let ds = GraphDataset::from_graphs(vec![
            path_graph("a", 3),
            path_graph("b", 3),
            path_graph("c", 3),
        ])
        .unwrap();
        let sim = FixedSim::new(&[("a", "b", 0.9), ("a", "c", 0.4), ("b", "c", 0.8)]);
        let h = toy_hierarchy(0.5);
        let profile =
            hop_similarity_profile(&h, &ds, &sim, &["a".to_owned()], 3).unwrap();
        assert_eq!(profile.len(), 3);
        assert!((profile[0].unwrap() - 0.9).abs() < 1e-12);
        assert!((profile[1].unwrap() - 0.4).abs() < 1e-12);
        assert_eq!(profile[2], None);
        // Hop-1 means can never fall below the build threshold.
        assert!(profile[0].unwrap() >= h.tau());
    }

    #[test]
    fn hop_profile_averages_only_targets_with_members() {
        let ds = GraphDataset::from_graphs(vec![
            path_graph("a", 3),
            path_graph("b", 3),
            path_graph("c", 3),
        ])
        .unwrap();
        let sim = FixedSim::new(&[("a", "b", 0.9), ("a", "c", 0.9), ("b", "c", 0.1)]);
        let policy = CandidatePolicy::Structural {
            node_tol: 1.0,
            edge_tol: 1.0,
            max_candidates: 10,
        };
        let h = SimilarityHierarchy::build(&ds, &sim, 0.5, &policy, &MassTable::standard())
            .unwrap();
        // b and c are isolated from each other but reach a; target list of
        // all three still averages only over targets with hop members.
        let profile = hop_similarity_profile(
            &h,
            &ds,
            &sim,
            &["a".into(), "b".into(), "c".into()],
            2,
        )
        .unwrap();
        // a sees b, c at hop 1 (mean 0.9); b sees a; c sees a.
        assert!((profile[0].unwrap() - 0.9).abs() < 1e-12);
        // b and c see each other at hop 2 through a, similarity 0.1.
        assert!((profile[1].unwrap() - 0.1).abs() < 1e-12);
    }
}
