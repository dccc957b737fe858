//! Attributed-graph data model, dataset plumbing, and basic algorithms.
//!
//! Graphs are undirected and simple. Edges are stored canonically as
//! `(u, v)` with `u < v`, sorted lexicographically and deduplicated; self
//! loops are rejected. Node and edge attributes are fixed-arity vectors of
//! categorical codes, with arity 0 meaning unattributed. Graphs are
//! immutable after construction and can be shared freely across threads.
//!
//! Two dataset encodings are supported: JSON-lines records carrying
//! structure plus attributes, and directories of plain edge lists (one file
//! per graph, filename is the id, arity 0).

use std::collections::BTreeMap;
use std::collections::HashMap;
use std::collections::VecDeque;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::masses::STANDARD_ATOMIC_MASSES;

/// An immutable undirected simple graph with categorical attribute vectors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttributedGraph {
    id: String,
    node_count: usize,
    node_arity: usize,
    edge_arity: usize,
    /// Canonical edge list: `u < v`, sorted, deduplicated.
    edges: Vec<(u32, u32)>,
    /// Per-node attribute vectors, each of length `node_arity`.
    node_attrs: Vec<Vec<u32>>,
    /// Per-edge attribute vectors aligned with `edges`.
    edge_attrs: Vec<Vec<u32>>,
    /// Sorted neighbour lists.
    adjacency: Vec<Vec<u32>>,
}

impl AttributedGraph {
    /// Build a graph, canonicalising the edge list (symmetrise, deduplicate,
    /// sort) and validating every structural invariant. Attribute vectors
    /// may be omitted entirely (`None`) for arity 0.
    pub fn new(
        id: impl Into<String>,
        node_count: usize,
        edges: Vec<(u32, u32)>,
        node_attrs: Option<Vec<Vec<u32>>>,
        edge_attrs: Option<Vec<Vec<u32>>>,
    ) -> Result<Self> {
        let id = id.into();
        let node_attrs = match node_attrs {
            Some(rows) => rows,
            None => vec![Vec::new(); node_count],
        };
        if node_attrs.len() != node_count {
            return Err(Error::invalid_graph(
                &id,
                format!(
                    "expected {node_count} node attribute rows, found {}",
                    node_attrs.len()
                ),
            ));
        }
        let node_arity = node_attrs.first().map_or(0, Vec::len);
        for (v, row) in node_attrs.iter().enumerate() {
            if row.len() != node_arity {
                return Err(Error::invalid_graph(
                    &id,
                    format!("node {v} has arity {} (expected {node_arity})", row.len()),
                ));
            }
        }

        let edge_attrs = match edge_attrs {
            Some(rows) => rows,
            None => vec![Vec::new(); edges.len()],
        };
        if edge_attrs.len() != edges.len() {
            return Err(Error::invalid_graph(
                &id,
                format!(
                    "expected {} edge attribute rows, found {}",
                    edges.len(),
                    edge_attrs.len()
                ),
            ));
        }
        let edge_arity = edge_attrs.first().map_or(0, Vec::len);

        // Canonicalise: orient each edge low-to-high, then sort the pairs
        // with their attribute rows attached so duplicates land adjacent.
        let mut oriented: Vec<((u32, u32), Vec<u32>)> = Vec::with_capacity(edges.len());
        for (k, &(a, b)) in edges.iter().enumerate() {
            if a as usize >= node_count || b as usize >= node_count {
                return Err(Error::invalid_graph(
                    &id,
                    format!("edge ({a}, {b}) references a node index out of range"),
                ));
            }
            if a == b {
                return Err(Error::invalid_graph(&id, format!("self loop at node {a}")));
            }
            let row = edge_attrs[k].clone();
            if row.len() != edge_arity {
                return Err(Error::invalid_graph(
                    &id,
                    format!(
                        "edge ({a}, {b}) has attribute arity {} (expected {edge_arity})",
                        row.len()
                    ),
                ));
            }
            oriented.push(((a.min(b), a.max(b)), row));
        }
        oriented.sort_by(|x, y| x.0.cmp(&y.0));

        let mut canon_edges: Vec<(u32, u32)> = Vec::with_capacity(oriented.len());
        let mut canon_attrs: Vec<Vec<u32>> = Vec::with_capacity(oriented.len());
        for (pair, row) in oriented {
            if canon_edges.last() == Some(&pair) {
                // Symmetric duplicates collapse; conflicting attribute rows
                // would silently lose information, so reject them.
                if canon_attrs.last() != Some(&row) {
                    return Err(Error::invalid_graph(
                        &id,
                        format!(
                            "duplicate edge ({}, {}) with conflicting attributes",
                            pair.0, pair.1
                        ),
                    ));
                }
                continue;
            }
            canon_edges.push(pair);
            canon_attrs.push(row);
        }

        let mut adjacency = vec![Vec::new(); node_count];
        for &(u, v) in &canon_edges {
            adjacency[u as usize].push(v);
            adjacency[v as usize].push(u);
        }
        for nbrs in &mut adjacency {
            nbrs.sort_unstable();
        }

        Ok(Self {
            id,
            node_count,
            node_arity,
            edge_arity,
            edges: canon_edges,
            node_attrs,
            edge_attrs: canon_attrs,
            adjacency,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn node_arity(&self) -> usize {
        self.node_arity
    }

    pub fn edge_arity(&self) -> usize {
        self.edge_arity
    }

    /// Canonical edge list (`u < v`, sorted lexicographically).
    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn node_attr(&self, v: u32) -> &[u32] {
        &self.node_attrs[v as usize]
    }

    pub fn node_attrs(&self) -> &[Vec<u32>] {
        &self.node_attrs
    }

    /// Attribute row of the k-th canonical edge.
    pub fn edge_attr(&self, k: usize) -> &[u32] {
        &self.edge_attrs[k]
    }

    pub fn edge_attrs(&self) -> &[Vec<u32>] {
        &self.edge_attrs
    }

    pub fn neighbors(&self, v: u32) -> &[u32] {
        &self.adjacency[v as usize]
    }

    pub fn degree(&self, v: u32) -> usize {
        self.adjacency[v as usize].len()
    }

    /// A copy of this graph under a new id; structure and attributes are
    /// shared verbatim.
    pub fn with_id(&self, id: impl Into<String>) -> Self {
        let mut g = self.clone();
        g.id = id.into();
        g
    }

    /// Hop distances from `source`; `None` marks unreachable nodes.
    pub fn bfs_distances(&self, source: u32) -> Vec<Option<u32>> {
        let mut dist = vec![None; self.node_count];
        if (source as usize) >= self.node_count {
            return dist;
        }
        dist[source as usize] = Some(0);
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            let du = dist[u as usize].expect("queued nodes have distances");
            for &v in self.neighbors(u) {
                if dist[v as usize].is_none() {
                    dist[v as usize] = Some(du + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Number of connected components (zero for the empty graph).
    pub fn component_count(&self) -> usize {
        let mut seen = vec![false; self.node_count];
        let mut count = 0;
        for start in 0..self.node_count as u32 {
            if seen[start as usize] {
                continue;
            }
            count += 1;
            let mut queue = VecDeque::from([start]);
            seen[start as usize] = true;
            while let Some(u) = queue.pop_front() {
                for &v in self.neighbors(u) {
                    if !seen[v as usize] {
                        seen[v as usize] = true;
                        queue.push_back(v);
                    }
                }
            }
        }
        count
    }

    pub fn is_connected(&self) -> bool {
        self.component_count() <= 1
    }

    /// Independent cycle count `m - n + c` (the cyclomatic number). For
    /// molecules this is the ring count of the hydrogen-suppressed graph.
    pub fn ring_count(&self) -> usize {
        self.edge_count() + self.component_count() - self.node_count
    }

    /// Total mass: the sum over nodes of the mass mapped to attribute
    /// position 0. The empty graph weighs 0.
    pub fn graph_weight(&self, masses: &MassTable) -> Result<f64> {
        if self.node_count == 0 {
            return Ok(0.0);
        }
        if self.node_arity == 0 {
            return Err(Error::Unattributed(self.id.clone()));
        }
        let mut total = 0.0;
        for row in &self.node_attrs {
            let code = row[0];
            total += masses.mass(code).ok_or(Error::MissingMass(code))?;
        }
        Ok(total)
    }
}

/// Node attribute code (position 0) to atomic mass.
#[derive(Debug, Clone)]
pub struct MassTable {
    masses: BTreeMap<u32, f64>,
}

impl MassTable {
    /// The built-in table: codes 0..=117 mapped to standard atomic masses
    /// (code = atomic number - 1).
    pub fn standard() -> Self {
        let masses = STANDARD_ATOMIC_MASSES
            .iter()
            .enumerate()
            .map(|(i, &m)| (i as u32, m))
            .collect();
        Self { masses }
    }

    /// Load a JSON object mapping code strings to masses,
    /// e.g. `{"5": 12.011, "6": 14.007}`.
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        let raw: BTreeMap<String, f64> = serde_json::from_str(&text)
            .map_err(|e| Error::parse(&path.display().to_string(), 1, e.to_string()))?;
        let mut masses = BTreeMap::new();
        for (key, mass) in raw {
            let code: u32 = key.parse().map_err(|_| {
                Error::parse(
                    &path.display().to_string(),
                    1,
                    format!("mass table key `{key}` is not an attribute code"),
                )
            })?;
            masses.insert(code, mass);
        }
        Ok(Self { masses })
    }

    pub fn mass(&self, code: u32) -> Option<f64> {
        self.masses.get(&code).copied()
    }

    /// Build a table from explicit entries (mostly for tests and tools).
    pub fn from_entries(entries: impl IntoIterator<Item = (u32, f64)>) -> Self {
        Self {
            masses: entries.into_iter().collect(),
        }
    }
}

/// On-disk JSON-lines record. Field order here is the canonical
/// serialisation order.
#[derive(Serialize, Deserialize)]
struct GraphRecord {
    id: String,
    n: usize,
    edges: Vec<(u32, u32)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    node_attrs: Option<Vec<Vec<u32>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    edge_attrs: Option<Vec<Vec<u32>>>,
}

/// An ordered collection of graphs with unique ids and per-position
/// attribute vocabulary sizes inferred from the data.
#[derive(Debug, Clone)]
pub struct GraphDataset {
    graphs: Vec<AttributedGraph>,
    index: HashMap<String, usize>,
    node_vocab: Vec<u32>,
    edge_vocab: Vec<u32>,
}

impl GraphDataset {
    /// Assemble a dataset, checking id uniqueness and arity consistency
    /// across graphs, and inferring vocabulary sizes (max code + 1 per
    /// attribute position).
    pub fn from_graphs(graphs: Vec<AttributedGraph>) -> Result<Self> {
        let mut index = HashMap::with_capacity(graphs.len());
        let node_arity = graphs.first().map_or(0, AttributedGraph::node_arity);
        let edge_arity = graphs.first().map_or(0, AttributedGraph::edge_arity);
        let mut node_vocab = vec![0u32; node_arity];
        let mut edge_vocab = vec![0u32; edge_arity];
        for (i, g) in graphs.iter().enumerate() {
            if index.insert(g.id().to_owned(), i).is_some() {
                return Err(Error::invalid_graph(g.id(), "duplicate id in dataset"));
            }
            if g.node_count() > 0 && g.node_arity() != node_arity
                || g.edge_count() > 0 && g.edge_arity() != edge_arity
            {
                return Err(Error::invalid_graph(
                    g.id(),
                    format!(
                        "attribute arity ({}, {}) differs from the dataset's ({node_arity}, {edge_arity})",
                        g.node_arity(),
                        g.edge_arity()
                    ),
                ));
            }
            for row in g.node_attrs() {
                for (pos, &code) in row.iter().enumerate() {
                    node_vocab[pos] = node_vocab[pos].max(code + 1);
                }
            }
            for row in g.edge_attrs() {
                for (pos, &code) in row.iter().enumerate() {
                    edge_vocab[pos] = edge_vocab[pos].max(code + 1);
                }
            }
        }
        Ok(Self {
            graphs,
            index,
            node_vocab,
            edge_vocab,
        })
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&AttributedGraph> {
        self.index.get(id).map(|&i| &self.graphs[i])
    }

    pub fn get_index(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn graph(&self, i: usize) -> &AttributedGraph {
        &self.graphs[i]
    }

    pub fn graphs(&self) -> &[AttributedGraph] {
        &self.graphs
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.graphs.iter().map(|g| g.id())
    }

    /// Vocabulary sizes per node attribute position (max code + 1).
    pub fn node_vocab(&self) -> &[u32] {
        &self.node_vocab
    }

    pub fn edge_vocab(&self) -> &[u32] {
        &self.edge_vocab
    }

    /// Load JSON-lines records. Blank lines are ignored; an empty file is
    /// an empty dataset.
    pub fn load_graph_jsonl(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let shown = path.display().to_string();
        let file = fs::File::open(path)?;
        let mut graphs = Vec::new();
        for (lineno, line) in BufReader::new(file).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: GraphRecord = serde_json::from_str(&line)
                .map_err(|e| Error::parse(&shown, lineno + 1, e.to_string()))?;
            let graph =
                AttributedGraph::new(rec.id, rec.n, rec.edges, rec.node_attrs, rec.edge_attrs)?;
            graphs.push(graph);
        }
        Self::from_graphs(graphs)
    }

    /// Serialise as canonical JSON-lines (attribute fields omitted at
    /// arity 0). Loading and re-serialising any conforming file reproduces
    /// these bytes exactly.
    pub fn to_graph_jsonl(&self) -> String {
        let mut out = String::new();
        for g in &self.graphs {
            let rec = GraphRecord {
                id: g.id().to_owned(),
                n: g.node_count(),
                edges: g.edges().to_vec(),
                node_attrs: (g.node_arity() > 0).then(|| g.node_attrs().to_vec()),
                edge_attrs: (g.edge_arity() > 0).then(|| g.edge_attrs().to_vec()),
            };
            out.push_str(&serde_json::to_string(&rec).expect("graph records serialise"));
            out.push('\n');
        }
        out
    }

    pub fn save_graph_jsonl(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut file = fs::File::create(path)?;
        file.write_all(self.to_graph_jsonl().as_bytes())?;
        Ok(())
    }

    /// Load a directory of edge lists: one file per graph, each line
    /// `u v`, filename (sans extension) is the id, arity 0. Files load in
    /// sorted filename order. Node count is one past the largest index.
    pub fn load_edge_list_dir(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut entries: Vec<_> = fs::read_dir(path)?
            .collect::<std::io::Result<Vec<_>>>()?
            .into_iter()
            .filter(|e| e.path().is_file())
            .collect();
        entries.sort_by_key(|e| e.file_name());
        let mut graphs = Vec::with_capacity(entries.len());
        for entry in entries {
            let fpath = entry.path();
            let shown = fpath.display().to_string();
            let id = fpath
                .file_stem()
                .and_then(|s| s.to_str())
                .ok_or_else(|| Error::parse(&shown, 0, "file name is not valid UTF-8"))?
                .to_owned();
            let mut edges = Vec::new();
            let mut max_node = None::<u32>;
            for (lineno, line) in BufReader::new(fs::File::open(&fpath)?).lines().enumerate() {
                let line = line?;
                let trimmed = line.trim();
                if trimmed.is_empty() || trimmed.starts_with('#') {
                    continue;
                }
                let mut parts = trimmed.split_whitespace();
                let (u, v) = match (parts.next(), parts.next(), parts.next()) {
                    (Some(u), Some(v), None) => (u, v),
                    _ => {
                        return Err(Error::parse(
                            &shown,
                            lineno + 1,
                            "expected exactly two node indices",
                        ))
                    }
                };
                let u: u32 = u.parse().map_err(|_| {
                    Error::parse(&shown, lineno + 1, format!("bad node index `{u}`"))
                })?;
                let v: u32 = v.parse().map_err(|_| {
                    Error::parse(&shown, lineno + 1, format!("bad node index `{v}`"))
                })?;
                max_node = Some(max_node.map_or(u.max(v), |m| m.max(u).max(v)));
                edges.push((u, v));
            }
            let n = max_node.map_or(0, |m| m as usize + 1);
            graphs.push(AttributedGraph::new(id, n, edges, None, None)?);
        }
        Self::from_graphs(graphs)
    }
}
