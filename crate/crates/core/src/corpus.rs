//! Deterministic desk corpus: small molecule-like attributed graphs for
//! exercising the pipeline at test and benchmark scale.
//!
//! The corpus is organised as families of eight. Each family starts from a
//! prototype — one or two 5-7 rings (mostly carbon, occasional N/O)
//! decorated with attached atoms up to a target size, with some bonds
//! upgraded to double where both endpoints have spare valence — and every
//! later member applies a couple of fresh legal edits (atom swaps, leaf
//! additions and removals, bond-order toggles) to its predecessor. Members
//! therefore form a homologous series whose pairwise similarity decays
//! with edit distance, which gives the similarity hierarchy built on top
//! of the corpus genuine multi-hop structure instead of a flat baseline.
//!
//! Bond sums are tracked against [`ValenceTable::standard`] throughout, so
//! every graph is connected and valence-legal by construction. Node
//! attribute rows are `[atom code]` and edge rows `[bond order - 1]`, with
//! atom codes indexing the standard mass table.

use rand::Rng;

use crate::augment::ValenceTable;
use crate::error::{Error, Result};
use crate::graph::{AttributedGraph, GraphDataset};
use crate::rng::{self, stream};

const CARBON: u32 = 5;
const NITROGEN: u32 = 6;
const OXYGEN: u32 = 7;
const FLUORINE: u32 = 8;
const SULFUR: u32 = 15;
const CHLORINE: u32 = 16;

const FAMILY_SIZE: usize = 8;
/// Cumulative edits applied between consecutive family members.
const EDITS_PER_MEMBER: usize = 2;

/// Generate `count` molecule-like graphs (ids `"mol-{i:04}"`) organised in
/// families of eight consecutive ids. Graph `i` depends only on its
/// family's substreams, so prefixes of the corpus are stable as `count`
/// grows.
pub fn desk_molecules(count: usize, seed: u64) -> Result<GraphDataset> {
    if count == 0 {
        return Err(Error::InvalidArgument("corpus must have at least one graph".into()));
    }
    let valences = ValenceTable::standard();
    let families = count.div_ceil(FAMILY_SIZE);
    let mut graphs = Vec::with_capacity(count);
    for f in 0..families {
        let mut rng = rng::substream(seed, &[stream::CORPUS, f as u64, 0]);
        let mut mol = Molecule::prototype(&valences, &mut rng);
        for m in 0..FAMILY_SIZE {
            let i = f * FAMILY_SIZE + m;
            if i >= count {
                break;
            }
            if m > 0 {
                let mut rng = rng::substream(seed, &[stream::CORPUS, f as u64, m as u64]);
                for _ in 0..EDITS_PER_MEMBER {
                    mol.edit(&valences, &mut rng);
                }
            }
            graphs.push(mol.to_graph(&format!("mol-{i:04}"))?);
        }
    }
    GraphDataset::from_graphs(graphs)
}

fn max_bond_sum(valences: &ValenceTable, code: u32) -> u32 {
    valences
        .max_bond_sum(code)
        .expect("generator atoms are in the standard valence table")
}

/// Mutable molecule under construction: parallel atom/edge/order vectors.
struct Molecule {
    atoms: Vec<u32>,
    edges: Vec<(u32, u32)>,
    orders: Vec<u32>,
    /// Number of leading ring atoms; edits never remove or rewire these.
    ring_len: usize,
}

impl Molecule {
    /// One or two decorated rings with a sprinkle of double bonds.
    fn prototype<R: Rng>(valences: &ValenceTable, rng: &mut R) -> Self {
        let ring_atom = |rng: &mut R| {
            if rng.gen_bool(0.25) {
                if rng.gen_bool(0.5) {
                    NITROGEN
                } else {
                    OXYGEN
                }
            } else {
                CARBON
            }
        };

        let first = rng.gen_range(5..=7usize);
        let two_rings = rng.gen_bool(0.4);
        let second = if two_rings { rng.gen_range(5..=6usize) } else { 0 };
        let target = rng.gen_range(18..=30usize);

        let mut mol = Self {
            atoms: Vec::with_capacity(target),
            edges: Vec::new(),
            orders: Vec::new(),
            ring_len: first + second,
        };
        for _ in 0..first + second {
            mol.atoms.push(ring_atom(rng));
        }
        for v in 0..first as u32 {
            mol.push_edge(v, (v + 1) % first as u32);
        }
        if second > 0 {
            let base = first as u32;
            for v in 0..second as u32 {
                mol.push_edge(base + v, base + (v + 1) % second as u32);
            }
            // Bridge the rings through the first spare-valence endpoint
            // on each side; a fully saturated side (heteroatom-heavy
            // ring) gets one atom rewritten to carbon so the bridge is
            // always legal and the graph stays connected.
            let spare = mol.spare(valences);
            let a = (0..first as u32)
                .find(|&v| spare[v as usize] >= 1)
                .unwrap_or_else(|| {
                    mol.atoms[0] = CARBON;
                    0
                });
            let b = (0..second as u32)
                .map(|v| base + v)
                .find(|&v| spare[v as usize] >= 1)
                .unwrap_or_else(|| {
                    mol.atoms[first] = CARBON;
                    base
                });
            mol.push_edge(a, b);
        }

        // Decorations: attach one atom at a time to any host with spare
        // valence. An all-saturated scaffold simply stops short of the
        // target size.
        while mol.atoms.len() < target {
            if !mol.add_leaf(valences, rng) {
                break;
            }
        }

        // Unsaturation: upgrade a bond to double only while both
        // endpoints keep a legal bond sum.
        for k in 0..mol.edges.len() {
            let (u, v) = mol.edges[k];
            let spare = mol.spare(valences);
            if rng.gen_bool(0.15)
                && mol.orders[k] == 1
                && spare[u as usize] >= 1
                && spare[v as usize] >= 1
            {
                mol.orders[k] = 2;
            }
        }
        mol
    }

    fn push_edge(&mut self, u: u32, v: u32) {
        self.edges.push((u, v));
        self.orders.push(1);
    }

    /// Unused bond capacity per atom under current orders.
    fn spare(&self, valences: &ValenceTable) -> Vec<u32> {
        let mut used = vec![0u32; self.atoms.len()];
        for (&(u, v), &o) in self.edges.iter().zip(&self.orders) {
            used[u as usize] += o;
            used[v as usize] += o;
        }
        self.atoms
            .iter()
            .zip(&used)
            .map(|(&code, &u)| max_bond_sum(valences, code).saturating_sub(u))
            .collect()
    }

    fn degree(&self) -> Vec<u32> {
        let mut deg = vec![0u32; self.atoms.len()];
        for &(u, v) in &self.edges {
            deg[u as usize] += 1;
            deg[v as usize] += 1;
        }
        deg
    }

    /// Attach a fresh atom to a random host with spare valence.
    fn add_leaf<R: Rng>(&mut self, valences: &ValenceTable, rng: &mut R) -> bool {
        let spare = self.spare(valences);
        let hosts: Vec<u32> = (0..self.atoms.len() as u32)
            .filter(|&v| spare[v as usize] > 0)
            .collect();
        if hosts.is_empty() {
            return false;
        }
        let host = hosts[rng.gen_range(0..hosts.len())];
        let roll = rng.gen_range(0..100u32);
        let code = match roll {
            0..=54 => CARBON,
            55..=66 => NITROGEN,
            67..=78 => OXYGEN,
            79..=86 => FLUORINE,
            87..=94 => CHLORINE,
            _ => SULFUR,
        };
        let new = self.atoms.len() as u32;
        self.atoms.push(code);
        self.push_edge(host, new);
        true
    }

    /// Remove a random degree-1 decoration, compacting indices by moving
    /// the last atom into the vacated slot. Ring atoms keep their indices
    /// because decorations always sit above `ring_len`.
    fn drop_leaf<R: Rng>(&mut self, rng: &mut R) -> bool {
        let deg = self.degree();
        let leaves: Vec<u32> = (self.ring_len as u32..self.atoms.len() as u32)
            .filter(|&v| deg[v as usize] == 1)
            .collect();
        if leaves.len() < 3 {
            return false; // keep some decorations around
        }
        let v = leaves[rng.gen_range(0..leaves.len())];
        let k = self
            .edges
            .iter()
            .position(|&(a, b)| a == v || b == v)
            .expect("leaf has an edge");
        self.edges.swap_remove(k);
        self.orders.swap_remove(k);
        let last = self.atoms.len() as u32 - 1;
        self.atoms.swap_remove(v as usize);
        if v != last {
            for (a, b) in &mut self.edges {
                if *a == last {
                    *a = v;
                }
                if *b == last {
                    *b = v;
                }
            }
        }
        true
    }

    /// Replace one atom's element with another that supports its current
    /// bond sum.
    fn swap_atom<R: Rng>(&mut self, valences: &ValenceTable, rng: &mut R) -> bool {
        let spare = self.spare(valences);
        let v = rng.gen_range(0..self.atoms.len());
        let old = self.atoms[v];
        let used = max_bond_sum(valences, old).saturating_sub(spare[v]);
        let options: Vec<u32> = [CARBON, NITROGEN, OXYGEN, FLUORINE, SULFUR, CHLORINE]
            .into_iter()
            .filter(|&c| c != old && max_bond_sum(valences, c) >= used)
            .collect();
        if options.is_empty() {
            return false;
        }
        self.atoms[v] = options[rng.gen_range(0..options.len())];
        true
    }

    /// Toggle one bond between single and double where valence allows.
    fn toggle_bond<R: Rng>(&mut self, valences: &ValenceTable, rng: &mut R) -> bool {
        let k = rng.gen_range(0..self.edges.len());
        if self.orders[k] == 2 {
            self.orders[k] = 1;
            return true;
        }
        let spare = self.spare(valences);
        let (u, v) = self.edges[k];
        if spare[u as usize] >= 1 && spare[v as usize] >= 1 {
            self.orders[k] = 2;
            return true;
        }
        false
    }

    /// Apply one random legal edit, falling through the op list until one
    /// succeeds (a molecule with edges always admits at least a swap or a
    /// toggle eventually; bail after a full cycle to stay total).
    fn edit<R: Rng>(&mut self, valences: &ValenceTable, rng: &mut R) {
        for _ in 0..8 {
            let done = match rng.gen_range(0..100u32) {
                0..=39 => self.swap_atom(valences, rng),
                40..=69 => self.add_leaf(valences, rng),
                70..=89 => self.drop_leaf(rng),
                _ => self.toggle_bond(valences, rng),
            };
            if done {
                return;
            }
        }
    }

    fn to_graph(&self, id: &str) -> Result<AttributedGraph> {
        let node_attrs = self.atoms.iter().map(|&code| vec![code]).collect();
        let edge_attrs = self.orders.iter().map(|&o| vec![o - 1]).collect();
        AttributedGraph::new(
            id,
            self.atoms.len(),
            self.edges.clone(),
            Some(node_attrs),
            Some(edge_attrs),
        )
    }
}
