//! Independent oracles for the graph layer: an O(n^3) Floyd-Warshall
//! distance check against the BFS used everywhere else, and serialisation
//! round-trips over randomised datasets.

use hiersample::graph::{AttributedGraph, GraphDataset};
use hiersample::rng;
use rand::Rng;

fn random_graph<R: Rng>(id: &str, rng: &mut R) -> AttributedGraph {
    let n = rng.gen_range(1..=25usize);
    let p = rng.gen_range(0.08..0.30f64);
    let mut edges = Vec::new();
    for u in 0..n as u32 {
        for v in (u + 1)..n as u32 {
            if rng.gen_bool(p) {
                edges.push((u, v));
            }
        }
    }
    let node_attrs = (0..n).map(|_| vec![rng.gen_range(0..5u32)]).collect();
    let edge_attrs = (0..edges.len()).map(|_| vec![rng.gen_range(0..3u32)]).collect();
    AttributedGraph::new(id, n, edges, Some(node_attrs), Some(edge_attrs)).unwrap()
}

/// All-pairs shortest paths by relaxation; shares no code with
/// `bfs_distances`.
fn floyd_warshall(g: &AttributedGraph) -> Vec<Vec<Option<u32>>> {
    let n = g.node_count();
    let mut dist = vec![vec![u64::MAX; n]; n];
    for (v, row) in dist.iter_mut().enumerate() {
        row[v] = 0;
    }
    for &(u, v) in g.edges() {
        dist[u as usize][v as usize] = 1;
        dist[v as usize][u as usize] = 1;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let through = dist[i][k].saturating_add(dist[k][j]);
                if through < dist[i][j] {
                    dist[i][j] = through;
                }
            }
        }
    }
    dist.into_iter()
        .map(|row| {
            row.into_iter()
                .map(|d| if d == u64::MAX { None } else { Some(d as u32) })
                .collect()
        })
        .collect()
}

#[test]
fn bfs_distances_match_floyd_warshall() {
    let mut rng = rng::substream(0xd15, &[1]);
    for case in 0..100 {
        let g = random_graph(&format!("g{case}"), &mut rng);
        let oracle = floyd_warshall(&g);
        for v in 0..g.node_count() as u32 {
            assert_eq!(
                g.bfs_distances(v),
                oracle[v as usize],
                "distances from {v} diverge on graph {case}"
            );
        }
    }
}

#[test]
fn component_count_matches_distance_reachability() {
    let mut rng = rng::substream(0xd15, &[2]);
    for case in 0..50 {
        let g = random_graph(&format!("g{case}"), &mut rng);
        // Count components by repeatedly taking the smallest node whose
        // distance from every previous representative is unknown.
        let n = g.node_count();
        let mut assigned = vec![false; n];
        let mut components = 0;
        for v in 0..n as u32 {
            if assigned[v as usize] {
                continue;
            }
            components += 1;
            for (u, d) in g.bfs_distances(v).iter().enumerate() {
                if d.is_some() {
                    assigned[u] = true;
                }
            }
        }
        assert_eq!(g.component_count(), components);
        assert_eq!(g.is_connected(), components <= 1);
    }
}

#[test]
fn graph_jsonl_round_trip_is_lossless_and_stable() {
    let mut rng = rng::substream(0xd15, &[3]);
    let graphs: Vec<AttributedGraph> = (0..30)
        .map(|i| random_graph(&format!("g{i:02}"), &mut rng))
        .collect();
    let ds = GraphDataset::from_graphs(graphs).unwrap();
    let text = ds.to_graph_jsonl();

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ds.jsonl");
    ds.save_graph_jsonl(&path).unwrap();
    let loaded = GraphDataset::load_graph_jsonl(&path).unwrap();

    assert_eq!(loaded.len(), ds.len());
    for (a, b) in ds.graphs().iter().zip(loaded.graphs()) {
        assert_eq!(a.id(), b.id());
        assert_eq!(a.node_count(), b.node_count());
        assert_eq!(a.edges(), b.edges());
        assert_eq!(a.node_attrs(), b.node_attrs());
        assert_eq!(a.edge_attrs(), b.edge_attrs());
    }
    assert_eq!(loaded.to_graph_jsonl(), text, "re-serialisation drifted");
    assert_eq!(loaded.node_vocab(), ds.node_vocab());
    assert_eq!(loaded.edge_vocab(), ds.edge_vocab());
}

#[test]
fn edge_list_directory_loads_in_filename_order() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("b.edges"), "0 1\n1 2\n").unwrap();
    std::fs::write(dir.path().join("a.edges"), "# triangle\n0 1\n1 2\n2 0\n").unwrap();
    let ds = GraphDataset::load_edge_list_dir(dir.path()).unwrap();
    assert_eq!(ds.len(), 2);
    assert_eq!(ds.graph(0).id(), "a");
    assert_eq!(ds.graph(0).edge_count(), 3);
    assert_eq!(ds.graph(1).id(), "b");
    assert_eq!(ds.graph(1).node_count(), 3);
    assert_eq!(ds.graph(1).node_arity(), 0);
}
