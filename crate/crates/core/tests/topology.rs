use std::collections::VecDeque;

use wsn_core::topology::NodeSite;
use wsn_core::{NodeId, SearchBudget, SimConfig, Topology, Topology32, TopologyError};

/// Hop counts by relaxing `dist[v] = min(dist[u] + 1)` until nothing
/// changes, with adjacency rebuilt from raw coordinates.
fn relaxation_hops(sites: &[NodeSite<f64>], sink: usize, range: f64) -> Vec<Option<u32>> {
    let n = sites.len();
    let adjacent = |a: usize, b: usize| {
        let dx = sites[a].position.x - sites[b].position.x;
        let dy = sites[a].position.y - sites[b].position.y;
        a != b && (dx * dx + dy * dy).sqrt() <= range
    };
    let mut dist: Vec<Option<u32>> = vec![None; n];
    dist[sink] = Some(0);
    loop {
        let mut changed = false;
        for u in 0..n {
            for v in 0..n {
                if let (Some(du), true) = (dist[u], adjacent(u, v)) {
                    if dist[v].is_none_or(|dv| du + 1 < dv) {
                        dist[v] = Some(du + 1);
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            return dist;
        }
    }
}

fn connected(config: &SimConfig, first_seed: u64, count: usize) -> Vec<(u64, Topology)> {
    (first_seed..)
        .filter_map(|s| Topology::generate(config, s).ok().map(|t| (s, t)))
        .take(count)
        .collect()
}

#[test]
fn path_length_equals_independent_hop_distance() {
    let config = SimConfig::default();
    let mut mismatches = 0;
    for (_, topo) in connected(&config, 1, 20) {
        assert_eq!(topo.len(), 100);
        let oracle = relaxation_hops(topo.sites(), topo.sink().index(), config.tx_range);
        for id in topo.node_ids() {
            let got = topo.find_path_length(id, SearchBudget::Unlimited).unwrap();
            if Some(got) != oracle[id.index()] {
                mismatches += 1;
            }
            assert_eq!(Some(topo.hop_distance(id)), oracle[id.index()]);
        }
    }
    assert_eq!(mismatches, 0);
}

#[test]
fn parent_dag_invariants() {
    let config = SimConfig::default();
    for (seed, topo) in connected(&config, 100, 20) {
        let sink = topo.sink();
        assert!(topo.parents(sink).is_empty());
        // Kahn's algorithm over child -> parent edges.
        let n = topo.len();
        let mut indegree = vec![0usize; n];
        for id in topo.node_ids() {
            for &p in topo.parents(id) {
                assert!(
                    topo.is_adjacent(id, p),
                    "seed {seed}: parent {p} of {id} not a neighbor"
                );
                assert_eq!(topo.hop_distance(p) + 1, topo.hop_distance(id));
                assert!(topo.children(p).contains(&id));
                indegree[p.index()] += 1;
            }
            if id != sink {
                assert!(
                    !topo.parents(id).is_empty(),
                    "seed {seed}: {id} has no parent"
                );
            }
            if topo.hop_distance(id) == 1 {
                assert!(topo.parents(id).contains(&sink));
            }
        }
        let mut ready: VecDeque<NodeId> = topo
            .node_ids()
            .filter(|id| indegree[id.index()] == 0)
            .collect();
        let mut seen = 0;
        while let Some(u) = ready.pop_front() {
            seen += 1;
            for &p in topo.parents(u) {
                indegree[p.index()] -= 1;
                if indegree[p.index()] == 0 {
                    ready.push_back(p);
                }
            }
        }
        assert_eq!(seen, n, "seed {seed}: parent relation has a cycle");
    }
}

#[test]
fn neighbor_relation_matches_range() {
    let config = SimConfig::default();
    let (_, topo) = connected(&config, 1, 1).remove(0);
    for a in topo.node_ids() {
        assert!(!topo.is_adjacent(a, a));
        for b in topo.node_ids() {
            if a != b {
                assert_eq!(
                    topo.is_adjacent(a, b),
                    topo.distance(a, b) <= config.tx_range
                );
                assert_eq!(topo.is_adjacent(a, b), topo.is_adjacent(b, a));
            }
        }
    }
}

#[test]
fn budget_never_beats_the_true_distance() {
    let config = SimConfig::default();
    let (_, topo) = connected(&config, 5, 1).remove(0);
    for id in topo.node_ids() {
        let exact = topo.find_path_length(id, SearchBudget::Unlimited).unwrap();
        for budget in [1, 2, 5, 20] {
            match topo.find_path_length(id, SearchBudget::Expansions(budget)) {
                Ok(found) => assert!(found >= exact),
                Err(e) => assert_eq!(e, TopologyError::NoPathFound(id)),
            }
        }
    }
}

#[test]
fn average_path_length_buckets() {
    let config = SimConfig::default();
    let (_, topo) = connected(&config, 1, 1).remove(0);
    let table = topo.average_path_length(SearchBudget::Unlimited).unwrap();
    assert!(!table.contains_key(&0));
    for (&hops, &mean) in &table {
        assert_eq!(mean, f64::from(hops));
    }
}

#[test]
fn generation_is_seed_deterministic_and_precision_independent() {
    let config = SimConfig::default();
    let a = Topology::generate(&config, 42);
    let b = Topology::generate(&config, 42);
    assert_eq!(a, b);
    if let (Ok(t64), Ok(t32)) = (a, Topology32::generate(&config, 42)) {
        assert_eq!(t64.sink(), t32.sink());
        // Neighbor sets agree except for pairs sitting on the range boundary.
        let differing: usize = t64
            .node_ids()
            .map(|id| (t64.neighbors(id) != t32.neighbors(id)) as usize)
            .sum();
        assert!(differing <= 2);
    }
}

#[test]
fn sparse_field_reports_unreachable_nodes() {
    let config = SimConfig {
        node_count: 20,
        field_side: 500.0,
        ..SimConfig::default()
    };
    match Topology::generate(&config, 3) {
        Err(TopologyError::Disconnected { unreachable }) => {
            assert!(!unreachable.is_empty());
            assert!(unreachable.len() < 20);
        }
        other => panic!("expected a disconnected topology, got {other:?}"),
    }
}
