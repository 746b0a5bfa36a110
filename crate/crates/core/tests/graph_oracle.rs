use boardnet::graph::{all_pairs_distances, build_network_from_boards, centrality, proximity_matrix, DistanceMatrix};
use boardnet::ingest::{BoardRecord, DirectorId};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// One board per node; each edge is carried by its own director.
fn boards_for(n: usize, edges: &[(usize, usize)]) -> Vec<BoardRecord> {
    let mut dirs: Vec<Vec<String>> = (0..n).map(|i| vec![format!("own{i:04}")]).collect();
    for (k, &(a, b)) in edges.iter().enumerate() {
        dirs[a].push(format!("e{k:06}"));
        dirs[b].push(format!("e{k:06}"));
    }
    dirs.into_iter()
        .enumerate()
        .map(|(i, mut d)| {
            d.sort();
            d.dedup();
            BoardRecord {
                year: 2000,
                corporation: format!("n{i:04}").as_str().into(),
                expert_flags: vec![false; d.len()],
                directors: d.into_iter().map(DirectorId).collect(),
            }
        })
        .collect()
}

fn floyd_warshall(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<Option<u32>>> {
    let mut d = vec![vec![None; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = Some(0);
    }
    for &(a, b) in edges {
        if a != b {
            d[a][b] = Some(1);
            d[b][a] = Some(1);
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if let (Some(x), Some(y)) = (d[i][k], d[k][j]) {
                    if d[i][j].is_none_or(|c| x + y < c) {
                        d[i][j] = Some(x + y);
                    }
                }
            }
        }
    }
    d
}

fn random_edges(rng: &mut ChaCha8Rng, n: usize, p: f64) -> Vec<(usize, usize)> {
    let mut e = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random::<f64>() < p {
                e.push((i, j));
            }
        }
    }
    e
}

fn distances(n: usize, edges: &[(usize, usize)]) -> DistanceMatrix {
    all_pairs_distances(&build_network_from_boards(2000, &boards_for(n, edges)))
}

#[test]
fn bfs_matches_floyd_warshall_on_random_graphs() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let n = rng.random_range(2..=50);
        let p = rng.random_range(0.0..0.15);
        let edges = random_edges(&mut rng, n, p);
        let d = distances(n, &edges);
        let oracle = floyd_warshall(n, &edges);
        for i in 0..n {
            for j in 0..n {
                assert_eq!(d.get(i, j), oracle[i][j], "n={n} ({i},{j})");
            }
        }
    }
}

#[test]
fn centrality_matches_row_means() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let n = 30;
    let edges = random_edges(&mut rng, n, 0.08);
    let oracle = floyd_warshall(n, &edges);
    let c = centrality(&proximity_matrix::<f64>(&distances(n, &edges))).unwrap();
    for i in 0..n {
        let s: f64 = (0..n)
            .filter(|&j| j != i)
            .map(|j| oracle[i][j].map_or(0.0, |h| 1.0 / h as f64))
            .sum();
        assert!((c[i] - s / (n - 1) as f64).abs() < 1e-12);
    }
}

fn graph() -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
    (2usize..25).prop_flat_map(|n| (Just(n), proptest::collection::vec((0..n, 0..n), 0..60)))
}

proptest! {
    #[test]
    fn distances_are_a_metric_on_components((n, raw) in graph()) {
        let edges: Vec<(usize, usize)> = raw.into_iter().filter(|(a, b)| a != b).collect();
        let d = distances(n, &edges);
        for i in 0..n {
            prop_assert_eq!(d.get(i, i), Some(0));
            for j in 0..n {
                prop_assert_eq!(d.get(i, j), d.get(j, i));
                for k in 0..n {
                    if let (Some(a), Some(b)) = (d.get(i, k), d.get(k, j)) {
                        let direct = d.get(i, j);
                        prop_assert!(direct.is_some_and(|c| c <= a + b));
                    }
                }
            }
        }
        for &(a, b) in &edges {
            prop_assert_eq!(d.get(a, b), Some(1));
        }
    }

    #[test]
    fn proximity_lies_in_unit_interval((n, raw) in graph()) {
        let edges: Vec<(usize, usize)> = raw.into_iter().filter(|(a, b)| a != b).collect();
        let p = proximity_matrix::<f64>(&distances(n, &edges));
        for i in 0..n {
            for j in 0..n {
                let v = p.get(i, j);
                prop_assert!((0.0..=1.0).contains(&v));
                prop_assert_eq!(v, p.get(j, i));
            }
        }
    }

    #[test]
    fn cutoff_only_disconnects_far_pairs((n, raw) in graph(), cutoff in 1u32..5) {
        let edges: Vec<(usize, usize)> = raw.into_iter().filter(|(a, b)| a != b).collect();
        let d = distances(n, &edges);
        let t = d.truncated(cutoff);
        for i in 0..n {
            for j in 0..n {
                match d.get(i, j) {
                    Some(h) if h <= cutoff => prop_assert_eq!(t.get(i, j), Some(h)),
                    _ => prop_assert_eq!(t.get(i, j), None),
                }
            }
        }
    }
}
