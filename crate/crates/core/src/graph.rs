//! The yearly interlock network, hop distances, proximity and centrality.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dyad::{DiagonalConvention, DyadMatrix};
use crate::error::{Error, Result};
use crate::ingest::{BoardRecord, CorpId, DirectorId, YearDataset};
use crate::scalar::Scalar;

/// Corporations linked by shared directors. Edge weight is the number of
/// shared directors; it is reported but never used for distances.
#[derive(Debug, Clone, PartialEq)]
pub struct YearNetwork {
    pub year: i32,
    nodes: Vec<CorpId>,
    index: BTreeMap<CorpId, usize>,
    /// `(i, j, weight)` with `i < j`, sorted.
    edges: Vec<(usize, usize, u32)>,
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
    board_directors: Vec<Vec<DirectorId>>,
    seats: BTreeMap<DirectorId, usize>,
}

/// Build the network from one year's boards: an edge joins two corporations
/// iff their boards share at least one director.
pub fn build_network(dataset: &YearDataset) -> YearNetwork {
    build_network_from_boards(dataset.year, &dataset.boards)
}

pub fn build_network_from_boards(year: i32, boards: &[BoardRecord]) -> YearNetwork {
    let mut sorted: Vec<&BoardRecord> = boards.iter().collect();
    sorted.sort_by(|a, b| a.corporation.cmp(&b.corporation));
    sorted.dedup_by(|a, b| a.corporation == b.corporation);

    let nodes: Vec<CorpId> = sorted.iter().map(|b| b.corporation.clone()).collect();
    let index: BTreeMap<CorpId, usize> = nodes.iter().cloned().enumerate().map(|(i, c)| (c, i)).collect();

    let mut boards_of: BTreeMap<&DirectorId, Vec<usize>> = BTreeMap::new();
    for (i, b) in sorted.iter().enumerate() {
        for d in &b.directors {
            boards_of.entry(d).or_default().push(i);
        }
    }
    let mut weights: BTreeMap<(usize, usize), u32> = BTreeMap::new();
    for corps in boards_of.values() {
        for (a, &i) in corps.iter().enumerate() {
            for &j in &corps[a + 1..] {
                let key = if i < j { (i, j) } else { (j, i) };
                *weights.entry(key).or_insert(0) += 1;
            }
        }
    }
    let edges: Vec<(usize, usize, u32)> = weights.into_iter().map(|((i, j), w)| (i, j, w)).collect();

    let n = nodes.len();
    let mut degree = vec![0usize; n];
    for &(i, j, _) in &edges {
        degree[i] += 1;
        degree[j] += 1;
    }
    let mut offsets = vec![0usize; n + 1];
    for i in 0..n {
        offsets[i + 1] = offsets[i] + degree[i];
    }
    let mut fill = offsets.clone();
    let mut neighbors = vec![0usize; offsets[n]];
    for &(i, j, _) in &edges {
        neighbors[fill[i]] = j;
        fill[i] += 1;
        neighbors[fill[j]] = i;
        fill[j] += 1;
    }

    let seats = boards_of
        .iter()
        .map(|(d, corps)| ((*d).clone(), corps.len()))
        .collect();
    YearNetwork {
        year,
        nodes,
        index,
        edges,
        offsets,
        neighbors,
        board_directors: sorted.iter().map(|b| b.directors.clone()).collect(),
        seats,
    }
}

impl YearNetwork {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[CorpId] {
        &self.nodes
    }

    pub fn labels(&self) -> Vec<String> {
        self.nodes.iter().map(|c| c.0.clone()).collect()
    }

    pub fn index_of(&self, corp: &CorpId) -> Option<usize> {
        self.index.get(corp).copied()
    }

    pub fn edges(&self) -> &[(usize, usize, u32)] {
        &self.edges
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    pub fn directors(&self, i: usize) -> &[DirectorId] {
        &self.board_directors[i]
    }

    /// Write `corp_a,corp_b,shared_directors`.
    pub fn write_edge_list<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["corp_a", "corp_b", "shared_directors"])?;
        for &(i, j, wgt) in &self.edges {
            w.write_record([self.nodes[i].as_str(), self.nodes[j].as_str(), &wgt.to_string()])?;
        }
        w.flush().map_err(|e| Error::Csv(e.into()))
    }
}

/// Number of distinct directors of corporation `i` who also sit on another board.
pub fn interlocker_count(net: &YearNetwork, i: usize) -> usize {
    net.directors(i)
        .iter()
        .filter(|d| net.seats.get(*d).copied().unwrap_or(0) >= 2)
        .count()
}

/// Hop counts between every pair; disconnected pairs hold [`DistanceMatrix::UNREACHABLE`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceMatrix {
    n: usize,
    hops: Vec<u32>,
    labels: Vec<String>,
}

impl DistanceMatrix {
    pub const UNREACHABLE: u32 = u32::MAX;

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// `None` when the pair is disconnected.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Option<u32> {
        match self.hops[i * self.n + j] {
            Self::UNREACHABLE => None,
            h => Some(h),
        }
    }

    #[inline]
    pub fn raw(&self, i: usize, j: usize) -> u32 {
        self.hops[i * self.n + j]
    }

    /// Largest finite off-diagonal distance (0 for edgeless graphs).
    pub fn diameter(&self) -> u32 {
        self.hops
            .iter()
            .copied()
            .filter(|&h| h != Self::UNREACHABLE)
            .max()
            .unwrap_or(0)
    }

    /// Mark every pair farther apart than `cutoff` hops as disconnected.
    pub fn truncated(&self, cutoff: u32) -> DistanceMatrix {
        let hops = self
            .hops
            .iter()
            .map(|&h| if h != Self::UNREACHABLE && h > cutoff { Self::UNREACHABLE } else { h })
            .collect();
        DistanceMatrix {
            n: self.n,
            hops,
            labels: self.labels.clone(),
        }
    }

    pub fn submatrix(&self, nodes: &[usize]) -> DistanceMatrix {
        let m = nodes.len();
        let mut hops = Vec::with_capacity(m * m);
        for &a in nodes {
            for &b in nodes {
                hops.push(self.raw(a, b));
            }
        }
        DistanceMatrix {
            n: m,
            hops,
            labels: nodes.iter().map(|&i| self.labels[i].clone()).collect(),
        }
    }

    /// Dense CSV; disconnected pairs are written as `inf`.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec![String::new()];
        header.extend(self.labels.iter().cloned());
        w.write_record(&header)?;
        for i in 0..self.n {
            let mut rec = vec![self.labels[i].clone()];
            rec.extend((0..self.n).map(|j| match self.get(i, j) {
                Some(h) => h.to_string(),
                None => "inf".to_string(),
            }));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::Csv(e.into()))
    }
}

fn bfs_row(net: &YearNetwork, source: usize, row: &mut [u32], queue: &mut VecDeque<usize>) {
    row.fill(DistanceMatrix::UNREACHABLE);
    row[source] = 0;
    queue.clear();
    queue.push_back(source);
    while let Some(u) = queue.pop_front() {
        let next = row[u] + 1;
        for &v in net.neighbors(u) {
            if row[v] == DistanceMatrix::UNREACHABLE {
                row[v] = next;
                queue.push_back(v);
            }
        }
    }
}

/// Unweighted shortest-path hop counts by breadth-first search from every node.
pub fn all_pairs_distances(net: &YearNetwork) -> DistanceMatrix {
    let n = net.len();
    let mut hops = vec![DistanceMatrix::UNREACHABLE; n * n];
    if n > 0 {
        hops.par_chunks_mut(n)
            .enumerate()
            .for_each_init(VecDeque::new, |queue, (s, row)| bfs_row(net, s, row, queue));
    }
    DistanceMatrix {
        n,
        hops,
        labels: net.labels(),
    }
}

/// `D_ij = 1 / d_ij`, zero for disconnected pairs, unit diagonal.
pub fn proximity_matrix<T: Scalar>(distances: &DistanceMatrix) -> DyadMatrix<T> {
    DyadMatrix::from_upper_fn(distances.labels().to_vec(), DiagonalConvention::Unit, |i, j| {
        match distances.get(i, j) {
            Some(h) => T::one() / T::from_u32(h).expect("hop count fits"),
            None => T::zero(),
        }
    })
}

/// Mean proximity of each node to all others, `(1 / (N - 1)) * sum_j D_ij`.
pub fn centrality<T: Scalar>(proximity: &DyadMatrix<T>) -> Result<Vec<T>> {
    let n = proximity.n();
    if n < 2 {
        return Err(Error::InvalidInput(format!("centrality needs at least 2 nodes, got {n}")));
    }
    let denom = T::from_usize_lossy(n - 1);
    Ok((0..n)
        .map(|i| {
            let row = proximity.row(i);
            let s: T = row
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &v)| v)
                .sum();
            s / denom
        })
        .collect())
}

/// Descriptive statistics of one year's network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSummary {
    pub year: i32,
    pub corporations: usize,
    pub links: usize,
    pub median_board_size: Option<f64>,
    /// Share of links carried by exactly one director.
    pub single_director_link_fraction: Option<f64>,
    pub isolated_fraction: Option<f64>,
    /// Mean over connected pairs only; absent when no pair is connected.
    pub mean_finite_distance: Option<f64>,
    pub connected_pairs: usize,
    pub diameter: u32,
    pub cross_sector_link_fraction: Option<f64>,
    /// Among corporations with at least two closes in the year.
    pub positive_return_fraction: Option<f64>,
}

pub fn network_summary(net: &YearNetwork, dataset: &YearDataset) -> NetworkSummary {
    let distances = all_pairs_distances(net);
    network_summary_with(net, &distances, dataset)
}

pub fn network_summary_with(
    net: &YearNetwork,
    distances: &DistanceMatrix,
    dataset: &YearDataset,
) -> NetworkSummary {
    let n = net.len();
    let mut sizes: Vec<usize> = (0..n).map(|i| net.directors(i).len()).collect();
    sizes.sort_unstable();
    let median_board_size = match sizes.len() {
        0 => None,
        k if k % 2 == 1 => Some(sizes[k / 2] as f64),
        k => Some((sizes[k / 2 - 1] + sizes[k / 2]) as f64 / 2.0),
    };
    let links = net.edges().len();
    let frac = |num: usize, den: usize| (den > 0).then(|| num as f64 / den as f64);

    let single = net.edges().iter().filter(|e| e.2 == 1).count();
    let isolated = (0..n).filter(|&i| net.degree(i) == 0).count();

    let mut total = 0u64;
    let mut connected = 0usize;
    for i in 0..n {
        for j in (i + 1)..n {
            if let Some(h) = distances.get(i, j) {
                total += h as u64;
                connected += 1;
            }
        }
    }

    let sector_of = |i: usize| dataset.meta_of(&net.nodes()[i]).map(|m| &m.sector);
    let cross = net
        .edges()
        .iter()
        .filter(|&&(i, j, _)| sector_of(i) != sector_of(j))
        .count();

    let mut with_returns = 0usize;
    let mut positive = 0usize;
    for c in net.nodes() {
        if let Some(s) = dataset.prices_of(c) {
            if s.observations.len() >= 2 {
                with_returns += 1;
                let first = s.observations[0].1;
                let last = s.observations[s.observations.len() - 1].1;
                if (last / first).ln() > 0.0 {
                    positive += 1;
                }
            }
        }
    }

    NetworkSummary {
        year: net.year,
        corporations: n,
        links,
        median_board_size,
        single_director_link_fraction: frac(single, links),
        isolated_fraction: frac(isolated, n),
        mean_finite_distance: frac(total as usize, connected),
        connected_pairs: connected,
        diameter: distances.diameter(),
        cross_sector_link_fraction: frac(cross, links),
        positive_return_fraction: frac(positive, with_returns),
    }
}

/// Corporations of `net` whose ID is in `keep`, as node indices.
pub fn node_indices(net: &YearNetwork, keep: &BTreeSet<CorpId>) -> Vec<usize> {
    net.nodes()
        .iter()
        .enumerate()
        .filter(|(_, c)| keep.contains(*c))
        .map(|(i, _)| i)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn board(corp: &str, dirs: &[&str]) -> BoardRecord {
        let mut directors: Vec<DirectorId> = dirs.iter().map(|&d| d.into()).collect();
        directors.sort();
        BoardRecord {
            year: 2007,
            corporation: corp.into(),
            expert_flags: vec![false; directors.len()],
            directors,
        }
    }

    #[test]
    fn single_shared_director_makes_one_edge() {
        let net = build_network_from_boards(
            2007,
            &[board("C1", &["D1", "D2"]), board("C2", &["D2"]), board("C3", &["D9"])],
        );
        assert_eq!(net.edges(), &[(0, 1, 1)]);
        assert_eq!(net.degree(2), 0);
    }

    #[test]
    fn two_shared_directors_weight_two() {
        let net = build_network_from_boards(2007, &[board("A", &["D1", "D2", "D3"]), board("B", &["D1", "D2"])]);
        assert_eq!(net.edges(), &[(0, 1, 2)]);
    }

    #[test]
    fn one_corporation() {
        let net = build_network_from_boards(2007, &[board("A", &["D1"])]);
        assert_eq!(net.len(), 1);
        assert!(net.edges().is_empty());
        let d = all_pairs_distances(&net);
        assert_eq!(d.get(0, 0), Some(0));
    }

    fn path3() -> YearNetwork {
        build_network_from_boards(2007, &[board("A", &["x"]), board("B", &["x", "y"]), board("C", &["y"])])
    }

    #[test]
    fn path_distances_and_proximity() {
        let net = path3();
        let d = all_pairs_distances(&net);
        assert_eq!(d.get(0, 1), Some(1));
        assert_eq!(d.get(0, 2), Some(2));
        let p: DyadMatrix<f64> = proximity_matrix(&d);
        assert_eq!(p.get(0, 1), 1.0);
        assert_eq!(p.get(0, 2), 0.5);
        assert_eq!(p.get(1, 1), 1.0);
        let c = centrality(&p).unwrap();
        assert_eq!(c[0], 0.75);
        assert_eq!(c[1], 1.0);
    }

    #[test]
    fn isolated_pair_is_unreachable() {
        let net = build_network_from_boards(2007, &[board("A", &["x"]), board("B", &["y"])]);
        let d = all_pairs_distances(&net);
        assert_eq!(d.get(0, 1), None);
        let p: DyadMatrix<f64> = proximity_matrix(&d);
        assert_eq!(p.get(0, 1), 0.0);
        assert_eq!(centrality(&p).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn star_center_centrality_one() {
        let net = build_network_from_boards(
            2007,
            &[board("H", &["a", "b", "c"]), board("L1", &["a"]), board("L2", &["b"]), board("L3", &["c"])],
        );
        let p: DyadMatrix<f64> = proximity_matrix(&all_pairs_distances(&net));
        let c = centrality(&p).unwrap();
        assert_eq!(c[net.index_of(&"H".into()).unwrap()], 1.0);
    }

    #[test]
    fn centrality_needs_two_nodes() {
        let net = build_network_from_boards(2007, &[board("A", &["x"])]);
        let p: DyadMatrix<f64> = proximity_matrix(&all_pairs_distances(&net));
        assert!(centrality(&p).is_err());
    }

    #[test]
    fn interlockers() {
        let net = build_network_from_boards(
            2007,
            &[board("C1", &["D1", "D2"]), board("C2", &["D2"]), board("C3", &["D9"])],
        );
        assert_eq!(interlocker_count(&net, 0), 1);
        assert_eq!(interlocker_count(&net, 2), 0);
        let tri = build_network_from_boards(2007, &[board("A", &["D"]), board("B", &["D"]), board("C", &["D"])]);
        assert!((0..3).all(|i| interlocker_count(&tri, i) == 1));
    }

    #[test]
    fn truncation() {
        let d = all_pairs_distances(&path3());
        assert_eq!(d.diameter(), 2);
        let t = d.truncated(1);
        assert_eq!(t.get(0, 2), None);
        assert_eq!(t.get(0, 1), Some(1));
        assert_eq!(d.truncated(2), d);
    }

    #[test]
    fn edge_list_csv() {
        let mut buf = Vec::new();
        path3().write_edge_list(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "corp_a,corp_b,shared_directors\nA,B,1\nB,C,1\n");
    }
}
