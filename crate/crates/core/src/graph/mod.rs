//! Directed graphs under the receiver-row adjacency convention.
//!
//! An arc `(src, dst)` means `src -> dst` and is stored as `a[dst][src] = 1`,
//! so row `i` of the adjacency lists the in-neighbours of node `i`.

mod energy;
mod sna;
mod transform;

use std::collections::{BTreeSet, VecDeque};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{invalid, Error, Result};

pub use energy::{dirichlet_energy, dirichlet_energy_trace, normalized_dirichlet_energy};
pub use sna::{build_sna, DegreePolicy, SnaMatrix};
pub use transform::{largest_connected_component, ComponentMode};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectedGraph {
    num_nodes: usize,
    edges: Vec<(usize, usize)>,
    labels: Option<Vec<usize>>,
    directed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeInfo {
    pub in_degrees: Vec<usize>,
    pub out_degrees: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomophilyReport {
    pub value: f64,
    /// Nodes without in-neighbours, left out of the mean.
    pub excluded: usize,
}

impl DirectedGraph {
    /// Builds a directed graph from `(src, dst)` arcs; duplicates collapse.
    pub fn new(num_nodes: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if num_nodes == 0 {
            return Err(invalid("a graph needs at least one node"));
        }
        let mut set = BTreeSet::new();
        for (s, d) in edges {
            for idx in [s, d] {
                if idx >= num_nodes {
                    return Err(Error::NodeOutOfRange { index: idx, num_nodes });
                }
            }
            set.insert((s, d));
        }
        Ok(Self {
            num_nodes,
            edges: set.into_iter().collect(),
            labels: None,
            directed: true,
        })
    }

    /// Builds an undirected graph; every pair is stored as two arcs.
    pub fn undirected(num_nodes: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let arcs: Vec<_> = pairs.into_iter().flat_map(|(u, v)| [(u, v), (v, u)]).collect();
        let mut g = Self::new(num_nodes, arcs)?;
        g.directed = false;
        Ok(g)
    }

    pub fn with_labels(mut self, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != self.num_nodes {
            return Err(crate::error::dims(format!(
                "{} labels for {} nodes",
                labels.len(),
                self.num_nodes
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn without_labels(mut self) -> Self {
        self.labels = None;
        self
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Arcs as sorted `(src, dst)` pairs.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    /// False only for graphs built as undirected; a directed graph may still
    /// happen to have a symmetric arc set, see [`Self::is_symmetric`].
    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn is_symmetric(&self) -> bool {
        let set: BTreeSet<_> = self.edges.iter().copied().collect();
        self.edges.iter().all(|&(s, d)| set.contains(&(d, s)))
    }

    pub fn degrees(&self) -> DegreeInfo {
        let mut in_degrees = vec![0; self.num_nodes];
        let mut out_degrees = vec![0; self.num_nodes];
        for &(s, d) in &self.edges {
            out_degrees[s] += 1;
            in_degrees[d] += 1;
        }
        DegreeInfo { in_degrees, out_degrees }
    }

    /// Dense adjacency with `a[(dst, src)] = 1`.
    pub fn adjacency(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.num_nodes, self.num_nodes);
        for &(s, d) in &self.edges {
            a[(d, s)] = 1.0;
        }
        a
    }

    pub fn in_neighbors(&self) -> Vec<Vec<usize>> {
        let mut nb = vec![Vec::new(); self.num_nodes];
        for &(s, d) in &self.edges {
            nb[d].push(s);
        }
        nb
    }

    pub fn out_neighbors(&self) -> Vec<Vec<usize>> {
        let mut nb = vec![Vec::new(); self.num_nodes];
        for &(s, d) in &self.edges {
            nb[s].push(d);
        }
        nb
    }

    /// SHA-256 over the node count and arc list, hex encoded.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.num_nodes as u64).to_le_bytes());
        for &(s, d) in &self.edges {
            h.update((s as u64).to_le_bytes());
            h.update((d as u64).to_le_bytes());
        }
        hex(&h.finalize())
    }

    /// Mean fraction of same-label in-neighbours. Nodes with no in-neighbour
    /// are excluded and counted.
    pub fn homophily(&self) -> Result<HomophilyReport> {
        let labels = self
            .labels
            .as_ref()
            .ok_or_else(|| invalid("homophily requires node labels"))?;
        let mut same = vec![0usize; self.num_nodes];
        let mut total = vec![0usize; self.num_nodes];
        for &(s, d) in &self.edges {
            total[d] += 1;
            if labels[s] == labels[d] {
                same[d] += 1;
            }
        }
        let mut sum = 0.0;
        let mut counted = 0usize;
        for i in 0..self.num_nodes {
            if total[i] > 0 {
                sum += same[i] as f64 / total[i] as f64;
                counted += 1;
            }
        }
        let excluded = self.num_nodes - counted;
        if counted == 0 {
            return Err(invalid("no node has an in-neighbour"));
        }
        if excluded > 0 {
            log::warn!("homophily: {excluded} nodes without in-neighbours excluded");
        }
        Ok(HomophilyReport { value: sum / counted as f64, excluded })
    }

    /// Homophily of the symmetrized graph.
    pub fn homophily_symmetrized(&self) -> Result<HomophilyReport> {
        self.to_undirected().homophily()
    }

    /// Every node has equal in- and out-degree.
    pub fn is_balanced(&self) -> bool {
        let d = self.degrees();
        d.in_degrees == d.out_degrees
    }

    /// All-pairs hop counts where `get(i, j)` is the length of the shortest
    /// directed walk from `j` to `i`, the support pattern of powers of `A`.
    pub fn shortest_path_distances(&self) -> PathDistances {
        let n = self.num_nodes;
        let out = self.out_neighbors();
        let mut d = vec![u32::MAX; n * n];
        let mut queue = VecDeque::new();
        for src in 0..n {
            d[src * n + src] = 0;
            queue.clear();
            queue.push_back(src);
            while let Some(u) = queue.pop_front() {
                let du = d[u * n + src];
                for &v in &out[u] {
                    if d[v * n + src] == u32::MAX {
                        d[v * n + src] = du + 1;
                        queue.push_back(v);
                    }
                }
            }
        }
        PathDistances { n, d }
    }
}

/// Hop-count matrix; `None` marks unreachable pairs.
#[derive(Debug, Clone)]
pub struct PathDistances {
    n: usize,
    d: Vec<u32>,
}

impl PathDistances {
    pub fn num_nodes(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> Option<usize> {
        match self.d[i * self.n + j] {
            u32::MAX => None,
            v => Some(v as usize),
        }
    }
}

/// Parses a tab- or whitespace-separated edge list. Blank lines and lines
/// starting with `#` are skipped; line `u v` is the arc `u -> v`.
pub fn load_edge_list(text: &str, num_nodes: Option<usize>) -> Result<DirectedGraph> {
    let mut arcs = Vec::new();
    let mut max_idx = None;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(Error::Parse {
                line: lineno + 1,
                msg: format!("expected two fields, found {}", fields.len()),
            });
        }
        let mut ends = [0usize; 2];
        for (slot, f) in ends.iter_mut().zip(&fields) {
            *slot = f.parse().map_err(|_| Error::Parse {
                line: lineno + 1,
                msg: format!("not a node index: {f:?}"),
            })?;
        }
        if let Some(n) = num_nodes {
            for idx in ends {
                if idx >= n {
                    return Err(Error::Parse {
                        line: lineno + 1,
                        msg: format!("node {idx} out of range for {n} nodes"),
                    });
                }
            }
        }
        max_idx = max_idx.max(Some(ends[0].max(ends[1])));
        arcs.push((ends[0], ends[1]));
    }
    let n = match (num_nodes, max_idx) {
        (Some(n), _) => n,
        (None, Some(m)) => m + 1,
        (None, None) => return Err(invalid("empty edge list and no node count")),
    };
    DirectedGraph::new(n, arcs)
}

/// Undirected cycle `C_n`: node `k` is adjacent to `k ± 1 mod n`.
pub fn cycle_graph(n: usize) -> Result<DirectedGraph> {
    if n < 3 {
        return Err(invalid(format!("cycle needs at least 3 nodes, got {n}")));
    }
    DirectedGraph::undirected(n, (0..n).map(|k| (k, (k + 1) % n)))
}

/// Directed cycle `0 -> 1 -> ... -> n-1 -> 0`.
pub fn directed_cycle(n: usize) -> Result<DirectedGraph> {
    if n < 3 {
        return Err(invalid(format!("cycle needs at least 3 nodes, got {n}")));
    }
    DirectedGraph::new(n, (0..n).map(|k| (k, (k + 1) % n)))
}

pub fn complete_graph(n: usize) -> Result<DirectedGraph> {
    if n == 0 {
        return Err(invalid("complete graph needs at least one node"));
    }
    DirectedGraph::undirected(n, (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))))
}

/// Undirected path `0 - 1 - ... - n-1`.
pub fn path_graph(n: usize) -> Result<DirectedGraph> {
    if n == 0 {
        return Err(invalid("path needs at least one node"));
    }
    DirectedGraph::undirected(n, (1..n).map(|k| (k - 1, k)))
}

/// Erdős–Rényi graph. Directed graphs draw every ordered pair `i != j`
/// independently; undirected graphs draw every unordered pair once.
pub fn erdos_renyi(n: usize, p: f64, directed: bool, seed: u64) -> Result<DirectedGraph> {
    if n == 0 {
        return Err(invalid("graph needs at least one node"));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(invalid(format!("edge probability {p} outside [0, 1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = Vec::new();
    for u in 0..n {
        let lo = if directed { 0 } else { u + 1 };
        for v in lo..n {
            if u != v && rng.random::<f64>() < p {
                pairs.push((u, v));
            }
        }
    }
    if directed {
        DirectedGraph::new(n, pairs)
    } else {
        DirectedGraph::undirected(n, pairs)
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
