//! Signed directed graphs: construction, edge-list IO, neighborhood and
//! distance primitives, and stratified train/test splits.

use std::collections::HashMap;
use std::collections::VecDeque;
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::error::{Result, SeloError};

/// Dense node identifier in `[0, num_nodes)`.
pub type NodeId = usize;

/// A directed edge with sign `+1` or `-1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SignedEdge {
    pub src: NodeId,
    pub dst: NodeId,
    pub sign: i8,
}

/// How the third column of an edge-list file maps to a sign.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignRule {
    /// Column holds exactly `+1` or `-1`.
    SignedColumn,
    /// Column holds a rating; its sign is taken, zero is rejected.
    ThresholdAtZero,
}

impl std::str::FromStr for SignRule {
    type Err = SeloError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "signed" | "signed-column" => Ok(SignRule::SignedColumn),
            "threshold" | "threshold-at-zero" => Ok(SignRule::ThresholdAtZero),
            other => Err(SeloError::Argument(format!(
                "unknown sign rule {other:?}, expected \"signed\" or \"threshold\""
            ))),
        }
    }
}

/// Immutable signed directed graph.
///
/// Node ids are dense integers. Each `(src, dst)` pair carries exactly one
/// sign; mutual edges `(u,v)` and `(v,u)` are independent and may disagree.
#[derive(Debug, Clone)]
pub struct SignedDigraph {
    num_nodes: usize,
    edges: Vec<SignedEdge>,
    sign_of: HashMap<(NodeId, NodeId), i8>,
    out_adj: Vec<Vec<(NodeId, i8)>>,
    in_adj: Vec<Vec<(NodeId, i8)>>,
    /// Union of out- and in-neighbors per node, sorted, deduplicated.
    und_adj: Vec<Vec<NodeId>>,
    n_pos: usize,
    n_neg: usize,
}

/// Result of loading an edge list, with counters for the rows that were
/// dropped or overwritten on the way in.
#[derive(Debug)]
pub struct LoadOutcome {
    pub graph: SignedDigraph,
    pub self_loops_skipped: usize,
    pub duplicates_overwritten: usize,
}

impl SignedDigraph {
    /// Builds a graph from `(src, dst, sign)` triples.
    ///
    /// Rejects out-of-range ids, signs other than plus/minus one, self-loops
    /// and duplicate `(src, dst)` pairs.
    pub fn from_edges(num_nodes: usize, edges: Vec<SignedEdge>) -> Result<Self> {
        let mut sign_of = HashMap::with_capacity(edges.len());
        let mut n_pos = 0usize;
        let mut n_neg = 0usize;
        for e in &edges {
            if e.src >= num_nodes || e.dst >= num_nodes {
                return Err(SeloError::Argument(format!(
                    "edge ({}, {}) out of range for {} nodes",
                    e.src, e.dst, num_nodes
                )));
            }
            if e.src == e.dst {
                return Err(SeloError::Argument(format!("self-loop at node {}", e.src)));
            }
            match e.sign {
                1 => n_pos += 1,
                -1 => n_neg += 1,
                s => {
                    return Err(SeloError::Argument(format!(
                        "sign {s} on edge ({}, {}), expected +1 or -1",
                        e.src, e.dst
                    )))
                }
            }
            if sign_of.insert((e.src, e.dst), e.sign).is_some() {
                return Err(SeloError::Argument(format!(
                    "duplicate edge ({}, {})",
                    e.src, e.dst
                )));
            }
        }

        let mut out_adj = vec![Vec::new(); num_nodes];
        let mut in_adj = vec![Vec::new(); num_nodes];
        for e in &edges {
            out_adj[e.src].push((e.dst, e.sign));
            in_adj[e.dst].push((e.src, e.sign));
        }
        let mut und_adj: Vec<Vec<NodeId>> = vec![Vec::new(); num_nodes];
        for v in 0..num_nodes {
            let mut nbrs: Vec<NodeId> = out_adj[v]
                .iter()
                .map(|&(u, _)| u)
                .chain(in_adj[v].iter().map(|&(u, _)| u))
                .collect();
            nbrs.sort_unstable();
            nbrs.dedup();
            und_adj[v] = nbrs;
        }

        Ok(SignedDigraph {
            num_nodes,
            edges,
            sign_of,
            out_adj,
            in_adj,
            und_adj,
            n_pos,
            n_neg,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn n_pos(&self) -> usize {
        self.n_pos
    }

    pub fn n_neg(&self) -> usize {
        self.n_neg
    }

    /// Edges in deterministic (insertion) order.
    pub fn edges(&self) -> &[SignedEdge] {
        &self.edges
    }

    pub fn sign(&self, src: NodeId, dst: NodeId) -> Option<i8> {
        self.sign_of.get(&(src, dst)).copied()
    }

    pub fn out_neighbors(&self, v: NodeId) -> &[(NodeId, i8)] {
        &self.out_adj[v]
    }

    pub fn in_neighbors(&self, v: NodeId) -> &[(NodeId, i8)] {
        &self.in_adj[v]
    }

    /// Union of out- and in-neighbors, sorted, without `v` itself.
    pub fn undirected_neighbors(&self, v: NodeId) -> &[NodeId] {
        &self.und_adj[v]
    }

    /// 1-hop neighborhood of `v`: out- and in-neighbors, excluding `v`.
    pub fn neighborhood(&self, v: NodeId) -> Result<Vec<NodeId>> {
        if v >= self.num_nodes {
            return Err(SeloError::Argument(format!(
                "node {v} out of range for {} nodes",
                self.num_nodes
            )));
        }
        Ok(self.und_adj[v].clone())
    }

    /// Writes the graph as a `src,dst,sign` CSV (signed-column convention).
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for e in &self.edges {
            writeln!(out, "{},{},{}", e.src, e.dst, e.sign)?;
        }
        Ok(())
    }

    /// Content hash of `(num_nodes, edge multiset)`, used as a cache key.
    /// Independent of edge order.
    pub fn content_hash(&self) -> String {
        let mut sorted: Vec<&SignedEdge> = self.edges.iter().collect();
        sorted.sort_unstable_by_key(|e| (e.src, e.dst));
        let mut hasher = Sha256::new();
        hasher.update((self.num_nodes as u64).to_le_bytes());
        for e in sorted {
            hasher.update((e.src as u64).to_le_bytes());
            hasher.update((e.dst as u64).to_le_bytes());
            hasher.update(e.sign.to_le_bytes());
        }
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Loads a signed edge list.
///
/// Each data line is `src <sep> dst <sep> value` with separator comma, tab or
/// space; a fourth column (e.g. a timestamp) is ignored. Lines starting with
/// `#` and blank lines are skipped. Node ids are compacted to a dense range
/// in order of first appearance. Duplicate `(src, dst)` pairs keep the last
/// occurrence; self-loops are dropped and counted.
pub fn load_edge_list<R: BufRead>(reader: R, rule: SignRule) -> Result<LoadOutcome> {
    let mut id_of: HashMap<i64, NodeId> = HashMap::new();
    let mut edges: Vec<SignedEdge> = Vec::new();
    let mut slot_of: HashMap<(NodeId, NodeId), usize> = HashMap::new();
    let mut self_loops = 0usize;
    let mut duplicates = 0usize;

    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| SeloError::Parse {
            line: lineno,
            msg: e.to_string(),
        })?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed
            .split([',', '\t', ' '])
            .filter(|f| !f.is_empty())
            .collect();
        if fields.len() < 3 {
            return Err(SeloError::Parse {
                line: lineno,
                msg: format!("expected `src dst value`, got {} field(s)", fields.len()),
            });
        }
        let src_raw: i64 = fields[0].parse().map_err(|_| SeloError::Parse {
            line: lineno,
            msg: format!("bad source id {:?}", fields[0]),
        })?;
        let dst_raw: i64 = fields[1].parse().map_err(|_| SeloError::Parse {
            line: lineno,
            msg: format!("bad destination id {:?}", fields[1]),
        })?;
        let value: f64 = fields[2].parse().map_err(|_| SeloError::Parse {
            line: lineno,
            msg: format!("bad value {:?}", fields[2]),
        })?;

        if value == 0.0 {
            return Err(SeloError::Data(format!("value 0 at line {lineno}")));
        }
        let sign = match rule {
            SignRule::ThresholdAtZero => {
                if value > 0.0 {
                    1
                } else {
                    -1
                }
            }
            SignRule::SignedColumn => {
                if value == 1.0 {
                    1
                } else if value == -1.0 {
                    -1
                } else {
                    return Err(SeloError::Data(format!(
                        "signed-column value {value} at line {lineno}, expected +1 or -1"
                    )));
                }
            }
        };

        if src_raw == dst_raw {
            self_loops += 1;
            continue;
        }

        let next_id = id_of.len();
        let src = *id_of.entry(src_raw).or_insert(next_id);
        let next_id = id_of.len();
        let dst = *id_of.entry(dst_raw).or_insert(next_id);

        match slot_of.get(&(src, dst)) {
            Some(&slot) => {
                edges[slot].sign = sign;
                duplicates += 1;
            }
            None => {
                slot_of.insert((src, dst), edges.len());
                edges.push(SignedEdge { src, dst, sign });
            }
        }
    }

    if self_loops > 0 {
        log::warn!("dropped {self_loops} self-loop(s) while loading edge list");
    }
    let graph = SignedDigraph::from_edges(id_of.len(), edges)?;
    Ok(LoadOutcome {
        graph,
        self_loops_skipped: self_loops,
        duplicates_overwritten: duplicates,
    })
}

/// Multi-source BFS hop distances over a symmetric adjacency restricted to a
/// subgraph. Unreachable nodes map to `None`.
pub fn undirected_distances(adj: &[Vec<usize>], sources: &[usize]) -> Vec<Option<u32>> {
    let mut dist: Vec<Option<u32>> = vec![None; adj.len()];
    let mut queue = VecDeque::new();
    for &s in sources {
        if dist[s].is_none() {
            dist[s] = Some(0);
            queue.push_back(s);
        }
    }
    while let Some(v) = queue.pop_front() {
        let d = dist[v].unwrap();
        for &u in &adj[v] {
            if dist[u].is_none() {
                dist[u] = Some(d + 1);
                queue.push_back(u);
            }
        }
    }
    dist
}

/// A stratified train/test split of a graph's edges.
#[derive(Debug)]
pub struct EdgeSplit {
    pub train: SignedDigraph,
    pub test_edges: Vec<SignedEdge>,
    pub fraction: f64,
    pub seed: u64,
}

/// Splits edges into train/test, stratified per sign class: the train set
/// receives `round(fraction * n_pos)` positive and `round(fraction * n_neg)`
/// negative edges. Deterministic under a fixed seed; the train graph keeps
/// the original node count.
pub fn split_edges(g: &SignedDigraph, fraction: f64, seed: u64) -> Result<EdgeSplit> {
    if fraction.is_nan() || fraction <= 0.0 || fraction >= 1.0 {
        return Err(SeloError::Argument(format!(
            "train fraction must be in (0, 1), got {fraction}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pos: Vec<SignedEdge> = g.edges().iter().filter(|e| e.sign == 1).copied().collect();
    let mut neg: Vec<SignedEdge> = g.edges().iter().filter(|e| e.sign == -1).copied().collect();
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);

    let n_train_pos = (fraction * pos.len() as f64).round() as usize;
    let n_train_neg = (fraction * neg.len() as f64).round() as usize;

    let mut train_edges = Vec::with_capacity(n_train_pos + n_train_neg);
    train_edges.extend_from_slice(&pos[..n_train_pos]);
    train_edges.extend_from_slice(&neg[..n_train_neg]);
    let mut test_edges = Vec::with_capacity(pos.len() + neg.len() - train_edges.len());
    test_edges.extend_from_slice(&pos[n_train_pos..]);
    test_edges.extend_from_slice(&neg[n_train_neg..]);

    let train = SignedDigraph::from_edges(g.num_nodes(), train_edges)?;
    Ok(EdgeSplit {
        train,
        test_edges,
        fraction,
        seed,
    })
}
