//! Subgraph encoding: re-weighting, likelihood matrices, node ordering and
//! the per-edge feature pipeline.
//!
//! A subgraph's signed adjacency is first re-weighted so that an edge at
//! undirected hop distance `d` from the target pair contributes `1/(d+1)`
//! when positive and `-beta/(d+1)` when negative. The weight matrix `W` is
//! then mapped to three likelihood matrices:
//!
//! ```text
//! S1 = a W (a WᵀW + I)⁻¹ WᵀW
//! S2 = a Wᵀ (a WWᵀ + I)⁻¹ W²
//! S3 = a W² (a WᵀW + I)⁻¹ Wᵀ
//! ```
//!
//! Each matrix is reordered by the importance of its nodes against the two
//! targets, truncated (or zero-padded) to `K x K`, flattened row-major and
//! concatenated into the feature vector.

use std::time::Instant;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SeloError};
use crate::graph::{undirected_distances, NodeId, SignedDigraph, SignedEdge};
use crate::linalg::{ensure_finite, eye, LuFactors};
use crate::seeding;
use crate::subgraph::{extract, EnclosingSubgraph};

/// Re-weighted subgraph adjacency.
#[derive(Debug, Clone)]
pub struct WeightMatrix {
    pub w: Array2<f64>,
    pub beta: f64,
    /// Undirected hop distance of each subgraph node to the target pair;
    /// `None` for nodes unreachable within the subgraph.
    pub node_dist: Vec<Option<u32>>,
}

impl WeightMatrix {
    /// Distance of an edge to the target pair: the closer of its endpoints.
    pub fn edge_distance(&self, i: usize, j: usize) -> Option<u32> {
        match (self.node_dist[i], self.node_dist[j]) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (Some(a), None) => Some(a),
            (None, Some(b)) => Some(b),
            (None, None) => None,
        }
    }
}

/// The three ordered, pruned `K x K` likelihood matrices of one subgraph.
#[derive(Debug, Clone)]
pub struct LikelihoodTriple {
    pub s1: Array2<f64>,
    pub s2: Array2<f64>,
    pub s3: Array2<f64>,
    /// Importance scores each matrix was ordered by, in pre-ordering index
    /// order (one score per non-target node).
    pub scores: [Vec<f64>; 3],
}

/// One encoded edge.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub features: Vec<f64>,
    pub label: i8,
    pub edge: (NodeId, NodeId),
}

/// How the negative-edge scaling factor is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", content = "value", rename_all = "lowercase")]
pub enum BetaMode {
    /// `1 + log10(n_pos / n_neg)` from the graph being encoded.
    Benchmark,
    Fixed(f64),
}

impl std::str::FromStr for BetaMode {
    type Err = SeloError;
    fn from_str(s: &str) -> Result<Self> {
        if s == "benchmark" {
            return Ok(BetaMode::Benchmark);
        }
        let v: f64 = s.parse().map_err(|_| {
            SeloError::Argument(format!("beta must be \"benchmark\" or a positive real, got {s:?}"))
        })?;
        if v <= 0.0 || !v.is_finite() {
            return Err(SeloError::Argument(format!(
                "beta must be a positive real, got {v}"
            )));
        }
        Ok(BetaMode::Fixed(v))
    }
}

/// Which matrix (or matrices) the feature vector is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// All three likelihood matrices, concatenated (the default).
    Concat,
    /// The raw signed adjacency, ordered by S1-derived scores.
    Adj,
    /// The weight matrix, ordered by S1-derived scores.
    Weight,
    S1,
    S2,
    S3,
}

impl Variant {
    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::Concat => "concat",
            Variant::Adj => "adj",
            Variant::Weight => "weight",
            Variant::S1 => "s1",
            Variant::S2 => "s2",
            Variant::S3 => "s3",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = SeloError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "concat" => Ok(Variant::Concat),
            "adj" => Ok(Variant::Adj),
            "weight" => Ok(Variant::Weight),
            "s1" => Ok(Variant::S1),
            "s2" => Ok(Variant::S2),
            "s3" => Ok(Variant::S3),
            other => Err(SeloError::Argument(format!("unknown variant {other:?}"))),
        }
    }
}

/// Node ordering applied before pruning.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NodeOrdering {
    /// Descending importance score, ties by (hop, original id).
    Selo,
    /// Uniformly random order of the non-target nodes (ablation baseline).
    /// The permutation for an edge is derived from `seed` and the edge
    /// endpoints, so it is stable across runs and thread schedules.
    Random { seed: u64 },
}

impl NodeOrdering {
    pub fn label(&self) -> String {
        match self {
            NodeOrdering::Selo => "selo".to_string(),
            NodeOrdering::Random { seed } => format!("random:{seed}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub k: usize,
    pub alpha: f64,
    pub beta: BetaMode,
    pub variant: Variant,
    pub ordering: NodeOrdering,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig {
            k: 5,
            alpha: 0.005,
            beta: BetaMode::Benchmark,
            variant: Variant::Concat,
            ordering: NodeOrdering::Selo,
        }
    }
}

impl EncoderConfig {
    /// Length of the feature vector this configuration emits.
    pub fn feature_width(&self) -> usize {
        match self.variant {
            Variant::Concat => 3 * self.k * self.k,
            _ => self.k * self.k,
        }
    }

    /// The beta value actually used when encoding against `g`. Benchmark mode
    /// uses the sign counts of `g` itself, so callers must pass the training
    /// graph, never the full dataset.
    pub fn resolve_beta(&self, g: &SignedDigraph) -> Result<f64> {
        match self.beta {
            BetaMode::Benchmark => benchmark_beta(g.n_pos(), g.n_neg()),
            BetaMode::Fixed(v) => {
                if v <= 0.0 || !v.is_finite() {
                    Err(SeloError::Argument(format!(
                        "beta must be a positive real, got {v}"
                    )))
                } else {
                    Ok(v)
                }
            }
        }
    }
}

/// Benchmark scaling factor `1 + log10(n_pos / n_neg)`.
///
/// Values below 1 (negatives outnumbering positives) are returned verbatim
/// with a warning.
pub fn benchmark_beta(n_pos: usize, n_neg: usize) -> Result<f64> {
    if n_pos == 0 || n_neg == 0 {
        return Err(SeloError::Argument(format!(
            "benchmark beta needs both sign classes, got {n_pos} positive / {n_neg} negative"
        )));
    }
    let beta = 1.0 + (n_pos as f64 / n_neg as f64).log10();
    if beta < 1.0 {
        log::warn!("negative links outnumber positive ones; benchmark beta = {beta:.4} < 1");
    }
    Ok(beta)
}

/// Applies the distance re-weighting to a subgraph.
///
/// For each nonzero adjacency entry `(i, j)`, `d` is the undirected hop
/// distance of the closer endpoint to the target set `{0, 1}` within the
/// subgraph; the weight is `1/(d+1)` for positive edges and `-beta/(d+1)`
/// for negative ones. Edges unreachable from the targets weigh zero.
pub fn reweight(sg: &EnclosingSubgraph, beta: f64) -> Result<WeightMatrix> {
    if beta <= 0.0 || !beta.is_finite() {
        return Err(SeloError::Argument(format!(
            "beta must be a positive real, got {beta}"
        )));
    }
    let m = sg.len();
    if m < 2 {
        return Err(SeloError::Argument(format!(
            "subgraph has {m} nodes, expected at least the two targets"
        )));
    }
    let und = sg.undirected_adjacency();
    let node_dist = undirected_distances(&und, &[0, 1]);

    let mut w = Array2::<f64>::zeros((m, m));
    for i in 0..m {
        for j in 0..m {
            let sign = sg.adj[(i, j)];
            if sign == 0.0 {
                continue;
            }
            let d = match (node_dist[i], node_dist[j]) {
                (Some(a), Some(b)) => a.min(b),
                (Some(a), None) => a,
                (None, Some(b)) => b,
                (None, None) => continue, // unreachable edge keeps weight 0
            };
            let denom = f64::from(d) + 1.0;
            w[(i, j)] = if sign > 0.0 { 1.0 / denom } else { -beta / denom };
        }
    }
    Ok(WeightMatrix {
        w,
        beta,
        node_dist,
    })
}

fn validate_lo_input(w: &Array2<f64>, alpha: f64) -> Result<()> {
    if alpha <= 0.0 || !alpha.is_finite() {
        return Err(SeloError::Argument(format!(
            "alpha must be a positive real, got {alpha}"
        )));
    }
    let (r, c) = w.dim();
    if r != c || r == 0 {
        return Err(SeloError::Argument(format!(
            "weight matrix must be square and nonempty, got {r}x{c}"
        )));
    }
    ensure_finite(w, "weight matrix")
}

/// The three likelihood matrices of a weight matrix, by direct solve.
///
/// Both shifted Gram matrices are symmetric positive definite, so the
/// systems are solved by factorization; nothing is inverted explicitly.
pub fn likelihood_matrices(
    w: &Array2<f64>,
    alpha: f64,
) -> Result<(Array2<f64>, Array2<f64>, Array2<f64>)> {
    validate_lo_input(w, alpha)?;
    let m = w.nrows();
    let wt = w.t().to_owned();
    let wtw = wt.dot(w);
    let wwt = w.dot(&wt);
    let w2 = w.dot(w);

    let m1 = LuFactors::new(&(&wtw * alpha + eye(m)))?;
    let s1 = w.dot(&m1.solve(&wtw)?) * alpha;
    let s3 = w2.dot(&m1.solve(&wt)?) * alpha;

    let m2 = LuFactors::new(&(&wwt * alpha + eye(m)))?;
    let s2 = wt.dot(&m2.solve(&w2)?) * alpha;
    Ok((s1, s2, s3))
}

fn max_abs_col_sum(w: &Array2<f64>) -> f64 {
    let mut sums = vec![0.0f64; w.ncols()];
    for row in w.rows() {
        for (j, v) in row.iter().enumerate() {
            sums[j] += v.abs();
        }
    }
    sums.into_iter().fold(0.0, f64::max)
}

fn max_abs_row_sum(w: &Array2<f64>) -> f64 {
    w.rows()
        .into_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Truncated Neumann-series approximation of the likelihood matrices:
///
/// ```text
/// S1 ~ sum_{k=0}^{t-1} (-1)^k a^{k+1} W (WᵀW)^{k+1}
/// S2 ~ sum_{k=0}^{t-1} (-1)^k a^{k+1} (WᵀW)^{k+1} W
/// S3 ~ sum_{k=0}^{t-1} (-1)^k a^{k+1} W (WWᵀ)^{k+1}
/// ```
///
/// Convergence needs `a * lambda_max(WᵀW) < 1`; that is checked through the
/// bound `lambda_max <= ||W||_1 * ||W||_inf`, and when the bound is violated
/// the exact solve is used instead.
pub fn neumann_likelihood(
    w: &Array2<f64>,
    alpha: f64,
    terms: usize,
) -> Result<(Array2<f64>, Array2<f64>, Array2<f64>)> {
    if terms == 0 {
        return Err(SeloError::Argument(
            "Neumann truncation needs at least one term".to_string(),
        ));
    }
    validate_lo_input(w, alpha)?;
    let bound = alpha * max_abs_col_sum(w) * max_abs_row_sum(w);
    if bound >= 1.0 || bound.is_nan() {
        log::debug!("Neumann bound {bound:.3} >= 1, falling back to the exact solve");
        return likelihood_matrices(w, alpha);
    }

    let wt = w.t().to_owned();
    let wtw = wt.dot(w);
    let wwt = w.dot(&wt);

    // order-k terms: W (WᵀW)^{k+1}, (WᵀW)^{k+1} W, W (WWᵀ)^{k+1}
    let mut t1 = w.dot(&wtw);
    let mut t2 = wtw.dot(w);
    let mut t3 = w.dot(&wwt);
    let mut coeff = alpha;
    let mut s1 = &t1 * coeff;
    let mut s2 = &t2 * coeff;
    let mut s3 = &t3 * coeff;
    for _ in 1..terms {
        t1 = t1.dot(&wtw);
        t2 = wtw.dot(&t2);
        t3 = t3.dot(&wwt);
        coeff *= -alpha;
        s1.scaled_add(coeff, &t1);
        s2.scaled_add(coeff, &t2);
        s3.scaled_add(coeff, &t3);
    }
    Ok((s1, s2, s3))
}

/// Whole-graph likelihood scores `A Z*` with
/// `Z* = a (a AᵀA + I)⁻¹ AᵀA` — the `S1` branch applied to a full signed
/// adjacency matrix.
pub fn global_lo_scores(a: &Array2<f64>, alpha: f64) -> Result<Array2<f64>> {
    validate_lo_input(a, alpha)?;
    let n = a.nrows();
    let ata = a.t().dot(a);
    let z = LuFactors::new(&(&ata * alpha + eye(n)))?.solve(&ata)? * alpha;
    Ok(a.dot(&z))
}

/// Importance of each non-target node: the absolute likelihood mass between
/// the node and the two targets,
/// `b_i = |s[0,i]| + |s[i,0]| + |s[1,i]| + |s[i,1]|` for `i >= 2`.
pub fn importance_scores(s: &Array2<f64>) -> Result<Vec<f64>> {
    let (r, c) = s.dim();
    if r != c || r < 2 {
        return Err(SeloError::Argument(format!(
            "importance scores need a square matrix with both targets, got {r}x{c}"
        )));
    }
    Ok((2..r)
        .map(|i| s[(0, i)].abs() + s[(i, 0)].abs() + s[(1, i)].abs() + s[(i, 1)].abs())
        .collect())
}

/// Tie-breaking key for node ordering: hop of insertion, then original id.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OrderKey {
    pub hop: u32,
    pub node: NodeId,
}

impl OrderKey {
    pub fn for_subgraph(sg: &EnclosingSubgraph) -> Vec<OrderKey> {
        (2..sg.len())
            .map(|i| OrderKey {
                hop: sg.hop_of[i],
                node: sg.nodes[i],
            })
            .collect()
    }
}

/// Matrix indices `2..m` sorted by descending score, ties by ascending hop
/// then ascending original id.
pub fn ranked_order(scores: &[f64], keys: &[OrderKey]) -> Vec<usize> {
    debug_assert_eq!(scores.len(), keys.len());
    let mut idx: Vec<usize> = (2..scores.len() + 2).collect();
    idx.sort_by(|&a, &b| {
        scores[b - 2]
            .total_cmp(&scores[a - 2])
            .then(keys[a - 2].hop.cmp(&keys[b - 2].hop))
            .then(keys[a - 2].node.cmp(&keys[b - 2].node))
    });
    idx
}

/// Applies a node order (`order` lists matrix indices `>= 2`) to rows and
/// columns simultaneously, keeping the targets at 0 and 1, then truncates to
/// the top-left `k x k` block, zero-padding when the subgraph is smaller.
pub fn apply_order(s: &Array2<f64>, order: &[usize], k: usize) -> Array2<f64> {
    let m = s.nrows();
    let mut perm = Vec::with_capacity(m);
    perm.push(0);
    perm.push(1);
    perm.extend_from_slice(order);
    let mut out = Array2::<f64>::zeros((k, k));
    let lim = k.min(m);
    for i in 0..lim {
        for j in 0..lim {
            out[(i, j)] = s[(perm[i], perm[j])];
        }
    }
    out
}

/// Orders a matrix by descending importance score and prunes it to `k x k`.
pub fn order_and_prune(
    s: &Array2<f64>,
    scores: &[f64],
    keys: &[OrderKey],
    k: usize,
) -> Result<Array2<f64>> {
    let m = s.nrows();
    if k < 2 {
        return Err(SeloError::Argument(format!("k = {k} must be >= 2")));
    }
    if scores.len() + 2 != m || keys.len() + 2 != m {
        return Err(SeloError::Argument(format!(
            "got {} scores and {} keys for a {m}-node matrix",
            scores.len(),
            keys.len()
        )));
    }
    Ok(apply_order(s, &ranked_order(scores, keys), k))
}

/// Ordered, pruned likelihood triple of a weight matrix. Each matrix is
/// ordered by its own importance scores.
pub fn likelihood_triple(
    wm: &WeightMatrix,
    keys: &[OrderKey],
    alpha: f64,
    k: usize,
) -> Result<LikelihoodTriple> {
    let (r1, r2, r3) = likelihood_matrices(&wm.w, alpha)?;
    let b1 = importance_scores(&r1)?;
    let b2 = importance_scores(&r2)?;
    let b3 = importance_scores(&r3)?;
    Ok(LikelihoodTriple {
        s1: order_and_prune(&r1, &b1, keys, k)?,
        s2: order_and_prune(&r2, &b2, keys, k)?,
        s3: order_and_prune(&r3, &b3, keys, k)?,
        scores: [b1, b2, b3],
    })
}

fn random_order(m: usize, ordering_seed: u64, x: NodeId, y: NodeId) -> Vec<usize> {
    let mut order: Vec<usize> = (2..m).collect();
    let mut rng =
        ChaCha8Rng::seed_from_u64(seeding::mix(&[ordering_seed, x as u64, y as u64]));
    order.shuffle(&mut rng);
    order
}

/// Encodes one target pair against the training graph with a pre-resolved
/// beta. Returns the features and the extracted subgraph size.
fn encode_edge_inner(
    g: &SignedDigraph,
    x: NodeId,
    y: NodeId,
    beta: f64,
    cfg: &EncoderConfig,
) -> Result<(Vec<f64>, usize)> {
    let sg = extract(g, x, y, cfg.k)?;
    let m = sg.len();
    if m < cfg.k {
        log::debug!(
            "subgraph of ({x}, {y}) has {m} < K={} nodes; zero-padding",
            cfg.k
        );
    }
    let wm = reweight(&sg, beta)?;
    let keys = OrderKey::for_subgraph(&sg);

    let features = match cfg.ordering {
        NodeOrdering::Selo => match cfg.variant {
            Variant::Concat => {
                let triple = likelihood_triple(&wm, &keys, cfg.alpha, cfg.k)?;
                let mut f = Vec::with_capacity(3 * cfg.k * cfg.k);
                f.extend(triple.s1.iter());
                f.extend(triple.s2.iter());
                f.extend(triple.s3.iter());
                f
            }
            Variant::S1 | Variant::S2 | Variant::S3 => {
                let (r1, r2, r3) = likelihood_matrices(&wm.w, cfg.alpha)?;
                let s = match cfg.variant {
                    Variant::S1 => r1,
                    Variant::S2 => r2,
                    _ => r3,
                };
                let b = importance_scores(&s)?;
                order_and_prune(&s, &b, &keys, cfg.k)?.iter().copied().collect()
            }
            Variant::Adj | Variant::Weight => {
                // ordered by S1-derived scores, but emitting the raw matrix
                let (r1, _, _) = likelihood_matrices(&wm.w, cfg.alpha)?;
                let b = importance_scores(&r1)?;
                let target = if cfg.variant == Variant::Adj {
                    &sg.adj
                } else {
                    &wm.w
                };
                order_and_prune(target, &b, &keys, cfg.k)?.iter().copied().collect()
            }
        },
        NodeOrdering::Random { seed } => {
            let order = random_order(m, seed, x, y);
            match cfg.variant {
                Variant::Concat => {
                    let (r1, r2, r3) = likelihood_matrices(&wm.w, cfg.alpha)?;
                    let mut f = Vec::with_capacity(3 * cfg.k * cfg.k);
                    for s in [&r1, &r2, &r3] {
                        f.extend(apply_order(s, &order, cfg.k).iter());
                    }
                    f
                }
                Variant::S1 | Variant::S2 | Variant::S3 => {
                    let (r1, r2, r3) = likelihood_matrices(&wm.w, cfg.alpha)?;
                    let s = match cfg.variant {
                        Variant::S1 => r1,
                        Variant::S2 => r2,
                        _ => r3,
                    };
                    apply_order(&s, &order, cfg.k).iter().copied().collect()
                }
                Variant::Adj => apply_order(&sg.adj, &order, cfg.k).iter().copied().collect(),
                Variant::Weight => apply_order(&wm.w, &order, cfg.k).iter().copied().collect(),
            }
        }
    };
    Ok((features, m))
}

/// Encodes one target pair against the training graph.
pub fn encode_edge(
    g: &SignedDigraph,
    x: NodeId,
    y: NodeId,
    cfg: &EncoderConfig,
) -> Result<Vec<f64>> {
    let beta = cfg.resolve_beta(g)?;
    Ok(encode_edge_inner(g, x, y, beta, cfg)?.0)
}

/// Size and timing statistics from one encoding pass.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct EncodeStats {
    pub edges: usize,
    pub mean_subgraph_size: f64,
    pub max_subgraph_size: usize,
    pub seconds: f64,
}

/// A batch of encoded edges in a fixed row order.
#[derive(Debug, Clone)]
pub struct EncodedSet {
    pub features: Array2<f64>,
    pub labels: Vec<i8>,
    pub edges: Vec<(NodeId, NodeId)>,
    pub stats: EncodeStats,
}

impl EncodedSet {
    pub fn samples(&self) -> Vec<Sample> {
        self.edges
            .iter()
            .zip(&self.labels)
            .enumerate()
            .map(|(i, (&edge, &label))| Sample {
                features: self.features.row(i).to_vec(),
                label,
                edge,
            })
            .collect()
    }

    pub fn from_samples(samples: &[Sample], width: usize, stats: EncodeStats) -> Result<Self> {
        let mut features = Array2::<f64>::zeros((samples.len(), width));
        let mut labels = Vec::with_capacity(samples.len());
        let mut edges = Vec::with_capacity(samples.len());
        for (i, s) in samples.iter().enumerate() {
            if s.features.len() != width {
                return Err(SeloError::Data(format!(
                    "sample {i} has {} features, expected {width}",
                    s.features.len()
                )));
            }
            for (j, v) in s.features.iter().enumerate() {
                features[(i, j)] = *v;
            }
            labels.push(s.label);
            edges.push(s.edge);
        }
        Ok(EncodedSet {
            features,
            labels,
            edges,
            stats,
        })
    }
}

/// Encodes a list of labeled edges in parallel over a shared immutable
/// graph. Row order follows the input order.
pub fn encode_edge_set(
    g: &SignedDigraph,
    edges: &[SignedEdge],
    cfg: &EncoderConfig,
) -> Result<EncodedSet> {
    let beta = cfg.resolve_beta(g)?;
    let width = cfg.feature_width();
    let start = Instant::now();
    let encoded: Result<Vec<(Vec<f64>, usize)>> = edges
        .par_iter()
        .map(|e| encode_edge_inner(g, e.src, e.dst, beta, cfg))
        .collect();
    let encoded = encoded?;
    let seconds = start.elapsed().as_secs_f64();

    let mut features = Array2::<f64>::zeros((edges.len(), width));
    let mut size_sum = 0usize;
    let mut size_max = 0usize;
    for (i, (row, m)) in encoded.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            features[(i, j)] = *v;
        }
        size_sum += m;
        size_max = size_max.max(*m);
    }
    let stats = EncodeStats {
        edges: edges.len(),
        mean_subgraph_size: if edges.is_empty() {
            0.0
        } else {
            size_sum as f64 / edges.len() as f64
        },
        max_subgraph_size: size_max,
        seconds,
    };
    Ok(EncodedSet {
        features,
        labels: edges.iter().map(|e| e.sign).collect(),
        edges: edges.iter().map(|e| (e.src, e.dst)).collect(),
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{fro_norm, solve};
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use rand::Rng;

    fn graph(num_nodes: usize, edges: &[(usize, usize, i8)]) -> SignedDigraph {
        let edges = edges
            .iter()
            .map(|&(src, dst, sign)| SignedEdge { src, dst, sign })
            .collect();
        SignedDigraph::from_edges(num_nodes, edges).unwrap()
    }

    fn subgraph(nodes: Vec<NodeId>, hop_of: Vec<u32>, entries: &[(usize, usize, f64)]) -> EnclosingSubgraph {
        let m = nodes.len();
        let mut adj = Array2::<f64>::zeros((m, m));
        for &(i, j, v) in entries {
            adj[(i, j)] = v;
        }
        EnclosingSubgraph { nodes, hop_of, adj }
    }

    fn random_weight(m: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
        Array2::from_shape_fn((m, m), |_| {
            if rng.gen_bool(0.4) {
                rng.gen_range(-1.5..1.5)
            } else {
                0.0
            }
        })
    }

    #[test]
    fn benchmark_beta_known_values() {
        assert_abs_diff_eq!(benchmark_beta(10, 10).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(benchmark_beta(100, 10).unwrap(), 2.0, epsilon = 1e-15);
        // bitcoin-alpha sign counts
        assert_abs_diff_eq!(benchmark_beta(22649, 1536).unwrap(), 2.1687, epsilon = 1e-4);
        assert!(benchmark_beta(0, 5).is_err());
        assert!(benchmark_beta(5, 0).is_err());
        // negatives outnumbering positives is allowed, just unusual
        assert!(benchmark_beta(10, 100).unwrap() < 1.0);
    }

    #[test]
    fn reweight_distance_cases() {
        // chain: targets 0,1; 0->2 (d=0), 2->3 (d=1, negative), 3->4 (d=2)
        let sg = subgraph(
            vec![0, 1, 2, 3, 4],
            vec![0, 0, 1, 2, 3],
            &[(0, 2, 1.0), (2, 3, -1.0), (3, 4, 1.0)],
        );
        let wm = reweight(&sg, 2.0).unwrap();
        assert_abs_diff_eq!(wm.w[(0, 2)], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(wm.w[(2, 3)], -1.0, epsilon = 1e-15); // -beta/(1+1)
        assert_abs_diff_eq!(wm.w[(3, 4)], 1.0 / 3.0, epsilon = 1e-15);
        assert_eq!(wm.edge_distance(3, 4), Some(2));
    }

    #[test]
    fn reweight_unreachable_edge_weighs_zero() {
        // nodes 2,3 form an island the targets cannot reach
        let sg = subgraph(vec![0, 1, 2, 3], vec![0, 0, 1, 1], &[(2, 3, 1.0)]);
        let wm = reweight(&sg, 2.0).unwrap();
        assert_eq!(wm.w[(2, 3)], 0.0);
        assert_eq!(wm.node_dist[2], None);
    }

    #[test]
    fn reweight_signs_follow_adjacency() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..30 {
            let g = crate::synth::random_signed_digraph(20, 60, 0.3, rng.gen());
            let sg = extract(&g, 0, 1, 8).unwrap();
            let wm = reweight(&sg, 1.7).unwrap();
            for i in 0..sg.len() {
                for j in 0..sg.len() {
                    let a = sg.adj[(i, j)];
                    let w = wm.w[(i, j)];
                    if a == 0.0 {
                        assert_eq!(w, 0.0);
                    } else {
                        assert_eq!(w.signum(), a, "sign mismatch at ({i},{j})");
                        assert!(w.abs() <= 1.7 + 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn doubling_beta_doubles_only_negative_weights() {
        let g = crate::synth::random_signed_digraph(25, 90, 0.4, 8);
        let sg = extract(&g, 2, 3, 10).unwrap();
        let w1 = reweight(&sg, 1.25).unwrap().w;
        let w2 = reweight(&sg, 2.5).unwrap().w;
        for (a, b) in w1.iter().zip(w2.iter()) {
            if *a < 0.0 {
                assert_abs_diff_eq!(*b, 2.0 * a, epsilon = 1e-15);
            } else {
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn reweight_rejects_nonpositive_beta() {
        let sg = subgraph(vec![0, 1], vec![0, 0], &[]);
        assert!(reweight(&sg, 0.0).is_err());
        assert!(reweight(&sg, -1.0).is_err());
        assert!(reweight(&sg, f64::NAN).is_err());
    }

    #[test]
    fn likelihood_of_zero_graph_is_zero() {
        let w = Array2::<f64>::zeros((4, 4));
        let (s1, s2, s3) = likelihood_matrices(&w, 0.005).unwrap();
        assert!(s1.iter().chain(s2.iter()).chain(s3.iter()).all(|&v| v == 0.0));
    }

    #[test]
    fn likelihood_single_entry_closed_form() {
        let w = array![[0.0, 1.0], [0.0, 0.0]];
        let alpha = 0.005;
        let (s1, s2, s3) = likelihood_matrices(&w, alpha).unwrap();
        // alpha / (1 + alpha)
        assert_abs_diff_eq!(s1[(0, 1)], 0.0049751, epsilon = 1e-7);
        assert_abs_diff_eq!(s1[(0, 1)], alpha / (1.0 + alpha), epsilon = 1e-15);
        let rest: f64 = s1.iter().map(|v| v.abs()).sum::<f64>() - s1[(0, 1)].abs();
        assert_abs_diff_eq!(rest, 0.0, epsilon = 1e-15);
        assert!(s2.iter().all(|&v| v == 0.0), "W^2 = 0 so S2 = 0");
        assert!(s3.iter().all(|&v| v == 0.0));
    }

    // S1 equals a W Wᵀ (a W Wᵀ + I)⁻¹ W, the other side of the push-through
    // identity, computed here through an independent solve.
    #[test]
    fn push_through_identity_on_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let m = rng.gen_range(2..10);
            let w = random_weight(m, &mut rng);
            let alpha = rng.gen_range(0.001..0.05);
            let (s1, _, _) = likelihood_matrices(&w, alpha).unwrap();
            let wwt = w.dot(&w.t());
            let shifted = &wwt * alpha + crate::linalg::eye(m);
            let s4 = wwt.dot(&solve(&shifted, &w).unwrap()) * alpha;
            let rel = fro_norm(&(&s1 - &s4)) / fro_norm(&s4).max(1e-300);
            assert!(rel < 1e-9, "relative error {rel} at m={m}");
        }
    }

    #[test]
    fn likelihood_rejects_bad_inputs() {
        let w = Array2::<f64>::zeros((3, 3));
        assert!(likelihood_matrices(&w, 0.0).is_err());
        assert!(likelihood_matrices(&w, -0.1).is_err());
        let mut nan = w.clone();
        nan[(0, 0)] = f64::NAN;
        assert!(likelihood_matrices(&nan, 0.005).is_err());
        let rect = Array2::<f64>::zeros((2, 3));
        assert!(likelihood_matrices(&rect, 0.005).is_err());
    }

    #[test]
    fn neumann_first_term_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let w = random_weight(5, &mut rng);
        let alpha = 0.005;
        let (s1, s2, s3) = neumann_likelihood(&w, alpha, 1).unwrap();
        let wtw = w.t().dot(&w);
        let wwt = w.dot(&w.t());
        assert_abs_diff_eq!(
            fro_norm(&(&s1 - &(w.dot(&wtw) * alpha))),
            0.0,
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(
            fro_norm(&(&s2 - &(wtw.dot(&w) * alpha))),
            0.0,
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(
            fro_norm(&(&s3 - &(w.dot(&wwt) * alpha))),
            0.0,
            epsilon = 1e-14
        );
    }

    #[test]
    fn neumann_zero_matrix_and_zero_terms() {
        let w = Array2::<f64>::zeros((3, 3));
        let (s1, s2, s3) = neumann_likelihood(&w, 0.01, 4).unwrap();
        assert!(s1.iter().chain(s2.iter()).chain(s3.iter()).all(|&v| v == 0.0));
        assert!(neumann_likelihood(&w, 0.01, 0).is_err());
    }

    #[test]
    fn neumann_truncation_error_decreases_to_zero() {
        for seed in [2u64, 9, 31] {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let w = random_weight(5, &mut rng);
            let alpha = 0.005;
            let exact = likelihood_matrices(&w, alpha).unwrap();
            let mut last = f64::INFINITY;
            let mut final_err = f64::INFINITY;
            for t in 1..=6 {
                let approxed = neumann_likelihood(&w, alpha, t).unwrap();
                let err = fro_norm(&(&exact.0 - &approxed.0))
                    + fro_norm(&(&exact.1 - &approxed.1))
                    + fro_norm(&(&exact.2 - &approxed.2));
                assert!(err < last, "error {err} did not decrease at t={t} (seed {seed})");
                last = err;
                final_err = err;
            }
            assert!(final_err < 1e-9, "error {final_err} still large at t=6");
        }
    }

    #[test]
    fn neumann_falls_back_to_exact_when_bound_violated() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let w = Array2::from_shape_fn((4, 4), |_| rng.gen_range(-10.0..10.0));
        let alpha = 0.05;
        assert!(alpha * max_abs_col_sum(&w) * max_abs_row_sum(&w) >= 1.0);
        let exact = likelihood_matrices(&w, alpha).unwrap();
        let fallback = neumann_likelihood(&w, alpha, 2).unwrap();
        assert_eq!(exact.0, fallback.0);
        assert_eq!(exact.1, fallback.1);
        assert_eq!(exact.2, fallback.2);
    }

    #[test]
    fn global_scores_zero_graph() {
        let a = Array2::<f64>::zeros((5, 5));
        let s = global_lo_scores(&a, 0.005).unwrap();
        assert!(s.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn global_scores_equal_first_likelihood_branch() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let a = random_weight(7, &mut rng);
        let s = global_lo_scores(&a, 0.01).unwrap();
        let (s1, _, _) = likelihood_matrices(&a, 0.01).unwrap();
        assert!(fro_norm(&(&s - &s1)) < 1e-12);
    }

    // the score of a pair is the sum of contribution-matrix rows over the
    // source's out-neighborhood: on an 11-node graph where node 0 points to
    // {2, 4, 5}, S[0,1] = Z[2,1] + Z[4,1] + Z[5,1]
    #[test]
    fn global_scores_sum_outgoing_contributions() {
        let g = graph(
            11,
            &[
                (0, 2, 1),
                (0, 4, 1),
                (0, 5, 1),
                (2, 1, 1),
                (4, 1, -1),
                (5, 6, 1),
                (6, 1, 1),
                (3, 2, 1),
                (7, 8, -1),
                (8, 9, 1),
                (9, 10, 1),
                (10, 7, 1),
                (3, 1, -1),
            ],
        );
        let mut a = Array2::<f64>::zeros((11, 11));
        for e in g.edges() {
            a[(e.src, e.dst)] = f64::from(e.sign);
        }
        let alpha = 0.005;
        let s = global_lo_scores(&a, alpha).unwrap();
        let ata = a.t().dot(&a);
        let z = solve(&(&ata * alpha + crate::linalg::eye(11)), &ata).unwrap() * alpha;
        let expected = z[(2, 1)] + z[(4, 1)] + z[(5, 1)];
        assert_abs_diff_eq!(s[(0, 1)], expected, epsilon = 1e-12);
        assert!(expected.abs() > 0.0, "degenerate example");
    }

    #[test]
    fn importance_examples() {
        let zero = Array2::<f64>::zeros((4, 4));
        assert_eq!(importance_scores(&zero).unwrap(), vec![0.0, 0.0]);

        let mut s = Array2::<f64>::zeros((3, 3));
        s[(0, 2)] = 0.2;
        s[(2, 0)] = 0.4;
        s[(1, 2)] = -0.3;
        s[(2, 1)] = 0.1;
        assert_abs_diff_eq!(importance_scores(&s).unwrap()[0], 1.0, epsilon = 1e-15);

        // flipping the sign of any single entry leaves scores unchanged
        let mut flipped = s.clone();
        flipped[(1, 2)] = 0.3;
        assert_eq!(
            importance_scores(&s).unwrap(),
            importance_scores(&flipped).unwrap()
        );
        assert!(importance_scores(&Array2::<f64>::zeros((1, 1))).is_err());
    }

    #[test]
    fn order_and_prune_pure_permutation_when_sizes_match() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = random_weight(5, &mut rng);
        let keys: Vec<OrderKey> = (2..5).map(|i| OrderKey { hop: 1, node: i }).collect();
        let scores = vec![0.3, 0.9, 0.5];
        let out = order_and_prune(&s, &scores, &keys, 5).unwrap();
        // expected order of non-target indices: 3 (0.9), 4 (0.5), 2 (0.3)
        let perm = [0usize, 1, 3, 4, 2];
        for i in 0..5 {
            for j in 0..5 {
                assert_eq!(out[(i, j)], s[(perm[i], perm[j])]);
            }
        }
    }

    #[test]
    fn order_and_prune_pads_small_subgraphs() {
        let s = array![[0.0, 2.0], [3.0, 0.0]];
        let out = order_and_prune(&s, &[], &[], 5).unwrap();
        assert_eq!(out.dim(), (5, 5));
        assert_eq!(out[(0, 1)], 2.0);
        assert_eq!(out[(1, 0)], 3.0);
        let nonzero = out.iter().filter(|&&v| v != 0.0).count();
        assert_eq!(nonzero, 2, "padding must stay zero");
    }

    #[test]
    fn order_and_prune_discards_low_scores() {
        let mut s = Array2::<f64>::zeros((4, 4));
        for i in 0..4 {
            for j in 0..4 {
                s[(i, j)] = (i * 4 + j) as f64;
            }
        }
        let keys = vec![
            OrderKey { hop: 1, node: 2 },
            OrderKey { hop: 1, node: 3 },
        ];
        // node at index 3 scores higher: it becomes index 2, index 2 is dropped
        let out = order_and_prune(&s, &[0.1, 0.9], &keys, 3).unwrap();
        assert_eq!(out.dim(), (3, 3));
        assert_eq!(out[(2, 2)], s[(3, 3)]);
        assert_eq!(out[(0, 2)], s[(0, 3)]);
        assert_eq!(out[(2, 0)], s[(3, 0)]);
    }

    #[test]
    fn order_and_prune_identity_when_scores_descending() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let s = random_weight(6, &mut rng);
        let keys: Vec<OrderKey> = (2..6).map(|i| OrderKey { hop: 1, node: i }).collect();
        let scores = vec![0.9, 0.7, 0.5, 0.3];
        let out = order_and_prune(&s, &scores, &keys, 4).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(out[(i, j)], s[(i, j)], "top-left block must be unchanged");
            }
        }
    }

    #[test]
    fn ordering_ties_break_by_hop_then_id() {
        let scores = vec![0.5, 0.5, 0.5];
        let keys = vec![
            OrderKey { hop: 2, node: 4 },
            OrderKey { hop: 1, node: 9 },
            OrderKey { hop: 1, node: 3 },
        ];
        assert_eq!(ranked_order(&scores, &keys), vec![4, 3, 2]);
    }

    #[test]
    fn encode_concat_width_and_padding() {
        let g = graph(2, &[]);
        let cfg = EncoderConfig {
            beta: BetaMode::Fixed(2.0),
            ..EncoderConfig::default()
        };
        let f = encode_edge(&g, 0, 1, &cfg).unwrap();
        assert_eq!(f.len(), 75);
        assert!(f.iter().all(|&v| v == 0.0), "isolated pair must encode to zeros");
    }

    #[test]
    fn encode_variant_widths() {
        let g = crate::synth::random_signed_digraph(30, 120, 0.2, 4);
        for variant in [
            Variant::Concat,
            Variant::Adj,
            Variant::Weight,
            Variant::S1,
            Variant::S2,
            Variant::S3,
        ] {
            let cfg = EncoderConfig {
                variant,
                ..EncoderConfig::default()
            };
            let f = encode_edge(&g, 0, 1, &cfg).unwrap();
            assert_eq!(f.len(), cfg.feature_width());
            assert_eq!(
                f.len(),
                if variant == Variant::Concat { 75 } else { 25 }
            );
        }
    }

    #[test]
    fn encode_is_deterministic() {
        let g = crate::synth::random_signed_digraph(40, 200, 0.25, 15);
        let cfg = EncoderConfig::default();
        let a = encode_edge(&g, 3, 7, &cfg).unwrap();
        let b = encode_edge(&g, 3, 7, &cfg).unwrap();
        assert_eq!(a, b);

        let random_cfg = EncoderConfig {
            ordering: NodeOrdering::Random { seed: 5 },
            ..EncoderConfig::default()
        };
        let c = encode_edge(&g, 3, 7, &random_cfg).unwrap();
        let d = encode_edge(&g, 3, 7, &random_cfg).unwrap();
        assert_eq!(c, d, "random ordering must be stable for a fixed seed");
        let other_seed = EncoderConfig {
            ordering: NodeOrdering::Random { seed: 6 },
            ..EncoderConfig::default()
        };
        let e = encode_edge(&g, 3, 7, &other_seed).unwrap();
        assert_ne!(c, e, "different ordering seeds should permute differently");
    }

    // the sign of the target edge itself must never reach the features
    // (beta is fixed here so the only possible leak is through the matrix)
    #[test]
    fn masked_target_sign_cannot_leak() {
        let mut edges = vec![
            (0, 2, 1),
            (2, 1, -1),
            (1, 3, 1),
            (3, 0, -1),
            (2, 3, 1),
        ];
        edges.push((0, 1, 1));
        let g_pos = graph(4, &edges);
        edges.last_mut().unwrap().2 = -1;
        let g_neg = graph(4, &edges);
        let cfg = EncoderConfig {
            beta: BetaMode::Fixed(2.0),
            ..EncoderConfig::default()
        };
        let f_pos = encode_edge(&g_pos, 0, 1, &cfg).unwrap();
        let f_neg = encode_edge(&g_neg, 0, 1, &cfg).unwrap();
        assert_eq!(f_pos, f_neg);
    }

    // post-ordering, each matrix's importance scores are non-increasing
    #[test]
    fn ordered_matrices_have_descending_scores() {
        let g = crate::synth::random_signed_digraph(40, 260, 0.3, 23);
        let sg = extract(&g, 1, 2, 8).unwrap();
        let wm = reweight(&sg, 1.9).unwrap();
        let keys = OrderKey::for_subgraph(&sg);
        let triple = likelihood_triple(&wm, &keys, 0.005, 6).unwrap();
        for s in [&triple.s1, &triple.s2, &triple.s3] {
            let b = importance_scores(s).unwrap();
            for pair in b.windows(2) {
                assert!(pair[0] >= pair[1] - 1e-12, "scores not descending: {b:?}");
            }
        }
    }

    #[test]
    fn encode_edge_set_parallel_matches_serial() {
        let g = crate::synth::random_signed_digraph(35, 180, 0.2, 44);
        let cfg = EncoderConfig {
            beta: BetaMode::Fixed(1.5),
            ..EncoderConfig::default()
        };
        let edges: Vec<SignedEdge> = g.edges().iter().take(20).copied().collect();
        let set = encode_edge_set(&g, &edges, &cfg).unwrap();
        assert_eq!(set.features.nrows(), 20);
        assert_eq!(set.stats.edges, 20);
        assert!(set.stats.mean_subgraph_size >= 2.0);
        for (i, e) in edges.iter().enumerate() {
            let single = encode_edge(&g, e.src, e.dst, &cfg).unwrap();
            assert_eq!(set.features.row(i).to_vec(), single);
            assert_eq!(set.labels[i], e.sign);
        }
    }
}
