//! Experiment orchestration: repeated stratified splits, encoding, training,
//! scoring, and parameter scans, aggregated into serializable reports.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cache::{read_matching, write_cache, CacheHeader, CacheKey};
use crate::encoder::{encode_edge_set, BetaMode, EncodedSet, EncoderConfig, NodeOrdering, Variant};
use crate::error::{Result, SeloError};
use crate::graph::{split_edges, SignedDigraph, SignedEdge};
use crate::metrics::{compute_metrics, Metrics};
use crate::model::{init, predict_proba_batch, train, TrainConfig};
use crate::seeding;

/// Node ordering choice at the experiment level; the per-run seed for the
/// random ablation is derived from the experiment seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrderingMode {
    Selo,
    Random,
}

impl OrderingMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            OrderingMode::Selo => "selo",
            OrderingMode::Random => "random",
        }
    }
}

impl std::str::FromStr for OrderingMode {
    type Err = SeloError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "selo" => Ok(OrderingMode::Selo),
            "random" => Ok(OrderingMode::Random),
            other => Err(SeloError::Argument(format!("unknown ordering {other:?}"))),
        }
    }
}

/// Full configuration of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub k: usize,
    pub alpha: f64,
    pub beta: BetaMode,
    pub variant: Variant,
    pub ordering: OrderingMode,
    pub train_fraction: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub n_runs: usize,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            k: 5,
            alpha: 0.005,
            beta: BetaMode::Benchmark,
            variant: Variant::Concat,
            ordering: OrderingMode::Selo,
            train_fraction: 0.8,
            epochs: 100,
            batch_size: 512,
            learning_rate: 0.001,
            n_runs: 5,
            seed: 42,
        }
    }
}

/// Configuration snapshot embedded in every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub k: usize,
    pub alpha: f64,
    pub beta_mode: String,
    /// Beta actually used at encode time (resolved from the training split
    /// in benchmark mode; identical across runs because the stratified split
    /// sizes are deterministic).
    pub beta_value: f64,
    pub variant: String,
    pub ordering: String,
    pub train_fraction: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub n_runs: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub seed: u64,
    pub metrics: Metrics,
    pub encode_seconds: f64,
    pub train_seconds: f64,
    pub mean_subgraph_size: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub dataset: String,
    pub dataset_hash: String,
    pub config: ReportConfig,
    pub runs: Vec<RunRecord>,
    pub mean: Metrics,
    pub std: Metrics,
}

impl ExperimentReport {
    /// The report without its wall-clock fields, for determinism checks and
    /// golden comparisons.
    pub fn deterministic_view(&self) -> serde_json::Value {
        serde_json::json!({
            "dataset": self.dataset,
            "dataset_hash": self.dataset_hash,
            "config": self.config,
            "runs": self.runs.iter().map(|r| {
                serde_json::json!({ "seed": r.seed, "metrics": r.metrics })
            }).collect::<Vec<_>>(),
            "mean": self.mean,
            "std": self.std,
        })
    }
}

fn mean_std<F: Fn(&Metrics) -> f64>(runs: &[RunRecord], pick: F) -> (f64, f64) {
    let n = runs.len() as f64;
    let mean = runs.iter().map(|r| pick(&r.metrics)).sum::<f64>() / n;
    // population std so a single run reports exactly zero
    let var = runs
        .iter()
        .map(|r| {
            let d = pick(&r.metrics) - mean;
            d * d
        })
        .sum::<f64>()
        / n;
    (mean, var.sqrt())
}

fn cache_file(dir: &Path, key: &CacheKey) -> PathBuf {
    let json = serde_json::to_string(key).expect("cache key serializes");
    let digest = Sha256::digest(json.as_bytes());
    let tag: String = digest[..8].iter().map(|b| format!("{b:02x}")).collect();
    dir.join(format!("selo-{}-{}.csv", key.role, tag))
}

/// Encodes an edge list against `encode_graph`, going through the cache
/// directory when one is provided.
#[allow(clippy::too_many_arguments)]
fn encode_cached(
    encode_graph: &SignedDigraph,
    edges: &[SignedEdge],
    enc: &EncoderConfig,
    beta: f64,
    role: &str,
    dataset_hash: &str,
    split: Option<(f64, u64)>,
    cache_dir: Option<&Path>,
) -> Result<EncodedSet> {
    let key = CacheKey {
        role: role.to_string(),
        k: enc.k,
        alpha: enc.alpha,
        beta,
        variant: enc.variant.as_str().to_string(),
        ordering: enc.ordering.label(),
        dataset_hash: dataset_hash.to_string(),
        fraction: split.map(|s| s.0),
        split_seed: split.map(|s| s.1),
        feature_width: enc.feature_width(),
    };
    if let Some(dir) = cache_dir {
        let path = cache_file(dir, &key);
        if let Some((header, samples)) = read_matching(&path, &key)? {
            log::info!("cache hit: {}", path.display());
            return EncodedSet::from_samples(&samples, key.feature_width, header.stats);
        }
        let set = encode_edge_set(encode_graph, edges, enc)?;
        std::fs::create_dir_all(dir).map_err(|e| SeloError::io(dir, e))?;
        write_cache(
            &path,
            &CacheHeader {
                key,
                stats: set.stats,
            },
            &set.samples(),
        )?;
        Ok(set)
    } else {
        encode_edge_set(encode_graph, edges, enc)
    }
}

/// Runs `n_runs` split/encode/train/score cycles and aggregates the metrics.
///
/// Run `r` splits with seed `seed + r`; model initialization, shuffling and
/// the random-ordering ablation draw from named sub-streams of `seed`, so
/// two configurations differing in one knob share all other randomness.
pub fn run_experiment(
    g: &SignedDigraph,
    dataset_label: &str,
    cfg: &RunConfig,
    cache_dir: Option<&Path>,
) -> Result<ExperimentReport> {
    if cfg.n_runs == 0 {
        return Err(SeloError::Argument("n_runs must be at least 1".to_string()));
    }
    let dataset_hash = g.content_hash();
    let mut runs = Vec::with_capacity(cfg.n_runs);
    let mut beta_used = f64::NAN;

    for r in 0..cfg.n_runs {
        let split_seed = cfg.seed + r as u64;
        let split = split_edges(g, cfg.train_fraction, split_seed)?;

        let enc = EncoderConfig {
            k: cfg.k,
            alpha: cfg.alpha,
            beta: cfg.beta,
            variant: cfg.variant,
            ordering: match cfg.ordering {
                OrderingMode::Selo => NodeOrdering::Selo,
                OrderingMode::Random => NodeOrdering::Random {
                    seed: seeding::substream(cfg.seed, "ordering", r as u64),
                },
            },
        };
        // beta comes from the training split, never the full dataset
        let beta = enc.resolve_beta(&split.train)?;
        if r == 0 {
            beta_used = beta;
        }
        let enc = EncoderConfig {
            beta: BetaMode::Fixed(beta),
            ..enc
        };

        let encode_start = Instant::now();
        let train_set = encode_cached(
            &split.train,
            split.train.edges(),
            &enc,
            beta,
            "train",
            &dataset_hash,
            Some((cfg.train_fraction, split_seed)),
            cache_dir,
        )?;
        let test_set = encode_cached(
            &split.train,
            &split.test_edges,
            &enc,
            beta,
            "test",
            &dataset_hash,
            Some((cfg.train_fraction, split_seed)),
            cache_dir,
        )?;
        let encode_seconds = encode_start.elapsed().as_secs_f64();

        let train_cfg = TrainConfig {
            learning_rate: cfg.learning_rate,
            batch_size: cfg.batch_size,
            epochs: cfg.epochs,
            shuffle_seed: seeding::substream(cfg.seed, "shuffle", r as u64),
            ..TrainConfig::default()
        };
        let train_start = Instant::now();
        let params = init(
            enc.feature_width(),
            seeding::substream(cfg.seed, "init", r as u64),
        )?;
        let trained = train(&params, &train_set.features, &train_set.labels, &train_cfg)?;
        let train_seconds = train_start.elapsed().as_secs_f64();

        let scores = predict_proba_batch(&trained.params, &test_set.features)?;
        let metrics = compute_metrics(&scores, &test_set.labels)?;
        log::info!(
            "run {r}: auc={:.4} f1={:.4} micro={:.4} macro={:.4} (encode {:.1}s, train {:.1}s)",
            metrics.auc,
            metrics.f1,
            metrics.micro_f1,
            metrics.macro_f1,
            encode_seconds,
            train_seconds
        );
        runs.push(RunRecord {
            seed: split_seed,
            metrics,
            encode_seconds,
            train_seconds,
            mean_subgraph_size: train_set.stats.mean_subgraph_size,
        });
    }

    let (auc_m, auc_s) = mean_std(&runs, |m| m.auc);
    let (f1_m, f1_s) = mean_std(&runs, |m| m.f1);
    let (mi_m, mi_s) = mean_std(&runs, |m| m.micro_f1);
    let (ma_m, ma_s) = mean_std(&runs, |m| m.macro_f1);

    Ok(ExperimentReport {
        dataset: dataset_label.to_string(),
        dataset_hash,
        config: ReportConfig {
            k: cfg.k,
            alpha: cfg.alpha,
            beta_mode: match cfg.beta {
                BetaMode::Benchmark => "benchmark".to_string(),
                BetaMode::Fixed(_) => "fixed".to_string(),
            },
            beta_value: beta_used,
            variant: cfg.variant.as_str().to_string(),
            ordering: cfg.ordering.as_str().to_string(),
            train_fraction: cfg.train_fraction,
            epochs: cfg.epochs,
            batch_size: cfg.batch_size,
            learning_rate: cfg.learning_rate,
            n_runs: cfg.n_runs,
            seed: cfg.seed,
        },
        runs,
        mean: Metrics {
            auc: auc_m,
            f1: f1_m,
            micro_f1: mi_m,
            macro_f1: ma_m,
        },
        std: Metrics {
            auc: auc_s,
            f1: f1_s,
            micro_f1: mi_s,
            macro_f1: ma_s,
        },
    })
}

/// Which hyper-parameter a scan varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScanParam {
    Beta,
    Alpha,
}

impl std::str::FromStr for ScanParam {
    type Err = SeloError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "beta" => Ok(ScanParam::Beta),
            "alpha" => Ok(ScanParam::Alpha),
            other => Err(SeloError::Argument(format!("unknown scan parameter {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanPoint {
    pub value: f64,
    pub report: ExperimentReport,
}

/// Re-runs the experiment once per parameter value, holding everything else
/// fixed (including all seeds).
pub fn scan(
    g: &SignedDigraph,
    dataset_label: &str,
    param: ScanParam,
    values: &[f64],
    cfg: &RunConfig,
    cache_dir: Option<&Path>,
) -> Result<Vec<ScanPoint>> {
    if values.is_empty() {
        return Err(SeloError::Argument("scan needs at least one value".to_string()));
    }
    let mut points = Vec::with_capacity(values.len());
    for &value in values {
        let mut point_cfg = cfg.clone();
        match param {
            ScanParam::Beta => point_cfg.beta = BetaMode::Fixed(value),
            ScanParam::Alpha => point_cfg.alpha = value,
        }
        log::info!("scan point {param:?} = {value}");
        let report = run_experiment(g, dataset_label, &point_cfg, cache_dir)?;
        points.push(ScanPoint { value, report });
    }
    Ok(points)
}
