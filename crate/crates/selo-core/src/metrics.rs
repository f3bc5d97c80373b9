//! Classification metrics: AUC and the F1 family.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SeloError};

/// The four reported metrics, all in `[0, 1]`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub auc: f64,
    pub f1: f64,
    pub micro_f1: f64,
    pub macro_f1: f64,
}

fn validate_labels(labels: &[i8]) -> Result<()> {
    if let Some(&bad) = labels.iter().find(|&&l| l != 1 && l != -1) {
        return Err(SeloError::Argument(format!(
            "label {bad} must be +1 or -1"
        )));
    }
    Ok(())
}

/// Area under the ROC curve: the probability that a random positive outscores
/// a random negative, ties counted one half (rank / Mann-Whitney form).
pub fn auc(scores: &[f64], labels: &[i8]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(SeloError::Argument(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    validate_labels(labels)?;
    if scores.iter().any(|v| !v.is_finite()) {
        return Err(SeloError::Numeric("non-finite score".to_string()));
    }
    let n_pos = labels.iter().filter(|&&l| l == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(SeloError::UndefinedMetric(format!(
            "AUC needs both classes, got {n_pos} positive / {n_neg} negative"
        )));
    }

    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // 1-based ranks, tied scores share their average rank
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && scores[idx[j + 1]] == scores[idx[i]] {
            j += 1;
        }
        let avg_rank = (i + j + 2) as f64 / 2.0;
        for &p in &idx[i..=j] {
            if labels[p] == 1 {
                rank_sum_pos += avg_rank;
            }
        }
        i = j + 1;
    }
    let np = n_pos as f64;
    Ok((rank_sum_pos - np * (np + 1.0) / 2.0) / (np * n_neg as f64))
}

/// F1 of the positive class, micro-F1 (accuracy for binary single-label) and
/// macro-F1 (unweighted mean of the two per-class F1s; an empty class scores
/// zero).
pub fn f1_suite(preds: &[i8], labels: &[i8]) -> Result<(f64, f64, f64)> {
    if preds.is_empty() || preds.len() != labels.len() {
        return Err(SeloError::Argument(format!(
            "need matching nonempty vectors, got {} predictions / {} labels",
            preds.len(),
            labels.len()
        )));
    }
    validate_labels(preds)?;
    validate_labels(labels)?;

    let mut tp = 0.0;
    let mut fp = 0.0;
    let mut fn_ = 0.0;
    let mut tn = 0.0;
    for (&p, &l) in preds.iter().zip(labels) {
        match (p, l) {
            (1, 1) => tp += 1.0,
            (1, -1) => fp += 1.0,
            (-1, 1) => fn_ += 1.0,
            _ => tn += 1.0,
        }
    }
    let f1_pos = class_f1(tp, fp, fn_);
    let f1_neg = class_f1(tn, fn_, fp);
    let micro = (tp + tn) / preds.len() as f64;
    let macro_ = (f1_pos + f1_neg) / 2.0;
    Ok((f1_pos, micro, macro_))
}

fn class_f1(tp: f64, fp: f64, fn_: f64) -> f64 {
    let denom = 2.0 * tp + fp + fn_;
    if denom == 0.0 {
        0.0
    } else {
        2.0 * tp / denom
    }
}

/// All four metrics from raw scores: hard predictions use the 0.5 threshold,
/// AUC uses the scores directly.
pub fn compute_metrics(scores: &[f64], labels: &[i8]) -> Result<Metrics> {
    let preds: Vec<i8> = scores
        .iter()
        .map(|&s| if s >= 0.5 { 1 } else { -1 })
        .collect();
    let (f1, micro_f1, macro_f1) = f1_suite(&preds, labels)?;
    Ok(Metrics {
        auc: auc(scores, labels)?,
        f1,
        micro_f1,
        macro_f1,
    })
}

/// Brute-force pair-counting AUC, kept as the independent oracle for tests.
pub fn auc_pair_counting(scores: &[f64], labels: &[i8]) -> Result<f64> {
    validate_labels(labels)?;
    let pos: Vec<f64> = scores
        .iter()
        .zip(labels)
        .filter(|(_, &l)| l == 1)
        .map(|(&s, _)| s)
        .collect();
    let neg: Vec<f64> = scores
        .iter()
        .zip(labels)
        .filter(|(_, &l)| l == -1)
        .map(|(&s, _)| s)
        .collect();
    if pos.is_empty() || neg.is_empty() {
        return Err(SeloError::UndefinedMetric(
            "AUC needs both classes".to_string(),
        ));
    }
    let mut wins = 0.0;
    for &p in &pos {
        for &n in &neg {
            if p > n {
                wins += 1.0;
            } else if p == n {
                wins += 0.5;
            }
        }
    }
    Ok(wins / (pos.len() * neg.len()) as f64)
}
