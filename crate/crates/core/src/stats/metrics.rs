//! Ranking and classification metrics.

use std::collections::BTreeSet;

use super::StatsError;

/// Area under the ROC curve via midranks: the probability that a random
/// positive outscores a random negative, counting ties as half. The rank-sum
/// numerator is an exact multiple of one half, so the result is identical to
/// brute-force pair counting.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64, StatsError> {
    if scores.len() != labels.len() {
        return Err(StatsError::LengthMismatch(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(StatsError::InvalidInput("non-finite score".into()));
    }
    let n = scores.len();
    let n_pos = labels.iter().filter(|l| **l).count();
    let n_neg = n - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(StatsError::SingleClass(format!(
            "{n_pos} positives and {n_neg} negatives"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    let mut rank_sum_pos = 0.0;
    let mut lo = 0;
    while lo < n {
        let mut hi = lo;
        while hi + 1 < n && scores[idx[hi + 1]] == scores[idx[lo]] {
            hi += 1;
        }
        // 1-based ranks lo+1 ..= hi+1 share the midrank
        let midrank = (lo + hi) as f64 / 2.0 + 1.0;
        for &i in &idx[lo..=hi] {
            if labels[i] {
                rank_sum_pos += midrank;
            }
        }
        lo = hi + 1;
    }
    let n_pos_f = n_pos as f64;
    Ok((rank_sum_pos - n_pos_f * (n_pos_f + 1.0) / 2.0) / (n_pos_f * n_neg as f64))
}

/// Per-class F1 scores weighted by true-class support. Classes that appear
/// only in predictions get zero weight; a class with no correct predictions
/// contributes zero.
pub fn f1_weighted(predicted: &[usize], truth: &[usize]) -> Result<f64, StatsError> {
    if predicted.len() != truth.len() {
        return Err(StatsError::LengthMismatch(format!(
            "{} predictions but {} labels",
            predicted.len(),
            truth.len()
        )));
    }
    if predicted.is_empty() {
        return Err(StatsError::InvalidInput("no items".into()));
    }
    let classes: BTreeSet<usize> = predicted.iter().chain(truth).copied().collect();
    let mut acc = 0.0;
    for c in classes {
        let mut tp = 0usize;
        let mut fp = 0usize;
        let mut fn_ = 0usize;
        for (p, t) in predicted.iter().zip(truth) {
            match (*p == c, *t == c) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                (false, false) => {}
            }
        }
        let support = (tp + fn_) as f64;
        if tp == 0 {
            continue;
        }
        let precision = tp as f64 / (tp + fp) as f64;
        let recall = tp as f64 / (tp + fn_) as f64;
        let f1 = 2.0 * precision * recall / (precision + recall);
        acc += f1 * support;
    }
    Ok(acc / predicted.len() as f64)
}
