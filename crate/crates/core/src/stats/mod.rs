//! Classical statistics and shallow models: correlation, seeded
//! cross-validation splits, ridge regression, PCA, RBF kernel regression,
//! one-vs-rest classification, and ranking metrics.

mod classify;
mod emotion;
mod kernel;
mod linalg;
mod linear;
mod metrics;
mod pca;

pub use classify::{fit_ovr_classifier, scores, OvrClassifier};
pub use emotion::{emotion_report, EmotionDimensionReport, EmotionReport, MIN_EMOTION_OVERLAP};
pub use kernel::{fit_kernel_rbf, predict_kernel, tune_kernel_rbf, KernelModel};
pub use linear::{fit_linear, predict_linear, LinearModel};
pub use metrics::{f1_weighted, roc_auc};
pub use pca::{pca_apply, pca_fit, PcaTransform};

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, thiserror::Error)]
pub enum StatsError {
    #[error("length mismatch: {0}")]
    LengthMismatch(String),
    #[error("constant input: {0}")]
    ConstantInput(String),
    #[error("too few items: have {have}, need {need}")]
    TooFewItems { have: usize, need: usize },
    #[error("too few groups: have {have}, need {need}")]
    TooFewGroups { have: usize, need: usize },
    #[error("too few rows: have {have}, need {need}")]
    TooFewRows { have: usize, need: usize },
    #[error("singular system: {0}")]
    SingularSystem(String),
    #[error("hyperparameter must be positive: {0}")]
    NonPositiveHyperparam(String),
    #[error("degenerate class: {0}")]
    DegenerateClass(String),
    #[error("single class: {0}")]
    SingleClass(String),
    #[error("insufficient overlap: have {have} shared songs, need {need}")]
    InsufficientOverlap { have: usize, need: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// Rectangular table of finite reals with a distinct id per row and a name
/// per column. The common carrier between feature extraction and models.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    row_ids: Vec<String>,
    col_names: Vec<String>,
    data: Vec<f64>,
}

impl DesignMatrix {
    pub fn from_rows(
        row_ids: Vec<String>,
        col_names: Vec<String>,
        rows: &[Vec<f64>],
    ) -> Result<Self, StatsError> {
        if row_ids.is_empty() || col_names.is_empty() {
            return Err(StatsError::InvalidInput(
                "design matrix needs at least one row and one column".into(),
            ));
        }
        if rows.len() != row_ids.len() {
            return Err(StatsError::LengthMismatch(format!(
                "{} row ids but {} rows",
                row_ids.len(),
                rows.len()
            )));
        }
        let distinct: BTreeSet<&str> = row_ids.iter().map(String::as_str).collect();
        if distinct.len() != row_ids.len() {
            return Err(StatsError::InvalidInput("duplicate row ids".into()));
        }
        let p = col_names.len();
        let mut data = Vec::with_capacity(rows.len() * p);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != p {
                return Err(StatsError::LengthMismatch(format!(
                    "row {i} has {} values, expected {p}",
                    row.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(StatsError::InvalidInput(format!(
                    "non-finite value in row {i}"
                )));
            }
            data.extend_from_slice(row);
        }
        Ok(DesignMatrix { row_ids, col_names, data })
    }

    pub fn n_rows(&self) -> usize {
        self.row_ids.len()
    }

    pub fn n_cols(&self) -> usize {
        self.col_names.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let p = self.n_cols();
        &self.data[i * p..(i + 1) * p]
    }

    pub fn row_ids(&self) -> &[String] {
        &self.row_ids
    }

    pub fn col_names(&self) -> &[String] {
        &self.col_names
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n_cols() + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n_rows()).map(|i| self.get(i, j)).collect()
    }

    /// A copy containing the given rows, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> DesignMatrix {
        let row_ids = indices.iter().map(|&i| self.row_ids[i].clone()).collect();
        let mut data = Vec::with_capacity(indices.len() * self.n_cols());
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        DesignMatrix { row_ids, col_names: self.col_names.clone(), data }
    }
}

/// Per-column centering and scaling constants learned from training rows.
/// A zero-variance column gets scale 1 so it standardizes to exactly zero.
#[derive(Debug, Clone)]
pub(crate) struct Standardizer {
    pub(crate) mean: Vec<f64>,
    pub(crate) std: Vec<f64>,
}

impl Standardizer {
    pub(crate) fn fit(rows: &[&[f64]]) -> Standardizer {
        let n = rows.len() as f64;
        let p = rows.first().map_or(0, |r| r.len());
        let mut mean = vec![0.0; p];
        for row in rows {
            for (m, x) in mean.iter_mut().zip(*row) {
                *m += x;
            }
        }
        for m in &mut mean {
            *m /= n;
        }
        let mut var = vec![0.0; p];
        for row in rows {
            for ((v, m), x) in var.iter_mut().zip(&mean).zip(*row) {
                *v += (x - m) * (x - m);
            }
        }
        let std = var
            .iter()
            .map(|v| {
                let s = (v / n).sqrt();
                if s == 0.0 {
                    1.0
                } else {
                    s
                }
            })
            .collect();
        Standardizer { mean, std }
    }

    pub(crate) fn fit_matrix(x: &DesignMatrix, rows: &[usize]) -> Standardizer {
        let selected: Vec<&[f64]> = rows.iter().map(|&i| x.row(i)).collect();
        Standardizer::fit(&selected)
    }

    pub(crate) fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(&self.mean)
            .zip(&self.std)
            .map(|((x, m), s)| (x - m) / s)
            .collect()
    }
}

/// Sample Pearson correlation of two equally long, non-constant sequences.
/// Invariant under positive affine transforms of either argument; negating
/// one argument flips the sign.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(format!(
            "x has {} values, y has {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 3 {
        return Err(StatsError::TooFewItems { have: x.len(), need: 3 });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(StatsError::InvalidInput("non-finite value".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
        sxy += (a - mx) * (b - my);
    }
    if sxx == 0.0 {
        return Err(StatsError::ConstantInput("x is constant".into()));
    }
    if syy == 0.0 {
        return Err(StatsError::ConstantInput("y is constant".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Assignment of every item to one of `k` folds.
#[derive(Debug, Clone)]
pub struct FoldAssignment {
    assignment: BTreeMap<String, usize>,
    k: usize,
}

impl FoldAssignment {
    pub fn n_folds(&self) -> usize {
        self.k
    }

    pub fn fold_of(&self, id: &str) -> Option<usize> {
        self.assignment.get(id).copied()
    }

    pub fn members(&self, fold: usize) -> Vec<&str> {
        self.assignment
            .iter()
            .filter(|(_, f)| **f == fold)
            .map(|(id, _)| id.as_str())
            .collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for f in self.assignment.values() {
            sizes[*f] += 1;
        }
        sizes
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, usize)> {
        self.assignment.iter().map(|(id, f)| (id.as_str(), *f))
    }
}

/// Splits distinct ids into `k` folds by a seeded shuffle followed by
/// round-robin assignment, so fold sizes differ by at most one.
pub fn kfold(ids: &[String], k: usize, seed: u64) -> Result<FoldAssignment, StatsError> {
    if k < 2 {
        return Err(StatsError::InvalidInput(format!(
            "need at least 2 folds, asked for {k}"
        )));
    }
    if ids.len() < k {
        return Err(StatsError::TooFewItems { have: ids.len(), need: k });
    }
    let distinct: BTreeSet<&str> = ids.iter().map(String::as_str).collect();
    if distinct.len() != ids.len() {
        return Err(StatsError::InvalidInput("duplicate ids".into()));
    }
    let mut order: Vec<&String> = ids.iter().collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let assignment = order
        .iter()
        .enumerate()
        .map(|(i, id)| ((*id).clone(), i % k))
        .collect();
    Ok(FoldAssignment { assignment, k })
}

/// Train/test split where no group straddles the boundary.
#[derive(Debug, Clone)]
pub struct GroupedSplit {
    pub train_ids: Vec<String>,
    pub test_ids: Vec<String>,
    /// Groups whose members all went to the test side, sorted.
    pub test_groups: Vec<String>,
    pub achieved_fraction: f64,
    /// True when the achieved fraction misses the target by more than
    /// two percentage points (no better whole-group selection existed).
    pub flagged: bool,
}

/// Assigns whole groups to the test side, walking groups in seeded order and
/// taking each one only if it moves the test fraction strictly closer to
/// `test_frac`. If nothing is taken, the single group closest to the target
/// becomes the test set so it is never empty.
pub fn grouped_split(
    ids: &[String],
    groups: &[String],
    test_frac: f64,
    seed: u64,
) -> Result<GroupedSplit, StatsError> {
    if ids.len() != groups.len() {
        return Err(StatsError::LengthMismatch(format!(
            "{} ids but {} group keys",
            ids.len(),
            groups.len()
        )));
    }
    if ids.is_empty() {
        return Err(StatsError::InvalidInput("no items to split".into()));
    }
    if !(test_frac > 0.0 && test_frac < 1.0) {
        return Err(StatsError::InvalidInput(format!(
            "test fraction {test_frac} is outside (0, 1)"
        )));
    }
    let distinct: BTreeSet<&str> = ids.iter().map(String::as_str).collect();
    if distinct.len() != ids.len() {
        return Err(StatsError::InvalidInput("duplicate ids".into()));
    }
    let mut group_size: BTreeMap<&str, usize> = BTreeMap::new();
    for g in groups {
        *group_size.entry(g.as_str()).or_default() += 1;
    }
    if group_size.len() < 2 {
        return Err(StatsError::TooFewGroups { have: group_size.len(), need: 2 });
    }
    let mut order: Vec<&str> = group_size.keys().copied().collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let n = ids.len() as f64;
    let mut test_groups: BTreeSet<&str> = BTreeSet::new();
    let mut count = 0usize;
    for g in &order {
        let candidate = count + group_size[g];
        let now = (count as f64 / n - test_frac).abs();
        let with = (candidate as f64 / n - test_frac).abs();
        if with < now {
            test_groups.insert(g);
            count = candidate;
        }
    }
    if test_groups.is_empty() {
        let mut best = order[0];
        let mut best_dev = (group_size[best] as f64 / n - test_frac).abs();
        for g in &order[1..] {
            let dev = (group_size[g] as f64 / n - test_frac).abs();
            if dev < best_dev {
                best = g;
                best_dev = dev;
            }
        }
        test_groups.insert(best);
        count = group_size[best];
    }

    let achieved = count as f64 / n;
    let mut train_ids = Vec::with_capacity(ids.len() - count);
    let mut test_ids = Vec::with_capacity(count);
    for (id, g) in ids.iter().zip(groups) {
        if test_groups.contains(g.as_str()) {
            test_ids.push(id.clone());
        } else {
            train_ids.push(id.clone());
        }
    }
    Ok(GroupedSplit {
        train_ids,
        test_ids,
        test_groups: test_groups.into_iter().map(str::to_string).collect(),
        achieved_fraction: achieved,
        flagged: (achieved - test_frac).abs() > 0.02,
    })
}
