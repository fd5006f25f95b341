//! Cross-validated linear prediction of emotion dimensions from the seven
//! perceptual qualities.

use std::collections::{BTreeMap, BTreeSet};

use super::{fit_linear, kfold, pearson, predict_linear, DesignMatrix, Standardizer, StatsError};

/// Minimum songs shared between the feature matrix and a target dimension.
pub const MIN_EMOTION_OVERLAP: usize = 30;
const RIDGE: f64 = 1e-6;

/// One emotion dimension: out-of-fold prediction quality and the fitted
/// weights on standardized features, strongest first.
#[derive(Debug, Clone)]
pub struct EmotionDimensionReport {
    pub dimension: String,
    pub n_songs: usize,
    /// Pearson correlation between out-of-fold predictions and the targets.
    pub rho: f64,
    /// (feature name, standardized weight), sorted by |weight| descending.
    pub weights: Vec<(String, f64)>,
}

#[derive(Debug, Clone)]
pub struct EmotionReport {
    pub k: usize,
    pub seed: u64,
    pub dimensions: Vec<EmotionDimensionReport>,
}

/// For every target dimension: join targets to feature rows by song id,
/// produce out-of-fold predictions with `k`-fold cross-validation (per-fold
/// standardization, lightly ridged linear fit), and correlate them with the
/// truth. Weights come from one fit on all joined rows, standardized, so
/// their magnitudes are comparable across features.
pub fn emotion_report(
    features: &DesignMatrix,
    targets: &[(String, Vec<(String, f64)>)],
    k: usize,
    seed: u64,
) -> Result<EmotionReport, StatsError> {
    let row_of: BTreeMap<&str, usize> = features
        .row_ids()
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();

    let mut dimensions = Vec::with_capacity(targets.len());
    for (dimension, pairs) in targets {
        let seen: BTreeSet<&str> = pairs.iter().map(|(id, _)| id.as_str()).collect();
        if seen.len() != pairs.len() {
            return Err(StatsError::InvalidInput(format!(
                "duplicate song in {dimension} targets"
            )));
        }
        if pairs.iter().any(|(_, v)| !v.is_finite()) {
            return Err(StatsError::InvalidInput(format!(
                "non-finite target in {dimension}"
            )));
        }
        let mut joined: Vec<(&str, usize, f64)> = pairs
            .iter()
            .filter_map(|(id, v)| row_of.get(id.as_str()).map(|&i| (id.as_str(), i, *v)))
            .collect();
        if joined.len() < MIN_EMOTION_OVERLAP {
            return Err(StatsError::InsufficientOverlap {
                have: joined.len(),
                need: MIN_EMOTION_OVERLAP,
            });
        }
        joined.sort_by(|a, b| a.0.cmp(b.0));
        let ids: Vec<String> = joined.iter().map(|(id, _, _)| id.to_string()).collect();
        let rows: Vec<usize> = joined.iter().map(|(_, i, _)| *i).collect();
        let y: Vec<f64> = joined.iter().map(|(_, _, v)| *v).collect();

        let folds = kfold(&ids, k, seed)?;
        let mut oof = vec![0.0; ids.len()];
        for fold in 0..k {
            let mut train_pos = Vec::new();
            let mut test_pos = Vec::new();
            for (pos, id) in ids.iter().enumerate() {
                if folds.fold_of(id) == Some(fold) {
                    test_pos.push(pos);
                } else {
                    train_pos.push(pos);
                }
            }
            let train_rows: Vec<usize> = train_pos.iter().map(|&p| rows[p]).collect();
            let standardizer = Standardizer::fit_matrix(features, &train_rows);
            let z_train: Vec<Vec<f64>> = train_rows
                .iter()
                .map(|&i| standardizer.transform_row(features.row(i)))
                .collect();
            let train_ids: Vec<String> = train_pos.iter().map(|&p| ids[p].clone()).collect();
            let train_y: Vec<f64> = train_pos.iter().map(|&p| y[p]).collect();
            let train_x = DesignMatrix::from_rows(
                train_ids,
                features.col_names().to_vec(),
                &z_train,
            )?;
            let model = fit_linear(&train_x, &train_y, RIDGE)?;
            let z_test: Vec<Vec<f64>> = test_pos
                .iter()
                .map(|&p| standardizer.transform_row(features.row(rows[p])))
                .collect();
            let test_ids: Vec<String> = test_pos.iter().map(|&p| ids[p].clone()).collect();
            let test_x =
                DesignMatrix::from_rows(test_ids, features.col_names().to_vec(), &z_test)?;
            for (pos, pred) in test_pos.iter().zip(predict_linear(&model, &test_x)?) {
                oof[*pos] = pred;
            }
        }
        let rho = pearson(&oof, &y)?;

        let standardizer = Standardizer::fit_matrix(features, &rows);
        let z_all: Vec<Vec<f64>> = rows
            .iter()
            .map(|&i| standardizer.transform_row(features.row(i)))
            .collect();
        let all_x = DesignMatrix::from_rows(ids.clone(), features.col_names().to_vec(), &z_all)?;
        let model = fit_linear(&all_x, &y, RIDGE)?;
        let mut weights: Vec<(String, f64)> = features
            .col_names()
            .iter()
            .cloned()
            .zip(model.weights)
            .collect();
        weights.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()).then_with(|| a.0.cmp(&b.0)));

        dimensions.push(EmotionDimensionReport {
            dimension: dimension.clone(),
            n_songs: ids.len(),
            rho,
            weights,
        });
    }
    Ok(EmotionReport { k, seed, dimensions })
}
