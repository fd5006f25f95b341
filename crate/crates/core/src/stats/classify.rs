//! One-vs-rest L2 logistic classification with calibrated per-class scores.

use super::{DesignMatrix, Standardizer, StatsError};

const MAX_ITERS: usize = 2000;
const GRAD_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct OvrClassifier {
    /// Distinct class labels, ascending; score columns follow this order.
    pub classes: Vec<usize>,
    pub lambda: f64,
    weights: Vec<Vec<f64>>,
    intercepts: Vec<f64>,
    standardizer: Standardizer,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Trains one L2-regularized logistic model per class by deterministic
/// full-batch gradient descent on internally standardized features. The step
/// size is the inverse of a Lipschitz bound on the loss gradient, so no
/// learning-rate knob exists and identical inputs give identical models.
pub fn fit_ovr_classifier(
    x: &DesignMatrix,
    labels: &[usize],
    lambda: f64,
) -> Result<OvrClassifier, StatsError> {
    let n = x.n_rows();
    if labels.len() != n {
        return Err(StatsError::LengthMismatch(format!(
            "{n} rows but {} labels",
            labels.len()
        )));
    }
    if !(lambda >= 0.0) {
        return Err(StatsError::InvalidInput(format!(
            "penalty {lambda} must be nonnegative"
        )));
    }
    let mut classes: Vec<usize> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(StatsError::DegenerateClass(
            "need at least 2 distinct classes".into(),
        ));
    }
    for c in &classes {
        let count = labels.iter().filter(|l| *l == c).count();
        if count < 2 {
            return Err(StatsError::DegenerateClass(format!(
                "class {c} has {count} examples, need at least 2"
            )));
        }
    }

    let all_rows: Vec<usize> = (0..n).collect();
    let standardizer = Standardizer::fit_matrix(x, &all_rows);
    let z: Vec<Vec<f64>> = (0..n).map(|i| standardizer.transform_row(x.row(i))).collect();
    let p = x.n_cols();

    // Gradient of the mean logistic loss is (max row norm^2 + 1)/4 + lambda
    // Lipschitz (the +1 is the bias input), so this step always descends.
    let max_sq = z
        .iter()
        .map(|r| r.iter().map(|v| v * v).sum::<f64>() + 1.0)
        .fold(0.0f64, f64::max);
    let lr = 1.0 / (max_sq / 4.0 + lambda);

    let nf = n as f64;
    let mut weights = Vec::with_capacity(classes.len());
    let mut intercepts = Vec::with_capacity(classes.len());
    for c in &classes {
        let targets: Vec<f64> = labels.iter().map(|l| f64::from(u8::from(l == c))).collect();
        let mut w = vec![0.0; p];
        let mut b = 0.0;
        for _ in 0..MAX_ITERS {
            let mut gw = vec![0.0; p];
            let mut gb = 0.0;
            for (row, t) in z.iter().zip(&targets) {
                let margin = b + w.iter().zip(row).map(|(wi, xi)| wi * xi).sum::<f64>();
                let err = sigmoid(margin) - t;
                for (g, xi) in gw.iter_mut().zip(row) {
                    *g += err * xi;
                }
                gb += err;
            }
            let mut worst = (gb / nf).abs();
            for (g, wi) in gw.iter_mut().zip(&w) {
                *g = *g / nf + lambda * wi;
                worst = worst.max(g.abs());
            }
            if worst < GRAD_TOL {
                break;
            }
            for (wi, g) in w.iter_mut().zip(&gw) {
                *wi -= lr * g;
            }
            b -= lr * gb / nf;
        }
        weights.push(w);
        intercepts.push(b);
    }
    Ok(OvrClassifier {
        classes,
        lambda,
        weights,
        intercepts,
        standardizer,
    })
}

/// Per-row, per-class sigmoid probabilities in `classes` order. Each lies in
/// (0, 1); across classes they need not sum to one.
pub fn scores(clf: &OvrClassifier, x: &DesignMatrix) -> Result<Vec<Vec<f64>>, StatsError> {
    if x.n_cols() != clf.standardizer.mean.len() {
        return Err(StatsError::LengthMismatch(format!(
            "classifier expects {} columns, matrix has {}",
            clf.standardizer.mean.len(),
            x.n_cols()
        )));
    }
    Ok((0..x.n_rows())
        .map(|i| {
            let z = clf.standardizer.transform_row(x.row(i));
            clf.weights
                .iter()
                .zip(&clf.intercepts)
                .map(|(w, b)| sigmoid(b + w.iter().zip(&z).map(|(wi, xi)| wi * xi).sum::<f64>()))
                .collect()
        })
        .collect())
}

impl OvrClassifier {
    /// Label of the highest-scoring class per row; ties go to the lowest label.
    pub fn predict(&self, x: &DesignMatrix) -> Result<Vec<usize>, StatsError> {
        Ok(scores(self, x)?
            .into_iter()
            .map(|row| {
                let mut best = 0;
                for (i, s) in row.iter().enumerate().skip(1) {
                    if *s > row[best] {
                        best = i;
                    }
                }
                self.classes[best]
            })
            .collect())
    }
}
