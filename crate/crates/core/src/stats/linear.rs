//! Ridge-regularized linear regression via the normal equations.

use super::{linalg, DesignMatrix, StatsError};

#[derive(Debug, Clone)]
pub struct LinearModel {
    /// One weight per design-matrix column.
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub lambda: f64,
}

/// Fits `(Xc' Xc + lambda I) w = Xc' yc` on column-centered data; the
/// intercept absorbs the means so it is never penalized. `lambda = 0` is the
/// plain least-squares fit and fails on rank-deficient designs.
pub fn fit_linear(x: &DesignMatrix, y: &[f64], lambda: f64) -> Result<LinearModel, StatsError> {
    let n = x.n_rows();
    let p = x.n_cols();
    if y.len() != n {
        return Err(StatsError::LengthMismatch(format!(
            "{n} rows but {} targets",
            y.len()
        )));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::InvalidInput("non-finite target".into()));
    }
    if !(lambda >= 0.0) {
        return Err(StatsError::InvalidInput(format!(
            "ridge penalty {lambda} must be nonnegative"
        )));
    }
    let nf = n as f64;
    let col_means: Vec<f64> = (0..p)
        .map(|j| x.column(j).iter().sum::<f64>() / nf)
        .collect();
    let y_mean = y.iter().sum::<f64>() / nf;

    let mut a = vec![vec![0.0; p]; p];
    let mut b = vec![0.0; p];
    for i in 0..n {
        let row = x.row(i);
        let yc = y[i] - y_mean;
        for j in 0..p {
            let xj = row[j] - col_means[j];
            b[j] += xj * yc;
            for l in j..p {
                a[j][l] += xj * (row[l] - col_means[l]);
            }
        }
    }
    for j in 0..p {
        for l in 0..j {
            a[j][l] = a[l][j];
        }
        a[j][j] += lambda;
    }
    let weights = linalg::solve(&a, &b).ok_or_else(|| {
        StatsError::SingularSystem(
            "centered design is rank-deficient; use a positive ridge penalty".into(),
        )
    })?;
    let intercept = y_mean
        - weights
            .iter()
            .zip(&col_means)
            .map(|(w, m)| w * m)
            .sum::<f64>();
    Ok(LinearModel { weights, intercept, lambda })
}

pub fn predict_linear(model: &LinearModel, x: &DesignMatrix) -> Result<Vec<f64>, StatsError> {
    if x.n_cols() != model.weights.len() {
        return Err(StatsError::LengthMismatch(format!(
            "model has {} weights but matrix has {} columns",
            model.weights.len(),
            x.n_cols()
        )));
    }
    Ok((0..x.n_rows())
        .map(|i| {
            model.intercept
                + model
                    .weights
                    .iter()
                    .zip(x.row(i))
                    .map(|(w, v)| w * v)
                    .sum::<f64>()
        })
        .collect())
}
