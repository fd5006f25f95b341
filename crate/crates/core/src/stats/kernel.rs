//! RBF kernel ridge regression with a grid-searched validation split.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{linalg, DesignMatrix, StatsError};

const LAMBDA_GRID: [f64; 4] = [1e-6, 1e-4, 1e-2, 1.0];
const GAMMA_GRID: [f64; 5] = [0.01, 0.1, 1.0, 10.0, 100.0];

#[derive(Debug, Clone)]
pub struct KernelModel {
    /// Training inputs, one row per dual coefficient.
    pub train_rows: Vec<Vec<f64>>,
    pub alpha: Vec<f64>,
    pub gamma: f64,
    pub lambda: f64,
}

fn rbf(u: &[f64], v: &[f64], gamma: f64) -> f64 {
    let d2: f64 = u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
    (-gamma * d2).exp()
}

/// Solves `(K + lambda I) alpha = y` for the RBF kernel
/// `k(u, v) = exp(-gamma ||u - v||^2)`.
pub fn fit_kernel_rbf(
    x: &DesignMatrix,
    y: &[f64],
    lambda: f64,
    gamma: f64,
) -> Result<KernelModel, StatsError> {
    if !(lambda > 0.0) {
        return Err(StatsError::NonPositiveHyperparam(format!("lambda = {lambda}")));
    }
    if !(gamma > 0.0) {
        return Err(StatsError::NonPositiveHyperparam(format!("gamma = {gamma}")));
    }
    let n = x.n_rows();
    if n < 2 {
        return Err(StatsError::TooFewRows { have: n, need: 2 });
    }
    if y.len() != n {
        return Err(StatsError::LengthMismatch(format!(
            "{n} rows but {} targets",
            y.len()
        )));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::InvalidInput("non-finite target".into()));
    }
    let rows: Vec<Vec<f64>> = (0..n).map(|i| x.row(i).to_vec()).collect();
    let mut k = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            let v = rbf(&rows[i], &rows[j], gamma);
            k[i][j] = v;
            k[j][i] = v;
        }
        k[i][i] += lambda;
    }
    let alpha = linalg::solve(&k, y).ok_or_else(|| {
        StatsError::SingularSystem("regularized kernel matrix did not factor".into())
    })?;
    Ok(KernelModel { train_rows: rows, alpha, gamma, lambda })
}

pub fn predict_kernel(model: &KernelModel, x: &DesignMatrix) -> Result<Vec<f64>, StatsError> {
    let width = model.train_rows.first().map_or(0, Vec::len);
    if x.n_cols() != width {
        return Err(StatsError::LengthMismatch(format!(
            "model expects {width} columns, matrix has {}",
            x.n_cols()
        )));
    }
    Ok((0..x.n_rows())
        .map(|i| {
            let row = x.row(i);
            model
                .train_rows
                .iter()
                .zip(&model.alpha)
                .map(|(t, a)| a * rbf(t, row, model.gamma))
                .sum()
        })
        .collect())
}

/// Grid-searches `lambda` and `gamma` on a seeded validation split (lowest
/// validation RMSE wins, first grid entry on ties), then refits the winning
/// pair on all rows.
pub fn tune_kernel_rbf(
    x: &DesignMatrix,
    y: &[f64],
    val_frac: f64,
    seed: u64,
) -> Result<KernelModel, StatsError> {
    let n = x.n_rows();
    if y.len() != n {
        return Err(StatsError::LengthMismatch(format!(
            "{n} rows but {} targets",
            y.len()
        )));
    }
    if !(val_frac > 0.0 && val_frac < 1.0) {
        return Err(StatsError::InvalidInput(format!(
            "validation fraction {val_frac} is outside (0, 1)"
        )));
    }
    if n < 4 {
        return Err(StatsError::TooFewRows { have: n, need: 4 });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_val = ((n as f64 * val_frac).round() as usize).clamp(1, n - 2);
    let (val_idx, train_idx) = order.split_at(n_val);
    let train_x = x.select_rows(train_idx);
    let val_x = x.select_rows(val_idx);
    let train_y: Vec<f64> = train_idx.iter().map(|&i| y[i]).collect();
    let val_y: Vec<f64> = val_idx.iter().map(|&i| y[i]).collect();

    let mut best: Option<(f64, f64, f64)> = None;
    for lambda in LAMBDA_GRID {
        for gamma in GAMMA_GRID {
            let model = fit_kernel_rbf(&train_x, &train_y, lambda, gamma)?;
            let preds = predict_kernel(&model, &val_x)?;
            let rmse = (preds
                .iter()
                .zip(&val_y)
                .map(|(p, t)| (p - t) * (p - t))
                .sum::<f64>()
                / val_y.len() as f64)
                .sqrt();
            if best.is_none_or(|(b, _, _)| rmse < b) {
                best = Some((rmse, lambda, gamma));
            }
        }
    }
    let (_, lambda, gamma) = best.expect("grid is nonempty");
    fit_kernel_rbf(x, y, lambda, gamma)
}
