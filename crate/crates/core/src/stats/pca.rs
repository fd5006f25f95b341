//! Principal components on standardized columns.

use super::{linalg, DesignMatrix, StatsError};

/// Frozen projection learned by [`pca_fit`]: standardization constants from
/// the training rows, the zero-variance columns that were dropped, and the
/// leading eigenvectors of the training correlation matrix.
#[derive(Debug, Clone)]
pub struct PcaTransform {
    /// Per kept column, training mean.
    pub mean: Vec<f64>,
    /// Per kept column, training population standard deviation.
    pub std: Vec<f64>,
    /// One component per row, orthonormal, over kept columns.
    pub components: Vec<Vec<f64>>,
    /// Eigenvalue of each kept component, descending.
    pub explained_variance: Vec<f64>,
    /// Sum of all eigenvalues, for variance-fraction bookkeeping.
    pub total_variance: f64,
    /// Indices of retained input columns.
    pub kept_columns: Vec<usize>,
    /// Indices of zero-variance input columns, excluded from the projection.
    /// Callers surface these as a warning.
    pub dropped_columns: Vec<usize>,
    /// Width of the matrices this transform accepts.
    pub n_input_columns: usize,
}

impl PcaTransform {
    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    /// Fraction of training variance captured by the kept components.
    pub fn explained_fraction(&self) -> f64 {
        self.explained_variance.iter().sum::<f64>() / self.total_variance
    }
}

/// Learns a PCA on standardized columns. Zero-variance columns are dropped
/// (recorded in the transform) since they carry no direction; the component
/// count is capped at the number of surviving columns.
pub fn pca_fit(x: &DesignMatrix, n_components: usize) -> Result<PcaTransform, StatsError> {
    let n = x.n_rows();
    if n_components == 0 {
        return Err(StatsError::InvalidInput("need at least one component".into()));
    }
    if n < n_components.max(2) {
        return Err(StatsError::TooFewRows { have: n, need: n_components.max(2) });
    }
    let nf = n as f64;

    let mut kept_columns = Vec::new();
    let mut dropped_columns = Vec::new();
    let mut mean = Vec::new();
    let mut std = Vec::new();
    for j in 0..x.n_cols() {
        let col = x.column(j);
        let m = col.iter().sum::<f64>() / nf;
        let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / nf;
        if var == 0.0 {
            dropped_columns.push(j);
        } else {
            kept_columns.push(j);
            mean.push(m);
            std.push(var.sqrt());
        }
    }
    if kept_columns.is_empty() {
        return Err(StatsError::ConstantInput(
            "every column has zero variance".into(),
        ));
    }

    let d = kept_columns.len();
    let z: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let row = x.row(i);
            kept_columns
                .iter()
                .enumerate()
                .map(|(jj, &j)| (row[j] - mean[jj]) / std[jj])
                .collect()
        })
        .collect();
    let mut corr = vec![vec![0.0; d]; d];
    for row in &z {
        for a in 0..d {
            for b in a..d {
                corr[a][b] += row[a] * row[b];
            }
        }
    }
    for a in 0..d {
        for b in a..d {
            corr[a][b] /= nf;
            corr[b][a] = corr[a][b];
        }
    }

    let (values, vectors) = linalg::jacobi_eigen(&corr);
    let total_variance: f64 = values.iter().sum();
    let k = n_components.min(d);
    Ok(PcaTransform {
        mean,
        std,
        components: vectors.into_iter().take(k).collect(),
        explained_variance: values.into_iter().take(k).map(|v| v.max(0.0)).collect(),
        total_variance,
        kept_columns,
        dropped_columns,
        n_input_columns: x.n_cols(),
    })
}

/// Projects rows with the stored training statistics only; column count must
/// match the fitted matrix. Output columns are named `pc1..pcK`.
pub fn pca_apply(t: &PcaTransform, x: &DesignMatrix) -> Result<DesignMatrix, StatsError> {
    if x.n_cols() != t.n_input_columns {
        return Err(StatsError::LengthMismatch(format!(
            "transform expects {} columns, matrix has {}",
            t.n_input_columns,
            x.n_cols()
        )));
    }
    let rows: Vec<Vec<f64>> = (0..x.n_rows())
        .map(|i| {
            let row = x.row(i);
            let z: Vec<f64> = t
                .kept_columns
                .iter()
                .enumerate()
                .map(|(jj, &j)| (row[j] - t.mean[jj]) / t.std[jj])
                .collect();
            t.components
                .iter()
                .map(|c| c.iter().zip(&z).map(|(a, b)| a * b).sum())
                .collect()
        })
        .collect();
    let names = (1..=t.n_components()).map(|i| format!("pc{i}")).collect();
    DesignMatrix::from_rows(x.row_ids().to_vec(), names, &rows)
}
