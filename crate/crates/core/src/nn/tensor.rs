//! Dense row-major tensor of doubles, the only array type the network uses.

use super::NnError;
use crate::audio::{MelPatch, PATCH_SIZE};

/// Shapes in use: `[B, C, H, W]` for feature maps, `[B, D]` after global
/// pooling, and parameter shapes `[O, I, K, K]`, `[O, I]`, `[O]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Tensor {
        let n = shape.iter().product();
        Tensor { shape: shape.to_vec(), data: vec![0.0; n] }
    }

    pub fn from_vec(shape: &[usize], data: Vec<f64>) -> Result<Tensor, NnError> {
        let n: usize = shape.iter().product();
        if shape.iter().any(|&d| d == 0) {
            return Err(NnError::ShapeMismatch(format!(
                "zero-sized dimension in {shape:?}"
            )));
        }
        if data.len() != n {
            return Err(NnError::ShapeMismatch(format!(
                "shape {shape:?} wants {n} values, got {}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(NnError::ShapeMismatch("non-finite value".into()));
        }
        Ok(Tensor { shape: shape.to_vec(), data })
    }

    /// A normalized mel patch as a single-channel item, time as rows.
    pub fn from_patch(patch: &MelPatch) -> Tensor {
        Tensor {
            shape: vec![1, PATCH_SIZE, PATCH_SIZE],
            data: patch.data.clone(),
        }
    }

    /// Stacks equally shaped items `[C, H, W]` or `[D]` into a batch.
    pub fn stack(items: &[&Tensor]) -> Result<Tensor, NnError> {
        let first = items
            .first()
            .ok_or_else(|| NnError::EmptyDataset("nothing to stack".into()))?;
        let mut shape = vec![items.len()];
        shape.extend_from_slice(first.shape());
        let mut data = Vec::with_capacity(first.numel() * items.len());
        for item in items {
            if item.shape() != first.shape() {
                return Err(NnError::ShapeMismatch(format!(
                    "cannot stack {:?} with {:?}",
                    item.shape(),
                    first.shape()
                )));
            }
            data.extend_from_slice(item.data());
        }
        Ok(Tensor { shape, data })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// One batch item of a `[B, ...]` tensor as a view on its values.
    pub fn item(&self, b: usize) -> &[f64] {
        let per = self.numel() / self.shape[0];
        &self.data[b * per..(b + 1) * per]
    }
}
