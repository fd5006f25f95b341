//! Adam with the usual bias correction. Parameters can be frozen per index;
//! frozen parameters keep their moments untouched as well.

use super::network::{Grads, Network};
use super::tensor::Tensor;
use super::NnError;

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct AdamState {
    m: Vec<Tensor>,
    v: Vec<Tensor>,
    t: u64,
    pub lr: f64,
}

impl AdamState {
    pub fn new(net: &Network, lr: f64) -> Result<AdamState, NnError> {
        if !(lr > 0.0) {
            return Err(NnError::InvalidConfig(format!(
                "learning rate {lr} must be positive"
            )));
        }
        let m = (0..net.n_params())
            .map(|i| Tensor::zeros(net.param(i).shape()))
            .collect::<Vec<_>>();
        Ok(AdamState { v: m.clone(), m, t: 0, lr })
    }

    /// One update. `frozen[i]` skips parameter `i` entirely, so its values
    /// and moments stay bitwise identical. A parameter whose gradient is
    /// exactly zero with zero moments moves by exactly zero.
    pub fn step(
        &mut self,
        net: &mut Network,
        grads: &Grads,
        frozen: &[bool],
    ) -> Result<(), NnError> {
        if grads.by_param.len() != self.m.len() || frozen.len() != self.m.len() {
            return Err(NnError::ShapeMismatch(format!(
                "optimizer tracks {} parameters, got {} gradients and {} freeze flags",
                self.m.len(),
                grads.by_param.len(),
                frozen.len()
            )));
        }
        self.t += 1;
        let bc1 = 1.0 - BETA1.powi(self.t as i32);
        let bc2 = 1.0 - BETA2.powi(self.t as i32);
        let params = net.params_mut();
        for i in 0..params.len() {
            if frozen[i] {
                continue;
            }
            let g = grads.by_param[i].data();
            let p = params[i].data_mut();
            let m = self.m[i].data_mut();
            let v = self.v[i].data_mut();
            for j in 0..p.len() {
                m[j] = BETA1 * m[j] + (1.0 - BETA1) * g[j];
                v[j] = BETA2 * v[j] + (1.0 - BETA2) * g[j] * g[j];
                let mhat = m[j] / bc1;
                let vhat = v[j] / bc2;
                p[j] -= self.lr * mhat / (vhat.sqrt() + EPS);
            }
        }
        Ok(())
    }
}
