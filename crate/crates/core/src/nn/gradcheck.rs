//! Central-difference verification of the analytic backward pass.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::network::{gauss, Head, Network};
use super::tensor::Tensor;
use super::NnError;

/// Compares analytic parameter gradients against central differences on a
/// random sample of coordinates and returns the worst relative error.
///
/// Runs on a jittered clone so zero-initialized head layers do not mask
/// upstream gradients. The loss is half the squared distance to a random
/// target, whose gradient is simply `output - target`.
pub fn gradient_check(
    net: &Network,
    head: Head,
    eps: f64,
    n_sampled: usize,
    seed: u64,
) -> Result<f64, NnError> {
    gradient_check_impl(net, head, eps, n_sampled, seed, None)
}

pub(crate) fn gradient_check_impl(
    net: &Network,
    head: Head,
    eps: f64,
    n_sampled: usize,
    seed: u64,
    corrupt: Option<(usize, f64)>,
) -> Result<f64, NnError> {
    if !(eps > 0.0) {
        return Err(NnError::InvalidConfig(format!("step size {eps} must be positive")));
    }
    if n_sampled == 0 {
        return Err(NnError::InvalidConfig("need at least one sampled coordinate".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut probe = net.clone();
    for p in probe.params_mut() {
        for v in p.data_mut() {
            *v += 0.05 * gauss(&mut rng);
        }
    }
    let (h, w) = probe.spec().input_hw;
    let c = probe.spec().in_channels;
    let mut x = Tensor::zeros(&[2, c, h, w]);
    for v in x.data_mut() {
        *v = gauss(&mut rng);
    }
    let cache = probe.forward(&x, head)?;
    let target: Vec<f64> = cache.output.data().iter().map(|_| gauss(&mut rng)).collect();
    let loss_of = |out: &Tensor| -> f64 {
        out.data()
            .iter()
            .zip(&target)
            .map(|(o, t)| 0.5 * (o - t) * (o - t))
            .sum()
    };
    let mut grad = cache.output.clone();
    for (g, t) in grad.data_mut().iter_mut().zip(&target) {
        *g -= t;
    }
    let analytic = probe.backward(&cache, &grad)?;

    let n_params = probe.n_params();
    let mut worst = 0.0f64;
    for draw in 0..n_sampled {
        let pi = rng.random_range(0..n_params);
        let len = probe.param(pi).numel();
        let j = rng.random_range(0..len);
        let mut a = analytic.by_param[pi].data()[j];
        if let Some((bad_draw, delta)) = corrupt {
            if draw == bad_draw {
                a += delta;
            }
        }
        let orig = probe.param(pi).data()[j];
        probe.params_mut()[pi].data_mut()[j] = orig + eps;
        let plus = loss_of(&probe.predict(&x, head)?);
        probe.params_mut()[pi].data_mut()[j] = orig - eps;
        let minus = loss_of(&probe.predict(&x, head)?);
        probe.params_mut()[pi].data_mut()[j] = orig;
        let numeric = (plus - minus) / (2.0 * eps);
        let rel = (a - numeric).abs() / (a.abs() + numeric.abs()).max(1e-10);
        worst = worst.max(rel);
    }
    Ok(worst)
}
