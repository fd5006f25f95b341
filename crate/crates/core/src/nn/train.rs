//! Mini-batch training: multi-label tag pretraining with cross-entropy and
//! the two-stage regression fine-tune on the seven-target head.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::adam::AdamState;
use super::network::{Head, Network, Node};
use super::tensor::Tensor;
use super::NnError;
use crate::stats::roc_auc;

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub lr: f64,
    pub seed: u64,
    /// Fraction of items held out for validation; 0 trains on everything
    /// for exactly `epochs` epochs with no early stopping.
    pub val_frac: f64,
    /// Consecutive non-improving validation checks tolerated before
    /// stopping; 0 disables early stopping.
    pub patience: usize,
}

impl Default for TrainConfig {
    fn default() -> TrainConfig {
        TrainConfig {
            batch_size: 32,
            epochs: 29,
            lr: 1e-3,
            seed: 0,
            val_frac: 0.05,
            patience: 5,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<(), NnError> {
        if self.batch_size == 0 {
            return Err(NnError::InvalidConfig("batch size must be at least 1".into()));
        }
        if self.epochs == 0 {
            return Err(NnError::InvalidConfig("need at least one epoch".into()));
        }
        if !(self.lr > 0.0) {
            return Err(NnError::InvalidConfig(format!(
                "learning rate {} must be positive",
                self.lr
            )));
        }
        if !(0.0..1.0).contains(&self.val_frac) {
            return Err(NnError::InvalidConfig(format!(
                "validation fraction {} outside [0, 1)",
                self.val_frac
            )));
        }
        Ok(())
    }
}

/// One training epoch as reported in metrics files: mean training loss and
/// the validation metric when a validation split exists (mean tag AUC for
/// pretraining, MSE for fine-tuning).
#[derive(Debug, Clone, PartialEq)]
pub struct EpochMetric {
    pub epoch: usize,
    pub loss: f64,
    pub val_metric: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub metrics: Vec<EpochMetric>,
    /// Epoch with the best validation metric, 1-based.
    pub best_epoch: Option<usize>,
    pub best_val: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct FinetuneReport {
    pub stage1: TrainReport,
    pub stage2: TrainReport,
    /// Best stage-1 validation MSE, and the same quantity re-evaluated at
    /// the start of stage 2; equal when both stages share a split.
    pub stage1_best_val: Option<f64>,
    pub stage2_initial_val: Option<f64>,
}

/// The metrics CSV written next to checkpoints: `epoch,loss,val_metric`,
/// with an empty cell when no validation ran.
pub fn metrics_csv(metrics: &[EpochMetric]) -> String {
    let mut out = String::from("epoch,loss,val_metric\n");
    for m in metrics {
        out.push_str(&format!("{},{}", m.epoch, m.loss));
        match m.val_metric {
            Some(v) => out.push_str(&format!(",{v}\n")),
            None => out.push_str(",\n"),
        }
    }
    out
}

fn head_width(nodes: &[Node]) -> usize {
    nodes
        .iter()
        .rev()
        .find_map(|n| match n {
            Node::Dense { out_dim, .. } => Some(*out_dim),
            _ => None,
        })
        .unwrap_or(0)
}

/// Deterministic holdout: a seeded shuffle, first slice to validation.
fn val_split(n: usize, val_frac: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut order: Vec<usize> = (0..n).collect();
    if val_frac == 0.0 {
        return (order, Vec::new());
    }
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_5711));
    let n_val = ((n as f64 * val_frac).round() as usize).clamp(1, n - 1);
    let val = order[..n_val].to_vec();
    let train = order[n_val..].to_vec();
    (train, val)
}

fn batch_of(items: &[Tensor], idx: &[usize]) -> Result<Tensor, NnError> {
    let refs: Vec<&Tensor> = idx.iter().map(|&i| &items[i]).collect();
    Tensor::stack(&refs)
}

fn check_dataset<L>(items: &[Tensor], labels: &[L]) -> Result<(), NnError> {
    if items.is_empty() {
        return Err(NnError::EmptyDataset("no training items".into()));
    }
    if items.len() != labels.len() {
        return Err(NnError::ShapeMismatch(format!(
            "{} items but {} labels",
            items.len(),
            labels.len()
        )));
    }
    Ok(())
}

/// Multi-label pretraining on the tag head: sigmoid outputs, mean binary
/// cross-entropy, fixed epoch budget, per-epoch mean held-out tag AUC.
pub fn train_tags(
    net: &mut Network,
    items: &[Tensor],
    tags: &[Vec<bool>],
    cfg: &TrainConfig,
) -> Result<TrainReport, NnError> {
    cfg.validate()?;
    check_dataset(items, tags)?;
    let width = net
        .spec()
        .tag_head
        .as_deref()
        .map(head_width)
        .ok_or_else(|| NnError::MissingHead("network has no tag head".into()))?;
    if tags.iter().any(|t| t.len() != width) {
        return Err(NnError::ShapeMismatch(format!(
            "tag vectors must have width {width}"
        )));
    }
    if cfg.val_frac > 0.0 && items.len() < 2 {
        return Err(NnError::InvalidConfig(
            "validation needs at least two items".into(),
        ));
    }
    let (train_idx, val_idx) = val_split(items.len(), cfg.val_frac, cfg.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut adam = AdamState::new(net, cfg.lr)?;
    let frozen = vec![false; net.n_params()];
    let mut metrics = Vec::with_capacity(cfg.epochs);
    let mut order = train_idx;
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let x = batch_of(items, chunk)?;
            let cache = net.forward(&x, Head::Tags)?;
            let p = cache.output.data();
            let scale = 1.0 / (chunk.len() * width) as f64;
            let mut grad = Tensor::zeros(&[chunk.len(), width]);
            {
                let g = grad.data_mut();
                for (row, &i) in chunk.iter().enumerate() {
                    for (t, &on) in tags[i].iter().enumerate() {
                        let pj = p[row * width + t];
                        let y = if on { 1.0 } else { 0.0 };
                        let pc = pj.clamp(1e-12, 1.0 - 1e-12);
                        loss_sum -= (y * pc.ln() + (1.0 - y) * (1.0 - pc).ln())
                            / (order.len() * width) as f64;
                        g[row * width + t] = (pj - y) * scale;
                    }
                }
            }
            // gradient taken on the sigmoid input, which stays finite even
            // when an output saturates
            let grads = net.backward_inner(&cache, &grad, true)?;
            adam.step(net, &grads, &frozen)?;
        }
        let val_metric = if val_idx.is_empty() {
            None
        } else {
            mean_tag_auc(net, items, tags, &val_idx, cfg.batch_size, width)?
        };
        metrics.push(EpochMetric { epoch, loss: loss_sum, val_metric });
    }
    let best = metrics
        .iter()
        .filter_map(|m| m.val_metric.map(|v| (m.epoch, v)))
        .fold(None, |acc: Option<(usize, f64)>, (e, v)| match acc {
            Some((_, bv)) if bv >= v => acc,
            _ => Some((e, v)),
        });
    Ok(TrainReport {
        metrics,
        best_epoch: best.map(|(e, _)| e),
        best_val: best.map(|(_, v)| v),
    })
}

/// Mean AUC over the tags that have both classes in the holdout; None when
/// no tag is scoreable.
fn mean_tag_auc(
    net: &Network,
    items: &[Tensor],
    tags: &[Vec<bool>],
    idx: &[usize],
    batch_size: usize,
    width: usize,
) -> Result<Option<f64>, NnError> {
    let mut scores = Vec::with_capacity(idx.len() * width);
    for chunk in idx.chunks(batch_size) {
        let x = batch_of(items, chunk)?;
        scores.extend_from_slice(net.predict(&x, Head::Tags)?.data());
    }
    let mut aucs = Vec::new();
    for t in 0..width {
        let col: Vec<f64> = (0..idx.len()).map(|r| scores[r * width + t]).collect();
        let labels: Vec<bool> = idx.iter().map(|&i| tags[i][t]).collect();
        if let Ok(auc) = roc_auc(&col, &labels) {
            aucs.push(auc);
        }
    }
    if aucs.is_empty() {
        Ok(None)
    } else {
        Ok(Some(aucs.iter().sum::<f64>() / aucs.len() as f64))
    }
}

/// One stage of regression training on the seven-output head with joint
/// mean squared error. `freeze_backbone` trains the head only, leaving
/// every backbone parameter bitwise unchanged. With a validation split,
/// stops after `patience` non-improving epochs and restores the best state.
pub fn train_midlevel(
    net: &mut Network,
    items: &[Tensor],
    targets: &[[f64; 7]],
    cfg: &TrainConfig,
    freeze_backbone: bool,
) -> Result<TrainReport, NnError> {
    cfg.validate()?;
    check_dataset(items, targets)?;
    let width = net
        .spec()
        .mid_head
        .as_deref()
        .map(head_width)
        .ok_or_else(|| NnError::MissingHead("network has no mid-level head".into()))?;
    if width != 7 {
        return Err(NnError::ShapeMismatch(format!(
            "mid-level head is {width}-wide, targets are 7-wide"
        )));
    }
    if cfg.val_frac > 0.0 && items.len() < 2 {
        return Err(NnError::InvalidConfig(
            "validation needs at least two items".into(),
        ));
    }
    let (train_idx, val_idx) = val_split(items.len(), cfg.val_frac, cfg.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut adam = AdamState::new(net, cfg.lr)?;
    let frozen: Vec<bool> = (0..net.n_params())
        .map(|i| freeze_backbone && net.is_backbone_param(i))
        .collect();
    let mut metrics = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(usize, f64, Vec<Tensor>)> = None;
    let mut since_best = 0usize;
    let mut order = train_idx;
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let x = batch_of(items, chunk)?;
            let cache = net.forward(&x, Head::MidLevel)?;
            let out = cache.output.data();
            let scale = 2.0 / (chunk.len() * 7) as f64;
            let mut grad = Tensor::zeros(&[chunk.len(), 7]);
            {
                let g = grad.data_mut();
                for (row, &i) in chunk.iter().enumerate() {
                    for (t, y) in targets[i].iter().enumerate() {
                        let d = out[row * 7 + t] - y;
                        loss_sum += d * d / (order.len() * 7) as f64;
                        g[row * 7 + t] = d * scale;
                    }
                }
            }
            let grads = net.backward(&cache, &grad)?;
            adam.step(net, &grads, &frozen)?;
        }
        let val_metric = if val_idx.is_empty() {
            None
        } else {
            Some(eval_mse(net, items, targets, &val_idx, cfg.batch_size)?)
        };
        metrics.push(EpochMetric { epoch, loss: loss_sum, val_metric });
        if let Some(v) = val_metric {
            let improved = best.as_ref().map_or(true, |(_, bv, _)| v < *bv);
            if improved {
                best = Some((epoch, v, net.params_snapshot()));
                since_best = 0;
            } else {
                since_best += 1;
                if cfg.patience > 0 && since_best >= cfg.patience {
                    break;
                }
            }
        }
    }
    if let Some((epoch, v, snapshot)) = best {
        net.restore_params(snapshot)?;
        Ok(TrainReport { metrics, best_epoch: Some(epoch), best_val: Some(v) })
    } else {
        Ok(TrainReport { metrics, best_epoch: None, best_val: None })
    }
}

/// Mean squared error of the mid-level head over the given items.
pub fn eval_mse(
    net: &Network,
    items: &[Tensor],
    targets: &[[f64; 7]],
    idx: &[usize],
    batch_size: usize,
) -> Result<f64, NnError> {
    let mut acc = 0.0;
    for chunk in idx.chunks(batch_size.max(1)) {
        let x = batch_of(items, chunk)?;
        let out = net.predict(&x, Head::MidLevel)?;
        for (row, &i) in chunk.iter().enumerate() {
            for (t, y) in targets[i].iter().enumerate() {
                let d = out.data()[row * 7 + t] - y;
                acc += d * d;
            }
        }
    }
    Ok(acc / (idx.len() * 7) as f64)
}

/// The two-stage transfer recipe: train the head with the backbone frozen
/// until validation stalls, then unfreeze everything and continue at a
/// tenth of the learning rate. Both stages share one validation split.
pub fn finetune(
    net: &mut Network,
    items: &[Tensor],
    targets: &[[f64; 7]],
    cfg: &TrainConfig,
) -> Result<FinetuneReport, NnError> {
    let stage1 = train_midlevel(net, items, targets, cfg, true)?;
    let stage2_initial_val = if cfg.val_frac > 0.0 {
        let (_, val_idx) = val_split(items.len(), cfg.val_frac, cfg.seed);
        Some(eval_mse(net, items, targets, &val_idx, cfg.batch_size)?)
    } else {
        None
    };
    let cfg2 = TrainConfig { lr: cfg.lr / 10.0, ..cfg.clone() };
    let stage2 = train_midlevel(net, items, targets, &cfg2, false)?;
    Ok(FinetuneReport {
        stage1_best_val: stage1.best_val,
        stage2_initial_val,
        stage1,
        stage2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::network::NetworkSpec;
    use crate::nn::synth::{synthetic_midlevel_data, synthetic_tag_data};

    #[test]
    fn first_batch_loss_is_ln_two() {
        // fresh tag heads answer 0.5 everywhere, so one whole-set batch of
        // cross-entropy is exactly ln 2 per slot
        let mut net = Network::new(NetworkSpec::tiny(4), 5).unwrap();
        let (items, tags) = synthetic_tag_data(16, 16, 7);
        let cfg = TrainConfig {
            epochs: 1,
            batch_size: 16,
            val_frac: 0.0,
            ..TrainConfig::default()
        };
        let report = train_tags(&mut net, &items, &tags, &cfg).unwrap();
        let loss = report.metrics[0].loss;
        assert!(
            (loss - std::f64::consts::LN_2).abs() < 1e-9,
            "first-epoch loss {loss}"
        );
    }

    #[test]
    fn separable_tags_reach_high_auc() {
        let mut net = Network::new(NetworkSpec::tiny(4), 11).unwrap();
        let (items, tags) = synthetic_tag_data(64, 16, 13);
        let cfg = TrainConfig {
            epochs: 80,
            batch_size: 16,
            lr: 5e-3,
            seed: 17,
            val_frac: 0.25,
            patience: 0,
        };
        let report = train_tags(&mut net, &items, &tags, &cfg).unwrap();
        let best = report.best_val.expect("validation ran");
        assert!(best > 0.95, "best held-out mean AUC {best}");
    }

    #[test]
    fn freezing_keeps_backbone_bitwise() {
        let mut net = Network::new(NetworkSpec::tiny(4), 2).unwrap();
        let before = net.params_snapshot();
        let (items, targets) = synthetic_midlevel_data(12, 16, 3);
        let cfg = TrainConfig {
            epochs: 3,
            batch_size: 4,
            val_frac: 0.0,
            ..TrainConfig::default()
        };
        train_midlevel(&mut net, &items, &targets, &cfg, true).unwrap();
        let mut head_moved = false;
        for i in 0..net.n_params() {
            if net.is_backbone_param(i) {
                assert_eq!(net.param(i), &before[i], "backbone parameter {i} moved");
            } else if net.param(i) != &before[i] {
                head_moved = true;
            }
        }
        assert!(head_moved);
    }

    /// Eight random patches with random centered targets, memorized by
    /// full-batch Adam. Distinct random inputs make the embeddings
    /// separable, so only optimization is under test.
    fn random_overfit_set(seed: u64) -> (Vec<Tensor>, Vec<[f64; 7]>) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut items = Vec::new();
        let mut targets = Vec::new();
        for _ in 0..8 {
            let mut x = Tensor::zeros(&[1, 16, 16]);
            for v in x.data_mut() {
                *v = rng.random_range(-1.0..1.0);
            }
            items.push(x);
            let mut t = [0.0f64; 7];
            for v in &mut t {
                *v = rng.random_range(-1.0..1.0);
            }
            targets.push(t);
        }
        (items, targets)
    }

    #[test]
    fn eight_samples_can_be_memorized() {
        let mut net = Network::new(NetworkSpec::tiny(4), 8).unwrap();
        let (items, targets) = random_overfit_set(21);
        let cfg = TrainConfig {
            epochs: 500,
            batch_size: 8,
            lr: 5e-3,
            seed: 4,
            val_frac: 0.0,
            patience: 0,
        };
        train_midlevel(&mut net, &items, &targets, &cfg, false).unwrap();
        let idx: Vec<usize> = (0..items.len()).collect();
        let mse = eval_mse(&net, &items, &targets, &idx, 8).unwrap();
        assert!(mse < 1e-3, "training MSE {mse}");
    }

    #[test]
    fn stage_two_starts_where_stage_one_stopped() {
        let mut net = Network::new(NetworkSpec::tiny(4), 6).unwrap();
        let (items, targets) = synthetic_midlevel_data(24, 16, 30);
        let cfg = TrainConfig {
            epochs: 6,
            batch_size: 8,
            lr: 5e-3,
            seed: 9,
            val_frac: 0.25,
            patience: 3,
        };
        let report = finetune(&mut net, &items, &targets, &cfg).unwrap();
        let a = report.stage1_best_val.unwrap();
        let b = report.stage2_initial_val.unwrap();
        assert!((a - b).abs() < 1e-9, "stage boundary moved: {a} vs {b}");
        assert!(!report.stage2.metrics.is_empty());
    }

    #[test]
    fn finetune_is_deterministic() {
        let run = || {
            let mut net = Network::new(NetworkSpec::micro(2), 3).unwrap();
            let (items, targets) = synthetic_midlevel_data(10, 8, 5);
            let cfg = TrainConfig {
                epochs: 3,
                batch_size: 4,
                val_frac: 0.2,
                patience: 2,
                ..TrainConfig::default()
            };
            finetune(&mut net, &items, &targets, &cfg).unwrap();
            net.params_snapshot()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn config_and_dataset_validation() {
        let mut net = Network::new(NetworkSpec::micro(2), 0).unwrap();
        let (items, targets) = synthetic_midlevel_data(4, 8, 1);
        let bad = TrainConfig { batch_size: 0, ..TrainConfig::default() };
        assert!(matches!(
            train_midlevel(&mut net, &items, &targets, &bad, false),
            Err(NnError::InvalidConfig(_))
        ));
        let cfg = TrainConfig { val_frac: 0.0, epochs: 1, ..TrainConfig::default() };
        assert!(matches!(
            train_midlevel(&mut net, &[], &[], &cfg, false),
            Err(NnError::EmptyDataset(_))
        ));
        let (tag_items, tags) = synthetic_tag_data(4, 8, 1);
        let spec = NetworkSpec { tag_head: None, ..NetworkSpec::micro(2) };
        let mut no_tags = Network::new(spec, 0).unwrap();
        assert!(matches!(
            train_tags(&mut no_tags, &tag_items, &tags, &cfg),
            Err(NnError::MissingHead(_))
        ));
    }

    #[test]
    fn metrics_csv_rows_and_empty_cells() {
        let rows = vec![
            EpochMetric { epoch: 1, loss: 0.5, val_metric: Some(0.75) },
            EpochMetric { epoch: 2, loss: 0.25, val_metric: None },
        ];
        assert_eq!(metrics_csv(&rows), "epoch,loss,val_metric\n1,0.5,0.75\n2,0.25,\n");
    }
}
