//! Multi-layer perceptrons for bottleneck-feature extraction, trained
//! frame-wise with one or two softmax classification heads sharing a hidden
//! stack. The dual-head objective is L = γ·L₁ + (1−γ)·L₂.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{geometric_lr, Activation, Layer, NnetError};
use crate::linalg::Mat;
use crate::math::log_sum_exp;
// Whenever std is anywhere in the build graph its inherent float methods
// shadow this trait, leaving the import unused; pure no_std builds need it.
#[allow(unused_imports)]
use crate::math::FloatExt;
use crate::types::{FeatureMatrix, LabelSet};

/// Shared hidden stack plus one softmax head per task, all heads fed from
/// the last hidden layer.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpNetwork {
    pub hidden: Vec<Layer>,
    pub heads: Vec<Layer>,
}

impl MlpNetwork {
    pub fn input_dim(&self) -> usize {
        self.hidden[0].in_dim()
    }

    pub fn depth(&self) -> usize {
        self.hidden.len()
    }

    /// Per-frame class probabilities from the given head.
    pub fn head_probs(&self, x: &[f64], head: usize) -> Vec<f64> {
        let mut a = x.to_vec();
        for layer in &self.hidden {
            a = layer.forward(&a);
        }
        self.heads[head].forward(&a)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpTrainConfig {
    /// Hidden layer count.
    pub depth: usize,
    /// Hidden layer width.
    pub width: usize,
    pub hidden_act: Activation,
    /// Learning rate at the first and last epoch; geometric in between.
    pub lr_start: f64,
    pub lr_end: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Weight of the primary head in the dual-task loss.
    pub gamma: f64,
}

impl Default for MlpTrainConfig {
    fn default() -> Self {
        Self {
            depth: 7,
            width: 1024,
            hidden_act: Activation::Sigmoid,
            lr_start: 0.8,
            lr_end: 0.08,
            epochs: 25,
            batch_size: 256,
            gamma: 0.5,
        }
    }
}

/// Gradient of one layer's parameters.
#[derive(Debug, Clone)]
pub struct LayerGrad {
    pub dw: Mat,
    pub db: Vec<f64>,
}

impl LayerGrad {
    pub(crate) fn zeros_like(layer: &Layer) -> Self {
        Self {
            dw: Mat::zeros(layer.w.rows(), layer.w.cols()),
            db: vec![0.0; layer.b.len()],
        }
    }
}

/// Gradients for a whole network, shaped like its layers.
#[derive(Debug, Clone)]
pub struct MlpGradients {
    pub hidden: Vec<LayerGrad>,
    pub heads: Vec<LayerGrad>,
}

/// Loss and parameter gradients for one mini-batch.
///
/// `labels[h][i]` is frame i's class under head h, and `head_weights[h]`
/// scales that head's cross-entropy in the combined objective. The loss is
/// averaged over frames, so gradients are batch-size invariant in scale.
pub fn batch_gradients(
    net: &MlpNetwork,
    frames: &[&[f64]],
    labels: &[&[usize]],
    head_weights: &[f64],
) -> (f64, MlpGradients) {
    assert_eq!(labels.len(), net.heads.len());
    assert_eq!(head_weights.len(), net.heads.len());
    assert!(!frames.is_empty());
    let inv_batch = 1.0 / frames.len() as f64;
    let mut grads = MlpGradients {
        hidden: net.hidden.iter().map(LayerGrad::zeros_like).collect(),
        heads: net.heads.iter().map(LayerGrad::zeros_like).collect(),
    };
    let mut total_loss = 0.0;
    for (i, &x) in frames.iter().enumerate() {
        // Forward, caching every hidden activation.
        let mut acts: Vec<Vec<f64>> = Vec::with_capacity(net.hidden.len() + 1);
        acts.push(x.to_vec());
        for layer in &net.hidden {
            let a = layer.forward(acts.last().unwrap());
            acts.push(a);
        }
        let top = acts.last().unwrap();

        // Heads: fused softmax + cross-entropy via log-probabilities.
        let mut d_top = vec![0.0; top.len()];
        for (h, head) in net.heads.iter().enumerate() {
            let weight = head_weights[h];
            let z = head.affine(top);
            let lse = log_sum_exp(&z);
            let y = labels[h][i];
            total_loss += weight * (lse - z[y]) * inv_batch;
            if weight == 0.0 {
                continue;
            }
            let g = &mut grads.heads[h];
            for (k, &zk) in z.iter().enumerate() {
                let p = (zk - lse).exp();
                let dz = weight * inv_batch * (p - f64::from(u8::from(k == y)));
                if dz == 0.0 {
                    continue;
                }
                g.db[k] += dz;
                let row = g.dw.row_mut(k);
                for (r, &t) in row.iter_mut().zip(top.iter()) {
                    *r += dz * t;
                }
                let wrow = head.w.row(k);
                for (d, &w) in d_top.iter_mut().zip(wrow) {
                    *d += dz * w;
                }
            }
        }

        // Hidden stack, walking backwards.
        let mut grad = d_top;
        for l in (0..net.hidden.len()).rev() {
            net.hidden[l].act.backprop(&acts[l + 1], &mut grad);
            let g = &mut grads.hidden[l];
            for (k, &dz) in grad.iter().enumerate() {
                if dz == 0.0 {
                    continue;
                }
                g.db[k] += dz;
                let row = g.dw.row_mut(k);
                for (r, &a) in row.iter_mut().zip(&acts[l]) {
                    *r += dz * a;
                }
            }
            if l > 0 {
                let mut prev = vec![0.0; net.hidden[l].in_dim()];
                for (k, &dz) in grad.iter().enumerate() {
                    if dz == 0.0 {
                        continue;
                    }
                    let wrow = net.hidden[l].w.row(k);
                    for (p, &w) in prev.iter_mut().zip(wrow) {
                        *p += dz * w;
                    }
                }
                grad = prev;
            }
        }
    }
    (total_loss, grads)
}

fn apply_update(net: &mut MlpNetwork, grads: &MlpGradients, lr: f64) {
    let step = |layer: &mut Layer, g: &LayerGrad| {
        for (w, d) in layer.w.data_mut().iter_mut().zip(g.dw.data()) {
            *w -= lr * d;
        }
        for (b, d) in layer.b.iter_mut().zip(&g.db) {
            *b -= lr * d;
        }
    };
    for (layer, g) in net.hidden.iter_mut().zip(&grads.hidden) {
        step(layer, g);
    }
    for (layer, g) in net.heads.iter_mut().zip(&grads.heads) {
        step(layer, g);
    }
}

fn validate_labels(
    features: &[FeatureMatrix],
    set: &LabelSet,
) -> Result<(), NnetError> {
    for feat in features {
        let labels = set.get(&feat.id).ok_or(NnetError::Misaligned {
            id: feat.id.clone(),
        })?;
        if labels.len() != feat.num_frames() {
            return Err(NnetError::Misaligned {
                id: feat.id.clone(),
            });
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= set.num_classes) {
            return Err(NnetError::ClassOutOfRange {
                id: feat.id.clone(),
                class: bad,
                num_classes: set.num_classes,
            });
        }
    }
    Ok(())
}

/// Trains a bottleneck MLP by mini-batch SGD. With a secondary label set the
/// objective is γ·L₁ + (1−γ)·L₂ over two heads; otherwise a single head
/// minimizes L₁ alone. Returns the network and the per-epoch training loss.
pub fn train_bn_dnn(
    features: &[FeatureMatrix],
    primary: &LabelSet,
    secondary: Option<&LabelSet>,
    cfg: &MlpTrainConfig,
    seed: u64,
) -> Result<(MlpNetwork, Vec<f64>), NnetError> {
    if cfg.depth == 0 || cfg.width == 0 || cfg.epochs == 0 || cfg.batch_size == 0 {
        return Err(NnetError::BadConfig {
            reason: String::from("depth, width, epochs, and batch size must be positive"),
        });
    }
    if !(0.0..=1.0).contains(&cfg.gamma) {
        return Err(NnetError::BadConfig {
            reason: String::from("gamma must lie in [0, 1]"),
        });
    }
    let dim = features.first().map(|f| f.dim()).unwrap_or(0);
    validate_labels(features, primary)?;
    if let Some(s) = secondary {
        validate_labels(features, s)?;
    }

    // Flatten frames and labels into parallel arrays.
    let mut frames: Vec<Vec<f64>> = Vec::new();
    let mut labels: Vec<Vec<usize>> = vec![Vec::new(); if secondary.is_some() { 2 } else { 1 }];
    for feat in features {
        if feat.dim() != dim {
            return Err(NnetError::DimMismatch {
                expected: dim,
                got: feat.dim(),
            });
        }
        let l1 = primary.get(&feat.id).unwrap();
        for t in 0..feat.num_frames() {
            frames.push(feat.row(t).to_vec());
            labels[0].push(l1[t]);
        }
        if let Some(s) = secondary {
            labels[1].extend_from_slice(s.get(&feat.id).unwrap());
        }
    }
    if frames.is_empty() {
        return Err(NnetError::EmptyInput);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hidden = Vec::with_capacity(cfg.depth);
    let mut in_dim = dim;
    for _ in 0..cfg.depth {
        hidden.push(Layer::random(in_dim, cfg.width, cfg.hidden_act, &mut rng));
        in_dim = cfg.width;
    }
    let mut heads = vec![Layer::random(
        cfg.width,
        primary.num_classes,
        Activation::Softmax,
        &mut rng,
    )];
    let mut head_weights = vec![1.0];
    if let Some(s) = secondary {
        heads.push(Layer::random(
            cfg.width,
            s.num_classes,
            Activation::Softmax,
            &mut rng,
        ));
        head_weights = vec![cfg.gamma, 1.0 - cfg.gamma];
    }
    let mut net = MlpNetwork { hidden, heads };

    let mut history = Vec::with_capacity(cfg.epochs);
    let mut order: Vec<usize> = (0..frames.len()).collect();
    for epoch in 0..cfg.epochs {
        let lr = geometric_lr(cfg.lr_start, cfg.lr_end, cfg.epochs, epoch);
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let bx: Vec<&[f64]> = batch.iter().map(|&i| frames[i].as_slice()).collect();
            let bl: Vec<Vec<usize>> = labels
                .iter()
                .map(|ls| batch.iter().map(|&i| ls[i]).collect())
                .collect();
            let bl_refs: Vec<&[usize]> = bl.iter().map(|v| v.as_slice()).collect();
            let (loss, grads) = batch_gradients(&net, &bx, &bl_refs, &head_weights);
            if !loss.is_finite() {
                return Err(NnetError::Diverged { epoch });
            }
            apply_update(&mut net, &grads, lr);
            epoch_loss += loss * batch.len() as f64;
        }
        history.push(epoch_loss / frames.len() as f64);
    }
    Ok((net, history))
}

/// Per-frame activations of hidden layer `layer_index` (1-based).
/// `post_activation` selects the nonlinearity output; otherwise the affine
/// pre-activation is returned.
pub fn extract_deep_features(
    net: &MlpNetwork,
    feat: &FeatureMatrix,
    layer_index: usize,
    post_activation: bool,
) -> Result<FeatureMatrix, NnetError> {
    if layer_index == 0 || layer_index > net.hidden.len() {
        return Err(NnetError::LayerOutOfRange {
            index: layer_index,
            depth: net.hidden.len(),
        });
    }
    if feat.dim() != net.input_dim() {
        return Err(NnetError::DimMismatch {
            expected: net.input_dim(),
            got: feat.dim(),
        });
    }
    let out_dim = net.hidden[layer_index - 1].out_dim();
    let mut out = FeatureMatrix::empty(feat.id.clone(), out_dim);
    out.frame_shift_ms = feat.frame_shift_ms;
    for t in 0..feat.num_frames() {
        let mut a = feat.row(t).to_vec();
        for layer in &net.hidden[..layer_index - 1] {
            a = layer.forward(&a);
        }
        let last = &net.hidden[layer_index - 1];
        let row = if post_activation {
            last.forward(&a)
        } else {
            last.affine(&a)
        };
        out.push_row(&row);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::sample_standard_normal;
    use crate::types::LabelTask;
    use alloc::string::ToString;
    use rand::Rng;

    fn tiny_net(seed: u64, in_dim: usize, widths: &[(usize, Activation)], heads: &[usize]) -> MlpNetwork {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut hidden = Vec::new();
        let mut prev = in_dim;
        for &(w, act) in widths {
            hidden.push(Layer::random(prev, w, act, &mut rng));
            prev = w;
        }
        let heads = heads
            .iter()
            .map(|&c| Layer::random(prev, c, Activation::Softmax, &mut rng))
            .collect();
        MlpNetwork { hidden, heads }
    }

    fn loss_of(net: &MlpNetwork, frames: &[&[f64]], labels: &[&[usize]], w: &[f64]) -> f64 {
        batch_gradients(net, frames, labels, w).0
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut net = tiny_net(
            3,
            4,
            &[
                (5, Activation::Sigmoid),
                (4, Activation::Relu),
                (3, Activation::Linear),
            ],
            &[3],
        );
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let frames: Vec<Vec<f64>> = (0..6)
            .map(|_| (0..4).map(|_| sample_standard_normal(&mut rng)).collect())
            .collect();
        let frame_refs: Vec<&[f64]> = frames.iter().map(|f| f.as_slice()).collect();
        let labels: Vec<usize> = (0..6).map(|_| rng.gen_range(0..3)).collect();
        let weights = [1.0];
        let (_, grads) = batch_gradients(&net, &frame_refs, &[&labels], &weights);
        let h = 1e-6;
        for l in 0..net.hidden.len() {
            for idx in 0..net.hidden[l].w.data().len() {
                let orig = net.hidden[l].w.data()[idx];
                net.hidden[l].w.data_mut()[idx] = orig + h;
                let up = loss_of(&net, &frame_refs, &[&labels], &weights);
                net.hidden[l].w.data_mut()[idx] = orig - h;
                let down = loss_of(&net, &frame_refs, &[&labels], &weights);
                net.hidden[l].w.data_mut()[idx] = orig;
                let numeric = (up - down) / (2.0 * h);
                let analytic = grads.hidden[l].dw.data()[idx];
                let denom = numeric.abs().max(analytic.abs()).max(1e-8);
                assert!(
                    (numeric - analytic).abs() / denom < 1e-4,
                    "layer {l} param {idx}: fd {numeric} vs {analytic}"
                );
            }
        }
    }

    #[test]
    fn gamma_one_matches_single_head_gradients() {
        let dual = tiny_net(5, 3, &[(4, Activation::Sigmoid)], &[2, 3]);
        let single = MlpNetwork {
            hidden: dual.hidden.clone(),
            heads: vec![dual.heads[0].clone()],
        };
        let frames = [[0.2, -0.4, 1.1], [0.9, 0.3, -0.2]];
        let frame_refs: Vec<&[f64]> = frames.iter().map(|f| f.as_slice()).collect();
        let l1 = [1usize, 0];
        let l2 = [2usize, 1];
        let (loss_d, grads_d) = batch_gradients(&dual, &frame_refs, &[&l1, &l2], &[1.0, 0.0]);
        let (loss_s, grads_s) = batch_gradients(&single, &frame_refs, &[&l1], &[1.0]);
        assert!((loss_d - loss_s).abs() < 1e-12);
        for (a, b) in grads_d.hidden.iter().zip(&grads_s.hidden) {
            assert!(a.dw.max_abs_diff(&b.dw) < 1e-12);
        }
        assert!(grads_d.heads[0].dw.max_abs_diff(&grads_s.heads[0].dw) < 1e-12);
        assert!(grads_d.heads[1].dw.frobenius_norm() == 0.0);
    }

    #[test]
    fn gamma_zero_is_secondary_loss_exactly() {
        let dual = tiny_net(7, 2, &[(3, Activation::Sigmoid)], &[2, 4]);
        let frames = [[0.5, -0.1], [0.0, 0.8], [1.2, 0.3]];
        let frame_refs: Vec<&[f64]> = frames.iter().map(|f| f.as_slice()).collect();
        let l1 = [0usize, 1, 0];
        let l2 = [3usize, 0, 2];
        let combined = loss_of(&dual, &frame_refs, &[&l1, &l2], &[0.0, 1.0]);
        let secondary_only = MlpNetwork {
            hidden: dual.hidden.clone(),
            heads: vec![dual.heads[1].clone()],
        };
        let alone = loss_of(&secondary_only, &frame_refs, &[&l2], &[1.0]);
        assert_eq!(combined, alone);
    }

    #[test]
    fn separable_classes_are_learned() {
        // Two 2-D blobs far apart; a small net must fit them nearly perfectly.
        let mut rng = ChaCha8Rng::seed_from_u64(100);
        let mut feats = Vec::new();
        let mut set = LabelSet::new(LabelTask::Speaker, 2);
        for (u, center) in [(-3.0, 0usize), (3.0, 1)].iter().enumerate() {
            let mut f = FeatureMatrix::empty(alloc::format!("utt{u}"), 2);
            let mut labels = Vec::new();
            for _ in 0..200 {
                f.push_row(&[
                    center.0 + 0.5 * sample_standard_normal(&mut rng),
                    0.5 * sample_standard_normal(&mut rng),
                ]);
                labels.push(center.1);
            }
            set.insert(f.id.clone(), labels);
            feats.push(f);
        }
        let cfg = MlpTrainConfig {
            depth: 2,
            width: 8,
            epochs: 25,
            batch_size: 32,
            lr_start: 0.5,
            lr_end: 0.05,
            ..MlpTrainConfig::default()
        };
        let (net, history) = train_bn_dnn(&feats, &set, None, &cfg, 1).unwrap();
        assert_eq!(history.len(), 25);
        let mut correct = 0usize;
        let mut total = 0usize;
        for feat in &feats {
            let labels = set.get(&feat.id).unwrap();
            for t in 0..feat.num_frames() {
                let p = net.head_probs(feat.row(t), 0);
                let pred = p
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                    .unwrap()
                    .0;
                correct += usize::from(pred == labels[t]);
                total += 1;
            }
        }
        let acc = correct as f64 / total as f64;
        assert!(acc > 0.99, "accuracy {acc}");
    }

    #[test]
    fn identity_layer_returns_inputs() {
        let net = MlpNetwork {
            hidden: vec![Layer {
                w: Mat::identity(3),
                b: vec![0.0; 3],
                act: Activation::Linear,
            }],
            heads: vec![],
        };
        let mut feat = FeatureMatrix::empty("x".to_string(), 3);
        feat.push_row(&[1.0, -2.0, 0.5]);
        feat.push_row(&[0.0, 4.0, 2.5]);
        let out = extract_deep_features(&net, &feat, 1, true).unwrap();
        assert_eq!(out.num_frames(), feat.num_frames());
        for t in 0..2 {
            assert_eq!(out.row(t), feat.row(t));
        }
    }

    #[test]
    fn layer_index_bounds_checked() {
        let net = tiny_net(1, 2, &[(3, Activation::Sigmoid)], &[2]);
        let feat = FeatureMatrix::empty("x".to_string(), 2);
        assert!(matches!(
            extract_deep_features(&net, &feat, 0, true),
            Err(NnetError::LayerOutOfRange { .. })
        ));
        assert!(matches!(
            extract_deep_features(&net, &feat, 2, true),
            Err(NnetError::LayerOutOfRange { .. })
        ));
    }

    #[test]
    fn misaligned_labels_rejected() {
        let mut feat = FeatureMatrix::empty("u".to_string(), 1);
        feat.push_row(&[0.0]);
        feat.push_row(&[1.0]);
        let mut set = LabelSet::new(LabelTask::Speaker, 2);
        set.insert("u".to_string(), vec![0]);
        let cfg = MlpTrainConfig {
            depth: 1,
            width: 2,
            epochs: 1,
            ..MlpTrainConfig::default()
        };
        assert!(matches!(
            train_bn_dnn(core::slice::from_ref(&feat), &set, None, &cfg, 0),
            Err(NnetError::Misaligned { .. })
        ));
        let mut bad = LabelSet::new(LabelTask::Speaker, 2);
        bad.insert("u".to_string(), vec![0, 5]);
        assert!(matches!(
            train_bn_dnn(core::slice::from_ref(&feat), &bad, None, &cfg, 0),
            Err(NnetError::ClassOutOfRange { class: 5, .. })
        ));
    }
}
