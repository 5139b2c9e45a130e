//! Simplified x-vector embedding network: frame-level layers with symmetric
//! temporal context stacking, statistics pooling (mean ⊕ std), segment-level
//! layers, and a softmax speaker head. The embedding is the pre-activation
//! output of a segment layer ahead of the head.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::mlp::LayerGrad;
use super::{geometric_lr, Activation, Layer, NnetError, POOLING_STD_FLOOR};
use crate::ivector::IVector;
use crate::types::FeatureMatrix;

/// One frame-level layer. `context` is the symmetric half-width: the layer
/// sees 2·context+1 consecutive frames, edge frames replicated at boundaries,
/// so its weight matrix has (2·context+1)·prev_dim columns.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameLayer {
    pub layer: Layer,
    pub context: usize,
}

impl FrameLayer {
    fn window(&self) -> usize {
        2 * self.context + 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct XvectorNetwork {
    pub frame_layers: Vec<FrameLayer>,
    /// Segment-level layers applied after pooling, ahead of the head.
    pub segment_layers: Vec<Layer>,
    pub head: Layer,
    /// Index into `segment_layers` whose pre-activation output is the
    /// embedding.
    pub embedding_layer: usize,
}

impl XvectorNetwork {
    pub fn input_dim(&self) -> usize {
        let first = &self.frame_layers[0];
        first.layer.in_dim() / first.window()
    }

    pub fn embedding_dim(&self) -> usize {
        self.segment_layers[self.embedding_layer].out_dim()
    }

    pub fn num_classes(&self) -> usize {
        self.head.out_dim()
    }

    /// Randomly initialized network of the configured shape. Layers are drawn
    /// in order (frame, segment, head) so the parameters are a pure function
    /// of the generator state.
    pub fn random<R: Rng + ?Sized>(
        input_dim: usize,
        num_classes: usize,
        cfg: &XvectorConfig,
        rng: &mut R,
    ) -> Self {
        let mut frame_layers = Vec::with_capacity(cfg.contexts.len());
        let mut prev = input_dim;
        for &c in &cfg.contexts {
            let window = 2 * c + 1;
            frame_layers.push(FrameLayer {
                layer: Layer::random(window * prev, cfg.frame_width, cfg.activation, rng),
                context: c,
            });
            prev = cfg.frame_width;
        }
        let segment_layers = vec![
            Layer::random(2 * prev, cfg.embedding_dim, cfg.activation, rng),
            Layer::random(cfg.embedding_dim, cfg.segment_width, cfg.activation, rng),
        ];
        let head = Layer::random(cfg.segment_width, num_classes, Activation::Softmax, rng);
        Self {
            frame_layers,
            segment_layers,
            head,
            embedding_layer: cfg.embedding_layer,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct XvectorConfig {
    /// Width of every frame-level layer.
    pub frame_width: usize,
    /// Context half-widths, one per frame-level layer: [2, 2, 3, 0, 0] gives
    /// windows ±2, ±2, ±3, then two single-frame layers.
    pub contexts: Vec<usize>,
    /// Width of the embedding segment layer; the embedding dimension.
    pub embedding_dim: usize,
    /// Width of the remaining segment layer between embedding and head.
    pub segment_width: usize,
    /// Which segment layer the embedding is tapped from, pre-activation.
    pub embedding_layer: usize,
    pub activation: Activation,
    pub min_chunk: usize,
    pub max_chunk: usize,
    /// Chunks per gradient update; the update uses their mean gradient.
    pub batch_chunks: usize,
    pub epochs: usize,
    pub lr_start: f64,
    pub lr_end: f64,
}

impl Default for XvectorConfig {
    fn default() -> Self {
        Self {
            frame_width: 512,
            contexts: vec![2, 2, 3, 0, 0],
            embedding_dim: 400,
            segment_width: 400,
            embedding_layer: 0,
            activation: Activation::Relu,
            min_chunk: 50,
            max_chunk: 150,
            batch_chunks: 32,
            epochs: 25,
            lr_start: 0.8,
            lr_end: 0.08,
        }
    }
}

#[derive(Debug, Clone)]
pub struct XvectorTrainLog {
    /// Mean chunk loss per epoch.
    pub loss: Vec<f64>,
    /// Utterances shorter than the minimum chunk, trained on whole.
    pub short_utterances: usize,
}

#[derive(Debug, Clone)]
pub struct XvectorGradients {
    pub frame_layers: Vec<LayerGrad>,
    pub segment_layers: Vec<LayerGrad>,
    pub head: LayerGrad,
}

/// Frames 2·context+1 rows around `t` into one stacked vector, replicating
/// edge rows where the window runs past either end.
fn stack_context(rows: &[Vec<f64>], t: usize, context: usize) -> Vec<f64> {
    let dim = rows[0].len();
    let mut out = Vec::with_capacity((2 * context + 1) * dim);
    let last = rows.len() - 1;
    for k in 0..=2 * context {
        let src = (t + k).saturating_sub(context).min(last);
        out.extend_from_slice(&rows[src]);
    }
    out
}

struct ChunkForward {
    /// Post-activation rows per frame-level layer.
    frame_acts: Vec<Vec<Vec<f64>>>,
    mean: Vec<f64>,
    /// Floored std; `clamped` marks dimensions where the floor applied.
    std: Vec<f64>,
    clamped: Vec<bool>,
    pooled: Vec<f64>,
    /// Post-activation vector per segment layer.
    seg_acts: Vec<Vec<f64>>,
    probs: Vec<f64>,
    loss: f64,
}

fn forward_chunk(
    net: &XvectorNetwork,
    frames: &[&[f64]],
    label: Option<usize>,
) -> Result<ChunkForward, NnetError> {
    if frames.is_empty() {
        return Err(NnetError::EmptyInput);
    }
    if frames[0].len() != net.input_dim() {
        return Err(NnetError::DimMismatch {
            expected: net.input_dim(),
            got: frames[0].len(),
        });
    }
    let mut rows: Vec<Vec<f64>> = frames.iter().map(|f| f.to_vec()).collect();
    let mut frame_acts = Vec::with_capacity(net.frame_layers.len());
    for fl in &net.frame_layers {
        let next: Vec<Vec<f64>> = (0..rows.len())
            .map(|t| fl.layer.forward(&stack_context(&rows, t, fl.context)))
            .collect();
        frame_acts.push(next.clone());
        rows = next;
    }
    let t_inv = 1.0 / rows.len() as f64;
    let dim = rows[0].len();
    // Sum first, divide once: constant input then pools to exactly that
    // constant and its variance to exactly zero.
    let mut mean = vec![0.0; dim];
    for r in &rows {
        for (m, x) in mean.iter_mut().zip(r) {
            *m += x;
        }
    }
    for m in mean.iter_mut() {
        *m /= rows.len() as f64;
    }
    let mut std = vec![0.0; dim];
    let mut clamped = vec![false; dim];
    for d in 0..dim {
        let var: f64 = rows.iter().map(|r| (r[d] - mean[d]) * (r[d] - mean[d])).sum::<f64>() * t_inv;
        let raw = crate::math::FloatExt::sqrt(var);
        if raw > POOLING_STD_FLOOR {
            std[d] = raw;
        } else {
            std[d] = POOLING_STD_FLOOR;
            clamped[d] = true;
        }
    }
    let mut pooled = mean.clone();
    pooled.extend_from_slice(&std);

    let mut seg_acts = Vec::with_capacity(net.segment_layers.len());
    let mut x = pooled.clone();
    for layer in &net.segment_layers {
        x = layer.forward(&x);
        seg_acts.push(x.clone());
    }
    let logits = net.head.affine(&x);
    let lse = crate::math::log_sum_exp(&logits);
    let mut probs = logits.clone();
    for p in probs.iter_mut() {
        *p = crate::math::FloatExt::exp(*p - lse);
    }
    let loss = match label {
        Some(y) => lse - logits[y],
        None => 0.0,
    };
    Ok(ChunkForward {
        frame_acts,
        mean,
        std,
        clamped,
        pooled,
        seg_acts,
        probs,
        loss,
    })
}

/// Cross-entropy loss and parameter gradients for one chunk with one
/// speaker label. Exposed so gradient checks can drive the full backward
/// pass, statistics pooling included.
pub fn xvector_chunk_gradients(
    net: &XvectorNetwork,
    frames: &[&[f64]],
    label: usize,
) -> Result<(f64, XvectorGradients), NnetError> {
    if label >= net.num_classes() {
        return Err(NnetError::ClassOutOfRange {
            id: String::from("chunk"),
            class: label,
            num_classes: net.num_classes(),
        });
    }
    let fwd = forward_chunk(net, frames, Some(label))?;
    let mut grads = XvectorGradients {
        frame_layers: net
            .frame_layers
            .iter()
            .map(|fl| LayerGrad::zeros_like(&fl.layer))
            .collect(),
        segment_layers: net.segment_layers.iter().map(LayerGrad::zeros_like).collect(),
        head: LayerGrad::zeros_like(&net.head),
    };

    // Softmax head fused with cross-entropy: dz = p − onehot(y).
    let mut dz: Vec<f64> = fwd.probs.clone();
    dz[label] -= 1.0;
    let head_in = fwd.seg_acts.last().unwrap();
    accumulate(&mut grads.head, &dz, head_in);
    let mut grad = net.head.w.transpose().matvec(&dz);

    for l in (0..net.segment_layers.len()).rev() {
        let layer = &net.segment_layers[l];
        layer.act.backprop(&fwd.seg_acts[l], &mut grad);
        let input = if l == 0 { &fwd.pooled } else { &fwd.seg_acts[l - 1] };
        accumulate(&mut grads.segment_layers[l], &grad, input);
        grad = layer.w.transpose().matvec(&grad);
    }

    // Pooling backward. For the std path, var already centers each frame at
    // the mean, so d std_d / d h_td = (h_td − mean_d) / (T · std_d); a
    // clamped dimension sits on the flat side of the max and gets zero.
    let frames_out = fwd.frame_acts.last().unwrap();
    let t_count = frames_out.len() as f64;
    let dim = fwd.mean.len();
    let (gmean, gstd) = grad.split_at(dim);
    let mut grad_rows: Vec<Vec<f64>> = frames_out
        .iter()
        .map(|row| {
            (0..dim)
                .map(|d| {
                    let mut g = gmean[d] / t_count;
                    if !fwd.clamped[d] {
                        g += gstd[d] * (row[d] - fwd.mean[d]) / (t_count * fwd.std[d]);
                    }
                    g
                })
                .collect()
        })
        .collect();

    let input_rows: Vec<Vec<f64>> = frames.iter().map(|f| f.to_vec()).collect();
    for l in (0..net.frame_layers.len()).rev() {
        let fl = &net.frame_layers[l];
        let prev: &[Vec<f64>] = if l == 0 { &input_rows } else { &fwd.frame_acts[l - 1] };
        let mut grad_prev = if l > 0 {
            vec![vec![0.0; prev[0].len()]; prev.len()]
        } else {
            Vec::new()
        };
        let last = prev.len() - 1;
        for t in 0..prev.len() {
            let mut dz = core::mem::take(&mut grad_rows[t]);
            fl.layer.act.backprop(&fwd.frame_acts[l][t], &mut dz);
            let stacked = stack_context(prev, t, fl.context);
            accumulate(&mut grads.frame_layers[l], &dz, &stacked);
            if l > 0 {
                // Scatter Wᵀ·dz back over the window, folding replicated
                // edge contributions onto the clamped source frames.
                let dx = fl.layer.w.transpose().matvec(&dz);
                let block = prev[0].len();
                for k in 0..fl.window() {
                    let src = (t + k).saturating_sub(fl.context).min(last);
                    for (gp, d) in grad_prev[src].iter_mut().zip(&dx[k * block..(k + 1) * block]) {
                        *gp += d;
                    }
                }
            }
        }
        grad_rows = grad_prev;
    }
    Ok((fwd.loss, grads))
}

fn accumulate(g: &mut LayerGrad, dz: &[f64], input: &[f64]) {
    for (i, &d) in dz.iter().enumerate() {
        if d == 0.0 {
            continue;
        }
        let row = g.dw.row_mut(i);
        for (r, x) in row.iter_mut().zip(input) {
            *r += d * x;
        }
        g.db[i] += d;
    }
}

fn add_grads(acc: &mut XvectorGradients, g: &XvectorGradients) {
    let add = |a: &mut LayerGrad, b: &LayerGrad| {
        for (x, y) in a.dw.data_mut().iter_mut().zip(b.dw.data()) {
            *x += y;
        }
        for (x, y) in a.db.iter_mut().zip(&b.db) {
            *x += y;
        }
    };
    for (a, b) in acc.frame_layers.iter_mut().zip(&g.frame_layers) {
        add(a, b);
    }
    for (a, b) in acc.segment_layers.iter_mut().zip(&g.segment_layers) {
        add(a, b);
    }
    add(&mut acc.head, &g.head);
}

fn zero_grads(net: &XvectorNetwork) -> XvectorGradients {
    XvectorGradients {
        frame_layers: net
            .frame_layers
            .iter()
            .map(|fl| LayerGrad::zeros_like(&fl.layer))
            .collect(),
        segment_layers: net.segment_layers.iter().map(LayerGrad::zeros_like).collect(),
        head: LayerGrad::zeros_like(&net.head),
    }
}

fn apply_update(net: &mut XvectorNetwork, grads: &XvectorGradients, lr: f64) {
    let step = |layer: &mut Layer, g: &LayerGrad| {
        for (w, d) in layer.w.data_mut().iter_mut().zip(g.dw.data()) {
            *w -= lr * d;
        }
        for (b, d) in layer.b.iter_mut().zip(&g.db) {
            *b -= lr * d;
        }
    };
    for (fl, g) in net.frame_layers.iter_mut().zip(&grads.frame_layers) {
        step(&mut fl.layer, g);
    }
    for (layer, g) in net.segment_layers.iter_mut().zip(&grads.segment_layers) {
        step(layer, g);
    }
    step(&mut net.head, &grads.head);
}

/// Chunk sampler: a uniform length in [min, min(max, t)] and a uniform
/// start, or the whole utterance when it is shorter than `min`.
pub(crate) fn sample_chunk<R: Rng + ?Sized>(
    rng: &mut R,
    t: usize,
    min: usize,
    max: usize,
) -> (usize, usize) {
    if t < min {
        return (0, t);
    }
    let len = rng.gen_range(min..=max.min(t));
    let start = rng.gen_range(0..=t - len);
    (start, len)
}

/// Trains the speaker-discriminative network by SGD on one random chunk per
/// utterance per epoch. `speaker_labels` runs parallel to `features`; labels
/// must lie in [0, num_classes).
pub fn train_xvector_net(
    features: &[FeatureMatrix],
    speaker_labels: &[usize],
    num_classes: usize,
    cfg: &XvectorConfig,
    seed: u64,
) -> Result<(XvectorNetwork, XvectorTrainLog), NnetError> {
    validate_config(cfg)?;
    if features.is_empty() {
        return Err(NnetError::EmptyInput);
    }
    if features.len() != speaker_labels.len() {
        return Err(NnetError::BadConfig {
            reason: format!(
                "{} utterances but {} speaker labels",
                features.len(),
                speaker_labels.len()
            ),
        });
    }
    if num_classes < 2 {
        return Err(NnetError::BadConfig {
            reason: format!("need at least 2 classes, got {num_classes}"),
        });
    }
    let dim = features[0].dim();
    for (f, &y) in features.iter().zip(speaker_labels) {
        if f.num_frames() == 0 {
            return Err(NnetError::EmptyInput);
        }
        if f.dim() != dim {
            return Err(NnetError::DimMismatch {
                expected: dim,
                got: f.dim(),
            });
        }
        if y >= num_classes {
            return Err(NnetError::ClassOutOfRange {
                id: f.id.clone(),
                class: y,
                num_classes,
            });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut net = XvectorNetwork::random(dim, num_classes, cfg, &mut rng);
    let short_utterances = features
        .iter()
        .filter(|f| f.num_frames() < cfg.min_chunk)
        .count();

    let mut loss_history = Vec::with_capacity(cfg.epochs);
    let mut order: Vec<usize> = (0..features.len()).collect();
    for epoch in 0..cfg.epochs {
        let lr = geometric_lr(cfg.lr_start, cfg.lr_end, cfg.epochs, epoch);
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_chunks) {
            let mut acc = zero_grads(&net);
            for &u in batch {
                let feat = &features[u];
                let (start, len) =
                    sample_chunk(&mut rng, feat.num_frames(), cfg.min_chunk, cfg.max_chunk);
                let chunk: Vec<&[f64]> = (start..start + len).map(|t| feat.row(t)).collect();
                let (loss, grads) = xvector_chunk_gradients(&net, &chunk, speaker_labels[u])?;
                add_grads(&mut acc, &grads);
                epoch_loss += loss;
            }
            apply_update(&mut net, &acc, lr / batch.len() as f64);
        }
        epoch_loss /= features.len() as f64;
        if !epoch_loss.is_finite() {
            return Err(NnetError::Diverged { epoch });
        }
        loss_history.push(epoch_loss);
    }
    Ok((
        net,
        XvectorTrainLog {
            loss: loss_history,
            short_utterances,
        },
    ))
}

fn validate_config(cfg: &XvectorConfig) -> Result<(), NnetError> {
    let bad = |reason: String| Err(NnetError::BadConfig { reason });
    if cfg.contexts.is_empty() {
        return bad(String::from("no frame-level layers configured"));
    }
    if cfg.frame_width == 0 || cfg.embedding_dim == 0 || cfg.segment_width == 0 {
        return bad(String::from("layer widths must be positive"));
    }
    if cfg.embedding_layer >= 2 {
        return bad(format!(
            "embedding layer {} out of range for 2 segment layers",
            cfg.embedding_layer
        ));
    }
    if cfg.min_chunk == 0 || cfg.max_chunk < cfg.min_chunk {
        return bad(format!(
            "chunk range [{}, {}] is empty",
            cfg.min_chunk, cfg.max_chunk
        ));
    }
    if cfg.batch_chunks == 0 {
        return bad(String::from("batch_chunks must be positive"));
    }
    if cfg.epochs == 0 {
        return bad(String::from("epochs must be positive"));
    }
    if !(cfg.lr_start > 0.0 && cfg.lr_end > 0.0) {
        return bad(String::from("learning rates must be positive"));
    }
    Ok(())
}

/// Embedding for a whole utterance: forward through the frame layers,
/// pool mean ⊕ std over all frames, then run segment layers up to the tap
/// and return its pre-activation output.
pub fn extract_xvector(net: &XvectorNetwork, feat: &FeatureMatrix) -> Result<IVector, NnetError> {
    let frames: Vec<&[f64]> = (0..feat.num_frames()).map(|t| feat.row(t)).collect();
    let fwd = forward_chunk(net, &frames, None)?;
    let mut x = fwd.pooled;
    for (l, layer) in net.segment_layers.iter().enumerate() {
        if l == net.embedding_layer {
            return Ok(IVector {
                id: feat.id.clone(),
                w: layer.affine(&x),
            });
        }
        x = layer.forward(&x);
    }
    unreachable!("embedding_layer is validated against the segment layer count");
}
