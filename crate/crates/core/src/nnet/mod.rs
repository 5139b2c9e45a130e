//! Feed-forward networks: multi-task bottleneck-feature MLPs, PCA
//! projection, and a segment-level embedding network with statistics
//! pooling. All training is plain single-threaded SGD so runs are
//! bit-reproducible given a seed.

mod mlp;
mod pca;
mod xvector;

pub use mlp::{
    batch_gradients, extract_deep_features, train_bn_dnn, LayerGrad, MlpGradients, MlpNetwork,
    MlpTrainConfig,
};
pub use pca::{project_pca, reconstruct_pca, train_pca, PcaProjection};
pub use xvector::{
    extract_xvector, train_xvector_net, xvector_chunk_gradients, FrameLayer, XvectorConfig,
    XvectorGradients, XvectorNetwork, XvectorTrainLog,
};

use alloc::string::String;
use alloc::vec::Vec;

use crate::linalg::Mat;
use crate::math::sample_standard_normal;
// Whenever std is anywhere in the build graph its inherent float methods
// shadow this trait, leaving the import unused; pure no_std builds need it.
#[allow(unused_imports)]
use crate::math::FloatExt;

/// Variance floor for the statistics-pooling standard-deviation path:
/// std = max(sqrt(var), ε), so constant input pools to exactly ε.
pub const POOLING_STD_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NnetError {
    #[error("labels misaligned with features for utterance {id}")]
    Misaligned { id: String },
    #[error("class {class} out of range {num_classes} in utterance {id}")]
    ClassOutOfRange {
        id: String,
        class: usize,
        num_classes: usize,
    },
    #[error("training diverged (non-finite loss) at epoch {epoch}")]
    Diverged { epoch: usize },
    #[error("layer index {index} out of range for depth {depth}")]
    LayerOutOfRange { index: usize, depth: usize },
    #[error("invalid configuration: {reason}")]
    BadConfig { reason: String },
    #[error("empty input")]
    EmptyInput,
    #[error("input dimension {got} does not match expected {expected}")]
    DimMismatch { expected: usize, got: usize },
    #[error("covariance rank {rank} below requested {wanted} components")]
    RankDeficient { rank: usize, wanted: usize },
}

/// Elementwise activation of a layer. Softmax is reserved for
/// classification heads and is applied jointly over the output vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Linear,
    Sigmoid,
    Relu,
    Softmax,
}

impl Activation {
    pub fn apply(&self, z: &mut [f64]) {
        match self {
            Activation::Linear => {}
            Activation::Sigmoid => {
                for v in z.iter_mut() {
                    *v = 1.0 / (1.0 + (-*v).exp());
                }
            }
            Activation::Relu => {
                for v in z.iter_mut() {
                    if *v < 0.0 {
                        *v = 0.0;
                    }
                }
            }
            Activation::Softmax => {
                let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let mut sum = 0.0;
                for v in z.iter_mut() {
                    *v = (*v - m).exp();
                    sum += *v;
                }
                for v in z.iter_mut() {
                    *v /= sum;
                }
            }
        }
    }

    /// Converts a gradient with respect to the activation output into one
    /// with respect to the pre-activation, given the activation output `a`.
    /// Softmax heads bypass this (their gradient is formed jointly with the
    /// cross-entropy loss).
    pub fn backprop(&self, a: &[f64], grad: &mut [f64]) {
        match self {
            Activation::Linear => {}
            Activation::Sigmoid => {
                for (g, &y) in grad.iter_mut().zip(a) {
                    *g *= y * (1.0 - y);
                }
            }
            Activation::Relu => {
                for (g, &y) in grad.iter_mut().zip(a) {
                    if y <= 0.0 {
                        *g = 0.0;
                    }
                }
            }
            Activation::Softmax => unreachable!("softmax backprop is fused with the loss"),
        }
    }
}

/// One affine layer with its activation tag. `w` is out×in.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub w: Mat,
    pub b: Vec<f64>,
    pub act: Activation,
}

impl Layer {
    pub fn in_dim(&self) -> usize {
        self.w.cols()
    }

    pub fn out_dim(&self) -> usize {
        self.w.rows()
    }

    /// Gaussian init with scale 1/sqrt(fan_in) and zero bias.
    pub fn random<R: rand::Rng + ?Sized>(
        in_dim: usize,
        out_dim: usize,
        act: Activation,
        rng: &mut R,
    ) -> Self {
        let scale = 1.0 / (in_dim as f64).sqrt();
        let mut w = Mat::zeros(out_dim, in_dim);
        for v in w.data_mut() {
            *v = scale * sample_standard_normal(rng);
        }
        Layer {
            w,
            b: alloc::vec![0.0; out_dim],
            act,
        }
    }

    pub fn affine(&self, x: &[f64]) -> Vec<f64> {
        let mut z = self.w.matvec(x);
        for (zi, bi) in z.iter_mut().zip(&self.b) {
            *zi += bi;
        }
        z
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let mut z = self.affine(x);
        self.act.apply(&mut z);
        z
    }
}

/// Geometric interpolation from `start` to `end` across `epochs` steps;
/// `epoch` 0 gives `start` and the final epoch gives `end`.
pub(crate) fn geometric_lr(start: f64, end: f64, epochs: usize, epoch: usize) -> f64 {
    if epochs <= 1 {
        return start;
    }
    let frac = epoch as f64 / (epochs - 1) as f64;
    start * (end / start).powf(frac)
}
