//! PCA projection of deep features down to bottleneck dimension.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::NnetError;
use crate::linalg::{sym_eigen, Mat};
use crate::types::FeatureMatrix;

/// Mean and top-B orthonormal principal directions of a feature cloud.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaProjection {
    pub mean: Vec<f64>,
    /// H×B, columns sorted by descending eigenvalue.
    pub basis: Mat,
    /// Variances along the kept components (the top eigenvalues).
    pub eigenvalues: Vec<f64>,
}

impl PcaProjection {
    pub fn input_dim(&self) -> usize {
        self.basis.rows()
    }

    pub fn output_dim(&self) -> usize {
        self.basis.cols()
    }
}

/// Estimates the projection from pooled frames of the given matrices:
/// the top `b` eigenvectors of the mean-centered sample covariance.
pub fn train_pca(features: &[FeatureMatrix], b: usize) -> Result<PcaProjection, NnetError> {
    let dim = features.first().map(|f| f.dim()).unwrap_or(0);
    let total: usize = features.iter().map(|f| f.num_frames()).sum();
    if total == 0 {
        return Err(NnetError::EmptyInput);
    }
    if b == 0 || b > dim {
        return Err(NnetError::BadConfig {
            reason: alloc::format!("component count {b} out of range 1..={dim}"),
        });
    }
    if total < b + 1 {
        return Err(NnetError::RankDeficient {
            rank: total.saturating_sub(1),
            wanted: b,
        });
    }
    let mut mean = vec![0.0; dim];
    for f in features {
        if f.dim() != dim {
            return Err(NnetError::DimMismatch {
                expected: dim,
                got: f.dim(),
            });
        }
        for t in 0..f.num_frames() {
            for (m, x) in mean.iter_mut().zip(f.row(t)) {
                *m += x;
            }
        }
    }
    mean.iter_mut().for_each(|m| *m /= total as f64);

    let mut cov = Mat::zeros(dim, dim);
    let mut centered = vec![0.0; dim];
    for f in features {
        for t in 0..f.num_frames() {
            for (c, (x, m)) in centered.iter_mut().zip(f.row(t).iter().zip(&mean)) {
                *c = x - m;
            }
            for i in 0..dim {
                let ci = centered[i];
                if ci == 0.0 {
                    continue;
                }
                let row = cov.row_mut(i);
                for (j, &cj) in centered.iter().enumerate() {
                    row[j] += ci * cj;
                }
            }
        }
    }
    cov.data_mut().iter_mut().for_each(|x| *x /= total as f64);

    let (eigs, vecs) = sym_eigen(&cov).map_err(|_| NnetError::BadConfig {
        reason: String::from("covariance eigendecomposition did not converge"),
    })?;
    // Informative rank: eigenvalues meaningfully above round-off of the top one.
    let cutoff = eigs[0].max(0.0) * 1e-10 + 1e-12;
    let rank = eigs.iter().filter(|&&e| e > cutoff).count();
    if rank < b {
        return Err(NnetError::RankDeficient { rank, wanted: b });
    }
    let mut basis = Mat::zeros(dim, b);
    for c in 0..b {
        for r in 0..dim {
            basis[(r, c)] = vecs[(r, c)];
        }
    }
    Ok(PcaProjection {
        mean,
        basis,
        eigenvalues: eigs[..b].to_vec(),
    })
}

/// Projects each frame: subtract the mean, multiply by the basis.
pub fn project_pca(p: &PcaProjection, feat: &FeatureMatrix) -> Result<FeatureMatrix, NnetError> {
    if feat.dim() != p.input_dim() {
        return Err(NnetError::DimMismatch {
            expected: p.input_dim(),
            got: feat.dim(),
        });
    }
    let b = p.output_dim();
    let mut out = FeatureMatrix::empty(feat.id.clone(), b);
    out.frame_shift_ms = feat.frame_shift_ms;
    let mut proj = vec![0.0; b];
    for t in 0..feat.num_frames() {
        let row = feat.row(t);
        for c in 0..b {
            let mut s = 0.0;
            for r in 0..p.input_dim() {
                s += (row[r] - p.mean[r]) * p.basis[(r, c)];
            }
            proj[c] = s;
        }
        out.push_row(&proj);
    }
    Ok(out)
}

/// Maps projected coordinates back into the input space: mean + basis·y.
pub fn reconstruct_pca(p: &PcaProjection, coords: &[f64]) -> Vec<f64> {
    assert_eq!(coords.len(), p.output_dim());
    let mut out = p.mean.clone();
    for r in 0..p.input_dim() {
        for c in 0..p.output_dim() {
            out[r] += p.basis[(r, c)] * coords[c];
        }
    }
    out
}
