//! Spherical normalization and the two-covariance PLDA back-end.
//!
//! The generative model is v = μ + y + ε with between-class factor
//! y ~ N(0, Σ_b) and within-class residual ε ~ N(0, Σ_w), both full rank.
//! Verification scores are the closed-form log ratio of the joint density of
//! (enroll, test) under the same-class versus different-class hypotheses.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{dot, Cholesky, Mat};
// Whenever std is anywhere in the build graph its inherent float methods
// shadow this trait, leaving the import unused; pure no_std builds need it.
#[allow(unused_imports)]
use crate::math::FloatExt;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PldaError {
    #[error("vector dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },
    #[error("need at least 2 classes, got {got}")]
    TooFewClasses { got: usize },
    #[error("within-class covariance not positive definite after loading")]
    NotPositiveDefinite,
    #[error("degenerate vector at a length-normalization step")]
    DegenerateVector,
    #[error("invalid parameter: {reason}")]
    BadParam { reason: String },
}

/// One spherical-normalization step: subtract `mean`, multiply by `whiten`,
/// then project to unit length.
#[derive(Debug, Clone, PartialEq)]
pub struct SphericalNormStep {
    pub mean: Vec<f64>,
    pub whiten: Mat,
}

/// Iterated (center, whiten, length-normalize) chain. Applying the chain to
/// its own training vectors yields unit-norm outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct SphericalNorm {
    pub steps: Vec<SphericalNormStep>,
    /// Iterations whose covariance needed diagonal loading; empty for
    /// well-conditioned training sets.
    pub loaded_iters: Vec<usize>,
}

impl SphericalNorm {
    pub fn dim(&self) -> usize {
        self.steps.first().map(|s| s.mean.len()).unwrap_or(0)
    }
}

/// Two-covariance PLDA model.
#[derive(Debug, Clone, PartialEq)]
pub struct PldaModel {
    pub mu: Vec<f64>,
    /// Between-class covariance, symmetric PSD.
    pub sigma_b: Mat,
    /// Within-class covariance, symmetric PD.
    pub sigma_w: Mat,
}

impl PldaModel {
    pub fn dim(&self) -> usize {
        self.mu.len()
    }
}

fn mean_of(vectors: &[Vec<f64>]) -> Vec<f64> {
    let dim = vectors[0].len();
    let mut m = vec![0.0; dim];
    for v in vectors {
        for (a, x) in m.iter_mut().zip(v) {
            *a += x;
        }
    }
    m.iter_mut().for_each(|a| *a /= vectors.len() as f64);
    m
}

fn covariance_about(vectors: &[Vec<f64>], mean: &[f64]) -> Mat {
    let dim = mean.len();
    let mut cov = Mat::zeros(dim, dim);
    for v in vectors {
        for i in 0..dim {
            let di = v[i] - mean[i];
            let row = cov.row_mut(i);
            for j in 0..dim {
                row[j] += di * (v[j] - mean[j]);
            }
        }
    }
    cov.data_mut().iter_mut().for_each(|x| *x /= vectors.len() as f64);
    cov
}

/// Cholesky with a diagonal-loading fallback of `1e-6·trace/R` for
/// rank-deficient covariances. Reports whether loading fired.
fn whitening_factor(cov: &Mat) -> Result<(Mat, bool), PldaError> {
    match Cholesky::new(cov) {
        Ok(ch) => Ok((ch.inverse_factor(), false)),
        Err(_) => {
            let load = 1e-6 * cov.trace().max(1e-30) / cov.rows() as f64;
            let mut loaded = cov.clone();
            for i in 0..cov.rows() {
                loaded[(i, i)] += load;
            }
            let ch = Cholesky::new(&loaded).map_err(|_| PldaError::NotPositiveDefinite)?;
            Ok((ch.inverse_factor(), true))
        }
    }
}

fn length_normalize(v: &mut [f64]) -> Result<(), PldaError> {
    let norm = dot(v, v).sqrt();
    if norm < 1e-30 {
        return Err(PldaError::DegenerateVector);
    }
    v.iter_mut().for_each(|x| *x /= norm);
    Ok(())
}

/// Estimates an `iters`-step spherical normalization from training vectors.
/// Each step centers on the current sample mean, whitens with the inverse
/// Cholesky factor of the current sample covariance, and length-normalizes.
pub fn train_spherical_norm(
    vectors: &[Vec<f64>],
    iters: usize,
) -> Result<SphericalNorm, PldaError> {
    if vectors.is_empty() {
        return Err(PldaError::BadParam {
            reason: String::from("no training vectors"),
        });
    }
    let dim = vectors[0].len();
    for v in vectors {
        if v.len() != dim {
            return Err(PldaError::DimMismatch {
                expected: dim,
                got: v.len(),
            });
        }
    }
    let mut current: Vec<Vec<f64>> = vectors.to_vec();
    let mut norm = SphericalNorm {
        steps: Vec::with_capacity(iters),
        loaded_iters: Vec::new(),
    };
    for it in 0..iters {
        let mean = mean_of(&current);
        let cov = covariance_about(&current, &mean);
        let (whiten, loaded) = whitening_factor(&cov)?;
        if loaded {
            norm.loaded_iters.push(it);
        }
        for v in current.iter_mut() {
            let centered: Vec<f64> = v.iter().zip(&mean).map(|(x, m)| x - m).collect();
            *v = whiten.matvec(&centered);
            length_normalize(v)?;
        }
        norm.steps.push(SphericalNormStep { mean, whiten });
    }
    Ok(norm)
}

/// Applies a stored normalization chain to one vector.
pub fn apply_spherical_norm(norm: &SphericalNorm, v: &[f64]) -> Result<Vec<f64>, PldaError> {
    if !norm.steps.is_empty() && v.len() != norm.dim() {
        return Err(PldaError::DimMismatch {
            expected: norm.dim(),
            got: v.len(),
        });
    }
    let mut out = v.to_vec();
    for step in &norm.steps {
        let centered: Vec<f64> = out.iter().zip(&step.mean).map(|(x, m)| x - m).collect();
        out = step.whiten.matvec(&centered);
        length_normalize(&mut out)?;
    }
    Ok(out)
}

/// Trains the two-covariance model by EM. Classes are given by parallel
/// integer labels; single-member classes still shape the mean and
/// between-class statistics. Returns the model and the per-iteration
/// training-set marginal log-likelihood (non-decreasing within 1e-6).
///
/// The seed parameter is reserved: initialization is moment-based and
/// deterministic, so no randomness is consumed.
pub fn train_plda(
    vectors: &[Vec<f64>],
    class_labels: &[usize],
    iters: usize,
    _seed: u64,
) -> Result<(PldaModel, Vec<f64>), PldaError> {
    if vectors.len() != class_labels.len() {
        return Err(PldaError::BadParam {
            reason: String::from("labels must parallel vectors"),
        });
    }
    if vectors.is_empty() {
        return Err(PldaError::TooFewClasses { got: 0 });
    }
    let dim = vectors[0].len();
    for v in vectors {
        if v.len() != dim {
            return Err(PldaError::DimMismatch {
                expected: dim,
                got: v.len(),
            });
        }
    }
    // Group member indices per class, in label order.
    let mut classes: alloc::collections::BTreeMap<usize, Vec<usize>> =
        alloc::collections::BTreeMap::new();
    for (i, &lab) in class_labels.iter().enumerate() {
        classes.entry(lab).or_default().push(i);
    }
    if classes.len() < 2 {
        return Err(PldaError::TooFewClasses { got: classes.len() });
    }
    let n_total = vectors.len() as f64;
    let k_classes = classes.len() as f64;

    // Moment initialization: global mean, between-class scatter of class
    // means, pooled within-class scatter (diagonally loaded).
    let mut mu = mean_of(vectors);
    let class_members: Vec<&Vec<usize>> = classes.values().collect();
    let class_means: Vec<Vec<f64>> = class_members
        .iter()
        .map(|idx| mean_of(&idx.iter().map(|&i| vectors[i].clone()).collect::<Vec<_>>()))
        .collect();
    let mut sigma_b = covariance_about(&class_means, &mu);
    let mut sigma_w = Mat::zeros(dim, dim);
    for (idx, cmean) in class_members.iter().zip(&class_means) {
        for &i in idx.iter() {
            for r in 0..dim {
                let dr = vectors[i][r] - cmean[r];
                let row = sigma_w.row_mut(r);
                for c in 0..dim {
                    row[c] += dr * (vectors[i][c] - cmean[c]);
                }
            }
        }
    }
    sigma_w.data_mut().iter_mut().for_each(|x| *x /= n_total);
    load_to_pd(&mut sigma_w)?;

    let mut history = Vec::with_capacity(iters);
    for _ in 0..iters {
        let chol_w = Cholesky::new(&sigma_w).map_err(|_| PldaError::NotPositiveDefinite)?;
        let logdet_w = chol_w.log_det();

        let mut ll = 0.0;
        let mut sum_b = Mat::zeros(dim, dim);
        let mut sum_w = Mat::zeros(dim, dim);
        let mut mu_new = vec![0.0; dim];
        for idx in class_members.iter() {
            let n_i = idx.len() as f64;
            // Posterior of y for this class, in the Σ_b-singular-safe form:
            // m = Σ_b G⁻¹ c̄, C = Σ_b − Σ_b G⁻¹ Σ_b with G = Σ_b + Σ_w/n.
            let mut cbar = vec![0.0; dim];
            for &i in idx.iter() {
                for (a, (x, m)) in cbar.iter_mut().zip(vectors[i].iter().zip(&mu)) {
                    *a += x - m;
                }
            }
            cbar.iter_mut().for_each(|x| *x /= n_i);
            let g = sigma_b.add(&sigma_w.scale(1.0 / n_i));
            let chol_g = Cholesky::new_with_jitter(&g, 1e-10)
                .map_err(|_| PldaError::NotPositiveDefinite)?;
            let ginv_b = chol_g.solve_mat(&sigma_b);
            let m_i = {
                let t = chol_g.solve(&cbar);
                sigma_b.matvec(&t)
            };
            let mut c_i = sigma_b.sub(&sigma_b.matmul(&ginv_b));
            c_i.symmetrize();

            // Marginal log-likelihood of the class under the current model.
            let nb = sigma_b.scale(n_i).add(&sigma_w);
            let chol_nb = Cholesky::new(&nb).map_err(|_| PldaError::NotPositiveDefinite)?;
            let mut quad = 0.0;
            for &i in idx.iter() {
                let c: Vec<f64> = vectors[i].iter().zip(&mu).map(|(x, m)| x - m).collect();
                quad += chol_w.quad_form_inv(&c);
            }
            let h: Vec<f64> = {
                let s: Vec<f64> = cbar.iter().map(|x| x * n_i).collect();
                chol_w.solve(&s)
            };
            let ch = c_i.matvec(&h);
            ll += -0.5 * n_i * dim as f64 * crate::math::LN_2PI
                - 0.5 * (n_i - 1.0) * logdet_w
                - 0.5 * chol_nb.log_det()
                - 0.5 * quad
                + 0.5 * dot(&h, &ch);

            // Accumulate M-step statistics.
            for r in 0..dim {
                let row = sum_b.row_mut(r);
                let crow = c_i.row(r);
                for c in 0..dim {
                    row[c] += m_i[r] * m_i[c] + crow[c];
                }
            }
            for &i in idx.iter() {
                for r in 0..dim {
                    let dr = vectors[i][r] - mu[r] - m_i[r];
                    let row = sum_w.row_mut(r);
                    for c in 0..dim {
                        row[c] += dr * (vectors[i][c] - mu[c] - m_i[c]);
                    }
                }
                for (a, (x, m)) in mu_new.iter_mut().zip(vectors[i].iter().zip(&m_i)) {
                    *a += x - m;
                }
            }
            for r in 0..dim {
                let row = sum_w.row_mut(r);
                let crow = c_i.row(r);
                for c in 0..dim {
                    row[c] += n_i * crow[c];
                }
            }
        }
        history.push(ll);

        sigma_b = sum_b.scale(1.0 / k_classes);
        sigma_b.symmetrize();
        sigma_w = sum_w.scale(1.0 / n_total);
        sigma_w.symmetrize();
        load_to_pd(&mut sigma_w)?;
        mu = mu_new.iter().map(|x| x / n_total).collect();
    }
    Ok((
        PldaModel {
            mu,
            sigma_b,
            sigma_w,
        },
        history,
    ))
}

/// Diagonal loading of `1e-6·trace/R` if the matrix is not PD as given;
/// errors if it still is not.
fn load_to_pd(m: &mut Mat) -> Result<(), PldaError> {
    if Cholesky::new(m).is_ok() {
        return Ok(());
    }
    let load = (1e-6 * m.trace() / m.rows() as f64).max(1e-12);
    for i in 0..m.rows() {
        m[(i, i)] += load;
    }
    if Cholesky::new(m).is_err() {
        return Err(PldaError::NotPositiveDefinite);
    }
    Ok(())
}

/// Closed-form verification score: the log ratio of the joint density of
/// the pair under the same-class hypothesis to its density under the
/// different-class hypothesis. Symmetric in its two vector arguments.
pub fn plda_score(model: &PldaModel, enroll: &[f64], test: &[f64]) -> Result<f64, PldaError> {
    let dim = model.dim();
    if enroll.len() != dim || test.len() != dim {
        return Err(PldaError::DimMismatch {
            expected: dim,
            got: if enroll.len() != dim {
                enroll.len()
            } else {
                test.len()
            },
        });
    }
    // A = Σ_b + Σ_w (per-vector marginal covariance), B = Σ_b (cross block).
    let a = model.sigma_b.add(&model.sigma_w);
    let chol_a = Cholesky::new(&a).map_err(|_| PldaError::NotPositiveDefinite)?;
    let a_inv = chol_a.inverse();
    // Schur complement S = A − B A⁻¹ B of the joint same-class covariance.
    let b_ainv_b = model.sigma_b.matmul(&a_inv).matmul(&model.sigma_b);
    let mut s = a.sub(&b_ainv_b);
    s.symmetrize();
    let chol_s = Cholesky::new_with_jitter(&s, 1e-12).map_err(|_| PldaError::NotPositiveDefinite)?;
    let s_inv = chol_s.inverse();
    let mut q = s_inv.sub(&a_inv);
    q.symmetrize();
    let mut p = a_inv.matmul(&model.sigma_b).matmul(&s_inv);
    p.symmetrize();

    let u: Vec<f64> = enroll.iter().zip(&model.mu).map(|(x, m)| x - m).collect();
    let v: Vec<f64> = test.iter().zip(&model.mu).map(|(x, m)| x - m).collect();
    Ok(0.5 * (chol_a.log_det() - chol_s.log_det()) - 0.5 * dot(&u, &q.matvec(&u))
        - 0.5 * dot(&v, &q.matvec(&v))
        + dot(&u, &p.matvec(&v)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::sample_standard_normal;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn unit_cloud(n: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
        // Zero-mean, identity-covariance, unit-norm vectors in expectation:
        // draw standard normals and length-normalize, then re-center.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let mut v: Vec<f64> = (0..dim).map(|_| sample_standard_normal(&mut rng)).collect();
                length_normalize(&mut v).unwrap();
                v
            })
            .collect()
    }

    #[test]
    fn whitening_flattens_anisotropic_cloud() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let vectors: Vec<Vec<f64>> = (0..4000)
            .map(|_| {
                vec![
                    10.0 * sample_standard_normal(&mut rng),
                    sample_standard_normal(&mut rng),
                ]
            })
            .collect();
        let mean = mean_of(&vectors);
        let cov = covariance_about(&vectors, &mean);
        let (w, loaded) = whitening_factor(&cov).unwrap();
        assert!(!loaded);
        let whitened: Vec<Vec<f64>> = vectors
            .iter()
            .map(|v| {
                let c: Vec<f64> = v.iter().zip(&mean).map(|(x, m)| x - m).collect();
                w.matvec(&c)
            })
            .collect();
        let wcov = covariance_about(&whitened, &mean_of(&whitened));
        assert!(wcov.max_abs_diff(&Mat::identity(2)) < 0.1);
    }

    #[test]
    fn spherical_norm_outputs_unit_length() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let vectors: Vec<Vec<f64>> = (0..50)
            .map(|_| (0..4).map(|_| 2.0 + sample_standard_normal(&mut rng)).collect())
            .collect();
        let norm = train_spherical_norm(&vectors, 2).unwrap();
        assert_eq!(norm.steps.len(), 2);
        for v in &vectors {
            let out = apply_spherical_norm(&norm, v).unwrap();
            assert!((dot(&out, &out).sqrt() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn spherical_norm_replays_training_outputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let vectors: Vec<Vec<f64>> = (0..30)
            .map(|_| (0..3).map(|_| sample_standard_normal(&mut rng) * 3.0).collect())
            .collect();
        let norm = train_spherical_norm(&vectors, 2).unwrap();
        // Recompute the training-side outputs by hand through the chain.
        let mut current = vectors.clone();
        for step in &norm.steps {
            for v in current.iter_mut() {
                let c: Vec<f64> = v.iter().zip(&step.mean).map(|(x, m)| x - m).collect();
                *v = step.whiten.matvec(&c);
                length_normalize(v).unwrap();
            }
        }
        for (v, orig) in current.iter().zip(&vectors) {
            let replay = apply_spherical_norm(&norm, orig).unwrap();
            for (a, b) in v.iter().zip(&replay) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn scaled_input_normalizes_identically() {
        let norm = SphericalNorm {
            steps: vec![SphericalNormStep {
                mean: vec![0.0, 0.0],
                whiten: Mat::identity(2),
            }],
            loaded_iters: vec![],
        };
        let v = [3.0, 4.0];
        let scaled = [30.0, 40.0];
        let a = apply_spherical_norm(&norm, &v).unwrap();
        let b = apply_spherical_norm(&norm, &scaled).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!((a[0] - 0.6).abs() < 1e-12 && (a[1] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn zero_vector_is_degenerate() {
        let norm = SphericalNorm {
            steps: vec![SphericalNormStep {
                mean: vec![0.0],
                whiten: Mat::identity(1),
            }],
            loaded_iters: vec![],
        };
        assert_eq!(
            apply_spherical_norm(&norm, &[0.0]),
            Err(PldaError::DegenerateVector)
        );
    }

    #[test]
    fn fixed_point_on_symmetric_unit_frame() {
        // ±e_i has zero mean, covariance I/R, and unit norm: the chain's
        // whitening is a pure scale, so every vector passes through unchanged.
        let mut vectors = Vec::new();
        for i in 0..3 {
            for sign in [1.0f64, -1.0] {
                let mut v = vec![0.0; 3];
                v[i] = sign;
                vectors.push(v);
            }
        }
        let norm = train_spherical_norm(&vectors, 2).unwrap();
        for v in &vectors {
            let out = apply_spherical_norm(&norm, v).unwrap();
            for (a, b) in out.iter().zip(v) {
                assert!((a - b).abs() < 1e-4);
            }
        }
    }

    #[test]
    fn near_identity_on_already_spherical_data() {
        let vectors = unit_cloud(5000, 3, 99);
        let norm = train_spherical_norm(&vectors, 1).unwrap();
        for v in vectors.iter().take(50) {
            let out = apply_spherical_norm(&norm, v).unwrap();
            // Unit-norm in, unit-norm out; direction essentially preserved.
            let cos = dot(&out, v) / dot(v, v).sqrt();
            assert!(cos > 0.99, "direction moved: cos {cos}");
        }
    }

    fn synthetic_classes(
        seed: u64,
        classes: usize,
        per_class: usize,
        sb_diag: &[f64],
        sw_diag: &[f64],
    ) -> (Vec<Vec<f64>>, Vec<usize>) {
        let dim = sb_diag.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut vecs = Vec::new();
        let mut labels = Vec::new();
        for k in 0..classes {
            let y: Vec<f64> = sb_diag
                .iter()
                .map(|&s| s.sqrt() * sample_standard_normal(&mut rng))
                .collect();
            for _ in 0..per_class {
                let v: Vec<f64> = (0..dim)
                    .map(|i| y[i] + sw_diag[i].sqrt() * sample_standard_normal(&mut rng))
                    .collect();
                vecs.push(v);
                labels.push(k);
            }
        }
        (vecs, labels)
    }

    #[test]
    fn recovers_planted_covariances() {
        let (vecs, labels) = synthetic_classes(17, 600, 10, &[4.0, 1.0], &[1.0, 1.0]);
        let (model, history) = train_plda(&vecs, &labels, 25, 0).unwrap();
        let sb_true = Mat::from_diag(&[4.0, 1.0]);
        let sw_true = Mat::identity(2);
        let rel_b = model.sigma_b.sub(&sb_true).frobenius_norm() / sb_true.frobenius_norm();
        let rel_w = model.sigma_w.sub(&sw_true).frobenius_norm() / sw_true.frobenius_norm();
        assert!(rel_b < 0.15, "between-class error {rel_b}");
        assert!(rel_w < 0.15, "within-class error {rel_w}");
        for w in history.windows(2) {
            assert!(w[1] >= w[0] - 1e-6, "log-likelihood decreased: {w:?}");
        }
    }

    #[test]
    fn identical_singletons_drive_sigma_b_to_zero() {
        // Every class is the same single vector: no between-class spread.
        let v = vec![0.5, -1.0];
        let vecs: Vec<Vec<f64>> = (0..20).map(|_| v.clone()).collect();
        let labels: Vec<usize> = (0..20).collect();
        let (model, _) = train_plda(&vecs, &labels, 5, 0).unwrap();
        assert!(model.sigma_b.frobenius_norm() < 1e-8);
        let s = plda_score(&model, &[0.3, 0.1], &[-0.2, 0.7]).unwrap();
        assert!(s.abs() < 1e-6, "score {s}");
    }

    #[test]
    fn zero_sigma_b_scores_zero() {
        let model = PldaModel {
            mu: vec![0.1, -0.2],
            sigma_b: Mat::zeros(2, 2),
            sigma_w: Mat::identity(2),
        };
        let s = plda_score(&model, &[1.0, 2.0], &[-3.0, 0.5]).unwrap();
        assert!(s.abs() < 1e-9);
    }

    #[test]
    fn score_is_symmetric() {
        let (vecs, labels) = synthetic_classes(23, 50, 4, &[2.0, 0.5, 1.0], &[1.0, 1.0, 0.8]);
        let (model, _) = train_plda(&vecs, &labels, 5, 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..20 {
            let a: Vec<f64> = (0..3).map(|_| sample_standard_normal(&mut rng)).collect();
            let b: Vec<f64> = (0..3).map(|_| sample_standard_normal(&mut rng)).collect();
            let s1 = plda_score(&model, &a, &b).unwrap();
            let s2 = plda_score(&model, &b, &a).unwrap();
            assert!((s1 - s2).abs() < 1e-9);
        }
    }

    #[test]
    fn same_direction_outscores_orthogonal_in_spherical_model() {
        let model = PldaModel {
            mu: vec![0.0, 0.0],
            sigma_b: Mat::from_diag(&[1.0, 1.0]),
            sigma_w: Mat::from_diag(&[0.5, 0.5]),
        };
        let test = [1.0, 0.0];
        // Walk the enrollment from orthogonal to aligned; score must rise.
        let mut last = f64::NEG_INFINITY;
        for step in 0..=10 {
            let alpha = step as f64 / 10.0;
            let e = [alpha, 1.0 - alpha];
            let s = plda_score(&model, &e, &test).unwrap();
            assert!(s >= last - 1e-12, "score fell at step {step}");
            last = s;
        }
    }

    #[test]
    fn mu_matches_data_in_balanced_case() {
        let (vecs, labels) = synthetic_classes(29, 100, 6, &[1.5, 1.0], &[0.7, 1.2]);
        let (model, _) = train_plda(&vecs, &labels, 8, 0).unwrap();
        let gmean = mean_of(&vecs);
        for (m, g) in model.mu.iter().zip(&gmean) {
            assert!((m - g).abs() < 0.2);
        }
    }

    #[test]
    fn single_class_rejected() {
        let vecs = vec![vec![1.0], vec![2.0]];
        assert_eq!(
            train_plda(&vecs, &[0, 0], 3, 0),
            Err(PldaError::TooFewClasses { got: 1 })
        );
    }
}
