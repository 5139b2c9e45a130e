//! Total-variability subspace modeling: EM training of the T matrix over
//! Baum–Welch statistics, posterior-mean i-vector extraction, and enrollment
//! averaging.
//!
//! The supervector model is M = m + Tw with w ~ N(0, I). For an utterance
//! with soft counts n and mean-centered first-order statistics f̃, the
//! i-vector is the posterior mean w = (I + TᵀΣ⁻¹NT)⁻¹ TᵀΣ⁻¹f̃, where Σ is
//! the UBM's diagonal covariance and N expands n along the feature dimension.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::gmm::{BaumWelchStats, DiagGmm};
use crate::linalg::{dot, Cholesky, Mat};
use crate::math::sample_standard_normal;

/// Jitter added to a failing SPD factorization before giving up.
const SPD_JITTER: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum IvectorError {
    #[error("statistics shape {got_c}×{got_d} does not match model {c}×{d}")]
    ShapeMismatch {
        c: usize,
        d: usize,
        got_c: usize,
        got_d: usize,
    },
    #[error("degenerate statistics for component {component}")]
    DegenerateStats { component: usize },
    #[error("invalid parameter: {reason}")]
    BadParam { reason: String },
    #[error("empty vector collection")]
    Empty,
    #[error("vector dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },
}

/// Total-variability model: the (C·D)×R subspace matrix together with the
/// UBM means and variances it was trained against.
#[derive(Debug, Clone, PartialEq)]
pub struct TotalVariabilityModel {
    t: Mat,
    ubm_means: Vec<f64>,
    ubm_vars: Vec<f64>,
    num_components: usize,
    dim: usize,
    rank: usize,
}

/// A point-estimate i-vector.
#[derive(Debug, Clone, PartialEq)]
pub struct IVector {
    pub id: String,
    pub w: Vec<f64>,
}

impl IVector {
    pub fn dim(&self) -> usize {
        self.w.len()
    }
}

impl TotalVariabilityModel {
    /// Binds a subspace matrix to its UBM. `t` must be (C·D)×R.
    pub fn new(t: Mat, ubm: &DiagGmm) -> Self {
        Self::from_parts(
            t,
            ubm.means_flat().to_vec(),
            ubm.vars_flat().to_vec(),
            ubm.num_components(),
            ubm.dim(),
        )
    }

    /// Assembles a model from already-validated parts (deserialization path).
    pub fn from_parts(
        t: Mat,
        ubm_means: Vec<f64>,
        ubm_vars: Vec<f64>,
        num_components: usize,
        dim: usize,
    ) -> Self {
        assert_eq!(t.rows(), num_components * dim, "T row count must be C·D");
        assert!(t.cols() >= 1 && t.cols() <= t.rows(), "rank out of range");
        assert_eq!(ubm_means.len(), num_components * dim);
        assert_eq!(ubm_vars.len(), num_components * dim);
        let rank = t.cols();
        Self {
            t,
            ubm_means,
            ubm_vars,
            num_components,
            dim,
            rank,
        }
    }

    pub fn t(&self) -> &Mat {
        &self.t
    }

    pub fn ubm_means(&self) -> &[f64] {
        &self.ubm_means
    }

    pub fn ubm_vars(&self) -> &[f64] {
        &self.ubm_vars
    }

    pub fn num_components(&self) -> usize {
        self.num_components
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    fn check_stats(&self, stats: &BaumWelchStats) -> Result<(), IvectorError> {
        if stats.num_components() != self.num_components || stats.dim != self.dim {
            return Err(IvectorError::ShapeMismatch {
                c: self.num_components,
                d: self.dim,
                got_c: stats.num_components(),
                got_d: stats.dim,
            });
        }
        Ok(())
    }

    /// Mean-centered first-order statistics f̃ = f − N·m, flattened C·D.
    fn centered_f(&self, stats: &BaumWelchStats) -> Vec<f64> {
        let mut out = stats.f.clone();
        for c in 0..self.num_components {
            let nc = stats.n[c];
            let row = &mut out[c * self.dim..(c + 1) * self.dim];
            let mu = &self.ubm_means[c * self.dim..(c + 1) * self.dim];
            for (o, &m) in row.iter_mut().zip(mu) {
                *o -= nc * m;
            }
        }
        out
    }

    /// Posterior precision L = I + TᵀΣ⁻¹NT and information g = TᵀΣ⁻¹f̃.
    fn posterior_terms(&self, n: &[f64], f_centered: &[f64]) -> (Mat, Vec<f64>) {
        let r = self.rank;
        let mut l = Mat::identity(r);
        let mut g = vec![0.0; r];
        for c in 0..self.num_components {
            let nc = n[c];
            for d in 0..self.dim {
                let cd = c * self.dim + d;
                let inv_var = 1.0 / self.ubm_vars[cd];
                let trow = self.t.row(cd);
                let fw = f_centered[cd] * inv_var;
                let nw = nc * inv_var;
                for i in 0..r {
                    g[i] += trow[i] * fw;
                    let li = l.row_mut(i);
                    let ti = trow[i] * nw;
                    for j in i..r {
                        li[j] += ti * trow[j];
                    }
                }
            }
        }
        for i in 0..r {
            for j in 0..i {
                l[(i, j)] = l[(j, i)];
            }
        }
        (l, g)
    }
}

/// Posterior-mean i-vector for one utterance's statistics.
pub fn extract_ivector(
    model: &TotalVariabilityModel,
    stats: &BaumWelchStats,
) -> Result<IVector, IvectorError> {
    model.check_stats(stats)?;
    let f_centered = model.centered_f(stats);
    let (l, g) = model.posterior_terms(&stats.n, &f_centered);
    let chol = Cholesky::new_with_jitter(&l, SPD_JITTER)
        .map_err(|_| IvectorError::DegenerateStats { component: 0 })?;
    Ok(IVector {
        id: stats.id.clone(),
        w: chol.solve(&g),
    })
}

/// Trains the T matrix by EM from a random Gaussian initialization
/// (seeded, scale 0.1). Returns the model and the per-iteration marginal
/// log-likelihood of the statistics up to an additive constant; the history
/// is non-decreasing up to M-step jitter.
pub fn train_tv_em(
    stats: &[BaumWelchStats],
    ubm: &DiagGmm,
    rank: usize,
    iters: usize,
    seed: u64,
) -> Result<(TotalVariabilityModel, Vec<f64>), IvectorError> {
    let c = ubm.num_components();
    let d = ubm.dim();
    if rank == 0 || rank > c * d {
        return Err(IvectorError::BadParam {
            reason: String::from("rank must be in 1..=C·D"),
        });
    }
    if stats.is_empty() {
        return Err(IvectorError::Empty);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = Mat::zeros(c * d, rank);
    for v in t.data_mut() {
        *v = 0.1 * sample_standard_normal(&mut rng);
    }
    let mut model = TotalVariabilityModel::new(t, ubm);
    for s in stats {
        model.check_stats(s)?;
    }
    let centered: Vec<Vec<f64>> = stats.iter().map(|s| model.centered_f(s)).collect();

    let mut history = Vec::with_capacity(iters);
    for _ in 0..iters {
        // E-step: per-utterance posterior moments, accumulated per component.
        let mut a: Vec<Mat> = (0..c).map(|_| Mat::zeros(rank, rank)).collect();
        let mut b = Mat::zeros(c * d, rank);
        let mut objective = 0.0;
        for (s, f_c) in stats.iter().zip(&centered) {
            let (l, g) = model.posterior_terms(&s.n, f_c);
            let chol = Cholesky::new_with_jitter(&l, SPD_JITTER)
                .map_err(|_| IvectorError::DegenerateStats { component: 0 })?;
            let ew = chol.solve(&g);
            objective += 0.5 * (dot(&g, &ew) - chol.log_det());
            let mut eww = chol.inverse();
            for i in 0..rank {
                for j in 0..rank {
                    eww[(i, j)] += ew[i] * ew[j];
                }
            }
            for comp in 0..c {
                let nc = s.n[comp];
                if nc > 0.0 {
                    for i in 0..rank {
                        let arow = a[comp].row_mut(i);
                        let erow = eww.row(i);
                        for j in 0..rank {
                            arow[j] += nc * erow[j];
                        }
                    }
                }
                for dd in 0..d {
                    let cd = comp * d + dd;
                    let fv = f_c[cd];
                    if fv != 0.0 {
                        let brow = b.row_mut(cd);
                        for j in 0..rank {
                            brow[j] += fv * ew[j];
                        }
                    }
                }
            }
        }
        history.push(objective);

        // M-step: T_c = B_c A_c⁻¹ row by row.
        let mut t_new = Mat::zeros(c * d, rank);
        for comp in 0..c {
            let chol = Cholesky::new_with_jitter(&a[comp], SPD_JITTER)
                .map_err(|_| IvectorError::DegenerateStats { component: comp })?;
            for dd in 0..d {
                let cd = comp * d + dd;
                let row = chol.solve(b.row(cd));
                t_new.row_mut(cd).copy_from_slice(&row);
            }
        }
        model.t = t_new;
    }
    Ok((model, history))
}

/// Arithmetic mean of the given vectors under a new id.
pub fn enroll_average(vectors: &[IVector], id: &str) -> Result<IVector, IvectorError> {
    let first = vectors.first().ok_or(IvectorError::Empty)?;
    let dim = first.dim();
    let mut w = vec![0.0; dim];
    for v in vectors {
        if v.dim() != dim {
            return Err(IvectorError::DimMismatch {
                expected: dim,
                got: v.dim(),
            });
        }
        for (acc, x) in w.iter_mut().zip(&v.w) {
            *acc += x;
        }
    }
    w.iter_mut().for_each(|x| *x /= vectors.len() as f64);
    Ok(IVector {
        id: String::from(id),
        w,
    })
}
