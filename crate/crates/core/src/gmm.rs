//! Diagonal-covariance Gaussian mixture models: universal background model
//! training by EM with binary-split initialization, mean-only MAP speaker
//! adaptation, frame-averaged log-likelihood-ratio scoring, and zeroth/first
//! order Baum–Welch statistics for subspace training.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::math::{log_sum_exp, LN_2PI};
// Whenever std is anywhere in the build graph its inherent float methods
// shadow this trait, leaving the import unused; pure no_std builds need it.
#[allow(unused_imports)]
use crate::math::FloatExt;
use crate::types::FeatureMatrix;

/// Components with posterior mass below this are skipped when accumulating
/// Baum–Welch statistics; the surviving posteriors are renormalized so the
/// zeroth-order counts still sum to the frame count.
const POSTERIOR_PRUNE: f64 = 1e-8;

/// Diagonal-covariance GMM.
///
/// Invariants: weights are non-negative and sum to 1 within 1e-10; every
/// variance is at or above the training-time floor.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagGmm {
    weights: Vec<f64>,
    /// Row-major C×D component means.
    means: Vec<f64>,
    /// Row-major C×D component variances.
    vars: Vec<f64>,
    dim: usize,
}

/// Per-utterance sufficient statistics under a fixed UBM: soft counts `n`
/// and posterior-weighted feature sums `f` (uncentered).
#[derive(Debug, Clone, PartialEq)]
pub struct BaumWelchStats {
    pub id: String,
    /// Zeroth order, length C. Non-negative, sums to the frame count.
    pub n: Vec<f64>,
    /// First order, row-major C×D.
    pub f: Vec<f64>,
    pub dim: usize,
}

/// Record of one EM run: the average log-likelihood at the start of each
/// sweep and the sweeps in which variance flooring fired (those sweeps are
/// exempt from the monotonicity guarantee).
#[derive(Debug, Clone, Default)]
pub struct EmLog {
    pub avg_ll: Vec<f64>,
    pub floor_events: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GmmError {
    #[error("feature dimension {got} does not match model dimension {expected}")]
    DimMismatch { expected: usize, got: usize },
    #[error("empty feature matrix")]
    EmptyFeatures,
    #[error("insufficient data: {frames} frames for {needed} required")]
    InsufficientData { frames: usize, needed: usize },
    #[error("numerical failure in EM sweep {sweep}")]
    NumericalFailure { sweep: usize },
    #[error("invalid parameter: {reason}")]
    BadParam { reason: String },
}

impl DiagGmm {
    pub fn new(weights: Vec<f64>, means: Vec<f64>, vars: Vec<f64>, dim: usize) -> Self {
        let c = weights.len();
        assert_eq!(means.len(), c * dim);
        assert_eq!(vars.len(), c * dim);
        Self {
            weights,
            means,
            vars,
            dim,
        }
    }

    pub fn num_components(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn mean(&self, c: usize) -> &[f64] {
        &self.means[c * self.dim..(c + 1) * self.dim]
    }

    pub fn var(&self, c: usize) -> &[f64] {
        &self.vars[c * self.dim..(c + 1) * self.dim]
    }

    pub fn means_flat(&self) -> &[f64] {
        &self.means
    }

    pub fn vars_flat(&self) -> &[f64] {
        &self.vars
    }

    /// Checks the weight simplex and variance positivity. `floor` of 0
    /// checks positivity only.
    pub fn validate(&self, floor: f64) -> Result<(), GmmError> {
        let sum: f64 = self.weights.iter().sum();
        if (sum - 1.0).abs() > 1e-10 || self.weights.iter().any(|&w| w < 0.0) {
            return Err(GmmError::BadParam {
                reason: String::from("weights are not a simplex"),
            });
        }
        if self.vars.iter().any(|&v| !v.is_finite() || v <= 0.0 || v + 1e-15 < floor) {
            return Err(GmmError::BadParam {
                reason: String::from("variance below floor"),
            });
        }
        Ok(())
    }

    /// Per-component log densities ln(w_c · N(x; μ_c, σ²_c)) into `out`.
    fn log_joint(&self, x: &[f64], out: &mut [f64]) {
        let d = self.dim;
        for c in 0..self.num_components() {
            let mu = self.mean(c);
            let var = self.var(c);
            let mut quad = 0.0;
            let mut logdet = 0.0;
            for i in 0..d {
                let diff = x[i] - mu[i];
                quad += diff * diff / var[i];
                logdet += var[i].ln();
            }
            out[c] = self.weights[c].ln() - 0.5 * (d as f64 * LN_2PI + logdet + quad);
        }
    }

    fn check_dim(&self, feat: &FeatureMatrix) -> Result<(), GmmError> {
        if feat.dim() != self.dim {
            return Err(GmmError::DimMismatch {
                expected: self.dim,
                got: feat.dim(),
            });
        }
        Ok(())
    }
}

/// Frame-averaged log-likelihood (1/T)·Σ_t ln Σ_c w_c N(x_t; μ_c, σ²_c),
/// computed with log-sum-exp stabilization.
pub fn gmm_log_likelihood(gmm: &DiagGmm, feat: &FeatureMatrix) -> Result<f64, GmmError> {
    gmm.check_dim(feat)?;
    if feat.num_frames() == 0 {
        return Err(GmmError::EmptyFeatures);
    }
    let mut joint = vec![0.0; gmm.num_components()];
    let mut total = 0.0;
    for t in 0..feat.num_frames() {
        gmm.log_joint(feat.row(t), &mut joint);
        total += log_sum_exp(&joint);
    }
    Ok(total / feat.num_frames() as f64)
}

/// Frame-averaged log-likelihood ratio of target versus background model.
pub fn llr_score(target: &DiagGmm, ubm: &DiagGmm, feat: &FeatureMatrix) -> Result<f64, GmmError> {
    if target.dim() != ubm.dim() {
        return Err(GmmError::DimMismatch {
            expected: ubm.dim(),
            got: target.dim(),
        });
    }
    Ok(gmm_log_likelihood(target, feat)? - gmm_log_likelihood(ubm, feat)?)
}

/// Accumulates zeroth- and first-order statistics of `feat` under `ubm`.
/// Posteriors below [`POSTERIOR_PRUNE`] are dropped and the remainder
/// renormalized, so `Σ_c n_c` equals the frame count exactly up to round-off.
pub fn accumulate_bw_stats(ubm: &DiagGmm, feat: &FeatureMatrix) -> Result<BaumWelchStats, GmmError> {
    ubm.check_dim(feat)?;
    if feat.num_frames() == 0 {
        return Err(GmmError::EmptyFeatures);
    }
    let c = ubm.num_components();
    let d = ubm.dim();
    let mut joint = vec![0.0; c];
    let mut n = vec![0.0; c];
    let mut f = vec![0.0; c * d];
    for t in 0..feat.num_frames() {
        let x = feat.row(t);
        ubm.log_joint(x, &mut joint);
        let lse = log_sum_exp(&joint);
        let mut kept_mass = 0.0;
        for j in joint.iter_mut() {
            *j = (*j - lse).exp();
            if *j < POSTERIOR_PRUNE {
                *j = 0.0;
            }
            kept_mass += *j;
        }
        for (k, &gamma) in joint.iter().enumerate() {
            if gamma == 0.0 {
                continue;
            }
            let g = gamma / kept_mass;
            n[k] += g;
            let fk = &mut f[k * d..(k + 1) * d];
            for (fi, &xi) in fk.iter_mut().zip(x) {
                *fi += g * xi;
            }
        }
    }
    Ok(BaumWelchStats {
        id: feat.id.clone(),
        n,
        f,
        dim: d,
    })
}

impl BaumWelchStats {
    pub fn num_components(&self) -> usize {
        self.n.len()
    }

    pub fn f_row(&self, c: usize) -> &[f64] {
        &self.f[c * self.dim..(c + 1) * self.dim]
    }

    /// First-order statistics centered on the model means:
    /// f̃_c = f_c − n_c·μ_c, returned row-major C×D.
    pub fn centered_f(&self, gmm: &DiagGmm) -> Vec<f64> {
        assert_eq!(gmm.num_components(), self.num_components());
        assert_eq!(gmm.dim(), self.dim);
        let mut out = self.f.clone();
        for c in 0..self.num_components() {
            let mu = gmm.mean(c);
            let row = &mut out[c * self.dim..(c + 1) * self.dim];
            for (o, &m) in row.iter_mut().zip(mu) {
                *o -= self.n[c] * m;
            }
        }
        out
    }

    /// Elementwise merge; statistics are additive over utterance partitions.
    pub fn merge(&mut self, other: &BaumWelchStats) {
        assert_eq!(self.n.len(), other.n.len());
        assert_eq!(self.dim, other.dim);
        for (a, b) in self.n.iter_mut().zip(&other.n) {
            *a += b;
        }
        for (a, b) in self.f.iter_mut().zip(&other.f) {
            *a += b;
        }
    }
}

/// Mean-only MAP adaptation: per iteration, posteriors come from the current
/// adapted model and means move to (f_c + r·μ_ubm_c)/(n_c + r) with the UBM
/// mean as the prior throughout. Weights and variances are the UBM's.
pub fn map_adapt(
    ubm: &DiagGmm,
    feat: &FeatureMatrix,
    relevance: f64,
    iters: usize,
) -> Result<DiagGmm, GmmError> {
    ubm.check_dim(feat)?;
    if feat.num_frames() == 0 {
        return Err(GmmError::EmptyFeatures);
    }
    if !relevance.is_finite() || relevance <= 0.0 {
        return Err(GmmError::BadParam {
            reason: String::from("relevance factor must be positive"),
        });
    }
    if iters == 0 {
        return Err(GmmError::BadParam {
            reason: String::from("at least one adaptation iteration required"),
        });
    }
    let c = ubm.num_components();
    let d = ubm.dim();
    let mut adapted = ubm.clone();
    for _ in 0..iters {
        let stats = accumulate_bw_stats(&adapted, feat)?;
        let mut means = vec![0.0; c * d];
        for k in 0..c {
            let nk = stats.n[k];
            let fk = stats.f_row(k);
            let prior = ubm.mean(k);
            let row = &mut means[k * d..(k + 1) * d];
            for i in 0..d {
                row[i] = (fk[i] + relevance * prior[i]) / (nk + relevance);
            }
        }
        adapted.means = means;
    }
    Ok(adapted)
}

/// Trains a diagonal GMM by binary-split initialization from the global
/// Gaussian followed by `iters` EM sweeps. The returned log holds the
/// average log-likelihood at the start of each of those sweeps. The seed
/// only affects the reseeding of components that lose all their data.
pub fn train_ubm_em(
    features: &[FeatureMatrix],
    num_components: usize,
    iters: usize,
    seed: u64,
) -> Result<(DiagGmm, EmLog), GmmError> {
    if num_components == 0 {
        return Err(GmmError::BadParam {
            reason: String::from("component count must be at least 1"),
        });
    }
    let dim = features.first().map(|f| f.dim()).unwrap_or(0);
    let total_frames: usize = features.iter().map(|f| f.num_frames()).sum();
    if total_frames < 10 * num_components {
        return Err(GmmError::InsufficientData {
            frames: total_frames,
            needed: 10 * num_components,
        });
    }
    for f in features {
        if f.dim() != dim {
            return Err(GmmError::DimMismatch {
                expected: dim,
                got: f.dim(),
            });
        }
    }

    // Global Gaussian of the pooled data; its variance sets the floor.
    let mut gmean = vec![0.0; dim];
    for f in features {
        for t in 0..f.num_frames() {
            for (m, x) in gmean.iter_mut().zip(f.row(t)) {
                *m += x;
            }
        }
    }
    gmean.iter_mut().for_each(|m| *m /= total_frames as f64);
    let mut gvar = vec![0.0; dim];
    for f in features {
        for t in 0..f.num_frames() {
            for ((v, x), m) in gvar.iter_mut().zip(f.row(t)).zip(&gmean) {
                let c = x - m;
                *v += c * c;
            }
        }
    }
    gvar.iter_mut().for_each(|v| *v /= total_frames as f64);
    let floor: Vec<f64> = gvar.iter().map(|&v| (1e-4 * v).max(1e-12)).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gmm = DiagGmm::new(vec![1.0], gmean.clone(), gvar.clone(), dim);

    // Binary splitting up to the requested order, stabilizing after each round.
    while gmm.num_components() < num_components {
        gmm = split_components(&gmm, num_components - gmm.num_components());
        for sweep in 0..2 {
            em_sweep(&mut gmm, features, &floor, &gvar, &mut rng)
                .map_err(|_| GmmError::NumericalFailure { sweep })?;
        }
    }

    let mut log = EmLog::default();
    for sweep in 0..iters {
        let (avg_ll, floored) = em_sweep(&mut gmm, features, &floor, &gvar, &mut rng)
            .map_err(|_| GmmError::NumericalFailure { sweep })?;
        if !avg_ll.is_finite() {
            return Err(GmmError::NumericalFailure { sweep });
        }
        log.avg_ll.push(avg_ll);
        if floored {
            log.floor_events.push(sweep);
        }
    }
    Ok((gmm, log))
}

/// Splits up to `max_new` components (largest weights first) into pairs with
/// means perturbed by ±0.2·σ per dimension.
fn split_components(gmm: &DiagGmm, max_new: usize) -> DiagGmm {
    let c = gmm.num_components();
    let d = gmm.dim();
    let num_split = c.min(max_new);
    let mut order: Vec<usize> = (0..c).collect();
    order.sort_by(|&a, &b| {
        gmm.weights[b]
            .partial_cmp(&gmm.weights[a])
            .unwrap_or(core::cmp::Ordering::Equal)
    });
    let split_set = &order[..num_split];
    let mut weights = Vec::with_capacity(c + num_split);
    let mut means = Vec::with_capacity((c + num_split) * d);
    let mut vars = Vec::with_capacity((c + num_split) * d);
    for k in 0..c {
        if split_set.contains(&k) {
            for sign in [-1.0, 1.0] {
                weights.push(gmm.weights[k] / 2.0);
                for i in 0..d {
                    means.push(gmm.mean(k)[i] + sign * 0.2 * gmm.var(k)[i].sqrt());
                    vars.push(gmm.var(k)[i]);
                }
            }
        } else {
            weights.push(gmm.weights[k]);
            means.extend_from_slice(gmm.mean(k));
            vars.extend_from_slice(gmm.var(k));
        }
    }
    DiagGmm::new(weights, means, vars, d)
}

/// One EM sweep in place. Returns the average log-likelihood under the model
/// as it stood at the start of the sweep, and whether variance flooring or
/// dead-component reseeding fired.
fn em_sweep(
    gmm: &mut DiagGmm,
    features: &[FeatureMatrix],
    floor: &[f64],
    gvar: &[f64],
    rng: &mut ChaCha8Rng,
) -> Result<(f64, bool), GmmError> {
    let c = gmm.num_components();
    let d = gmm.dim();
    let mut joint = vec![0.0; c];
    let mut n = vec![0.0; c];
    let mut fsum = vec![0.0; c * d];
    let mut ssum = vec![0.0; c * d];
    let mut total_ll = 0.0;
    let mut total_frames = 0usize;
    for feat in features {
        for t in 0..feat.num_frames() {
            let x = feat.row(t);
            gmm.log_joint(x, &mut joint);
            let lse = log_sum_exp(&joint);
            total_ll += lse;
            total_frames += 1;
            for k in 0..c {
                let gamma = (joint[k] - lse).exp();
                if gamma == 0.0 {
                    continue;
                }
                n[k] += gamma;
                let fk = &mut fsum[k * d..(k + 1) * d];
                let sk = &mut ssum[k * d..(k + 1) * d];
                for i in 0..d {
                    fk[i] += gamma * x[i];
                    sk[i] += gamma * x[i] * x[i];
                }
            }
        }
    }
    if !total_ll.is_finite() {
        return Err(GmmError::NumericalFailure { sweep: 0 });
    }
    let avg_ll = total_ll / total_frames as f64;

    let mut touched = false;
    let dead_cut = 1e-8 * total_frames as f64;
    for k in 0..c {
        if n[k] <= dead_cut {
            // Reseed a starved component at a random frame with global variance.
            let mut pick = rng.gen_range(0..total_frames);
            let mut row: &[f64] = &[];
            for feat in features {
                if pick < feat.num_frames() {
                    row = feat.row(pick);
                    break;
                }
                pick -= feat.num_frames();
            }
            gmm.weights[k] = 1e-8;
            gmm.means[k * d..(k + 1) * d].copy_from_slice(row);
            gmm.vars[k * d..(k + 1) * d].copy_from_slice(gvar);
            touched = true;
            continue;
        }
        gmm.weights[k] = n[k] / total_frames as f64;
        for i in 0..d {
            let mu = fsum[k * d + i] / n[k];
            let var = ssum[k * d + i] / n[k] - mu * mu;
            gmm.means[k * d + i] = mu;
            if var < floor[i] {
                gmm.vars[k * d + i] = floor[i];
                touched = true;
            } else {
                gmm.vars[k * d + i] = var;
            }
        }
    }
    let wsum: f64 = gmm.weights.iter().sum();
    gmm.weights.iter_mut().for_each(|w| *w /= wsum);
    Ok((avg_ll, touched))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn feat_from(rows: &[&[f64]]) -> FeatureMatrix {
        let mut f = FeatureMatrix::empty("t".to_string(), rows[0].len());
        for r in rows {
            f.push_row(r);
        }
        f
    }

    fn gauss(rng: &mut ChaCha8Rng) -> f64 {
        crate::math::sample_standard_normal(rng)
    }

    #[test]
    fn single_gaussian_at_mode() {
        let gmm = DiagGmm::new(vec![1.0], vec![0.0], vec![1.0], 1);
        let feat = feat_from(&[&[0.0]]);
        let ll = gmm_log_likelihood(&gmm, &feat).unwrap();
        assert!((ll - (-0.5 * LN_2PI)).abs() < 1e-12);
    }

    #[test]
    fn extreme_outlier_stays_finite() {
        let gmm = DiagGmm::new(
            vec![0.5, 0.5],
            vec![0.0, 0.0, 1.0, 1.0],
            vec![1.0, 1.0, 2.0, 2.0],
            2,
        );
        let feat = feat_from(&[&[1e6, -1e6]]);
        let ll = gmm_log_likelihood(&gmm, &feat).unwrap();
        assert!(ll.is_finite());
        assert!(ll < -1e9);
    }

    #[test]
    fn llr_of_identical_models_is_zero() {
        let gmm = DiagGmm::new(vec![0.3, 0.7], vec![0.0, 2.0], vec![1.0, 0.5], 1);
        let feat = feat_from(&[&[0.1], &[1.9], &[-0.4]]);
        assert_eq!(llr_score(&gmm, &gmm, &feat).unwrap(), 0.0);
    }

    #[test]
    fn single_component_em_matches_moments() {
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|t| vec![(t as f64 * 0.37).sin() * 2.0, t as f64 * 0.1])
            .collect();
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let feat = feat_from(&refs);
        let (gmm, log) = train_ubm_em(core::slice::from_ref(&feat), 1, 5, 7).unwrap();
        let t = feat.num_frames() as f64;
        for i in 0..2 {
            let mean: f64 = (0..feat.num_frames()).map(|r| feat.row(r)[i]).sum::<f64>() / t;
            let var: f64 = (0..feat.num_frames())
                .map(|r| (feat.row(r)[i] - mean) * (feat.row(r)[i] - mean))
                .sum::<f64>()
                / t;
            assert!((gmm.mean(0)[i] - mean).abs() < 1e-10);
            assert!((gmm.var(0)[i] - var).abs() < 1e-10);
        }
        assert_eq!(log.avg_ll.len(), 5);
    }

    #[test]
    fn two_clusters_recovered() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut rows = Vec::new();
        for _ in 0..1000 {
            rows.push(vec![-5.0 + gauss(&mut rng)]);
        }
        for _ in 0..1000 {
            rows.push(vec![5.0 + gauss(&mut rng)]);
        }
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let feat = feat_from(&refs);
        // Split initialization starts both components near the global mean;
        // widely separated clusters need a few dozen sweeps to specialize.
        let (gmm, log) = train_ubm_em(core::slice::from_ref(&feat), 2, 60, 1).unwrap();
        let mut means: Vec<f64> = (0..2).map(|c| gmm.mean(c)[0]).collect();
        means.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((means[0] + 5.0).abs() < 0.2, "got {means:?}");
        assert!((means[1] - 5.0).abs() < 0.2, "got {means:?}");
        assert!((gmm.weights()[0] - 0.5).abs() < 0.05);
        for w in log.avg_ll.windows(2) {
            assert!(w[1] >= w[0] - 1e-8, "log-likelihood decreased: {w:?}");
        }
        gmm.validate(0.0).unwrap();
    }

    #[test]
    fn map_with_huge_relevance_keeps_ubm_means() {
        let ubm = DiagGmm::new(vec![0.5, 0.5], vec![0.0, 3.0], vec![1.0, 1.0], 1);
        let feat = feat_from(&[&[1.0], &[2.5], &[0.3]]);
        let adapted = map_adapt(&ubm, &feat, 1e12, 3).unwrap();
        for c in 0..2 {
            assert!((adapted.mean(c)[0] - ubm.mean(c)[0]).abs() < 1e-6);
        }
    }

    #[test]
    fn map_single_component_hand_value() {
        // n=10 frames at sample mean 1.0, prior mean 0, r=10:
        // adapted mean = (10·1 + 10·0)/(10 + 10) = 0.5.
        let ubm = DiagGmm::new(vec![1.0], vec![0.0], vec![1.0], 1);
        let rows: Vec<Vec<f64>> = (0..10).map(|t| vec![1.0 + ((t as f64) - 4.5) * 0.0]).collect();
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let adapted = map_adapt(&ubm, &feat_from(&refs), 10.0, 1).unwrap();
        assert!((adapted.mean(0)[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn adaptation_raises_llr() {
        let ubm = DiagGmm::new(vec![0.5, 0.5], vec![-1.0, 1.0], vec![1.0, 1.0], 1);
        let feat = feat_from(&[&[2.0], &[2.2], &[1.8], &[2.1], &[1.9]]);
        let adapted = map_adapt(&ubm, &feat, 10.0, 3).unwrap();
        assert!(llr_score(&adapted, &ubm, &feat).unwrap() > 0.0);
    }

    #[test]
    fn bw_counts_sum_to_frames() {
        let ubm = DiagGmm::new(
            vec![0.25, 0.25, 0.25, 0.25],
            vec![0.0, 1.0, -1.0, 3.0],
            vec![1.0, 0.5, 2.0, 1.0],
            1,
        );
        let feat = feat_from(&[&[0.1], &[1.2], &[-0.9], &[2.8], &[0.0], &[7.0]]);
        let stats = accumulate_bw_stats(&ubm, &feat).unwrap();
        let total: f64 = stats.n.iter().sum();
        assert!((total - 6.0).abs() < 1e-6);
    }

    #[test]
    fn bw_dominant_posterior_at_component_mean() {
        let ubm = DiagGmm::new(vec![0.5, 0.5], vec![-10.0, 10.0], vec![1.0, 1.0], 1);
        let feat = feat_from(&[&[-10.0]]);
        let stats = accumulate_bw_stats(&ubm, &feat).unwrap();
        assert!((stats.n[0] - 1.0).abs() < 1e-6);
        assert!(stats.n[1].abs() < 1e-6);
    }

    #[test]
    fn bw_stats_additive_over_concatenation() {
        let ubm = DiagGmm::new(vec![0.6, 0.4], vec![0.0, 2.0], vec![1.0, 1.5], 1);
        let a = feat_from(&[&[0.3], &[1.7], &[-0.2]]);
        let b = feat_from(&[&[2.5], &[0.9]]);
        let mut whole = FeatureMatrix::empty("w".to_string(), 1);
        for f in [&a, &b] {
            for t in 0..f.num_frames() {
                whole.push_row(f.row(t));
            }
        }
        let mut sa = accumulate_bw_stats(&ubm, &a).unwrap();
        let sb = accumulate_bw_stats(&ubm, &b).unwrap();
        sa.merge(&sb);
        let sw = accumulate_bw_stats(&ubm, &whole).unwrap();
        for (x, y) in sa.n.iter().zip(&sw.n) {
            assert!((x - y).abs() < 1e-9);
        }
        for (x, y) in sa.f.iter().zip(&sw.f) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn centered_stats_subtract_count_weighted_means() {
        let ubm = DiagGmm::new(vec![1.0], vec![2.0, -1.0], vec![1.0, 1.0], 2);
        let feat = feat_from(&[&[3.0, 0.0], &[1.0, -2.0]]);
        let stats = accumulate_bw_stats(&ubm, &feat).unwrap();
        let centered = stats.centered_f(&ubm);
        // f = (4, −2), n = 2, μ = (2, −1) → f̃ = (0, 0).
        assert!(centered[0].abs() < 1e-12);
        assert!(centered[1].abs() < 1e-12);
    }
}
