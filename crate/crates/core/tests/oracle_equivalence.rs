//! Randomized equivalence against the brute-force references in
//! `tdsv-testkit`: every scoring and estimation path is checked on a few
//! hundred small instances to 1e-9 absolute. The references share no code
//! with the library, so agreement here pins down both sides.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tdsv_core::eval::{compute_eer, compute_min_dcf, DcfParams};
use tdsv_core::gmm::{accumulate_bw_stats, gmm_log_likelihood, BaumWelchStats, DiagGmm};
use tdsv_core::ivector::{extract_ivector, TotalVariabilityModel};
use tdsv_core::linalg::{sym_eigen, Cholesky, Mat};
use tdsv_core::plda::{plda_score, PldaModel};
use tdsv_core::types::FeatureMatrix;
use tdsv_testkit as oracle;

const INSTANCES: usize = 200;

fn random_gmm(rng: &mut ChaCha8Rng) -> DiagGmm {
    let c = rng.gen_range(1..=5);
    let d = rng.gen_range(1..=4);
    let mut weights: Vec<f64> = (0..c).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    let means = (0..c * d).map(|_| rng.gen_range(-3.0..3.0)).collect();
    let vars = (0..c * d).map(|_| rng.gen_range(0.3..2.5)).collect();
    DiagGmm::new(weights, means, vars, d)
}

fn random_features(rng: &mut ChaCha8Rng, dim: usize, frames: usize) -> FeatureMatrix {
    let data = (0..frames * dim).map(|_| rng.gen_range(-4.0..4.0)).collect();
    FeatureMatrix::from_data("utt", dim, data)
}

fn random_scores(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let s: f64 = rng.gen_range(-3.0..3.0);
            // Snap half the draws to a coarse grid so ties and repeated
            // thresholds are exercised, not just generic positions.
            if rng.gen_bool(0.5) {
                (s * 4.0).round() / 4.0
            } else {
                s
            }
        })
        .collect()
}

/// Symmetric positive definite matrix R·Rᵀ + ridge·I.
fn random_spd(rng: &mut ChaCha8Rng, k: usize, ridge: f64) -> Mat {
    let r = Mat::from_vec(
        k,
        k,
        (0..k * k).map(|_| rng.gen_range(-1.0..1.0)).collect(),
    );
    let mut a = r.matmul(&r.transpose());
    for i in 0..k {
        a[(i, i)] += ridge;
    }
    a
}

fn mat_to_rows(m: &Mat) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

#[test]
fn gmm_log_likelihood_matches_dense_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for _ in 0..INSTANCES {
        let gmm = random_gmm(&mut rng);
        let frames = rng.gen_range(1..=30);
        let dim = gmm.dim();
        let feat = random_features(&mut rng, dim, frames);
        let got = gmm_log_likelihood(&gmm, &feat).unwrap();

        let means: Vec<Vec<f64>> = (0..gmm.num_components())
            .map(|c| gmm.mean(c).to_vec())
            .collect();
        let vars: Vec<Vec<f64>> = (0..gmm.num_components())
            .map(|c| gmm.var(c).to_vec())
            .collect();
        let total: f64 = (0..frames)
            .map(|t| oracle::naive_gmm_loglik(gmm.weights(), &means, &vars, feat.row(t)))
            .sum();
        let want = total / frames as f64;
        assert!(
            (got - want).abs() < 1e-9,
            "loglik mismatch: {got} vs {want}"
        );
    }
}

#[test]
fn ivector_extraction_matches_dense_solve() {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    for _ in 0..INSTANCES {
        let ubm = random_gmm(&mut rng);
        let (c, d) = (ubm.num_components(), ubm.dim());
        let rank = rng.gen_range(1..=(c * d).min(6));
        let t = Mat::from_vec(
            c * d,
            rank,
            (0..c * d * rank).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        );
        let model = TotalVariabilityModel::new(t.clone(), &ubm);

        // Random occupancy with some exact zeros (pruned components).
        let n: Vec<f64> = (0..c)
            .map(|_| {
                if rng.gen_bool(0.2) {
                    0.0
                } else {
                    rng.gen_range(0.1..20.0)
                }
            })
            .collect();
        let f: Vec<f64> = (0..c * d).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let stats = BaumWelchStats {
            id: "utt".into(),
            n: n.clone(),
            f: f.clone(),
            dim: d,
        };

        let got = extract_ivector(&model, &stats).unwrap();
        let want = oracle::naive_ivector(
            &mat_to_rows(&t),
            ubm.means_flat(),
            ubm.vars_flat(),
            &n,
            &f,
            c,
            d,
        )
        .unwrap();
        for (g, w) in got.w.iter().zip(&want) {
            assert!((g - w).abs() < 1e-9, "ivector mismatch: {g} vs {w}");
        }
    }
}

#[test]
fn plda_score_matches_joint_gaussian_density() {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    for _ in 0..INSTANCES {
        let k = rng.gen_range(1..=4);
        let sigma_w = random_spd(&mut rng, k, 0.5);
        // Between-class covariance may be singular; the score must still
        // match the density ratio.
        let mut sigma_b = random_spd(&mut rng, k, 0.0);
        if rng.gen_bool(0.15) {
            sigma_b = Mat::zeros(k, k);
        }
        let mu: Vec<f64> = (0..k).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let model = PldaModel {
            mu: mu.clone(),
            sigma_b: sigma_b.clone(),
            sigma_w: sigma_w.clone(),
        };
        let u: Vec<f64> = (0..k).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let v: Vec<f64> = (0..k).map(|_| rng.gen_range(-3.0..3.0)).collect();

        let got = plda_score(&model, &u, &v).unwrap();
        let want = oracle::naive_plda_llr(
            &mu,
            &mat_to_rows(&sigma_b),
            &mat_to_rows(&sigma_w),
            &u,
            &v,
        )
        .unwrap();
        assert!((got - want).abs() < 1e-9, "plda mismatch: {got} vs {want}");
    }
}

#[test]
fn eer_matches_threshold_sweep() {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    for _ in 0..INSTANCES {
        let n_gen = rng.gen_range(1..=40);
        let n_imp = rng.gen_range(1..=40);
        let genuine = random_scores(&mut rng, n_gen);
        let impostor = random_scores(&mut rng, n_imp);
        let (eer, _) = compute_eer(&genuine, &impostor).unwrap();
        let (want, _) = oracle::naive_eer(&genuine, &impostor);
        assert!((eer - want).abs() < 1e-9, "eer mismatch: {eer} vs {want}");
    }
}

#[test]
fn min_dcf_matches_threshold_sweep() {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let params = DcfParams::default();
    for _ in 0..INSTANCES {
        let n_gen = rng.gen_range(1..=40);
        let n_imp = rng.gen_range(1..=40);
        let genuine = random_scores(&mut rng, n_gen);
        let impostor = random_scores(&mut rng, n_imp);
        let got = compute_min_dcf(&genuine, &impostor, &params).unwrap();
        let want = oracle::naive_min_dcf(&genuine, &impostor, 10.0, 1.0, 0.01);
        assert!((got - want).abs() < 1e-9, "dcf mismatch: {got} vs {want}");
    }
}

#[test]
fn baum_welch_occupancy_sums_to_frame_count() {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    for _ in 0..INSTANCES {
        let gmm = random_gmm(&mut rng);
        let frames = rng.gen_range(1..=30);
        let dim = gmm.dim();
        let feat = random_features(&mut rng, dim, frames);
        let stats = accumulate_bw_stats(&gmm, &feat).unwrap();
        let total: f64 = stats.n.iter().sum();
        assert!((total - frames as f64).abs() < 1e-9 * frames as f64 + 1e-12);
        assert!(stats.n.iter().all(|&x| x >= 0.0));
    }
}

#[test]
fn cholesky_agrees_with_gauss_jordan() {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    for _ in 0..INSTANCES {
        let k = rng.gen_range(1..=6);
        let a = random_spd(&mut rng, k, 0.4);
        let rows = mat_to_rows(&a);
        let b: Vec<f64> = (0..k).map(|_| rng.gen_range(-2.0..2.0)).collect();

        let chol = Cholesky::new(&a).unwrap();
        let x = chol.solve(&b);
        let want_x = oracle::gauss_solve(&rows, &b).unwrap();
        for (g, w) in x.iter().zip(&want_x) {
            assert!((g - w).abs() < 1e-9);
        }

        let inv = chol.inverse();
        let want_inv = oracle::gauss_inverse(&rows).unwrap();
        for i in 0..k {
            for j in 0..k {
                assert!((inv[(i, j)] - want_inv[i][j]).abs() < 1e-9);
            }
        }

        let want_logdet = oracle::naive_logdet(&rows).unwrap();
        assert!((chol.log_det() - want_logdet).abs() < 1e-9);
    }
}

#[test]
fn eigendecomposition_reconstructs_input() {
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    for _ in 0..INSTANCES {
        let k = rng.gen_range(1..=6);
        let a = random_spd(&mut rng, k, 0.1);
        let (eigs, vecs) = sym_eigen(&a).unwrap();
        // V diag(λ) Vᵀ = A and VᵀV = I.
        let recon = vecs
            .matmul(&Mat::from_diag(&eigs))
            .matmul(&vecs.transpose());
        assert!(recon.max_abs_diff(&a) < 1e-8);
        let gram = vecs.transpose().matmul(&vecs);
        assert!(gram.max_abs_diff(&Mat::identity(k)) < 1e-8);
        // Descending order.
        for w in eigs.windows(2) {
            assert!(w[0] >= w[1] - 1e-12);
        }
    }
}
