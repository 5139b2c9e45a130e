//! Property-based invariants: algebraic identities that must hold for all
//! inputs, checked over randomized cases by proptest.

use proptest::collection::vec as pvec;
use proptest::prelude::*;

use tdsv_core::eval::{compute_eer, fuse_scores, ScoreSet, Trial, TrialList, TrialType};
use tdsv_core::frontend::{append_deltas, cmvn};
use tdsv_core::gmm::{accumulate_bw_stats, DiagGmm};
use tdsv_core::ivector::{enroll_average, extract_ivector, IVector, TotalVariabilityModel};
use tdsv_core::linalg::Mat;
use tdsv_core::math::log_sum_exp;
use tdsv_core::plda::{apply_spherical_norm, plda_score, train_spherical_norm, PldaModel};
use tdsv_core::tcl::{stcl_labels, utcl_sequence, TclConfig};
use tdsv_core::types::FeatureMatrix;

fn feat(dim: usize, data: Vec<f64>) -> FeatureMatrix {
    FeatureMatrix::from_data("utt", dim, data)
}

/// Strategy: a feature matrix with min_frames..=20 frames of the given
/// dimension.
fn feat_strategy_from(dim: usize, min_frames: usize) -> impl Strategy<Value = FeatureMatrix> {
    (min_frames..=20)
        .prop_flat_map(move |frames| pvec(-5.0..5.0f64, frames * dim))
        .prop_map(move |data| feat(dim, data))
}

fn feat_strategy(dim: usize) -> impl Strategy<Value = FeatureMatrix> {
    feat_strategy_from(dim, 1)
}

/// Population variance of dimension d.
fn dim_variance(a: &FeatureMatrix, d: usize) -> f64 {
    let t = a.num_frames() as f64;
    let mean: f64 = (0..a.num_frames()).map(|r| a.row(r)[d]).sum::<f64>() / t;
    (0..a.num_frames())
        .map(|r| {
            let c = a.row(r)[d] - mean;
            c * c
        })
        .sum::<f64>()
        / t
}

fn max_abs_diff(a: &FeatureMatrix, b: &FeatureMatrix) -> f64 {
    a.data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Delta appending is linear: deltas of a sum are the sum of deltas.
    #[test]
    fn deltas_are_linear(
        a in feat_strategy(3),
        scale in 0.1..4.0f64,
    ) {
        let frames = a.num_frames();
        let scaled_data: Vec<f64> = a.data().iter().map(|x| x * scale).collect();
        let scaled = feat(3, scaled_data);

        let da = append_deltas(&a, 2);
        let dscaled = append_deltas(&scaled, 2);
        for r in 0..frames {
            for (x, y) in da.row(r).iter().zip(dscaled.row(r)) {
                prop_assert!((x * scale - y).abs() < 1e-9 * (1.0 + x.abs() * scale));
            }
        }
    }

    /// CMVN output has zero mean and unit variance per dimension, and a
    /// second application changes nothing.
    #[test]
    fn cmvn_is_idempotent(a in feat_strategy_from(4, 2)) {
        // Need at least 2 frames with spread for variance normalization to
        // bite; single-frame input only centers.
        let n = cmvn(&a).unwrap();
        let nn = cmvn(&n).unwrap();
        prop_assert!(max_abs_diff(&n, &nn) < 1e-9);
        for d in 0..4 {
            let mean: f64 = (0..n.num_frames()).map(|r| n.row(r)[d]).sum::<f64>()
                / n.num_frames() as f64;
            prop_assert!(mean.abs() < 1e-9);
        }
    }

    /// CMVN is invariant to per-recording affine distortion x → αx + β.
    #[test]
    fn cmvn_ignores_affine_distortion(
        a in feat_strategy_from(2, 2),
        alpha in 0.2..5.0f64,
        beta in -3.0..3.0f64,
    ) {
        // Keep every dimension clear of the variance floor on both sides
        // of the distortion; the floor is a deliberate nonlinearity.
        prop_assume!((0..2).all(|d| dim_variance(&a, d) > 1e-4));
        let distorted_data: Vec<f64> = a.data().iter().map(|x| alpha * x + beta).collect();
        let distorted = feat(2, distorted_data);
        let na = cmvn(&a).unwrap();
        let nd = cmvn(&distorted).unwrap();
        prop_assert!(max_abs_diff(&na, &nd) < 1e-7);
    }

    /// Baum–Welch statistics add over utterance concatenation and do not
    /// depend on frame order.
    #[test]
    fn bw_stats_are_additive_and_order_free(
        a in feat_strategy(2),
        b in feat_strategy(2),
    ) {
        let gmm = DiagGmm::new(
            vec![0.6, 0.4],
            vec![-1.0, 0.0, 1.0, 0.5],
            vec![1.0, 0.8, 1.2, 1.0],
            2,
        );
        let sa = accumulate_bw_stats(&gmm, &a).unwrap();
        let sb = accumulate_bw_stats(&gmm, &b).unwrap();

        let mut joined_data = a.data().to_vec();
        joined_data.extend_from_slice(b.data());
        let joined = feat(2, joined_data);
        let sj = accumulate_bw_stats(&gmm, &joined).unwrap();

        let mut merged = sa.clone();
        merged.merge(&sb);
        for (x, y) in merged.n.iter().zip(&sj.n) {
            prop_assert!((x - y).abs() < 1e-9);
        }
        for (x, y) in merged.f.iter().zip(&sj.f) {
            prop_assert!((x - y).abs() < 1e-9);
        }

        // Reversed frame order gives identical statistics up to summation
        // round-off.
        let mut rev_rows: Vec<&[f64]> = (0..a.num_frames()).map(|r| a.row(r)).collect();
        rev_rows.reverse();
        let rev_data: Vec<f64> = rev_rows.concat();
        let sr = accumulate_bw_stats(&gmm, &feat(2, rev_data)).unwrap();
        for (x, y) in sr.n.iter().zip(&sa.n) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }

    /// The i-vector is linear in the centered first-order statistics.
    #[test]
    fn ivector_linear_in_centered_stats(
        tvals in pvec(-1.0..1.0f64, 4 * 3),
        resid in pvec(-5.0..5.0f64, 4),
        occ in pvec(0.5..10.0f64, 2),
        scale in 0.25..4.0f64,
    ) {
        let ubm = DiagGmm::new(
            vec![0.5, 0.5],
            vec![0.5, -0.5, -1.0, 1.0],
            vec![1.0, 0.7, 1.3, 1.0],
            2,
        );
        let t = Mat::from_vec(4, 3, tvals);
        let model = TotalVariabilityModel::new(t, &ubm);

        // f = n⊗μ + f̃ makes the centered statistics exactly f̃.
        let build = |s: f64| {
            let f: Vec<f64> = (0..4)
                .map(|i| occ[i / 2] * ubm.means_flat()[i] + s * resid[i])
                .collect();
            tdsv_core::gmm::BaumWelchStats { id: "u".into(), n: occ.clone(), f, dim: 2 }
        };
        let w1 = extract_ivector(&model, &build(1.0)).unwrap();
        let w2 = extract_ivector(&model, &build(scale)).unwrap();
        for (x, y) in w1.w.iter().zip(&w2.w) {
            prop_assert!((x * scale - y).abs() < 1e-8 * (1.0 + x.abs() * scale));
        }
    }

    /// PLDA scoring is symmetric in its two arguments.
    #[test]
    fn plda_score_is_symmetric(
        u in pvec(-3.0..3.0f64, 3),
        v in pvec(-3.0..3.0f64, 3),
        diag_b in pvec(0.0..2.0f64, 3),
        diag_w in pvec(0.5..2.0f64, 3),
    ) {
        let model = PldaModel {
            mu: vec![0.1, -0.2, 0.3],
            sigma_b: Mat::from_diag(&diag_b),
            sigma_w: Mat::from_diag(&diag_w),
        };
        let s1 = plda_score(&model, &u, &v).unwrap();
        let s2 = plda_score(&model, &v, &u).unwrap();
        prop_assert!((s1 - s2).abs() < 1e-10 * (1.0 + s1.abs()));
    }

    /// EER depends only on score ranks: strictly increasing transforms
    /// leave it unchanged.
    #[test]
    fn eer_invariant_under_monotone_transform(
        genuine in pvec(-4.0..4.0f64, 1..30),
        impostor in pvec(-4.0..4.0f64, 1..30),
        a in 0.1..5.0f64,
        b in -2.0..2.0f64,
    ) {
        let (eer, _) = compute_eer(&genuine, &impostor).unwrap();

        let tg: Vec<f64> = genuine.iter().map(|x| a * x + b).collect();
        let ti: Vec<f64> = impostor.iter().map(|x| a * x + b).collect();
        let (eer_affine, _) = compute_eer(&tg, &ti).unwrap();
        prop_assert!((eer - eer_affine).abs() < 1e-9);

        let eg: Vec<f64> = genuine.iter().map(|x| x.exp()).collect();
        let ei: Vec<f64> = impostor.iter().map(|x| x.exp()).collect();
        let (eer_exp, _) = compute_eer(&eg, &ei).unwrap();
        prop_assert!((eer - eer_exp).abs() < 1e-9);
    }

    /// Fusing a system with itself under equal weights reproduces it.
    #[test]
    fn self_fusion_is_identity(scores in pvec(-5.0..5.0f64, 4..40)) {
        let n = scores.len();
        let trials: Vec<Trial> = (0..n)
            .map(|i| Trial {
                model: format!("m{i}"),
                utterance: format!("u{i}"),
                trial_type: TrialType::Genuine,
            })
            .collect();
        let list = TrialList::new(trials).unwrap();
        let set = ScoreSet::new(list.clone(), scores.clone()).unwrap();
        let set2 = ScoreSet::new(list, scores.clone()).unwrap();
        let fused = fuse_scores(&[set, set2], None).unwrap();
        // Bit-exact: 0.5s + 0.5s rounds to s for every normal double.
        prop_assert_eq!(fused.scores(), scores.as_slice());
    }

    /// Spherical normalization maps its own training vectors to unit norm.
    #[test]
    fn spherical_norm_unit_length_on_training_set(
        flat in pvec(-3.0..3.0f64, 5 * 4),
    ) {
        let vectors: Vec<Vec<f64>> = flat.chunks(4).map(|c| c.to_vec()).collect();
        // Degenerate clouds (all points equal) are rejected upstream; skip.
        let spread = vectors.iter().any(|v| v != &vectors[0]);
        prop_assume!(spread);
        let norm = match train_spherical_norm(&vectors, 2) {
            Ok(n) => n,
            // Rank-deficient clouds are a legal rejection, not a failure.
            Err(_) => return Ok(()),
        };
        for v in &vectors {
            let out = apply_spherical_norm(&norm, v).unwrap();
            let len: f64 = out.iter().map(|x| x * x).sum::<f64>().sqrt();
            prop_assert!((len - 1.0).abs() < 1e-9);
        }
    }

    /// Enrollment averaging of identical vectors is the identity.
    #[test]
    fn enroll_average_of_copies_is_identity(w in pvec(-2.0..2.0f64, 6)) {
        let copies: Vec<IVector> = (0..3)
            .map(|i| IVector { id: format!("c{i}"), w: w.clone() })
            .collect();
        let avg = enroll_average(&copies, "model").unwrap();
        for (x, y) in avg.w.iter().zip(&w) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    /// log-sum-exp: shift rule and lower bound by the maximum.
    #[test]
    fn log_sum_exp_shift_and_bound(
        xs in pvec(-50.0..50.0f64, 1..12),
        c in -20.0..20.0f64,
    ) {
        let lse = log_sum_exp(&xs);
        let shifted: Vec<f64> = xs.iter().map(|x| x + c).collect();
        prop_assert!((log_sum_exp(&shifted) - (lse + c)).abs() < 1e-9);
        let max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(lse >= max - 1e-12);
    }

    /// uTCL labels are monotone with balanced segments; sTCL labels repeat
    /// with period chunk·classes along the concatenated stream.
    #[test]
    fn tcl_label_structure(frames in 1usize..500, classes in 2usize..12) {
        let labels = utcl_sequence(frames, classes);
        prop_assert_eq!(labels.len(), frames);
        // Monotone non-decreasing.
        for w in labels.windows(2) {
            prop_assert!(w[0] <= w[1]);
        }
        // Segment sizes spread at most one.
        let mut hist = vec![0usize; classes];
        for &l in &labels {
            hist[l] += 1;
        }
        let used: Vec<usize> = hist.iter().copied().filter(|&h| h > 0).collect();
        let min = used.iter().min().unwrap();
        let max = used.iter().max().unwrap();
        prop_assert!(max - min <= 1);

        // sTCL: flatten one long utterance and check the periodic pattern.
        let cfg = TclConfig { classes, chunk: 6, drop_partial: false };
        let (set, dropped) = stcl_labels(&[("s".to_string(), frames)], &cfg).unwrap();
        prop_assert_eq!(dropped, 0);
        let stream = set.get("s").unwrap();
        for (g, &l) in stream.iter().enumerate() {
            prop_assert_eq!(l, (g / 6) % classes);
            if g >= 6 * classes {
                prop_assert_eq!(l, stream[g - 6 * classes]);
            }
        }
    }
}
