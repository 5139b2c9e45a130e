//! Slow, obviously-correct reference implementations used as oracles in
//! tests. Everything here works on plain slices and nested vectors, shares
//! no code with the library under test, and favors directness over speed.

// Index arithmetic is the point here; iterator rewrites would hide it.
#![allow(clippy::needless_range_loop)]

/// Solves a·x = b by Gauss–Jordan elimination with partial pivoting.
/// Returns None when a pivot collapses (singular system).
pub fn gauss_solve(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut aug: Vec<Vec<f64>> = a
        .iter()
        .zip(b)
        .map(|(row, &bi)| {
            let mut r = row.clone();
            r.push(bi);
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| {
            aug[i][col].abs().partial_cmp(&aug[j][col].abs()).unwrap()
        })?;
        if aug[pivot][col].abs() < 1e-300 {
            return None;
        }
        aug.swap(col, pivot);
        let p = aug[col][col];
        for x in aug[col].iter_mut() {
            *x /= p;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let factor = aug[row][col];
            if factor == 0.0 {
                continue;
            }
            for k in col..=n {
                aug[row][k] -= factor * aug[col][k];
            }
        }
    }
    Some(aug.iter().map(|row| row[n]).collect())
}

/// Inverse by solving against each unit vector.
pub fn gauss_inverse(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut cols = Vec::with_capacity(n);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        cols.push(gauss_solve(a, &e)?);
    }
    // cols[j] is the j-th column of the inverse; transpose into rows.
    Some((0..n).map(|i| (0..n).map(|j| cols[j][i]).collect()).collect())
}

/// log|a| for a positive-definite matrix via plain LU elimination:
/// the product of the pivots. None when a pivot is not strictly positive.
pub fn naive_logdet(a: &[Vec<f64>]) -> Option<f64> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut logdet = 0.0;
    for col in 0..n {
        let p = m[col][col];
        if p <= 0.0 {
            return None;
        }
        logdet += p.ln();
        for row in col + 1..n {
            let factor = m[row][col] / p;
            for k in col..n {
                m[row][k] -= factor * m[col][k];
            }
        }
    }
    Some(logdet)
}

/// Log-density of one frame under a diagonal-covariance mixture, computed
/// the schoolbook way: sum the weighted component densities in linear
/// space, then take the log.
pub fn naive_gmm_loglik(weights: &[f64], means: &[Vec<f64>], vars: &[Vec<f64>], x: &[f64]) -> f64 {
    let mut total = 0.0;
    for ((w, mu), var) in weights.iter().zip(means).zip(vars) {
        let mut density = 1.0;
        for ((xi, mi), vi) in x.iter().zip(mu).zip(var) {
            let d = xi - mi;
            density *= (-d * d / (2.0 * vi)).exp() / (2.0 * std::f64::consts::PI * vi).sqrt();
        }
        total += w * density;
    }
    total.ln()
}

fn distinct_sorted(genuine: &[f64], impostor: &[f64]) -> Vec<f64> {
    let mut all: Vec<f64> = genuine.iter().chain(impostor).copied().collect();
    all.sort_by(|a, b| a.partial_cmp(b).unwrap());
    all.dedup();
    all
}

/// False-accept and false-reject rates at a threshold under the ≥ rule:
/// a score equal to the threshold counts as an accept.
fn rates_at(genuine: &[f64], impostor: &[f64], theta: f64) -> (f64, f64) {
    let fa = impostor.iter().filter(|&&s| s >= theta).count() as f64 / impostor.len() as f64;
    let fr = genuine.iter().filter(|&&s| s < theta).count() as f64 / genuine.len() as f64;
    (fa, fr)
}

/// EER by exhaustive threshold sweep: walk every distinct score in
/// ascending order, find where FAR − FRR crosses zero, and interpolate
/// linearly between the bracketing (FAR, FRR) pairs. Returns (eer, theta).
pub fn naive_eer(genuine: &[f64], impostor: &[f64]) -> (f64, f64) {
    let thresholds = distinct_sorted(genuine, impostor);
    let mut prev: Option<(f64, f64, f64)> = None;
    for &theta in &thresholds {
        let (fa, fr) = rates_at(genuine, impostor, theta);
        let d = fa - fr;
        if d == 0.0 {
            return (fa, theta);
        }
        if let Some((pt, pfa, pd)) = prev {
            if pd > 0.0 && d < 0.0 {
                let alpha = pd / (pd - d);
                return (pfa + alpha * (fa - pfa), pt + alpha * (theta - pt));
            }
        }
        prev = Some((theta, fa, d));
    }
    // Crossing sits between the last real threshold (accept side) and the
    // reject-everything endpoint (FAR 0, FRR 1).
    let (pt, pfa, pd) = prev.expect("score lists checked non-empty by caller");
    let d_end = -1.0;
    let alpha = pd / (pd - d_end);
    (pfa + alpha * (0.0 - pfa), pt)
}

/// Normalized minimum detection cost by exhaustive sweep over every
/// distinct score plus the reject-everything endpoint.
pub fn naive_min_dcf(
    genuine: &[f64],
    impostor: &[f64],
    c_miss: f64,
    c_fa: f64,
    p_target: f64,
) -> f64 {
    let normalizer = (c_miss * p_target).min(c_fa * (1.0 - p_target));
    let mut best = f64::INFINITY;
    let mut consider = |fa: f64, fr: f64| {
        let cost = c_miss * fr * p_target + c_fa * fa * (1.0 - p_target);
        if cost < best {
            best = cost;
        }
    };
    for &theta in &distinct_sorted(genuine, impostor) {
        let (fa, fr) = rates_at(genuine, impostor, theta);
        consider(fa, fr);
    }
    consider(0.0, 1.0);
    best / normalizer
}

/// Central finite difference (f(x+h) − f(x−h)) / 2h.
pub fn central_diff(mut f: impl FnMut(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// i-vector by assembling the posterior precision and projection densely
/// and solving with Gauss–Jordan:
///   w = (I + Σ_c n_c T_cᵀ Σ_c⁻¹ T_c)⁻¹ · Σ_c T_cᵀ Σ_c⁻¹ (f_c − n_c μ_c)
/// `t` is (C·D)×R as nested rows; means/vars/f are flat C·D; n has length C.
pub fn naive_ivector(
    t: &[Vec<f64>],
    ubm_means: &[f64],
    ubm_vars: &[f64],
    n: &[f64],
    f: &[f64],
    num_components: usize,
    dim: usize,
) -> Option<Vec<f64>> {
    let rank = t[0].len();
    let mut l = vec![vec![0.0; rank]; rank];
    for r in 0..rank {
        l[r][r] = 1.0;
    }
    let mut g = vec![0.0; rank];
    for row in 0..num_components * dim {
        let comp = row / dim;
        let precision = 1.0 / ubm_vars[row];
        let centered = f[row] - n[comp] * ubm_means[row];
        for r1 in 0..rank {
            g[r1] += t[row][r1] * precision * centered;
            for r2 in 0..rank {
                l[r1][r2] += n[comp] * precision * t[row][r1] * t[row][r2];
            }
        }
    }
    gauss_solve(&l, &g)
}

/// Log-density of a full-covariance Gaussian, each term computed with the
/// dense helpers above.
pub fn naive_gaussian_logpdf(x: &[f64], mean: &[f64], cov: &[Vec<f64>]) -> Option<f64> {
    let k = x.len();
    let centered: Vec<f64> = x.iter().zip(mean).map(|(xi, mi)| xi - mi).collect();
    let solved = gauss_solve(cov, &centered)?;
    let quad: f64 = centered.iter().zip(&solved).map(|(c, s)| c * s).sum();
    let logdet = naive_logdet(cov)?;
    Some(-0.5 * (k as f64 * (2.0 * std::f64::consts::PI).ln() + logdet + quad))
}

/// Two-covariance PLDA log-likelihood ratio straight from its definition:
/// the density of the stacked pair under the same-class joint Gaussian
/// [[Σ_b+Σ_w, Σ_b], [Σ_b, Σ_b+Σ_w]] over the product of the marginals.
pub fn naive_plda_llr(
    mu: &[f64],
    sigma_b: &[Vec<f64>],
    sigma_w: &[Vec<f64>],
    enroll: &[f64],
    test: &[f64],
) -> Option<f64> {
    let k = mu.len();
    let mut a = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in 0..k {
            a[i][j] = sigma_b[i][j] + sigma_w[i][j];
        }
    }
    let mut joint = vec![vec![0.0; 2 * k]; 2 * k];
    for i in 0..k {
        for j in 0..k {
            joint[i][j] = a[i][j];
            joint[k + i][k + j] = a[i][j];
            joint[i][k + j] = sigma_b[i][j];
            joint[k + i][j] = sigma_b[i][j];
        }
    }
    let stacked: Vec<f64> = enroll.iter().chain(test).copied().collect();
    let stacked_mean: Vec<f64> = mu.iter().chain(mu).copied().collect();
    let same = naive_gaussian_logpdf(&stacked, &stacked_mean, &joint)?;
    let marg_e = naive_gaussian_logpdf(enroll, mu, &a)?;
    let marg_t = naive_gaussian_logpdf(test, mu, &a)?;
    Some(same - marg_e - marg_t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_solves_known_system() {
        // 2x + y = 5, x + 3y = 10 → x = 1, y = 3.
        let a = vec![vec![2.0, 1.0], vec![1.0, 3.0]];
        let x = gauss_solve(&a, &[5.0, 10.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12);
        assert!((x[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn singular_system_is_none() {
        let a = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        assert!(gauss_solve(&a, &[1.0, 2.0]).is_none());
    }

    #[test]
    fn logdet_of_diagonal() {
        let a = vec![vec![2.0, 0.0], vec![0.0, 8.0]];
        assert!((naive_logdet(&a).unwrap() - 16f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn perfect_separation_eer_zero() {
        let (eer, theta) = naive_eer(&[2.0, 3.0], &[0.0, 1.0]);
        assert_eq!(eer, 0.0);
        assert_eq!(theta, 2.0);
    }

    #[test]
    fn chance_eer_half() {
        let (eer, _) = naive_eer(&[1.0, 2.0], &[1.0, 2.0]);
        assert!((eer - 0.5).abs() < 1e-12);
    }

    #[test]
    fn single_gaussian_loglik() {
        // Standard normal at the origin in 2-D: density (2π)^{-1}.
        let ll = naive_gmm_loglik(
            &[1.0],
            &[vec![0.0, 0.0]],
            &[vec![1.0, 1.0]],
            &[0.0, 0.0],
        );
        assert!((ll + (2.0 * std::f64::consts::PI).ln()).abs() < 1e-12);
    }

    #[test]
    fn full_cov_logpdf_matches_diagonal_formula() {
        // With a diagonal covariance the dense path must agree with the
        // product of univariate normals.
        let cov = vec![vec![2.0, 0.0], vec![0.0, 0.5]];
        let got = naive_gaussian_logpdf(&[1.0, -1.0], &[0.5, 0.5], &cov).unwrap();
        let want = naive_gmm_loglik(&[1.0], &[vec![0.5, 0.5]], &[vec![2.0, 0.5]], &[1.0, -1.0]);
        assert!((got - want).abs() < 1e-12);
    }

    #[test]
    fn naive_ivector_identity_case() {
        // One component, Σ = I, T = I₂ (rank 2): w = (I + nI)⁻¹ f̃.
        let t = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let w = naive_ivector(&t, &[0.0, 0.0], &[1.0, 1.0], &[3.0], &[6.0, -3.0], 1, 2).unwrap();
        assert!((w[0] - 1.5).abs() < 1e-12);
        assert!((w[1] + 0.75).abs() < 1e-12);
    }

    #[test]
    fn plda_llr_zero_when_no_between_class_variance() {
        // Σ_b = 0 makes same-class and different-class hypotheses identical.
        let zb = vec![vec![0.0, 0.0], vec![0.0, 0.0]];
        let w = vec![vec![1.0, 0.2], vec![0.2, 2.0]];
        let llr = naive_plda_llr(&[0.0, 0.0], &zb, &w, &[1.0, 2.0], &[-1.0, 0.5]).unwrap();
        assert!(llr.abs() < 1e-10);
    }
}
