//! Trial lists, detection-error metrics (EER and SRE08 MinDCF), DET points,
//! and the two fusion strategies: equal-weight score fusion and embedding
//! concatenation.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::ivector::IVector;

/// The four-way trial taxonomy. Genuine trials are targets; the three
/// non-target types differ in whether speaker and phrase match the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum TrialType {
    /// Right speaker, right phrase.
    Genuine,
    /// Right speaker, wrong phrase.
    TargetWrong,
    /// Wrong speaker, right phrase.
    ImpostorCorrect,
    /// Wrong speaker, wrong phrase.
    ImpostorWrong,
}

impl TrialType {
    pub const ALL: [TrialType; 4] = [
        TrialType::Genuine,
        TrialType::TargetWrong,
        TrialType::ImpostorCorrect,
        TrialType::ImpostorWrong,
    ];
    pub const NON_TARGET: [TrialType; 3] = [
        TrialType::TargetWrong,
        TrialType::ImpostorCorrect,
        TrialType::ImpostorWrong,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            TrialType::Genuine => "genuine",
            TrialType::TargetWrong => "target-wrong",
            TrialType::ImpostorCorrect => "impostor-correct",
            TrialType::ImpostorWrong => "impostor-wrong",
        }
    }

    pub fn parse(token: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.as_str() == token)
    }

    fn index(&self) -> usize {
        match self {
            TrialType::Genuine => 0,
            TrialType::TargetWrong => 1,
            TrialType::ImpostorCorrect => 2,
            TrialType::ImpostorWrong => 3,
        }
    }
}

impl core::fmt::Display for TrialType {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trial {
    pub model: String,
    pub utterance: String,
    pub trial_type: TrialType,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("empty {which} score list")]
    EmptyList { which: &'static str },
    #[error("non-finite score encountered")]
    NonFiniteScore,
    #[error("duplicate trial ({model}, {utterance}, {trial_type})")]
    DuplicateTrial {
        model: String,
        utterance: String,
        trial_type: TrialType,
    },
    #[error("{scores} scores for {trials} trials")]
    ScoreCountMismatch { trials: usize, scores: usize },
    #[error("score sets cover different trial lists")]
    TrialMismatch,
    #[error("{got} weights for {systems} systems")]
    WeightCountMismatch { systems: usize, got: usize },
    #[error("embedding ids {a:?} and {b:?} differ")]
    IdMismatch { a: String, b: String },
    #[error("bad parameter: {reason}")]
    BadParam { reason: String },
}

/// A validated list of trials: no duplicate (model, utterance, type) triple.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrialList {
    trials: Vec<Trial>,
}

impl TrialList {
    pub fn new(trials: Vec<Trial>) -> Result<Self, EvalError> {
        let mut seen = BTreeSet::new();
        for t in &trials {
            if !seen.insert((t.model.as_str(), t.utterance.as_str(), t.trial_type.index())) {
                return Err(EvalError::DuplicateTrial {
                    model: t.model.clone(),
                    utterance: t.utterance.clone(),
                    trial_type: t.trial_type,
                });
            }
        }
        Ok(Self { trials })
    }

    pub fn trials(&self) -> &[Trial] {
        &self.trials
    }

    pub fn len(&self) -> usize {
        self.trials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trials.is_empty()
    }

    /// Trial counts in [genuine, target-wrong, impostor-correct,
    /// impostor-wrong] order.
    pub fn counts(&self) -> [usize; 4] {
        let mut c = [0usize; 4];
        for t in &self.trials {
            c[t.trial_type.index()] += 1;
        }
        c
    }
}

/// Trials with one finite score each, aligned by position.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreSet {
    trials: TrialList,
    scores: Vec<f64>,
}

impl ScoreSet {
    pub fn new(trials: TrialList, scores: Vec<f64>) -> Result<Self, EvalError> {
        if trials.len() != scores.len() {
            return Err(EvalError::ScoreCountMismatch {
                trials: trials.len(),
                scores: scores.len(),
            });
        }
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(EvalError::NonFiniteScore);
        }
        Ok(Self { trials, scores })
    }

    pub fn trials(&self) -> &TrialList {
        &self.trials
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Trial, f64)> {
        self.trials.trials().iter().zip(self.scores.iter().copied())
    }

    pub fn scores_of_type(&self, ty: TrialType) -> Vec<f64> {
        self.iter()
            .filter(|(t, _)| t.trial_type == ty)
            .map(|(_, s)| s)
            .collect()
    }
}

/// One operating point of the detection-error tradeoff. The final sweep
/// point is the reject-everything endpoint with an infinite threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub threshold: f64,
    pub p_fa: f64,
    pub p_miss: f64,
}

/// Operating points at every distinct score (ascending) plus the
/// reject-everything endpoint. A trial is accepted iff score ≥ threshold,
/// so the first point accepts everything.
pub fn det_points(genuine: &[f64], impostor: &[f64]) -> Result<Vec<SweepPoint>, EvalError> {
    if genuine.is_empty() {
        return Err(EvalError::EmptyList { which: "genuine" });
    }
    if impostor.is_empty() {
        return Err(EvalError::EmptyList { which: "impostor" });
    }
    if genuine.iter().chain(impostor).any(|s| !s.is_finite()) {
        return Err(EvalError::NonFiniteScore);
    }
    let mut gen_sorted = genuine.to_vec();
    gen_sorted.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let mut imp_sorted = impostor.to_vec();
    imp_sorted.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let mut thresholds: Vec<f64> = gen_sorted.iter().chain(&imp_sorted).copied().collect();
    thresholds.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    thresholds.dedup();

    let n_gen = gen_sorted.len() as f64;
    let n_imp = imp_sorted.len() as f64;
    let mut points = Vec::with_capacity(thresholds.len() + 1);
    for &theta in &thresholds {
        // partition_point gives the count of scores strictly below theta.
        let gen_below = gen_sorted.partition_point(|&s| s < theta);
        let imp_below = imp_sorted.partition_point(|&s| s < theta);
        points.push(SweepPoint {
            threshold: theta,
            p_fa: (imp_sorted.len() - imp_below) as f64 / n_imp,
            p_miss: gen_below as f64 / n_gen,
        });
    }
    points.push(SweepPoint {
        threshold: f64::INFINITY,
        p_fa: 0.0,
        p_miss: 1.0,
    });
    Ok(points)
}

/// EER and its threshold. The sweep walks every distinct score; where
/// FAR − FRR changes sign, the rate pair is interpolated linearly between
/// the bracketing sweep points. Because the rates at each sweep point
/// depend only on score ranks, the EER is invariant under any strictly
/// increasing transform of the scores.
pub fn compute_eer(genuine: &[f64], impostor: &[f64]) -> Result<(f64, f64), EvalError> {
    let points = det_points(genuine, impostor)?;
    let mut prev: Option<&SweepPoint> = None;
    for p in &points {
        let d = p.p_fa - p.p_miss;
        if d == 0.0 {
            return Ok((p.p_fa, p.threshold));
        }
        if let Some(q) = prev {
            let pd = q.p_fa - q.p_miss;
            if pd > 0.0 && d < 0.0 {
                let alpha = pd / (pd - d);
                let eer = q.p_fa + alpha * (p.p_fa - q.p_fa);
                let theta = q.threshold + alpha * (p.threshold - q.threshold);
                // Crossing into the reject-everything endpoint has no
                // realizable score threshold; report the last real one.
                let theta = if theta.is_finite() { theta } else { q.threshold };
                return Ok((eer, theta));
            }
        }
        prev = Some(p);
    }
    unreachable!("FAR − FRR runs from 1 at the lowest score to −1 at the endpoint");
}

/// SRE08 operating parameters. Defaults give normalizer
/// min(10·0.01, 1·0.99) = 0.1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DcfParams {
    pub c_miss: f64,
    pub c_fa: f64,
    pub p_target: f64,
}

impl Default for DcfParams {
    fn default() -> Self {
        Self {
            c_miss: 10.0,
            c_fa: 1.0,
            p_target: 0.01,
        }
    }
}

impl DcfParams {
    pub fn normalizer(&self) -> f64 {
        (self.c_miss * self.p_target).min(self.c_fa * (1.0 - self.p_target))
    }

    fn validate(&self) -> Result<(), EvalError> {
        if !(self.c_miss > 0.0 && self.c_fa > 0.0) {
            return Err(EvalError::BadParam {
                reason: format!("costs must be positive, got ({}, {})", self.c_miss, self.c_fa),
            });
        }
        if !(self.p_target > 0.0 && self.p_target < 1.0) {
            return Err(EvalError::BadParam {
                reason: format!("p_target must lie in (0, 1), got {}", self.p_target),
            });
        }
        Ok(())
    }
}

/// Normalized minimum detection cost: min over the sweep (every distinct
/// score plus both degenerate extremes) of
/// C_miss·P_miss·P_target + C_fa·P_fa·(1 − P_target), divided by the cost
/// of the better blind policy. At most 1 by construction.
pub fn compute_min_dcf(
    genuine: &[f64],
    impostor: &[f64],
    params: &DcfParams,
) -> Result<f64, EvalError> {
    params.validate()?;
    let points = det_points(genuine, impostor)?;
    let mut best = f64::INFINITY;
    for p in &points {
        let cost = params.c_miss * p.p_miss * params.p_target
            + params.c_fa * p.p_fa * (1.0 - params.p_target);
        if cost < best {
            best = cost;
        }
    }
    Ok(best / params.normalizer())
}

/// Per-trial weighted sum of aligned score sets. `weights` defaults to
/// equal weights 1/N.
pub fn fuse_scores(sets: &[ScoreSet], weights: Option<&[f64]>) -> Result<ScoreSet, EvalError> {
    if sets.is_empty() {
        return Err(EvalError::EmptyList { which: "score set" });
    }
    let first = &sets[0];
    for s in &sets[1..] {
        if s.trials != first.trials {
            return Err(EvalError::TrialMismatch);
        }
    }
    let equal;
    let weights = match weights {
        Some(w) => {
            if w.len() != sets.len() {
                return Err(EvalError::WeightCountMismatch {
                    systems: sets.len(),
                    got: w.len(),
                });
            }
            if w.iter().any(|x| !x.is_finite()) {
                return Err(EvalError::BadParam {
                    reason: "non-finite fusion weight".into(),
                });
            }
            w
        }
        None => {
            equal = alloc::vec![1.0 / sets.len() as f64; sets.len()];
            equal.as_slice()
        }
    };
    let mut fused = alloc::vec![0.0; first.scores.len()];
    for (set, &w) in sets.iter().zip(weights) {
        for (f, s) in fused.iter_mut().zip(&set.scores) {
            *f += w * s;
        }
    }
    ScoreSet::new(first.trials.clone(), fused)
}

/// Concatenates two embeddings of the same utterance: [a ; b].
pub fn fuse_vectors(a: &IVector, b: &IVector) -> Result<IVector, EvalError> {
    if a.id != b.id {
        return Err(EvalError::IdMismatch {
            a: a.id.clone(),
            b: b.id.clone(),
        });
    }
    let mut w = Vec::with_capacity(a.w.len() + b.w.len());
    w.extend_from_slice(&a.w);
    w.extend_from_slice(&b.w);
    Ok(IVector { id: a.id.clone(), w })
}

/// Metrics of genuine scores against one impostor score list.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub eer: f64,
    pub min_dcf: f64,
    /// Score threshold at the EER operating point.
    pub threshold: f64,
    /// (P_fa, P_miss) at every sweep threshold.
    pub det: Vec<(f64, f64)>,
}

/// Table-shaped evaluation report: one row per non-target type present in
/// the scores, the pooled row against all non-target scores, and the
/// unweighted averages over the present rows.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub per_type: Vec<(TrialType, MetricRow)>,
    /// Requested non-target types with no trials; excluded from averages.
    pub absent: Vec<TrialType>,
    pub pooled: MetricRow,
    pub average_eer: f64,
    pub average_min_dcf: f64,
}

fn metric_row(genuine: &[f64], impostor: &[f64], params: &DcfParams) -> Result<MetricRow, EvalError> {
    let (eer, threshold) = compute_eer(genuine, impostor)?;
    let min_dcf = compute_min_dcf(genuine, impostor, params)?;
    let det = det_points(genuine, impostor)?
        .iter()
        .map(|p| (p.p_fa, p.p_miss))
        .collect();
    Ok(MetricRow {
        eer,
        min_dcf,
        threshold,
        det,
    })
}

pub fn report(scores: &ScoreSet) -> Result<MetricReport, EvalError> {
    report_with(scores, &DcfParams::default())
}

pub fn report_with(scores: &ScoreSet, params: &DcfParams) -> Result<MetricReport, EvalError> {
    let genuine = scores.scores_of_type(TrialType::Genuine);
    if genuine.is_empty() {
        return Err(EvalError::EmptyList { which: "genuine" });
    }
    let mut per_type = Vec::new();
    let mut absent = Vec::new();
    let mut pooled_impostors = Vec::new();
    for ty in TrialType::NON_TARGET {
        let imp = scores.scores_of_type(ty);
        if imp.is_empty() {
            absent.push(ty);
            continue;
        }
        per_type.push((ty, metric_row(&genuine, &imp, params)?));
        pooled_impostors.extend_from_slice(&imp);
    }
    if per_type.is_empty() {
        return Err(EvalError::EmptyList { which: "impostor" });
    }
    let pooled = metric_row(&genuine, &pooled_impostors, params)?;
    let k = per_type.len() as f64;
    let average_eer = per_type.iter().map(|(_, r)| r.eer).sum::<f64>() / k;
    let average_min_dcf = per_type.iter().map(|(_, r)| r.min_dcf).sum::<f64>() / k;
    Ok(MetricReport {
        per_type,
        absent,
        pooled,
        average_eer,
        average_min_dcf,
    })
}
