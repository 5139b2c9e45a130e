//! Synthetic corpus generation. Each utterance lives in a fixed 57-dim
//! feature space and is the sum of a phrase-specific smooth trajectory
//! (sinusoids whose frequencies and phases belong to the phrase), a
//! speaker-specific constant offset, and white Gaussian noise. That is the
//! minimum structure under which wrong-phrase trials and time-contrastive
//! labels are meaningful: phrases differ in temporal shape, speakers in
//! location.

use std::collections::BTreeMap;
use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tdsv_core::eval::{Trial, TrialList, TrialType};
use tdsv_core::math::sample_standard_normal;
use tdsv_core::types::FeatureMatrix;

use crate::config::ConfigError;

/// Dimension of the synthetic feature space.
pub const SYNTH_DIM: usize = 57;

/// ChaCha8 generator for a named substream of a master seed. Streams are
/// separated by hashing the seed with the tag and indices, so adding or
/// reordering consumers never shifts another stream's draws.
pub fn substream_rng(seed: u64, tag: &str, indices: &[u64]) -> ChaCha8Rng {
    use rand::SeedableRng;
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(tag.as_bytes());
    for i in indices {
        h.update(i.to_le_bytes());
    }
    ChaCha8Rng::from_seed(h.finalize().into())
}

/// Plain u64 seed for the named substream, for APIs that take seeds.
pub fn substream_seed(seed: u64, tag: &str, indices: &[u64]) -> u64 {
    let mut rng = substream_rng(seed, tag, indices);
    rng.gen()
}

fn default_enroll_per_pair() -> usize {
    3
}
fn default_test_per_pair() -> usize {
    2
}
fn default_frames() -> usize {
    80
}
fn default_unit_scale() -> f64 {
    1.0
}
fn default_noise_scale() -> f64 {
    0.3
}
fn default_corpus_seed() -> u64 {
    1
}

/// Shape and scales of a generated corpus. Evaluation speakers provide
/// `enroll_per_pair` + `test_per_pair` utterances per phrase; background
/// speakers provide the same number, all routed to training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticCorpusSpec {
    /// Evaluation speakers.
    pub speakers: usize,
    /// Pass-phrases, shared by all speakers.
    pub phrases: usize,
    #[serde(default = "default_enroll_per_pair")]
    pub enroll_per_pair: usize,
    #[serde(default = "default_test_per_pair")]
    pub test_per_pair: usize,
    #[serde(default = "default_frames")]
    pub frames_per_utterance: usize,
    /// Scale of the per-speaker constant offset.
    #[serde(default = "default_unit_scale")]
    pub offset_scale: f64,
    /// Scale of the per-phrase sinusoidal trajectory.
    #[serde(default = "default_unit_scale")]
    pub trajectory_scale: f64,
    /// Scale of the per-frame white noise.
    #[serde(default = "default_noise_scale")]
    pub noise_scale: f64,
    /// Extra speakers used only for training, 0 to train on the
    /// evaluation speakers' enrollment data instead.
    #[serde(default)]
    pub background_speakers: usize,
    #[serde(default = "default_corpus_seed")]
    pub seed: u64,
}

impl SyntheticCorpusSpec {
    pub fn validate(&self) -> Result<(), String> {
        if self.speakers == 0
            || self.phrases == 0
            || self.enroll_per_pair == 0
            || self.test_per_pair == 0
            || self.frames_per_utterance == 0
        {
            return Err("synthetic corpus counts must be >= 1".to_string());
        }
        for (name, v) in [
            ("offset_scale", self.offset_scale),
            ("trajectory_scale", self.trajectory_scale),
            ("noise_scale", self.noise_scale),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(format!("synthetic corpus {name} must be >= 0"));
            }
        }
        Ok(())
    }

    /// Reads a standalone spec file: a TOML document of these fields.
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let p = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: p.clone(),
            source: e,
        })?;
        let spec: SyntheticCorpusSpec =
            toml::from_str(&text).map_err(|e| ConfigError::Parse {
                path: p,
                message: e.to_string(),
            })?;
        spec.validate()
            .map_err(|reason| ConfigError::Invalid { reason })?;
        Ok(spec)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("synthetic corpus needs >= 2 speakers for impostor trials, got {got}")]
    TooFewSpeakers { got: usize },
    #[error("synthetic corpus needs >= 2 phrases for wrong-phrase trials, got {got}")]
    TooFewPhrases { got: usize },
    #[error("bad corpus spec: {reason}")]
    BadSpec { reason: String },
}

/// A generated corpus. Speaker and phrase indices are global: background
/// speakers come first, evaluation speakers after them.
#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    /// Every utterance, background then enrollment then test.
    pub features: Vec<FeatureMatrix>,
    pub speaker_of: BTreeMap<String, usize>,
    pub phrase_of: BTreeMap<String, usize>,
    /// Training utterance ids: all background utterances, or every
    /// enrollment utterance when no background speakers were requested.
    pub background: Vec<String>,
    /// Enrollment utterance ids per model id.
    pub enroll: BTreeMap<String, Vec<String>>,
    /// Test utterance ids.
    pub test: Vec<String>,
    /// All four trial types over every (model, test utterance) pair.
    pub trials: TrialList,
}

impl SyntheticCorpus {
    pub fn feature(&self, id: &str) -> Option<&FeatureMatrix> {
        self.features.iter().find(|f| f.id == id)
    }
}

fn model_id(speaker: usize, phrase: usize) -> String {
    format!("spk{:03}-phr{:03}", speaker + 1, phrase + 1)
}

/// One utterance: trajectory + offset + noise. The trajectory argument is
/// the frame position scaled to [0, 1), so utterances of one (speaker,
/// phrase) pair differ only through the noise stream.
fn render_utterance(
    spec: &SyntheticCorpusSpec,
    id: String,
    freqs: &[f64],
    phases: &[f64],
    offset: &[f64],
    noise_rng: &mut ChaCha8Rng,
) -> FeatureMatrix {
    let frames = spec.frames_per_utterance;
    let mut data = Vec::with_capacity(frames * SYNTH_DIM);
    for t in 0..frames {
        let pos = t as f64 / frames as f64;
        for d in 0..SYNTH_DIM {
            let angle = core::f64::consts::TAU * (freqs[d] * pos + phases[d]);
            let clean = spec.trajectory_scale * angle.sin() + spec.offset_scale * offset[d];
            data.push(clean + spec.noise_scale * sample_standard_normal(noise_rng));
        }
    }
    FeatureMatrix::from_data(id, SYNTH_DIM, data)
}

pub fn generate_synthetic_corpus(
    spec: &SyntheticCorpusSpec,
) -> Result<SyntheticCorpus, SynthError> {
    spec.validate()
        .map_err(|reason| SynthError::BadSpec { reason })?;
    if spec.speakers < 2 {
        return Err(SynthError::TooFewSpeakers { got: spec.speakers });
    }
    if spec.phrases < 2 {
        return Err(SynthError::TooFewPhrases { got: spec.phrases });
    }

    let utts_per_pair = spec.enroll_per_pair + spec.test_per_pair;
    let total_speakers = spec.background_speakers + spec.speakers;

    // Phrase trajectories: per-dimension frequency in [0.5, 2.5) cycles per
    // utterance and phase in [0, 1) turns.
    let mut freqs = Vec::with_capacity(spec.phrases);
    let mut phases = Vec::with_capacity(spec.phrases);
    for p in 0..spec.phrases {
        let mut rng = substream_rng(spec.seed, "phrase", &[p as u64]);
        freqs.push((0..SYNTH_DIM).map(|_| 0.5 + 2.0 * rng.gen::<f64>()).collect::<Vec<f64>>());
        phases.push((0..SYNTH_DIM).map(|_| rng.gen::<f64>()).collect::<Vec<f64>>());
    }

    // Speaker offsets, background speakers first.
    let offsets: Vec<Vec<f64>> = (0..total_speakers)
        .map(|k| {
            let mut rng = substream_rng(spec.seed, "speaker", &[k as u64]);
            (0..SYNTH_DIM).map(|_| sample_standard_normal(&mut rng)).collect()
        })
        .collect();

    let mut corpus = SyntheticCorpus {
        features: Vec::new(),
        speaker_of: BTreeMap::new(),
        phrase_of: BTreeMap::new(),
        background: Vec::new(),
        enroll: BTreeMap::new(),
        test: Vec::new(),
        trials: TrialList::new(Vec::new()).expect("empty list is valid"),
    };

    let add = |corpus: &mut SyntheticCorpus, id: &str, k: usize, p: usize, u: usize| {
        let mut noise_rng = substream_rng(spec.seed, "utt", &[k as u64, p as u64, u as u64]);
        corpus.features.push(render_utterance(
            spec,
            id.to_string(),
            &freqs[p],
            &phases[p],
            &offsets[k],
            &mut noise_rng,
        ));
        corpus.speaker_of.insert(id.to_string(), k);
        corpus.phrase_of.insert(id.to_string(), p);
    };

    for bg in 0..spec.background_speakers {
        for p in 0..spec.phrases {
            for u in 0..utts_per_pair {
                let id = format!("bg{:03}-phr{:03}-u{:02}", bg + 1, p + 1, u + 1);
                add(&mut corpus, &id, bg, p, u);
                corpus.background.push(id);
            }
        }
    }

    for s in 0..spec.speakers {
        let k = spec.background_speakers + s;
        for p in 0..spec.phrases {
            let model = model_id(s, p);
            for u in 0..utts_per_pair {
                let id = format!("{model}-u{:02}", u + 1);
                add(&mut corpus, &id, k, p, u);
                if u < spec.enroll_per_pair {
                    corpus.enroll.entry(model.clone()).or_default().push(id.clone());
                    if spec.background_speakers == 0 {
                        corpus.background.push(id);
                    }
                } else {
                    corpus.test.push(id);
                }
            }
        }
    }

    let mut trials = Vec::new();
    for s in 0..spec.speakers {
        for p in 0..spec.phrases {
            let model = model_id(s, p);
            for t in &corpus.test {
                let ts = corpus.speaker_of[t] - spec.background_speakers;
                let tp = corpus.phrase_of[t];
                let trial_type = match (ts == s, tp == p) {
                    (true, true) => TrialType::Genuine,
                    (true, false) => TrialType::TargetWrong,
                    (false, true) => TrialType::ImpostorCorrect,
                    (false, false) => TrialType::ImpostorWrong,
                };
                trials.push(Trial {
                    model: model.clone(),
                    utterance: t.clone(),
                    trial_type,
                });
            }
        }
    }
    corpus.trials = TrialList::new(trials).expect("generated trials are unique");
    Ok(corpus)
}
