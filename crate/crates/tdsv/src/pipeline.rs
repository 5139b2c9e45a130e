//! End-to-end experiment pipeline: corpus assembly, cached artifact stages,
//! per-system scoring, score fusion, and the evaluation report.
//!
//! Every stage writes its artifact next to a `<artifact>.meta` sidecar
//! recording a stage hash (config subtree, input file digests, seed) and the
//! artifact's own digest. A rerun reuses the artifact only when both match;
//! an artifact whose stage hash is outdated but whose content matches its
//! sidecar is rebuilt in place, and an artifact with no sidecar or with
//! content that differs from its sidecar is refused so the pipeline never
//! silently overwrites a file it did not produce.
//!
//! Heavy intermediates (feature archives, models, vector archives) live in
//! the cache directory: `TDSV_CACHE_DIR` when set, else the working
//! directory. Trials, scores, DET curves, and the report always land in the
//! working directory.
//!
//! Every artifact consumed downstream is read back from disk after it is
//! ensured, so a run that hits the cache and a run that rebuilds observe
//! bit-identical inputs.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use tdsv_core::eval::{fuse_scores, report, MetricReport, ScoreSet, Trial, TrialList, TrialType};
use tdsv_core::frontend::{append_deltas, cmvn, energy_vad, extract_mfcc, FrontendError};
use tdsv_core::gmm::{accumulate_bw_stats, gmm_log_likelihood, map_adapt, train_ubm_em, DiagGmm};
use tdsv_core::ivector::{enroll_average, extract_ivector, train_tv_em, IVector};
use tdsv_core::nnet::{
    extract_deep_features, extract_xvector, project_pca, train_bn_dnn, train_pca,
    train_xvector_net,
};
use tdsv_core::plda::{apply_spherical_norm, plda_score, train_plda, train_spherical_norm};
use tdsv_core::tcl::{shuffle_utterance_order, stcl_labels, utcl_labels};
use tdsv_core::types::{AudioClip, FeatureMatrix, LabelSet, LabelTask};

use crate::config::{BnTask, ConfigError, ExperimentConfig, FrontendSection, SystemKind};
use crate::format::{
    file_sha256, parse_class_table, read_feature_archive, read_gmm, read_labels, read_network,
    read_plda, read_scores, read_trials, read_tv, read_vector_archive, write_det_points,
    write_feature_archive, write_gmm, write_labels, write_network, write_plda, write_scores,
    write_trials, write_tv, write_vector_archive, BnProjection, FormatError, NetworkFile,
};
use crate::synth::{generate_synthetic_corpus, substream_seed, SynthError};
use crate::wav::{read_wav, WavError};

/// Environment variable overriding where cached intermediates are stored.
pub const CACHE_DIR_VAR: &str = "TDSV_CACHE_DIR";

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Wav(#[from] WavError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error(
        "refusing to overwrite {artifact}: {reason}; \
         pass --force to rebuild it or use a fresh working directory"
    )]
    Stale { artifact: String, reason: String },
    #[error("stage {stage}: {cause}")]
    Stage { stage: String, cause: String },
    #[error("corpus: {reason}")]
    Corpus { reason: String },
}

impl PipelineError {
    fn corpus(reason: impl Into<String>) -> Self {
        PipelineError::Corpus {
            reason: reason.into(),
        }
    }
}

/// Maps any error a stage hits internally into [`PipelineError::Stage`].
#[derive(Clone, Copy)]
struct StageErr<'a>(&'a str);

impl StageErr<'_> {
    fn of<E: std::fmt::Display>(self, e: E) -> PipelineError {
        PipelineError::Stage {
            stage: self.0.to_string(),
            cause: e.to_string(),
        }
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> PipelineError + '_ {
    move |e| PipelineError::Io {
        path: path.display().to_string(),
        source: e,
    }
}

/// Options of one `run_pipeline` invocation.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Rebuild every stage, overwriting artifacts regardless of sidecars.
    pub force: bool,
    /// Cache directory for intermediates; `None` consults `TDSV_CACHE_DIR`
    /// and falls back to the working directory.
    pub cache_dir: Option<PathBuf>,
    /// Suppress per-stage progress lines on stderr.
    pub quiet: bool,
}

/// Everything a finished run hands back to the caller.
#[derive(Debug)]
pub struct RunOutcome {
    /// One report per scored system, config order, fused systems last.
    pub reports: Vec<(String, MetricReport)>,
    /// Score file per entry in `reports`, same order.
    pub score_paths: Vec<(String, PathBuf)>,
    pub report_path: PathBuf,
    pub report_text: String,
}

// ---------------------------------------------------------------------------
// Artifact cache

/// Sidecar proving which stage produced an artifact and from what inputs.
#[derive(Debug, Serialize, Deserialize)]
struct ArtifactMeta {
    config_hash: String,
    stage: String,
    stage_hash: String,
    artifact_sha256: String,
}

/// Accumulates the inputs that determine one stage's output.
struct StageKey {
    hasher: Sha256,
}

impl StageKey {
    fn new(stage: &str) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(b"stage\0");
        hasher.update(stage.as_bytes());
        hasher.update([0u8]);
        StageKey { hasher }
    }

    fn text(mut self, label: &str, value: &str) -> Self {
        self.hasher.update(b"text\0");
        self.hasher.update(label.as_bytes());
        self.hasher.update([0u8]);
        self.hasher.update(value.as_bytes());
        self.hasher.update([0u8]);
        self
    }

    fn seed(self, value: u64) -> Self {
        self.text("seed", &value.to_string())
    }

    fn file(mut self, path: &Path) -> Result<Self, PipelineError> {
        let digest = file_sha256(path)?;
        self.hasher.update(b"file\0");
        self.hasher.update(digest);
        Ok(self)
    }

    fn finish(self) -> String {
        hex(&self.hasher.finalize())
    }
}

fn hex(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        let _ = write!(s, "{b:02x}");
    }
    s
}

/// Where an artifact lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dir {
    /// Cached intermediate, relocatable via `TDSV_CACHE_DIR`.
    Cache,
    /// Final output, always under the working directory.
    Out,
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    cfg_hash: String,
    outdir: PathBuf,
    cachedir: PathBuf,
    force: bool,
    quiet: bool,
}

impl<'a> Ctx<'a> {
    fn new(cfg: &'a ExperimentConfig, opts: &RunOptions) -> Result<Self, PipelineError> {
        let outdir = cfg.experiment.workdir.clone();
        let cachedir = opts
            .cache_dir
            .clone()
            .or_else(|| std::env::var_os(CACHE_DIR_VAR).map(PathBuf::from))
            .unwrap_or_else(|| outdir.clone());
        fs::create_dir_all(&outdir).map_err(io_err(&outdir))?;
        fs::create_dir_all(&cachedir).map_err(io_err(&cachedir))?;
        Ok(Ctx {
            cfg,
            cfg_hash: cfg.hash(),
            outdir,
            cachedir,
            force: opts.force,
            quiet: opts.quiet,
        })
    }

    fn dir(&self, dir: Dir) -> &Path {
        match dir {
            Dir::Cache => &self.cachedir,
            Dir::Out => &self.outdir,
        }
    }

    fn say(&self, stage: &str, action: &str, name: &str) {
        if !self.quiet {
            eprintln!("[tdsv] {stage}: {action} {name}");
        }
    }

    /// Seed of a named pipeline substream under the experiment master seed.
    fn seed_of(&self, tag: &str) -> u64 {
        substream_seed(self.cfg.experiment.seed, tag, &[])
    }

    /// Returns the artifact path, building it only when the sidecar does not
    /// prove the existing file current. See the module doc for the protocol.
    fn ensure(
        &self,
        dir: Dir,
        name: &str,
        stage: &str,
        key: StageKey,
        build: impl FnOnce(&Path) -> Result<(), PipelineError>,
    ) -> Result<PathBuf, PipelineError> {
        let stage_hash = key.finish();
        let path = self.dir(dir).join(name);
        let meta_path = self.dir(dir).join(format!("{name}.meta"));
        if path.exists() && !self.force {
            match read_meta(&meta_path)? {
                None => {
                    return Err(PipelineError::Stale {
                        artifact: path.display().to_string(),
                        reason: "it has no metadata sidecar, so this pipeline did not produce it"
                            .to_string(),
                    });
                }
                Some(meta) => {
                    let actual = hex(&file_sha256(&path)?);
                    if actual != meta.artifact_sha256 {
                        return Err(PipelineError::Stale {
                            artifact: path.display().to_string(),
                            reason: format!(
                                "its content no longer matches the sidecar left by stage {}",
                                meta.stage
                            ),
                        });
                    }
                    if meta.stage_hash == stage_hash {
                        self.say(stage, "reusing", name);
                        return Ok(path);
                    }
                    // Proven ours and merely outdated: rebuild in place.
                }
            }
        }
        self.say(stage, "building", name);
        build(&path)?;
        let meta = ArtifactMeta {
            config_hash: self.cfg_hash.clone(),
            stage: stage.to_string(),
            stage_hash,
            artifact_sha256: hex(&file_sha256(&path)?),
        };
        let body = toml::to_string(&meta).expect("artifact metadata serializes");
        fs::write(&meta_path, body).map_err(io_err(&meta_path))?;
        Ok(path)
    }
}

fn read_meta(path: &Path) -> Result<Option<ArtifactMeta>, PipelineError> {
    if !path.exists() {
        return Ok(None);
    }
    let body = fs::read_to_string(path).map_err(io_err(path))?;
    let meta = toml::from_str(&body).map_err(|e| PipelineError::Stale {
        artifact: path.display().to_string(),
        reason: format!("its metadata sidecar does not parse: {e}"),
    })?;
    Ok(Some(meta))
}

// ---------------------------------------------------------------------------
// Corpus

/// Utterance membership and trial design, independent of feature data.
///
/// Speaker and phrase indices are global: background-only speakers first,
/// evaluation speakers after them, each block in a fixed (generation or
/// sorted-name) order.
pub(crate) struct Corpus {
    pub speaker_of: BTreeMap<String, usize>,
    pub phrase_of: BTreeMap<String, usize>,
    /// Training utterances, in training-stream order.
    pub background: Vec<String>,
    /// Enrollment utterances per model id.
    pub enroll: BTreeMap<String, Vec<String>>,
    pub test: Vec<String>,
    pub trials: TrialList,
    /// Hex digest of the corpus definition, mixed into every stage key.
    pub digest: String,
}

impl Corpus {
    /// Every distinct utterance id, background, enrollment and test.
    fn all_utterances(&self) -> BTreeSet<String> {
        let mut ids: BTreeSet<String> = self.background.iter().cloned().collect();
        for utts in self.enroll.values() {
            ids.extend(utts.iter().cloned());
        }
        ids.extend(self.test.iter().cloned());
        ids
    }

    /// Maps the background utterances' speaker indices to contiguous class
    /// labels; returns per-utterance labels (background order) and the count.
    fn background_speaker_classes(&self) -> (Vec<usize>, usize) {
        let distinct: BTreeSet<usize> = self
            .background
            .iter()
            .map(|u| self.speaker_of[u])
            .collect();
        let index: BTreeMap<usize, usize> =
            distinct.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        let labels = self
            .background
            .iter()
            .map(|u| index[&self.speaker_of[u]])
            .collect();
        (labels, index.len())
    }

    /// Same as `background_speaker_classes` for phrase indices.
    fn background_phrase_classes(&self) -> (Vec<usize>, usize) {
        let distinct: BTreeSet<usize> = self
            .background
            .iter()
            .map(|u| self.phrase_of[u])
            .collect();
        let index: BTreeMap<usize, usize> =
            distinct.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        let labels = self
            .background
            .iter()
            .map(|u| index[&self.phrase_of[u]])
            .collect();
        (labels, index.len())
    }

    /// Contiguous (speaker, phrase)-pair class labels over the background
    /// utterances, the training classes for PLDA and the x-vector network.
    fn background_pair_classes(&self) -> (Vec<usize>, usize) {
        let distinct: BTreeSet<(usize, usize)> = self
            .background
            .iter()
            .map(|u| (self.speaker_of[u], self.phrase_of[u]))
            .collect();
        let index: BTreeMap<(usize, usize), usize> =
            distinct.iter().enumerate().map(|(i, &p)| (p, i)).collect();
        let labels = self
            .background
            .iter()
            .map(|u| index[&(self.speaker_of[u], self.phrase_of[u])])
            .collect();
        (labels, index.len())
    }
}

/// One row of a wav list file: `path<TAB>speaker<TAB>phrase`.
#[derive(Debug, Clone, PartialEq, Eq)]
struct WavEntry {
    id: String,
    path: PathBuf,
    speaker: String,
    phrase: String,
}

fn parse_wav_list(path: &Path) -> Result<Vec<WavEntry>, PipelineError> {
    let body = fs::read_to_string(path).map_err(io_err(path))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut entries = Vec::new();
    for (idx, line) in body.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(PipelineError::corpus(format!(
                "{}: line {}: expected path<TAB>speaker<TAB>phrase, found {} field(s)",
                path.display(),
                idx + 1,
                fields.len()
            )));
        }
        let wav = Path::new(fields[0]);
        let wav = if wav.is_absolute() {
            wav.to_path_buf()
        } else {
            base.join(wav)
        };
        let id = wav
            .file_stem()
            .and_then(|s| s.to_str())
            .map(str::to_string)
            .filter(|s| !s.is_empty())
            .ok_or_else(|| {
                PipelineError::corpus(format!(
                    "{}: line {}: cannot derive an utterance id from {}",
                    path.display(),
                    idx + 1,
                    fields[0]
                ))
            })?;
        entries.push(WavEntry {
            id,
            path: wav,
            speaker: fields[1].to_string(),
            phrase: fields[2].to_string(),
        });
    }
    Ok(entries)
}

/// The wav-corpus plan: membership plus the files still to be decoded.
struct WavPlan {
    /// Utterance id to wav path, every role merged, id-sorted.
    files: BTreeMap<String, PathBuf>,
}

fn assemble_wav_corpus(ctx: &Ctx) -> Result<(Corpus, WavPlan), PipelineError> {
    let wav_cfg = ctx
        .cfg
        .corpus
        .wav
        .as_ref()
        .expect("validated config has a wav corpus");
    let background = parse_wav_list(&wav_cfg.background_list)?;
    let enroll = parse_wav_list(&wav_cfg.enroll_list)?;
    let test = parse_wav_list(&wav_cfg.test_list)?;
    if background.is_empty() || enroll.is_empty() || test.is_empty() {
        return Err(PipelineError::corpus(
            "background, enrollment and test lists must each name at least one utterance",
        ));
    }

    // Merge roles by utterance id; the same utterance may serve several
    // roles, but only with identical metadata.
    let mut merged: BTreeMap<String, WavEntry> = BTreeMap::new();
    for entry in background.iter().chain(enroll.iter()).chain(test.iter()) {
        match merged.get(&entry.id) {
            None => {
                merged.insert(entry.id.clone(), entry.clone());
            }
            Some(prev) if prev == entry => {}
            Some(prev) => {
                return Err(PipelineError::corpus(format!(
                    "utterance id {} is listed twice with different metadata \
                     ({} as {}/{}, {} as {}/{})",
                    entry.id,
                    prev.path.display(),
                    prev.speaker,
                    prev.phrase,
                    entry.path.display(),
                    entry.speaker,
                    entry.phrase
                )));
            }
        }
    }

    // Global speaker indices: background speakers first, then the rest.
    let bg_speakers: BTreeSet<&str> = background.iter().map(|e| e.speaker.as_str()).collect();
    let eval_speakers: BTreeSet<&str> = enroll
        .iter()
        .chain(test.iter())
        .map(|e| e.speaker.as_str())
        .filter(|s| !bg_speakers.contains(s))
        .collect();
    let mut speaker_index: BTreeMap<&str, usize> = BTreeMap::new();
    for &name in bg_speakers.iter().chain(eval_speakers.iter()) {
        let next = speaker_index.len();
        speaker_index.insert(name, next);
    }
    let phrases: BTreeSet<&str> = merged.values().map(|e| e.phrase.as_str()).collect();
    let phrase_index: BTreeMap<&str, usize> = phrases
        .iter()
        .enumerate()
        .map(|(i, &p)| (p, i))
        .collect();

    let speaker_of: BTreeMap<String, usize> = merged
        .values()
        .map(|e| (e.id.clone(), speaker_index[e.speaker.as_str()]))
        .collect();
    let phrase_of: BTreeMap<String, usize> = merged
        .values()
        .map(|e| (e.id.clone(), phrase_index[e.phrase.as_str()]))
        .collect();

    let background_ids: Vec<String> = {
        let ids: BTreeSet<String> = background.iter().map(|e| e.id.clone()).collect();
        ids.into_iter().collect()
    };
    let test_ids: Vec<String> = {
        let ids: BTreeSet<String> = test.iter().map(|e| e.id.clone()).collect();
        ids.into_iter().collect()
    };

    // Models: one per (speaker, phrase) pair in the enrollment list.
    let mut enroll_map: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    let mut model_identity: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for entry in &enroll {
        let model = format!("{}-{}", entry.speaker, entry.phrase);
        enroll_map
            .entry(model.clone())
            .or_default()
            .insert(entry.id.clone());
        model_identity.insert(
            model,
            (
                speaker_index[entry.speaker.as_str()],
                phrase_index[entry.phrase.as_str()],
            ),
        );
    }
    let enroll_final: BTreeMap<String, Vec<String>> = enroll_map
        .into_iter()
        .map(|(m, utts)| (m, utts.into_iter().collect()))
        .collect();

    let trials = match &wav_cfg.trials {
        Some(path) => {
            let list = read_trials(path)?;
            for trial in list.trials() {
                let (spk, phr) = *model_identity.get(&trial.model).ok_or_else(|| {
                    PipelineError::corpus(format!(
                        "trial references model {} absent from the enrollment list",
                        trial.model
                    ))
                })?;
                if !test_ids.contains(&trial.utterance) {
                    return Err(PipelineError::corpus(format!(
                        "trial references utterance {} absent from the test list",
                        trial.utterance
                    )));
                }
                let expected = classify_trial(
                    spk,
                    phr,
                    speaker_of[&trial.utterance],
                    phrase_of[&trial.utterance],
                );
                if trial.trial_type != expected {
                    return Err(PipelineError::corpus(format!(
                        "trial ({}, {}) is labeled {} but the lists imply {}",
                        trial.model, trial.utterance, trial.trial_type, expected
                    )));
                }
            }
            list
        }
        None => full_cross_trials(&model_identity, &test_ids, &speaker_of, &phrase_of)?,
    };

    // The corpus definition digest: role-tagged rows plus the frontend
    // parameters that shape the features, plus any explicit trial list.
    let mut key = StageKey::new("wav-corpus");
    for (role, list) in [
        ("background", &background),
        ("enroll", &enroll),
        ("test", &test),
    ] {
        for e in list {
            key = key.text(
                role,
                &format!("{}\t{}\t{}", e.id, e.speaker, e.phrase),
            );
        }
    }
    key = key.text(
        "frontend",
        &toml::to_string(&ctx.cfg.frontend).expect("frontend section serializes"),
    );
    if let Some(path) = &wav_cfg.trials {
        key = key.file(path)?;
    }
    let digest = key.finish();

    let corpus = Corpus {
        speaker_of,
        phrase_of,
        background: background_ids,
        enroll: enroll_final,
        test: test_ids,
        trials,
        digest,
    };
    let files = merged
        .into_iter()
        .map(|(id, e)| (id, e.path))
        .collect();
    Ok((corpus, WavPlan { files }))
}

fn classify_trial(
    model_speaker: usize,
    model_phrase: usize,
    utt_speaker: usize,
    utt_phrase: usize,
) -> TrialType {
    match (model_speaker == utt_speaker, model_phrase == utt_phrase) {
        (true, true) => TrialType::Genuine,
        (true, false) => TrialType::TargetWrong,
        (false, true) => TrialType::ImpostorCorrect,
        (false, false) => TrialType::ImpostorWrong,
    }
}

fn full_cross_trials(
    model_identity: &BTreeMap<String, (usize, usize)>,
    test_ids: &[String],
    speaker_of: &BTreeMap<String, usize>,
    phrase_of: &BTreeMap<String, usize>,
) -> Result<TrialList, PipelineError> {
    let mut trials = Vec::with_capacity(model_identity.len() * test_ids.len());
    for (model, &(spk, phr)) in model_identity {
        for utt in test_ids {
            trials.push(Trial {
                model: model.clone(),
                utterance: utt.clone(),
                trial_type: classify_trial(spk, phr, speaker_of[utt], phrase_of[utt]),
            });
        }
    }
    TrialList::new(trials).map_err(|e| StageErr("trials").of(e))
}

// ---------------------------------------------------------------------------
// Feature and trial stages

/// Ensures the feature archive and assembles corpus membership.
fn ensure_features(ctx: &Ctx) -> Result<(Corpus, PathBuf), PipelineError> {
    if let Some(spec) = &ctx.cfg.corpus.synthetic {
        let synth = generate_synthetic_corpus(spec)?;
        let digest = StageKey::new("synthetic-corpus")
            .text(
                "spec",
                &toml::to_string(spec).expect("synthetic corpus spec serializes"),
            )
            .finish();
        let key = StageKey::new("features").text("corpus", &digest);
        let features_path = ctx.ensure(Dir::Cache, "features.ark", "features", key, |path| {
            write_feature_archive(path, &synth.features)?;
            Ok(())
        })?;
        let corpus = Corpus {
            speaker_of: synth.speaker_of,
            phrase_of: synth.phrase_of,
            background: synth.background,
            enroll: synth.enroll,
            test: synth.test,
            trials: synth.trials,
            digest,
        };
        Ok((corpus, features_path))
    } else {
        let (corpus, plan) = assemble_wav_corpus(ctx)?;
        let mut key = StageKey::new("features").text("corpus", &corpus.digest);
        for path in plan.files.values() {
            key = key.file(path)?;
        }
        let fe = &ctx.cfg.frontend;
        let features_path = ctx.ensure(Dir::Cache, "features.ark", "features", key, |path| {
            let mut features = Vec::with_capacity(plan.files.len());
            for (id, wav) in &plan.files {
                let clip = read_wav(wav)?;
                let feat = utterance_features(&clip, fe)
                    .map_err(|e| StageErr("features").of(format!("{id}: {e}")))?;
                features.push(feat);
            }
            write_feature_archive(path, &features)?;
            Ok(())
        })?;
        Ok((corpus, features_path))
    }
}

/// The full front-end chain of one utterance: static MFCCs, a VAD mask from
/// the static energies, deltas over the full matrix, then the mask, then
/// optional utterance CMVN.
pub(crate) fn utterance_features(
    clip: &AudioClip,
    fe: &FrontendSection,
) -> Result<FeatureMatrix, FrontendError> {
    let fc = fe.to_core();
    let statics = extract_mfcc(clip, &fc)?;
    let (_, mask) = energy_vad(clip, &statics, &fc)?;
    let full = append_deltas(&statics, fc.delta_window);
    let kept = full.select_rows(&mask);
    if fe.cmvn {
        cmvn(&kept)
    } else {
        Ok(kept)
    }
}

/// Loads a feature archive into an id-keyed map and checks it covers the
/// corpus with one uniform dimension.
pub(crate) fn load_feature_map(
    path: &Path,
    corpus: &Corpus,
) -> Result<BTreeMap<String, FeatureMatrix>, PipelineError> {
    let list = read_feature_archive(path)?;
    let mut map = BTreeMap::new();
    let mut dim = None;
    for feat in list {
        match dim {
            None => dim = Some(feat.dim()),
            Some(d) if d == feat.dim() => {}
            Some(d) => {
                return Err(PipelineError::corpus(format!(
                    "{}: utterance {} has dimension {}, expected {}",
                    path.display(),
                    feat.id,
                    feat.dim(),
                    d
                )));
            }
        }
        if map.insert(feat.id.clone(), feat).is_some() {
            return Err(PipelineError::corpus(format!(
                "{}: duplicate utterance id in archive",
                path.display()
            )));
        }
    }
    for id in corpus.all_utterances() {
        if !map.contains_key(&id) {
            return Err(PipelineError::corpus(format!(
                "{}: corpus utterance {} missing from the archive",
                path.display(),
                id
            )));
        }
    }
    Ok(map)
}

fn ensure_trials(ctx: &Ctx, corpus: &Corpus) -> Result<PathBuf, PipelineError> {
    let key = StageKey::new("trials").text("corpus", &corpus.digest);
    ctx.ensure(Dir::Out, "eval.trials", "trials", key, |path| {
        write_trials(path, &corpus.trials)?;
        Ok(())
    })
}

// ---------------------------------------------------------------------------
// GMM-UBM system

/// Clones the background utterances' features in training-stream order.
fn background_features(
    corpus: &Corpus,
    feats: &BTreeMap<String, FeatureMatrix>,
) -> Vec<FeatureMatrix> {
    corpus
        .background
        .iter()
        .map(|id| feats[id].clone())
        .collect()
}

/// Concatenates a model's enrollment utterances into one feature matrix.
fn pooled_enrollment(
    model: &str,
    utts: &[String],
    feats: &BTreeMap<String, FeatureMatrix>,
) -> FeatureMatrix {
    let dim = feats[&utts[0]].dim();
    let mut pooled = FeatureMatrix::empty(model.to_string(), dim);
    for utt in utts {
        let feat = &feats[utt];
        for t in 0..feat.num_frames() {
            pooled.push_row(feat.row(t));
        }
    }
    pooled
}

/// Trains (or reuses) the UBM over the archive's background utterances.
fn ensure_ubm(
    ctx: &Ctx,
    corpus: &Corpus,
    features_path: &Path,
    prefix: &str,
) -> Result<PathBuf, PipelineError> {
    let stage = format!("{prefix}train-ubm");
    let name = format!("{prefix}ubm.gmm");
    let seed = ctx.seed_of(&format!("{prefix}ubm"));
    let key = StageKey::new(&stage)
        .text(
            "ubm",
            &toml::to_string(&ctx.cfg.ubm).expect("ubm section serializes"),
        )
        .text("corpus", &corpus.digest)
        .seed(seed)
        .file(features_path)?;
    let ubm_cfg = &ctx.cfg.ubm;
    ctx.ensure(Dir::Cache, &name, &stage, key, |path| {
        let feats = load_feature_map(features_path, corpus)?;
        let background = background_features(corpus, &feats);
        let (ubm, _log) = train_ubm_em(&background, ubm_cfg.components, ubm_cfg.em_iters, seed)
            .map_err(|e| StageErr(&stage).of(e))?;
        write_gmm(path, &ubm)?;
        Ok(())
    })
}

fn ensure_gmm_ubm_scores(
    ctx: &Ctx,
    corpus: &Corpus,
    feats: &BTreeMap<String, FeatureMatrix>,
    features_path: &Path,
    trials_path: &Path,
    trials: &TrialList,
) -> Result<PathBuf, PipelineError> {
    let ubm_path = ensure_ubm(ctx, corpus, features_path, "")?;
    let key = StageKey::new("score-gmm")
        .text(
            "ubm",
            &toml::to_string(&ctx.cfg.ubm).expect("ubm section serializes"),
        )
        .text("corpus", &corpus.digest)
        .file(&ubm_path)?
        .file(features_path)?
        .file(trials_path)?;
    let ubm_cfg = &ctx.cfg.ubm;
    ctx.ensure(Dir::Out, "gmm-ubm.score", "score-gmm", key, |path| {
        let err = StageErr("score-gmm");
        let ubm = read_gmm(&ubm_path)?;
        let mut models: BTreeMap<&str, DiagGmm> = BTreeMap::new();
        for (model, utts) in &corpus.enroll {
            let pooled = pooled_enrollment(model, utts, feats);
            let adapted = map_adapt(&ubm, &pooled, ubm_cfg.map_relevance, ubm_cfg.map_iters)
                .map_err(|e| err.of(e))?;
            models.insert(model, adapted);
        }
        let mut ubm_ll: BTreeMap<&str, f64> = BTreeMap::new();
        let mut scores = Vec::with_capacity(trials.len());
        for trial in trials.trials() {
            let feat = &feats[&trial.utterance];
            let base = match ubm_ll.get(trial.utterance.as_str()) {
                Some(&ll) => ll,
                None => {
                    let ll = gmm_log_likelihood(&ubm, feat).map_err(|e| err.of(e))?;
                    ubm_ll.insert(&trial.utterance, ll);
                    ll
                }
            };
            let target = models.get(trial.model.as_str()).ok_or_else(|| {
                PipelineError::corpus(format!(
                    "trial references model {} with no enrollment data",
                    trial.model
                ))
            })?;
            let ll = gmm_log_likelihood(target, feat).map_err(|e| err.of(e))?;
            scores.push(ll - base);
        }
        let set = ScoreSet::new(trials.clone(), scores).map_err(|e| err.of(e))?;
        write_scores(path, &set)?;
        Ok(())
    })
}

// ---------------------------------------------------------------------------
// i-vector / PLDA chain

/// Trains the total-variability subspace and extracts one i-vector per
/// archive utterance; shared by the cepstral and bottleneck systems via
/// `prefix` ("" or "bn-").
fn ensure_ivectors(
    ctx: &Ctx,
    corpus: &Corpus,
    features_path: &Path,
    prefix: &str,
) -> Result<PathBuf, PipelineError> {
    let ubm_path = ensure_ubm(ctx, corpus, features_path, prefix)?;

    let tv_stage = format!("{prefix}train-tv");
    let tv_name = format!("{prefix}tv.tv");
    let tv_seed = ctx.seed_of(&format!("{prefix}tv"));
    let iv_cfg = &ctx.cfg.ivector;
    let tv_key = StageKey::new(&tv_stage)
        .text(
            "ivector",
            &toml::to_string(iv_cfg).expect("ivector section serializes"),
        )
        .text("corpus", &corpus.digest)
        .seed(tv_seed)
        .file(&ubm_path)?
        .file(features_path)?;
    let tv_path = ctx.ensure(Dir::Cache, &tv_name, &tv_stage, tv_key, |path| {
        let err = StageErr(&tv_stage);
        let ubm = read_gmm(&ubm_path)?;
        let feats = load_feature_map(features_path, corpus)?;
        let mut stats = Vec::with_capacity(corpus.background.len());
        for id in &corpus.background {
            stats.push(accumulate_bw_stats(&ubm, &feats[id]).map_err(|e| err.of(e))?);
        }
        let (tv, _log) =
            train_tv_em(&stats, &ubm, iv_cfg.rank, iv_cfg.em_iters, tv_seed).map_err(|e| err.of(e))?;
        write_tv(path, &tv, &ubm_path)?;
        Ok(())
    })?;

    let vec_stage = format!("{prefix}extract-ivector");
    let vec_name = format!("{prefix}ivectors.vec");
    let vec_key = StageKey::new(&vec_stage)
        .text("corpus", &corpus.digest)
        .file(&ubm_path)?
        .file(&tv_path)?
        .file(features_path)?;
    ctx.ensure(Dir::Cache, &vec_name, &vec_stage, vec_key, |path| {
        let err = StageErr(&vec_stage);
        let ubm = read_gmm(&ubm_path)?;
        let tv = read_tv(&tv_path, &ubm_path)?;
        let feats = load_feature_map(features_path, corpus)?;
        let mut vectors = Vec::with_capacity(feats.len());
        for feat in feats.values() {
            let stats = accumulate_bw_stats(&ubm, feat).map_err(|e| err.of(e))?;
            vectors.push(extract_ivector(&tv, &stats).map_err(|e| err.of(e))?);
        }
        write_vector_archive(path, &vectors)?;
        Ok(())
    })
}

/// Trains spherical normalization plus PLDA on the background vectors and
/// scores every trial; shared by all three vector-based systems.
fn ensure_plda_scores(
    ctx: &Ctx,
    corpus: &Corpus,
    vectors_path: &Path,
    prefix: &str,
    score_name: &str,
    trials_path: &Path,
    trials: &TrialList,
) -> Result<PathBuf, PipelineError> {
    let plda_stage = format!("{prefix}train-plda");
    let plda_name = format!("{prefix}plda.plda");
    let plda_seed = ctx.seed_of(&format!("{prefix}plda"));
    let plda_cfg = &ctx.cfg.plda;
    let plda_key = StageKey::new(&plda_stage)
        .text(
            "plda",
            &toml::to_string(plda_cfg).expect("plda section serializes"),
        )
        .text("corpus", &corpus.digest)
        .seed(plda_seed)
        .file(vectors_path)?;
    let plda_path = ctx.ensure(Dir::Cache, &plda_name, &plda_stage, plda_key, |path| {
        let err = StageErr(&plda_stage);
        let vectors = vector_map(vectors_path)?;
        let (classes, _count) = corpus.background_pair_classes();
        let mut raw = Vec::with_capacity(corpus.background.len());
        for id in &corpus.background {
            raw.push(vector_of(&vectors, id, vectors_path)?.clone());
        }
        let norm = train_spherical_norm(&raw, plda_cfg.spherical_iters).map_err(|e| err.of(e))?;
        let mut normalized = Vec::with_capacity(raw.len());
        for w in &raw {
            normalized.push(apply_spherical_norm(&norm, w).map_err(|e| err.of(e))?);
        }
        let (plda, _log) =
            train_plda(&normalized, &classes, plda_cfg.em_iters, plda_seed).map_err(|e| err.of(e))?;
        write_plda(path, &plda, &norm)?;
        Ok(())
    })?;

    let score_stage = format!("{prefix}score-plda");
    let score_key = StageKey::new(&score_stage)
        .text("corpus", &corpus.digest)
        .file(&plda_path)?
        .file(vectors_path)?
        .file(trials_path)?;
    ctx.ensure(Dir::Out, score_name, &score_stage, score_key, |path| {
        let err = StageErr(&score_stage);
        let (plda, norm) = read_plda(&plda_path)?;
        let vectors = vector_map(vectors_path)?;
        let mut model_vecs: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
        for (model, utts) in &corpus.enroll {
            let mut raw = Vec::with_capacity(utts.len());
            for utt in utts {
                raw.push(IVector {
                    id: model.clone(),
                    w: vector_of(&vectors, utt, vectors_path)?.clone(),
                });
            }
            let avg = enroll_average(&raw, model).map_err(|e| err.of(e))?;
            model_vecs.insert(model, apply_spherical_norm(&norm, &avg.w).map_err(|e| err.of(e))?);
        }
        let mut test_vecs: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
        for utt in &corpus.test {
            let w = apply_spherical_norm(&norm, vector_of(&vectors, utt, vectors_path)?)
                .map_err(|e| err.of(e))?;
            test_vecs.insert(utt, w);
        }
        let mut scores = Vec::with_capacity(trials.len());
        for trial in trials.trials() {
            let e = &model_vecs[trial.model.as_str()];
            let t = &test_vecs[trial.utterance.as_str()];
            scores.push(plda_score(&plda, e, t).map_err(|e| err.of(e))?);
        }
        let set = ScoreSet::new(trials.clone(), scores).map_err(|e| err.of(e))?;
        write_scores(path, &set)?;
        Ok(())
    })
}

fn vector_map(path: &Path) -> Result<BTreeMap<String, Vec<f64>>, PipelineError> {
    let list = read_vector_archive(path)?;
    let mut map = BTreeMap::new();
    for v in list {
        if map.insert(v.id.clone(), v.w).is_some() {
            return Err(PipelineError::corpus(format!(
                "{}: duplicate vector id in archive",
                path.display()
            )));
        }
    }
    Ok(map)
}

fn vector_of<'m>(
    map: &'m BTreeMap<String, Vec<f64>>,
    id: &str,
    path: &Path,
) -> Result<&'m Vec<f64>, PipelineError> {
    map.get(id).ok_or_else(|| {
        PipelineError::corpus(format!(
            "{}: utterance {} missing from the vector archive",
            path.display(),
            id
        ))
    })
}

// ---------------------------------------------------------------------------
// Bottleneck chain

/// Weak-label plan for BN training: per-utterance labels over the background
/// stream plus keep-masks for frames excluded from training.
struct BnLabelPlan {
    primary: LabelSet,
    secondary: Option<LabelSet>,
    /// Keep-mask per utterance; utterances absent keep every frame.
    masks: BTreeMap<String, Vec<bool>>,
}

fn build_bn_labels(
    ctx: &Ctx,
    corpus: &Corpus,
    feats: &BTreeMap<String, FeatureMatrix>,
) -> Result<BnLabelPlan, PipelineError> {
    let bn = &ctx.cfg.bn;
    let err = StageErr("bn-labels");
    match bn.task {
        BnTask::Spkr | BnTask::SpkrPhrase => {
            let (spk_classes, spk_count) = corpus.background_speaker_classes();
            let mut primary = LabelSet::new(LabelTask::Speaker, spk_count);
            for (id, class) in corpus.background.iter().zip(&spk_classes) {
                primary.insert(id.clone(), vec![*class; feats[id].num_frames()]);
            }
            let secondary = if bn.task == BnTask::SpkrPhrase {
                let (phr_classes, phr_count) = corpus.background_phrase_classes();
                let mut set = LabelSet::new(LabelTask::Phrase, phr_count);
                for (id, class) in corpus.background.iter().zip(&phr_classes) {
                    set.insert(id.clone(), vec![*class; feats[id].num_frames()]);
                }
                Some(set)
            } else {
                None
            };
            Ok(BnLabelPlan {
                primary,
                secondary,
                masks: BTreeMap::new(),
            })
        }
        BnTask::Phone => {
            let table_path = bn.phone_table.as_ref().expect("validated phone task");
            let labels_path = bn.phone_labels.as_ref().expect("validated phone task");
            let table = parse_class_table(table_path)?;
            let raw = read_labels(labels_path, LabelTask::Phone, Some(table.len()))?;
            let mut primary = LabelSet::new(LabelTask::Phone, table.len());
            let mut masks = BTreeMap::new();
            for id in &corpus.background {
                let labels = raw.get(id).ok_or_else(|| {
                    err.of(format!(
                        "{}: no phone labels for background utterance {}",
                        labels_path.display(),
                        id
                    ))
                })?;
                let frames = feats[id].num_frames();
                if labels.len() != frames {
                    return Err(err.of(format!(
                        "{}: utterance {} has {} labels but {} feature frames",
                        labels_path.display(),
                        id,
                        labels.len(),
                        frames
                    )));
                }
                let mask = table.speech_mask(labels);
                let kept: Vec<usize> = labels
                    .iter()
                    .zip(&mask)
                    .filter(|(_, &keep)| keep)
                    .map(|(&l, _)| l)
                    .collect();
                primary.insert(id.clone(), kept);
                masks.insert(id.clone(), mask);
            }
            Ok(BnLabelPlan {
                primary,
                secondary: None,
                masks,
            })
        }
        BnTask::Stcl => {
            let order = shuffle_utterance_order(
                corpus.background.len(),
                ctx.seed_of("stcl-order"),
            );
            let stream: Vec<(String, usize)> = order
                .iter()
                .map(|&i| {
                    let id = corpus.background[i].clone();
                    let frames = feats[&id].num_frames();
                    (id, frames)
                })
                .collect();
            let tcl_cfg = bn.tcl.to_core();
            let (mut primary, dropped) = stcl_labels(&stream, &tcl_cfg).map_err(|e| err.of(e))?;
            let mut masks = BTreeMap::new();
            if dropped > 0 {
                // The trailing partial chunk is excluded from training: trim
                // frames from the stream's end, possibly across utterances.
                let mut remaining = dropped;
                for (id, frames) in stream.iter().rev() {
                    if remaining == 0 {
                        break;
                    }
                    let cut = remaining.min(*frames);
                    let keep = frames - cut;
                    let mut labels = primary.get(id).expect("labeled utterance").to_vec();
                    labels.truncate(keep);
                    primary.insert(id.clone(), labels);
                    let mut mask = vec![true; *frames];
                    for slot in mask.iter_mut().skip(keep) {
                        *slot = false;
                    }
                    masks.insert(id.clone(), mask);
                    remaining -= cut;
                }
            }
            Ok(BnLabelPlan {
                primary,
                secondary: None,
                masks,
            })
        }
        BnTask::Utcl => {
            let stream: Vec<(String, usize)> = corpus
                .background
                .iter()
                .map(|id| (id.clone(), feats[id].num_frames()))
                .collect();
            let primary = utcl_labels(&stream, &bn.tcl.to_core()).map_err(|e| err.of(e))?;
            Ok(BnLabelPlan {
                primary,
                secondary: None,
                masks: BTreeMap::new(),
            })
        }
    }
}

/// Stage-key fragment covering exactly the inputs that shape BN labels.
fn bn_label_key(ctx: &Ctx, corpus: &Corpus, features_path: &Path) -> Result<StageKey, PipelineError> {
    let bn = &ctx.cfg.bn;
    let mut key = StageKey::new("bn-labels")
        .text("task", bn.task.key())
        .text("corpus", &corpus.digest)
        .file(features_path)?;
    match bn.task {
        BnTask::Spkr | BnTask::SpkrPhrase => {}
        BnTask::Phone => {
            key = key
                .file(bn.phone_labels.as_ref().expect("validated phone task"))?
                .file(bn.phone_table.as_ref().expect("validated phone task"))?;
        }
        BnTask::Stcl => {
            key = key
                .text("tcl", &toml::to_string(&bn.tcl).expect("tcl section serializes"))
                .seed(ctx.seed_of("stcl-order"));
        }
        BnTask::Utcl => {
            key = key.text(
                "tcl",
                &toml::to_string(&bn.tcl).expect("tcl section serializes"),
            );
        }
    }
    Ok(key)
}

/// Trains the bottleneck network (with its PCA projection) and extracts the
/// projected deep-feature archive for every corpus utterance.
fn ensure_bn_features(
    ctx: &Ctx,
    corpus: &Corpus,
    feats: &BTreeMap<String, FeatureMatrix>,
    features_path: &Path,
) -> Result<PathBuf, PipelineError> {
    let bn = &ctx.cfg.bn;
    let plan = build_bn_labels(ctx, corpus, feats)?;

    let label_key = bn_label_key(ctx, corpus, features_path)?;
    let primary_task = plan.primary.task;
    let primary_classes = plan.primary.num_classes;
    let primary_path = {
        let set = &plan.primary;
        ctx.ensure(Dir::Cache, "bn-labels.txt", "bn-labels", label_key, |path| {
            write_labels(path, set)?;
            Ok(())
        })?
    };
    let secondary_path = match &plan.secondary {
        Some(set) => {
            let key = bn_label_key(ctx, corpus, features_path)?.text("head", "secondary");
            Some((
                ctx.ensure(
                    Dir::Cache,
                    "bn-labels-secondary.txt",
                    "bn-labels",
                    key,
                    |path| {
                        write_labels(path, set)?;
                        Ok(())
                    },
                )?,
                set.task,
                set.num_classes,
            ))
        }
        None => None,
    };

    let primary = read_labels(&primary_path, primary_task, Some(primary_classes))?;
    let secondary = match &secondary_path {
        Some((path, task, classes)) => Some(read_labels(path, *task, Some(*classes))?),
        None => None,
    };

    let bn_seed = ctx.seed_of("bn");
    let mut net_key = StageKey::new("train-bn")
        .text("bn", &toml::to_string(bn).expect("bn section serializes"))
        .text("corpus", &corpus.digest)
        .seed(bn_seed)
        .file(features_path)?
        .file(&primary_path)?;
    if let Some((path, _, _)) = &secondary_path {
        net_key = net_key.file(path)?;
    }
    let net_path = ctx.ensure(Dir::Cache, "bn.nnet", "train-bn", net_key, |path| {
        let err = StageErr("train-bn");
        let mut train_feats = Vec::with_capacity(corpus.background.len());
        for id in &corpus.background {
            let feat = &feats[id];
            match plan.masks.get(id) {
                Some(mask) => {
                    let kept = feat.select_rows(mask);
                    if kept.num_frames() > 0 {
                        train_feats.push(kept);
                    }
                }
                None => train_feats.push(feat.clone()),
            }
        }
        let (net, _loss) = train_bn_dnn(
            &train_feats,
            &primary,
            secondary.as_ref(),
            &bn.to_train_config(),
            bn_seed,
        )
        .map_err(|e| err.of(e))?;
        let tap = bn.tap_layer();
        let mut deep = Vec::with_capacity(train_feats.len());
        for feat in &train_feats {
            deep.push(extract_deep_features(&net, feat, tap, bn.post_activation).map_err(|e| err.of(e))?);
        }
        let pca = train_pca(&deep, bn.pca_dim).map_err(|e| err.of(e))?;
        write_network(
            path,
            &NetworkFile::Mlp {
                net,
                projection: Some(BnProjection {
                    pca,
                    layer: tap,
                    post_activation: bn.post_activation,
                }),
            },
        )?;
        Ok(())
    })?;

    let ark_key = StageKey::new("extract-bn")
        .text("corpus", &corpus.digest)
        .file(&net_path)?
        .file(features_path)?;
    ctx.ensure(Dir::Cache, "bn-features.ark", "extract-bn", ark_key, |path| {
        let err = StageErr("extract-bn");
        let (net, projection) = match read_network(&net_path)? {
            NetworkFile::Mlp { net, projection } => (net, projection),
            NetworkFile::Xvector(_) => {
                return Err(err.of("bn.nnet holds an x-vector network"));
            }
        };
        let projection =
            projection.ok_or_else(|| err.of("bn.nnet carries no bottleneck projection"))?;
        let mut out = Vec::with_capacity(feats.len());
        for feat in feats.values() {
            let deep =
                extract_deep_features(&net, feat, projection.layer, projection.post_activation)
                    .map_err(|e| err.of(e))?;
            out.push(project_pca(&projection.pca, &deep).map_err(|e| err.of(e))?);
        }
        write_feature_archive(path, &out)?;
        Ok(())
    })
}

// ---------------------------------------------------------------------------
// x-vector chain

fn ensure_xvectors(
    ctx: &Ctx,
    corpus: &Corpus,
    feats: &BTreeMap<String, FeatureMatrix>,
    features_path: &Path,
) -> Result<PathBuf, PipelineError> {
    let xv_cfg = &ctx.cfg.xvector;
    let xv_seed = ctx.seed_of("xvector");
    let net_key = StageKey::new("train-xvector")
        .text(
            "xvector",
            &toml::to_string(xv_cfg).expect("xvector section serializes"),
        )
        .text("corpus", &corpus.digest)
        .seed(xv_seed)
        .file(features_path)?;
    let net_path = ctx.ensure(Dir::Cache, "xvector.nnet", "train-xvector", net_key, |path| {
        let err = StageErr("train-xvector");
        let background = background_features(corpus, feats);
        let (classes, count) = corpus.background_pair_classes();
        let (net, _log) =
            train_xvector_net(&background, &classes, count, &xv_cfg.to_core(), xv_seed)
                .map_err(|e| err.of(e))?;
        write_network(path, &NetworkFile::Xvector(net))?;
        Ok(())
    })?;

    let vec_key = StageKey::new("extract-xvector")
        .text("corpus", &corpus.digest)
        .file(&net_path)?
        .file(features_path)?;
    ctx.ensure(Dir::Cache, "xvectors.vec", "extract-xvector", vec_key, |path| {
        let err = StageErr("extract-xvector");
        let net = match read_network(&net_path)? {
            NetworkFile::Xvector(net) => net,
            NetworkFile::Mlp { .. } => {
                return Err(err.of("xvector.nnet holds a bottleneck network"));
            }
        };
        let mut vectors = Vec::with_capacity(feats.len());
        for feat in feats.values() {
            vectors.push(extract_xvector(&net, feat).map_err(|e| err.of(e))?);
        }
        write_vector_archive(path, &vectors)?;
        Ok(())
    })
}

// ---------------------------------------------------------------------------
// Report

pub(crate) fn render_report(experiment: &str, entries: &[(String, MetricReport)]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "tdsv evaluation report");
    let _ = writeln!(s, "experiment: {experiment}");
    for (system, rep) in entries {
        let _ = writeln!(s);
        let _ = writeln!(s, "system {system}");
        let _ = writeln!(
            s,
            "  {:<18} {:>9} {:>10} {:>12}",
            "trial-type", "eer%", "min-dcf", "threshold"
        );
        for (ty, row) in &rep.per_type {
            let _ = writeln!(
                s,
                "  {:<18} {:>9.4} {:>10.6} {:>12.6}",
                ty.as_str(),
                row.eer * 100.0,
                row.min_dcf,
                row.threshold
            );
        }
        for ty in &rep.absent {
            let _ = writeln!(s, "  {:<18} {:>9}", ty.as_str(), "absent");
        }
        let _ = writeln!(
            s,
            "  {:<18} {:>9.4} {:>10.6} {:>12.6}",
            "pooled",
            rep.pooled.eer * 100.0,
            rep.pooled.min_dcf,
            rep.pooled.threshold
        );
        let _ = writeln!(
            s,
            "  {:<18} {:>9.4} {:>10.6}",
            "average",
            rep.average_eer * 100.0,
            rep.average_min_dcf
        );
    }
    s
}

// ---------------------------------------------------------------------------
// Driver

pub fn run_pipeline(
    cfg: &ExperimentConfig,
    opts: &RunOptions,
) -> Result<RunOutcome, PipelineError> {
    cfg.validate()?;
    let ctx = Ctx::new(cfg, opts)?;

    let (corpus, features_path) = ensure_features(&ctx)?;
    let feats = load_feature_map(&features_path, &corpus)?;
    let trials_path = ensure_trials(&ctx, &corpus)?;
    let trials = read_trials(&trials_path)?;

    let mut score_paths: Vec<(String, PathBuf)> = Vec::new();
    for system in &cfg.experiment.systems {
        let path = match system {
            SystemKind::GmmUbm => ensure_gmm_ubm_scores(
                &ctx,
                &corpus,
                &feats,
                &features_path,
                &trials_path,
                &trials,
            )?,
            SystemKind::IvectorPlda => {
                let vectors = ensure_ivectors(&ctx, &corpus, &features_path, "")?;
                ensure_plda_scores(
                    &ctx,
                    &corpus,
                    &vectors,
                    "",
                    "ivector-plda.score",
                    &trials_path,
                    &trials,
                )?
            }
            SystemKind::XvectorPlda => {
                let vectors = ensure_xvectors(&ctx, &corpus, &feats, &features_path)?;
                ensure_plda_scores(
                    &ctx,
                    &corpus,
                    &vectors,
                    "xvector-",
                    "xvector-plda.score",
                    &trials_path,
                    &trials,
                )?
            }
            SystemKind::BnIvectorPlda => {
                let bn_ark = ensure_bn_features(&ctx, &corpus, &feats, &features_path)?;
                let vectors = ensure_ivectors(&ctx, &corpus, &bn_ark, "bn-")?;
                ensure_plda_scores(
                    &ctx,
                    &corpus,
                    &vectors,
                    "bn-",
                    "bn-ivector-plda.score",
                    &trials_path,
                    &trials,
                )?
            }
        };
        score_paths.push((system.key().to_string(), path));
    }

    for group in &cfg.experiment.fusion {
        let keys: Vec<&str> = group.iter().map(|s| s.key()).collect();
        let name = format!("fused-{}.score", keys.join("+"));
        let mut sets = Vec::with_capacity(group.len());
        let mut key = StageKey::new("fuse").text("systems", &keys.join("+"));
        for member in group {
            let member_key = member.key();
            let path = score_paths
                .iter()
                .find(|(k, _)| k == member_key)
                .map(|(_, p)| p.clone())
                .expect("validated fusion member was scored");
            key = key.file(&path)?;
            sets.push(read_scores(&path)?);
        }
        let path = ctx.ensure(Dir::Out, &name, "fuse", key, |path| {
            let fused = fuse_scores(&sets, None).map_err(|e| StageErr("fuse").of(e))?;
            write_scores(path, &fused)?;
            Ok(())
        })?;
        score_paths.push((format!("fused-{}", keys.join("+")), path));
    }

    let mut reports = Vec::with_capacity(score_paths.len());
    for (name, path) in &score_paths {
        let set = read_scores(path)?;
        let rep = report(&set).map_err(|e| StageErr("evaluate").of(e))?;
        let det_name = format!("{name}.det");
        let det_key = StageKey::new("det").file(path)?;
        let det = rep.pooled.det.clone();
        ctx.ensure(Dir::Out, &det_name, "det", det_key, |p| {
            write_det_points(p, &det)?;
            Ok(())
        })?;
        reports.push((name.clone(), rep));
    }

    let report_text = render_report(&cfg.experiment.name, &reports);
    let mut report_key = StageKey::new("report").text("experiment", &cfg.experiment.name);
    for (_, path) in &score_paths {
        report_key = report_key.file(path)?;
    }
    let text = report_text.clone();
    let report_path = ctx.ensure(Dir::Out, "report.txt", "report", report_key, |path| {
        fs::write(path, &text).map_err(io_err(path))?;
        Ok(())
    })?;

    Ok(RunOutcome {
        reports,
        score_paths,
        report_path,
        report_text,
    })
}

// ---------------------------------------------------------------------------
