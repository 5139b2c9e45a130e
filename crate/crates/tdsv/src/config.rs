//! Experiment configuration: a TOML file with one section per stage.
//! Unknown keys are rejected, every parameter has the documented default,
//! and a parsed config serializes back to an equivalent file.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tdsv_core::frontend::FrontendConfig;
use tdsv_core::nnet::{Activation, MlpTrainConfig, XvectorConfig};
use tdsv_core::tcl::TclConfig;

use crate::synth::SyntheticCorpusSpec;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("invalid config: {reason}")]
    Invalid { reason: String },
}

fn invalid(reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        reason: reason.into(),
    }
}

/// The four back-ends an experiment can run. Keys double as artifact file
/// stems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SystemKind {
    #[serde(rename = "gmm-ubm")]
    GmmUbm,
    #[serde(rename = "ivector-plda")]
    IvectorPlda,
    #[serde(rename = "xvector-plda")]
    XvectorPlda,
    #[serde(rename = "bn-ivector-plda")]
    BnIvectorPlda,
}

impl SystemKind {
    pub fn key(&self) -> &'static str {
        match self {
            SystemKind::GmmUbm => "gmm-ubm",
            SystemKind::IvectorPlda => "ivector-plda",
            SystemKind::XvectorPlda => "xvector-plda",
            SystemKind::BnIvectorPlda => "bn-ivector-plda",
        }
    }
}

impl core::fmt::Display for SystemKind {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.key())
    }
}

/// Which frame labels supervise the bottleneck network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BnTask {
    #[serde(rename = "spkr")]
    Spkr,
    #[serde(rename = "spkr+phrase")]
    SpkrPhrase,
    #[serde(rename = "phone")]
    Phone,
    #[serde(rename = "stcl")]
    Stcl,
    #[serde(rename = "utcl")]
    Utcl,
}

impl BnTask {
    pub fn key(&self) -> &'static str {
        match self {
            BnTask::Spkr => "spkr",
            BnTask::SpkrPhrase => "spkr+phrase",
            BnTask::Phone => "phone",
            BnTask::Stcl => "stcl",
            BnTask::Utcl => "utcl",
        }
    }

    pub fn parse(token: &str) -> Option<Self> {
        [
            BnTask::Spkr,
            BnTask::SpkrPhrase,
            BnTask::Phone,
            BnTask::Stcl,
            BnTask::Utcl,
        ]
        .into_iter()
        .find(|t| t.key() == token)
    }
}

impl core::fmt::Display for BnTask {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.key())
    }
}

fn default_name() -> String {
    "experiment".to_string()
}
fn default_seed() -> u64 {
    42
}
fn default_systems() -> Vec<SystemKind> {
    vec![SystemKind::GmmUbm]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    #[serde(default = "default_name")]
    pub name: String,
    /// Master seed; stages draw named substreams from it.
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Directory all artifacts are written under.
    pub workdir: PathBuf,
    #[serde(default = "default_systems")]
    pub systems: Vec<SystemKind>,
    /// Groups of systems whose scores are fused with equal weights.
    #[serde(default)]
    pub fusion: Vec<Vec<SystemKind>>,
}

/// Corpus source: exactly one of `synthetic` or `wav`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SyntheticCorpusSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wav: Option<WavCorpusSection>,
}

/// Lists of `path<TAB>speaker<TAB>phrase` lines; utterance ids are file
/// stems. Background data trains the UBM, subspaces, networks, and PLDA;
/// enroll and test define the evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WavCorpusSection {
    pub background_list: PathBuf,
    pub enroll_list: PathBuf,
    pub test_list: PathBuf,
    /// Optional explicit trial list; generated from enroll × test when
    /// absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<PathBuf>,
}

fn default_window_ms() -> u32 {
    20
}
fn default_shift_ms() -> u32 {
    10
}
fn default_num_ceps() -> usize {
    19
}
fn default_pre_emphasis() -> f64 {
    0.97
}
fn default_log_floor() -> f64 {
    1e-10
}
fn default_vad_margin_db() -> f64 {
    30.0
}
fn default_vad_percentile() -> f64 {
    0.10
}
fn default_min_energy() -> f64 {
    1e-10
}
fn default_delta_window() -> usize {
    2
}
fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrontendSection {
    #[serde(default = "default_window_ms")]
    pub window_ms: u32,
    #[serde(default = "default_shift_ms")]
    pub shift_ms: u32,
    #[serde(default = "default_num_ceps")]
    pub num_ceps: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_filters: Option<usize>,
    #[serde(default = "default_pre_emphasis")]
    pub pre_emphasis: f64,
    #[serde(default = "default_log_floor")]
    pub log_floor: f64,
    #[serde(default = "default_vad_margin_db")]
    pub vad_margin_db: f64,
    #[serde(default = "default_vad_percentile")]
    pub vad_percentile: f64,
    #[serde(default = "default_min_energy")]
    pub min_energy: f64,
    #[serde(default = "default_delta_window")]
    pub delta_window: usize,
    /// Utterance-level cepstral mean and variance normalization.
    #[serde(default = "default_true")]
    pub cmvn: bool,
}

impl Default for FrontendSection {
    fn default() -> Self {
        toml::from_str("").expect("empty frontend section fills from defaults")
    }
}

impl FrontendSection {
    pub fn to_core(&self) -> FrontendConfig {
        FrontendConfig {
            window_ms: self.window_ms,
            shift_ms: self.shift_ms,
            num_ceps: self.num_ceps,
            num_filters: self.num_filters,
            pre_emphasis: self.pre_emphasis,
            log_floor: self.log_floor,
            vad_margin_db: self.vad_margin_db,
            vad_percentile: self.vad_percentile,
            min_energy: self.min_energy,
            delta_window: self.delta_window,
        }
    }
}

fn default_ubm_components() -> usize {
    512
}
fn default_ubm_em_iters() -> usize {
    10
}
fn default_map_relevance() -> f64 {
    10.0
}
fn default_map_iters() -> usize {
    3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UbmSection {
    #[serde(default = "default_ubm_components")]
    pub components: usize,
    #[serde(default = "default_ubm_em_iters")]
    pub em_iters: usize,
    #[serde(default = "default_map_relevance")]
    pub map_relevance: f64,
    #[serde(default = "default_map_iters")]
    pub map_iters: usize,
}

impl Default for UbmSection {
    fn default() -> Self {
        toml::from_str("").expect("empty ubm section fills from defaults")
    }
}

fn default_tv_rank() -> usize {
    400
}
fn default_tv_em_iters() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IvectorSection {
    #[serde(default = "default_tv_rank")]
    pub rank: usize,
    #[serde(default = "default_tv_em_iters")]
    pub em_iters: usize,
}

impl Default for IvectorSection {
    fn default() -> Self {
        toml::from_str("").expect("empty ivector section fills from defaults")
    }
}

fn default_plda_em_iters() -> usize {
    10
}
fn default_spherical_iters() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PldaSection {
    #[serde(default = "default_plda_em_iters")]
    pub em_iters: usize,
    #[serde(default = "default_spherical_iters")]
    pub spherical_iters: usize,
}

impl Default for PldaSection {
    fn default() -> Self {
        toml::from_str("").expect("empty plda section fills from defaults")
    }
}

fn default_tcl_classes() -> usize {
    10
}
fn default_tcl_chunk() -> usize {
    6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TclSection {
    #[serde(default = "default_tcl_classes")]
    pub classes: usize,
    #[serde(default = "default_tcl_chunk")]
    pub chunk: usize,
    #[serde(default)]
    pub drop_partial: bool,
}

impl Default for TclSection {
    fn default() -> Self {
        toml::from_str("").expect("empty tcl section fills from defaults")
    }
}

impl TclSection {
    pub fn to_core(&self) -> TclConfig {
        TclConfig {
            classes: self.classes,
            chunk: self.chunk,
            drop_partial: self.drop_partial,
        }
    }
}

fn default_bn_task() -> BnTask {
    BnTask::SpkrPhrase
}
fn default_gamma() -> f64 {
    0.5
}
fn default_bn_depth() -> usize {
    7
}
fn default_bn_width() -> usize {
    1024
}
fn default_epochs() -> usize {
    25
}
fn default_lr_start() -> f64 {
    0.8
}
fn default_lr_end() -> f64 {
    0.08
}
fn default_batch_size() -> usize {
    256
}
fn default_pca_dim() -> usize {
    57
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BnSection {
    #[serde(default = "default_bn_task")]
    pub task: BnTask,
    /// Primary-head weight in the dual-task loss; the spkr+phrase task uses
    /// γ for the speaker head and 1−γ for the phrase head.
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_bn_depth")]
    pub depth: usize,
    #[serde(default = "default_bn_width")]
    pub width: usize,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_lr_start")]
    pub lr_start: f64,
    #[serde(default = "default_lr_end")]
    pub lr_end: f64,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    /// 1-based hidden layer the deep features are tapped from. Defaults to
    /// layer 4 for speaker-supervised tasks and layer 2 for phone and TCL
    /// tasks, clamped to the stack depth.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layer: Option<usize>,
    /// Tap after the nonlinearity rather than before it.
    #[serde(default = "default_true")]
    pub post_activation: bool,
    #[serde(default = "default_pca_dim")]
    pub pca_dim: usize,
    /// Ingested frame labels for the phone task.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phone_labels: Option<PathBuf>,
    /// Class-name table for the phone task; sil and pause frames are
    /// dropped.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phone_table: Option<PathBuf>,
    #[serde(default)]
    pub tcl: TclSection,
}

impl Default for BnSection {
    fn default() -> Self {
        toml::from_str("").expect("empty bn section fills from defaults")
    }
}

impl BnSection {
    /// Tap layer with the per-task default applied.
    pub fn tap_layer(&self) -> usize {
        self.layer.unwrap_or_else(|| {
            let preferred = match self.task {
                BnTask::Spkr | BnTask::SpkrPhrase => 4,
                BnTask::Phone | BnTask::Stcl | BnTask::Utcl => 2,
            };
            preferred.min(self.depth)
        })
    }

    pub fn to_train_config(&self) -> MlpTrainConfig {
        MlpTrainConfig {
            depth: self.depth,
            width: self.width,
            hidden_act: Activation::Sigmoid,
            lr_start: self.lr_start,
            lr_end: self.lr_end,
            epochs: self.epochs,
            batch_size: self.batch_size,
            gamma: self.gamma,
        }
    }
}

fn default_frame_width() -> usize {
    512
}
fn default_contexts() -> Vec<usize> {
    vec![2, 2, 3, 0, 0]
}
fn default_embedding_dim() -> usize {
    400
}
fn default_segment_width() -> usize {
    400
}
fn default_min_chunk() -> usize {
    50
}
fn default_max_chunk() -> usize {
    150
}
fn default_batch_chunks() -> usize {
    32
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct XvectorSection {
    #[serde(default = "default_frame_width")]
    pub frame_width: usize,
    #[serde(default = "default_contexts")]
    pub contexts: Vec<usize>,
    #[serde(default = "default_embedding_dim")]
    pub embedding_dim: usize,
    #[serde(default = "default_segment_width")]
    pub segment_width: usize,
    /// Segment layer the embedding is tapped from, pre-activation.
    #[serde(default)]
    pub embedding_layer: usize,
    #[serde(default = "default_min_chunk")]
    pub min_chunk: usize,
    #[serde(default = "default_max_chunk")]
    pub max_chunk: usize,
    #[serde(default = "default_batch_chunks")]
    pub batch_chunks: usize,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_lr_start")]
    pub lr_start: f64,
    #[serde(default = "default_lr_end")]
    pub lr_end: f64,
}

impl Default for XvectorSection {
    fn default() -> Self {
        toml::from_str("").expect("empty xvector section fills from defaults")
    }
}

impl XvectorSection {
    pub fn to_core(&self) -> XvectorConfig {
        XvectorConfig {
            frame_width: self.frame_width,
            contexts: self.contexts.clone(),
            embedding_dim: self.embedding_dim,
            segment_width: self.segment_width,
            embedding_layer: self.embedding_layer,
            activation: Activation::Relu,
            min_chunk: self.min_chunk,
            max_chunk: self.max_chunk,
            batch_chunks: self.batch_chunks,
            epochs: self.epochs,
            lr_start: self.lr_start,
            lr_end: self.lr_end,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    pub corpus: CorpusSection,
    #[serde(default)]
    pub frontend: FrontendSection,
    #[serde(default)]
    pub ubm: UbmSection,
    #[serde(default)]
    pub ivector: IvectorSection,
    #[serde(default)]
    pub plda: PldaSection,
    #[serde(default)]
    pub bn: BnSection,
    #[serde(default)]
    pub xvector: XvectorSection,
}

impl ExperimentConfig {
    pub fn from_str_validated(text: &str, origin: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: origin.to_string(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let p = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io { path: p.clone(), source: e })?;
        Self::from_str_validated(&text, &p)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Hex SHA-256 of the serialized config; stamped on every artifact.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let digest = Sha256::digest(self.to_toml_string().as_bytes());
        let mut out = String::with_capacity(64);
        for b in digest {
            use core::fmt::Write;
            write!(out, "{b:02x}").expect("hex formatting");
        }
        out
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let e = &self.experiment;
        if e.workdir.as_os_str().is_empty() {
            return Err(invalid("experiment.workdir is empty"));
        }
        if e.systems.is_empty() {
            return Err(invalid("experiment.systems is empty"));
        }
        let unique: BTreeSet<_> = e.systems.iter().collect();
        if unique.len() != e.systems.len() {
            return Err(invalid("experiment.systems lists a system twice"));
        }
        for group in &e.fusion {
            if group.len() < 2 {
                return Err(invalid("a fusion group needs at least 2 systems"));
            }
            let distinct: BTreeSet<_> = group.iter().collect();
            if distinct.len() != group.len() {
                return Err(invalid("a fusion group lists a system twice"));
            }
            for sys in group {
                if !e.systems.contains(sys) {
                    return Err(invalid(format!(
                        "fusion group references `{sys}` which is not in experiment.systems"
                    )));
                }
            }
        }

        match (&self.corpus.synthetic, &self.corpus.wav) {
            (None, None) => return Err(invalid("corpus needs a `synthetic` or `wav` table")),
            (Some(_), Some(_)) => {
                return Err(invalid("corpus has both `synthetic` and `wav` tables"));
            }
            (Some(spec), None) => spec.validate().map_err(invalid)?,
            (None, Some(wav)) => {
                let paths = [&wav.background_list, &wav.enroll_list, &wav.test_list];
                let distinct: BTreeSet<_> = paths.iter().collect();
                if distinct.len() != paths.len() {
                    return Err(invalid("corpus.wav lists must be distinct paths"));
                }
            }
        }

        let f = &self.frontend;
        if f.shift_ms == 0 || f.window_ms < f.shift_ms {
            return Err(invalid("frontend needs window_ms >= shift_ms >= 1"));
        }
        if f.num_ceps == 0 {
            return Err(invalid("frontend.num_ceps must be >= 1"));
        }
        if let Some(nf) = f.num_filters {
            if nf <= f.num_ceps {
                return Err(invalid("frontend.num_filters must exceed num_ceps"));
            }
        }
        if !(0.0..1.0).contains(&f.pre_emphasis) {
            return Err(invalid("frontend.pre_emphasis must be in [0, 1)"));
        }
        if !(0.0..=1.0).contains(&f.vad_percentile) {
            return Err(invalid("frontend.vad_percentile must be in [0, 1]"));
        }
        if f.log_floor <= 0.0 || f.min_energy < 0.0 || f.vad_margin_db < 0.0 {
            return Err(invalid("frontend energy floors must be positive"));
        }
        if f.delta_window == 0 {
            return Err(invalid("frontend.delta_window must be >= 1"));
        }

        if self.ubm.components == 0 || self.ubm.em_iters == 0 || self.ubm.map_iters == 0 {
            return Err(invalid("ubm counts must be >= 1"));
        }
        if !self.ubm.map_relevance.is_finite() || self.ubm.map_relevance <= 0.0 {
            return Err(invalid("ubm.map_relevance must be positive"));
        }
        if self.ivector.rank == 0 || self.ivector.em_iters == 0 {
            return Err(invalid("ivector counts must be >= 1"));
        }
        if self.plda.em_iters == 0 {
            return Err(invalid("plda.em_iters must be >= 1"));
        }

        let bn = &self.bn;
        if !(0.0..=1.0).contains(&bn.gamma) {
            return Err(invalid("bn.gamma must be in [0, 1]"));
        }
        if bn.depth == 0 || bn.width == 0 || bn.epochs == 0 || bn.batch_size == 0 {
            return Err(invalid("bn counts must be >= 1"));
        }
        if bn.lr_start < bn.lr_end || bn.lr_end <= 0.0 {
            return Err(invalid("bn needs lr_start >= lr_end > 0"));
        }
        let tap = bn.tap_layer();
        if tap == 0 || tap > bn.depth {
            return Err(invalid(format!(
                "bn.layer {tap} outside 1..={}",
                bn.depth
            )));
        }
        if bn.pca_dim == 0 || bn.pca_dim > bn.width {
            return Err(invalid("bn.pca_dim must be in 1..=bn.width"));
        }
        if bn.tcl.classes < 2 {
            return Err(invalid("bn.tcl.classes must be >= 2"));
        }
        if bn.tcl.chunk == 0 {
            return Err(invalid("bn.tcl.chunk must be >= 1"));
        }
        if bn.task == BnTask::Phone && (bn.phone_labels.is_none() || bn.phone_table.is_none()) {
            return Err(invalid(
                "bn task `phone` needs bn.phone_labels and bn.phone_table",
            ));
        }
        if let (Some(a), Some(b)) = (&bn.phone_labels, &bn.phone_table) {
            if a == b {
                return Err(invalid("bn.phone_labels and bn.phone_table must differ"));
            }
        }

        let xv = &self.xvector;
        if xv.contexts.is_empty() {
            return Err(invalid("xvector.contexts is empty"));
        }
        if xv.frame_width == 0 || xv.embedding_dim == 0 || xv.segment_width == 0 {
            return Err(invalid("xvector widths must be >= 1"));
        }
        if xv.embedding_layer > 1 {
            return Err(invalid("xvector.embedding_layer must be 0 or 1"));
        }
        if xv.min_chunk == 0 || xv.max_chunk < xv.min_chunk {
            return Err(invalid("xvector needs max_chunk >= min_chunk >= 1"));
        }
        if xv.batch_chunks == 0 || xv.epochs == 0 {
            return Err(invalid("xvector counts must be >= 1"));
        }
        if xv.lr_start < xv.lr_end || xv.lr_end <= 0.0 {
            return Err(invalid("xvector needs lr_start >= lr_end > 0"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> &'static str {
        "[experiment]\nworkdir = \"build/exp\"\n\n[corpus.synthetic]\nspeakers = 4\nphrases = 2\n"
    }

    #[test]
    fn minimal_config_fills_documented_defaults() {
        let cfg = ExperimentConfig::from_str_validated(minimal(), "test").unwrap();
        assert_eq!(cfg.experiment.seed, 42);
        assert_eq!(cfg.experiment.systems, vec![SystemKind::GmmUbm]);
        assert_eq!(cfg.frontend.num_ceps, 19);
        assert_eq!(cfg.frontend.window_ms, 20);
        assert_eq!(cfg.frontend.shift_ms, 10);
        assert_eq!(cfg.ubm.components, 512);
        assert_eq!(cfg.ubm.map_relevance, 10.0);
        assert_eq!(cfg.ubm.map_iters, 3);
        assert_eq!(cfg.ivector.rank, 400);
        assert_eq!(cfg.bn.depth, 7);
        assert_eq!(cfg.bn.width, 1024);
        assert_eq!(cfg.bn.gamma, 0.5);
        assert_eq!(cfg.bn.pca_dim, 57);
        assert_eq!(cfg.bn.tcl.classes, 10);
        assert_eq!(cfg.bn.tcl.chunk, 6);
        assert_eq!(cfg.xvector.contexts, vec![2, 2, 3, 0, 0]);
        assert_eq!(cfg.xvector.embedding_dim, 400);
        assert_eq!(cfg.xvector.min_chunk, 50);
        assert_eq!(cfg.xvector.max_chunk, 150);
        assert_eq!(cfg.xvector.epochs, 25);
        assert_eq!(cfg.xvector.lr_start, 0.8);
        assert_eq!(cfg.xvector.lr_end, 0.08);
    }

    #[test]
    fn round_trip_is_lossless() {
        let text = r#"
[experiment]
name = "fusion-demo"
seed = 7
workdir = "build/demo"
systems = ["gmm-ubm", "ivector-plda", "bn-ivector-plda"]
fusion = [["gmm-ubm", "ivector-plda"]]

[corpus.synthetic]
speakers = 6
phrases = 3
enroll_per_pair = 2
test_per_pair = 1
frames_per_utterance = 50
offset_scale = 1.5
trajectory_scale = 2.0
noise_scale = 0.3
background_speakers = 4
seed = 99

[frontend]
num_ceps = 12
cmvn = false

[ubm]
components = 16
em_iters = 4

[ivector]
rank = 8

[bn]
task = "utcl"
gamma = 1.0
depth = 3
width = 32
layer = 2
pca_dim = 12

[bn.tcl]
classes = 5

[xvector]
contexts = [1, 0]
embedding_dim = 8
segment_width = 8
min_chunk = 10
max_chunk = 20
"#;
        let cfg = ExperimentConfig::from_str_validated(text, "test").unwrap();
        let serialized = cfg.to_toml_string();
        let back = ExperimentConfig::from_str_validated(&serialized, "round-trip").unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = format!("{}\n[ubm]\ncomponent = 8\n", minimal());
        let err = ExperimentConfig::from_str_validated(&text, "test").unwrap_err();
        assert!(err.to_string().contains("component"), "{err}");
    }

    #[test]
    fn out_of_range_values_are_rejected() {
        let bad = [
            ("[bn]\ngamma = 1.5\n", "gamma"),
            ("[frontend]\nvad_percentile = 2.0\n", "vad_percentile"),
            ("[frontend]\nwindow_ms = 5\nshift_ms = 10\n", "window_ms"),
            ("[ubm]\nmap_relevance = -1.0\n", "map_relevance"),
            ("[xvector]\nmin_chunk = 30\nmax_chunk = 10\n", "max_chunk"),
            ("[bn]\ndepth = 2\nlayer = 5\n", "bn.layer"),
        ];
        for (section, what) in bad {
            let text = format!("{}\n{section}", minimal());
            assert!(
                ExperimentConfig::from_str_validated(&text, "test").is_err(),
                "{what} accepted"
            );
        }
    }

    #[test]
    fn tap_layer_defaults_follow_task() {
        let mut bn = BnSection::default();
        assert_eq!(bn.tap_layer(), 4);
        bn.task = BnTask::Utcl;
        assert_eq!(bn.tap_layer(), 2);
        bn.task = BnTask::Spkr;
        bn.depth = 3;
        assert_eq!(bn.tap_layer(), 3);
        bn.layer = Some(1);
        assert_eq!(bn.tap_layer(), 1);
    }

    #[test]
    fn corpus_must_pick_exactly_one_source() {
        let text = "[experiment]\nworkdir = \"w\"\n\n[corpus]\n";
        assert!(ExperimentConfig::from_str_validated(text, "test").is_err());

        let both = concat!(
            "[experiment]\nworkdir = \"w\"\n\n",
            "[corpus.synthetic]\nspeakers = 2\nphrases = 2\n\n",
            "[corpus.wav]\nbackground_list = \"a\"\nenroll_list = \"b\"\ntest_list = \"c\"\n",
        );
        assert!(ExperimentConfig::from_str_validated(both, "test").is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = ExperimentConfig::from_str_validated(minimal(), "test").unwrap();
        let mut b = a.clone();
        b.experiment.seed = 43;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
