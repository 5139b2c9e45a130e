//! Command-line interface: one subcommand per pipeline stage plus the
//! `run` umbrella that drives a whole experiment from one config file.
//!
//! Stage commands compose through files: feature archives, vector archives,
//! model files, label files, trial lists and score files. Id-list files hold
//! one utterance id per line; enrollment maps hold `model<TAB>utterance`
//! lines; class files hold `id<TAB>class-name` lines.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use tdsv_core::eval::{fuse_scores, report, ScoreSet};
use tdsv_core::gmm::{accumulate_bw_stats, gmm_log_likelihood, map_adapt, train_ubm_em};
use tdsv_core::ivector::{enroll_average, extract_ivector, train_tv_em, IVector};
use tdsv_core::nnet::{
    extract_deep_features, extract_xvector, project_pca, train_bn_dnn, train_pca,
    train_xvector_net, MlpTrainConfig, XvectorConfig,
};
use tdsv_core::plda::{apply_spherical_norm, plda_score, train_plda, train_spherical_norm};
use tdsv_core::tcl::{shuffle_utterance_order, stcl_labels, utcl_labels, TclConfig};
use tdsv_core::types::{FeatureMatrix, LabelSet, LabelTask};

use crate::config::{BnTask, ExperimentConfig, FrontendSection};
use crate::format::{
    parse_class_table, read_feature_archive, read_gmm, read_labels, read_network, read_plda,
    read_scores, read_trials, read_tv, read_vector_archive, write_feature_archive, write_gmm,
    write_labels, write_network, write_plda, write_scores, write_trials, write_tv,
    write_vector_archive, BnProjection, NetworkFile,
};
use crate::pipeline::{render_report, run_pipeline, utterance_features, RunOptions};
use crate::synth::{generate_synthetic_corpus, SyntheticCorpusSpec};
use crate::wav::read_wav;

#[derive(Parser)]
#[command(
    name = "tdsv",
    version,
    about = "Text-dependent speaker verification toolkit"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract normalized MFCC features from a list of wav files.
    ExtractFeatures {
        /// Experiment config whose [frontend] section applies (defaults
        /// otherwise).
        #[arg(long)]
        config: Option<PathBuf>,
        /// List of wav files, one per line; `path` alone or
        /// `path<TAB>speaker<TAB>phrase`.
        #[arg(long)]
        wav_list: PathBuf,
        /// Output feature archive.
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the universal background model on a feature archive.
    TrainUbm {
        #[arg(long)]
        features: PathBuf,
        /// Id-list restricting training to these utterances (default: all).
        #[arg(long)]
        ids: Option<PathBuf>,
        #[arg(long, default_value_t = 512)]
        components: usize,
        #[arg(long, default_value_t = 10)]
        iters: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// MAP-adapt one GMM per enrolled model from its enrollment utterances.
    Adapt {
        #[arg(long)]
        ubm: PathBuf,
        #[arg(long)]
        features: PathBuf,
        /// Enrollment map: `model<TAB>utterance` lines.
        #[arg(long)]
        enroll_map: PathBuf,
        #[arg(long, default_value_t = 10.0)]
        relevance: f64,
        #[arg(long, default_value_t = 3)]
        iters: usize,
        /// Directory receiving one `<model>.gmm` per enrolled model.
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Score trials as adapted-model vs UBM log-likelihood ratios.
    ScoreGmm {
        #[arg(long)]
        ubm: PathBuf,
        /// Directory of `<model>.gmm` files written by `adapt`.
        #[arg(long)]
        models: PathBuf,
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        trials: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the total-variability subspace from Baum-Welch statistics.
    TrainTv {
        #[arg(long)]
        ubm: PathBuf,
        #[arg(long)]
        features: PathBuf,
        /// Id-list restricting training to these utterances (default: all).
        #[arg(long)]
        ids: Option<PathBuf>,
        #[arg(long, default_value_t = 400)]
        rank: usize,
        #[arg(long, default_value_t = 10)]
        iters: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Extract one i-vector per archive utterance.
    ExtractIvector {
        #[arg(long)]
        ubm: PathBuf,
        #[arg(long)]
        tv: PathBuf,
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Average enrollment vectors into one raw vector per model.
    Enroll {
        #[arg(long)]
        vectors: PathBuf,
        /// Enrollment map: `model<TAB>utterance` lines.
        #[arg(long)]
        enroll_map: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train spherical normalization and two-covariance PLDA.
    TrainPlda {
        #[arg(long)]
        vectors: PathBuf,
        /// Class file: `id<TAB>class-name` lines naming the training
        /// vectors and their classes.
        #[arg(long)]
        classes: PathBuf,
        #[arg(long, default_value_t = 10)]
        iters: usize,
        #[arg(long, default_value_t = 2)]
        spherical_iters: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score trials with PLDA over spherically normalized vectors.
    ScorePlda {
        #[arg(long)]
        plda: PathBuf,
        /// Raw per-model vectors from `enroll`.
        #[arg(long)]
        model_vectors: PathBuf,
        /// Per-utterance test vectors.
        #[arg(long)]
        test_vectors: PathBuf,
        #[arg(long)]
        trials: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the bottleneck network (with its PCA projection) on labeled
    /// frames.
    TrainBn {
        #[arg(long)]
        features: PathBuf,
        /// Frame labels for the primary head, in the label-file format.
        #[arg(long)]
        labels: PathBuf,
        #[arg(long, value_parser = parse_bn_task)]
        task: BnTask,
        /// Frame labels for the secondary head (spkr+phrase only).
        #[arg(long)]
        secondary_labels: Option<PathBuf>,
        /// Class table for the phone task; silence classes are dropped.
        #[arg(long)]
        class_table: Option<PathBuf>,
        /// Primary class count (default: inferred from the labels).
        #[arg(long)]
        classes: Option<usize>,
        /// Secondary class count (default: inferred from the labels).
        #[arg(long)]
        secondary_classes: Option<usize>,
        #[arg(long, default_value_t = 0.5)]
        gamma: f64,
        #[arg(long, default_value_t = 7)]
        depth: usize,
        #[arg(long, default_value_t = 1024)]
        width: usize,
        #[arg(long, default_value_t = 25)]
        epochs: usize,
        #[arg(long, default_value_t = 0.8)]
        lr_start: f64,
        #[arg(long, default_value_t = 0.08)]
        lr_end: f64,
        #[arg(long, default_value_t = 256)]
        batch_size: usize,
        /// Bottleneck tap layer, 1-based (default: 4 for speaker tasks, 2
        /// otherwise).
        #[arg(long)]
        layer: Option<usize>,
        #[arg(long, default_value_t = 57)]
        pca_dim: usize,
        /// Tap the bottleneck before the hidden nonlinearity.
        #[arg(long)]
        pre_activation: bool,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Extract PCA-projected bottleneck features for every archive
    /// utterance.
    ExtractBn {
        #[arg(long)]
        net: PathBuf,
        #[arg(long)]
        features: PathBuf,
        /// Must match the tap layer the network was trained with.
        #[arg(long)]
        layer: Option<usize>,
        /// Must match the projection the network carries.
        #[arg(long)]
        pca_dim: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the x-vector network on class-labeled utterances.
    TrainXvector {
        #[arg(long)]
        features: PathBuf,
        /// Class file: `id<TAB>class-name` lines naming the training
        /// utterances and their classes.
        #[arg(long)]
        classes: PathBuf,
        #[arg(long, default_value_t = 400)]
        embedding_dim: usize,
        #[arg(long, default_value_t = 25)]
        epochs: usize,
        #[arg(long, default_value_t = 50)]
        min_chunk: usize,
        #[arg(long, default_value_t = 150)]
        max_chunk: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Extract one x-vector embedding per archive utterance.
    ExtractXvector {
        #[arg(long)]
        net: PathBuf,
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Emit temporally consistent weak labels for a feature archive.
    TclLabels {
        #[arg(long)]
        features: PathBuf,
        /// `utterance` cycles classes within each utterance; `stream`
        /// chunks one shuffled stream of all utterances.
        #[arg(long, value_enum)]
        mode: TclMode,
        #[arg(long, default_value_t = 10)]
        classes: usize,
        /// Chunk length in frames (stream mode).
        #[arg(long, default_value_t = 6)]
        chunk: usize,
        /// Trim the trailing partial chunk instead of labeling it (stream
        /// mode).
        #[arg(long)]
        drop_partial: bool,
        /// Shuffles the stream-mode utterance order.
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute EER and MinDCF per trial type from a score file.
    Evaluate {
        #[arg(long)]
        scores: PathBuf,
        /// Trial list the scores must match exactly.
        #[arg(long)]
        trials: PathBuf,
        /// Also write the report here (default: stdout only).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fuse score files over identical trial lists.
    Fuse {
        /// `equal` or a comma-separated weight list, one weight per file.
        #[arg(long, default_value = "equal")]
        weights: String,
        /// Score files to fuse.
        #[arg(required = true, num_args = 2..)]
        scores: Vec<PathBuf>,
        /// Output score file (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a whole experiment from a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Rebuild every stage, overwriting existing artifacts.
        #[arg(long)]
        force: bool,
        /// Suppress per-stage progress on stderr.
        #[arg(long)]
        quiet: bool,
    },
    /// Generate a synthetic corpus: features, trials and training lists.
    Synth {
        /// Synthetic corpus spec (TOML).
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TclMode {
    Utterance,
    Stream,
}

fn parse_bn_task(token: &str) -> Result<BnTask, String> {
    BnTask::parse(token).ok_or_else(|| {
        format!("unknown task {token}; expected spkr, spkr+phrase, phone, stcl or utcl")
    })
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::ExtractFeatures {
            config,
            wav_list,
            out,
        } => cmd_extract_features(config.as_deref(), &wav_list, &out),
        Command::TrainUbm {
            features,
            ids,
            components,
            iters,
            seed,
            out,
        } => cmd_train_ubm(&features, ids.as_deref(), components, iters, seed, &out),
        Command::Adapt {
            ubm,
            features,
            enroll_map,
            relevance,
            iters,
            out_dir,
        } => cmd_adapt(&ubm, &features, &enroll_map, relevance, iters, &out_dir),
        Command::ScoreGmm {
            ubm,
            models,
            features,
            trials,
            out,
        } => cmd_score_gmm(&ubm, &models, &features, &trials, &out),
        Command::TrainTv {
            ubm,
            features,
            ids,
            rank,
            iters,
            seed,
            out,
        } => cmd_train_tv(&ubm, &features, ids.as_deref(), rank, iters, seed, &out),
        Command::ExtractIvector {
            ubm,
            tv,
            features,
            out,
        } => cmd_extract_ivector(&ubm, &tv, &features, &out),
        Command::Enroll {
            vectors,
            enroll_map,
            out,
        } => cmd_enroll(&vectors, &enroll_map, &out),
        Command::TrainPlda {
            vectors,
            classes,
            iters,
            spherical_iters,
            seed,
            out,
        } => cmd_train_plda(&vectors, &classes, iters, spherical_iters, seed, &out),
        Command::ScorePlda {
            plda,
            model_vectors,
            test_vectors,
            trials,
            out,
        } => cmd_score_plda(&plda, &model_vectors, &test_vectors, &trials, &out),
        Command::TrainBn {
            features,
            labels,
            task,
            secondary_labels,
            class_table,
            classes,
            secondary_classes,
            gamma,
            depth,
            width,
            epochs,
            lr_start,
            lr_end,
            batch_size,
            layer,
            pca_dim,
            pre_activation,
            seed,
            out,
        } => cmd_train_bn(TrainBnArgs {
            features,
            labels,
            task,
            secondary_labels,
            class_table,
            classes,
            secondary_classes,
            gamma,
            depth,
            width,
            epochs,
            lr_start,
            lr_end,
            batch_size,
            layer,
            pca_dim,
            pre_activation,
            seed,
            out,
        }),
        Command::ExtractBn {
            net,
            features,
            layer,
            pca_dim,
            out,
        } => cmd_extract_bn(&net, &features, layer, pca_dim, &out),
        Command::TrainXvector {
            features,
            classes,
            embedding_dim,
            epochs,
            min_chunk,
            max_chunk,
            seed,
            out,
        } => cmd_train_xvector(
            &features,
            &classes,
            embedding_dim,
            epochs,
            min_chunk,
            max_chunk,
            seed,
            &out,
        ),
        Command::ExtractXvector {
            net,
            features,
            out,
        } => cmd_extract_xvector(&net, &features, &out),
        Command::TclLabels {
            features,
            mode,
            classes,
            chunk,
            drop_partial,
            seed,
            out,
        } => cmd_tcl_labels(&features, mode, classes, chunk, drop_partial, seed, &out),
        Command::Evaluate {
            scores,
            trials,
            out,
        } => cmd_evaluate(&scores, &trials, out.as_deref()),
        Command::Fuse {
            weights,
            scores,
            out,
        } => cmd_fuse(&weights, &scores, out.as_deref()),
        Command::Run {
            config,
            force,
            quiet,
        } => cmd_run(&config, force, quiet),
        Command::Synth { spec, out_dir } => cmd_synth(&spec, &out_dir),
    }
}

// ---------------------------------------------------------------------------
// Shared file helpers

/// One utterance id per line, blank lines skipped, file order kept.
fn read_id_list(path: &Path) -> Result<Vec<String>> {
    let body =
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut ids = Vec::new();
    let mut seen = BTreeSet::new();
    for (idx, line) in body.lines().enumerate() {
        let id = line.trim();
        if id.is_empty() {
            continue;
        }
        if !seen.insert(id.to_string()) {
            bail!("{}: line {}: duplicate id {id}", path.display(), idx + 1);
        }
        ids.push(id.to_string());
    }
    if ids.is_empty() {
        bail!("{}: no ids listed", path.display());
    }
    Ok(ids)
}

/// `left<TAB>right` lines, blank lines skipped, file order kept.
fn read_pair_lines(path: &Path, what: &str) -> Result<Vec<(String, String)>> {
    let body =
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut pairs = Vec::new();
    for (idx, line) in body.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 2 || fields[0].is_empty() || fields[1].is_empty() {
            bail!(
                "{}: line {}: expected {what}, found {:?}",
                path.display(),
                idx + 1,
                line
            );
        }
        pairs.push((fields[0].to_string(), fields[1].to_string()));
    }
    if pairs.is_empty() {
        bail!("{}: empty {what} file", path.display());
    }
    Ok(pairs)
}

/// Enrollment map `model<TAB>utterance`, grouped by model in file order.
fn read_enroll_map(path: &Path) -> Result<BTreeMap<String, Vec<String>>> {
    let mut map: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for (model, utt) in read_pair_lines(path, "model<TAB>utterance")? {
        map.entry(model).or_default().push(utt);
    }
    Ok(map)
}

/// Class file `id<TAB>class-name`; returns (per-id class index, class count)
/// with indices assigned to sorted class names.
fn read_class_file(path: &Path) -> Result<(BTreeMap<String, usize>, usize)> {
    let pairs = read_pair_lines(path, "id<TAB>class-name")?;
    let names: BTreeSet<&str> = pairs.iter().map(|(_, c)| c.as_str()).collect();
    let index: BTreeMap<&str, usize> = names.iter().enumerate().map(|(i, &n)| (n, i)).collect();
    let mut map = BTreeMap::new();
    for (id, class) in &pairs {
        if map.insert(id.clone(), index[class.as_str()]).is_some() {
            bail!("{}: id {id} is listed twice", path.display());
        }
    }
    Ok((map, index.len()))
}

fn feature_map(path: &Path) -> Result<BTreeMap<String, FeatureMatrix>> {
    let mut map = BTreeMap::new();
    for feat in read_feature_archive(path)? {
        if map.insert(feat.id.clone(), feat).is_some() {
            bail!("{}: duplicate utterance id in archive", path.display());
        }
    }
    Ok(map)
}

fn vector_map(path: &Path) -> Result<BTreeMap<String, Vec<f64>>> {
    let mut map = BTreeMap::new();
    for v in read_vector_archive(path)? {
        if map.insert(v.id.clone(), v.w).is_some() {
            bail!("{}: duplicate vector id in archive", path.display());
        }
    }
    Ok(map)
}

/// Selects features by id list (file order), or the whole archive.
fn training_features(
    archive: &Path,
    ids: Option<&Path>,
) -> Result<Vec<FeatureMatrix>> {
    match ids {
        None => Ok(read_feature_archive(archive)?),
        Some(list) => {
            let ids = read_id_list(list)?;
            let mut map = feature_map(archive)?;
            let mut out = Vec::with_capacity(ids.len());
            for id in &ids {
                let feat = map.remove(id).with_context(|| {
                    format!("{}: utterance {id} missing from the archive", archive.display())
                })?;
                out.push(feat);
            }
            Ok(out)
        }
    }
}

fn require_utt<'m>(
    map: &'m BTreeMap<String, FeatureMatrix>,
    id: &str,
    archive: &Path,
) -> Result<&'m FeatureMatrix> {
    map.get(id)
        .with_context(|| format!("{}: utterance {id} missing from the archive", archive.display()))
}

fn require_vec<'m>(
    map: &'m BTreeMap<String, Vec<f64>>,
    id: &str,
    archive: &Path,
) -> Result<&'m Vec<f64>> {
    map.get(id)
        .with_context(|| format!("{}: vector {id} missing from the archive", archive.display()))
}

/// A model id doubling as a file name must not escape the target directory.
fn check_model_filename(model: &str) -> Result<()> {
    if model.contains(['/', '\\']) || model == "." || model == ".." {
        bail!("model id {model:?} cannot be used as a file name");
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Commands

fn cmd_extract_features(config: Option<&Path>, wav_list: &Path, out: &Path) -> Result<()> {
    let fe = match config {
        Some(path) => frontend_section(path)?,
        None => FrontendSection::default(),
    };
    let body = fs::read_to_string(wav_list)
        .with_context(|| format!("reading {}", wav_list.display()))?;
    let base = wav_list.parent().unwrap_or(Path::new("."));
    let mut paths = Vec::new();
    let mut seen = BTreeSet::new();
    for (idx, line) in body.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 1 && fields.len() != 3 {
            bail!(
                "{}: line {}: expected `path` or `path<TAB>speaker<TAB>phrase`",
                wav_list.display(),
                idx + 1
            );
        }
        let p = Path::new(fields[0]);
        let p = if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
        let id = p
            .file_stem()
            .and_then(|s| s.to_str())
            .map(str::to_string)
            .filter(|s| !s.is_empty())
            .with_context(|| {
                format!("{}: line {}: no utterance id in path", wav_list.display(), idx + 1)
            })?;
        if !seen.insert(id.clone()) {
            bail!("{}: duplicate utterance id {id}", wav_list.display());
        }
        paths.push((id, p));
    }
    if paths.is_empty() {
        bail!("{}: no wav files listed", wav_list.display());
    }
    let mut features = Vec::with_capacity(paths.len());
    for (id, path) in &paths {
        let clip = read_wav(path)?;
        let feat =
            utterance_features(&clip, &fe).with_context(|| format!("utterance {id}"))?;
        features.push(feat);
    }
    write_feature_archive(out, &features)?;
    eprintln!("wrote {} utterances to {}", features.len(), out.display());
    Ok(())
}

/// Reads the [frontend] section of a config file, ignoring other sections.
fn frontend_section(path: &Path) -> Result<FrontendSection> {
    #[derive(serde::Deserialize)]
    struct FrontendOnly {
        #[serde(default)]
        frontend: FrontendSection,
    }
    let body =
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let parsed: FrontendOnly =
        toml::from_str(&body).with_context(|| format!("parsing {}", path.display()))?;
    Ok(parsed.frontend)
}

fn cmd_train_ubm(
    features: &Path,
    ids: Option<&Path>,
    components: usize,
    iters: usize,
    seed: u64,
    out: &Path,
) -> Result<()> {
    let train = training_features(features, ids)?;
    let (ubm, log) = train_ubm_em(&train, components, iters, seed)?;
    write_gmm(out, &ubm)?;
    if let Some(ll) = log.avg_ll.last() {
        eprintln!(
            "trained {components}-component UBM on {} utterances, final log-likelihood {ll:.6}",
            train.len()
        );
    }
    Ok(())
}

fn cmd_adapt(
    ubm_path: &Path,
    features: &Path,
    enroll_map: &Path,
    relevance: f64,
    iters: usize,
    out_dir: &Path,
) -> Result<()> {
    let ubm = read_gmm(ubm_path)?;
    let feats = feature_map(features)?;
    let map = read_enroll_map(enroll_map)?;
    fs::create_dir_all(out_dir)
        .with_context(|| format!("creating {}", out_dir.display()))?;
    for (model, utts) in &map {
        check_model_filename(model)?;
        let mut pooled = FeatureMatrix::empty(model.clone(), ubm.dim());
        for utt in utts {
            let feat = require_utt(&feats, utt, features)?;
            for t in 0..feat.num_frames() {
                pooled.push_row(feat.row(t));
            }
        }
        let adapted = map_adapt(&ubm, &pooled, relevance, iters)
            .with_context(|| format!("adapting model {model}"))?;
        write_gmm(&out_dir.join(format!("{model}.gmm")), &adapted)?;
    }
    eprintln!("adapted {} models into {}", map.len(), out_dir.display());
    Ok(())
}

fn cmd_score_gmm(
    ubm_path: &Path,
    models_dir: &Path,
    features: &Path,
    trials_path: &Path,
    out: &Path,
) -> Result<()> {
    let ubm = read_gmm(ubm_path)?;
    let trials = read_trials(trials_path)?;
    let feats = feature_map(features)?;
    let model_ids: BTreeSet<&str> = trials.trials().iter().map(|t| t.model.as_str()).collect();
    let mut models = BTreeMap::new();
    for id in model_ids {
        check_model_filename(id)?;
        models.insert(id, read_gmm(&models_dir.join(format!("{id}.gmm")))?);
    }
    let mut ubm_ll: BTreeMap<&str, f64> = BTreeMap::new();
    let mut scores = Vec::with_capacity(trials.len());
    for trial in trials.trials() {
        let feat = require_utt(&feats, &trial.utterance, features)?;
        let base = match ubm_ll.get(trial.utterance.as_str()) {
            Some(&ll) => ll,
            None => {
                let ll = gmm_log_likelihood(&ubm, feat)?;
                ubm_ll.insert(&trial.utterance, ll);
                ll
            }
        };
        let ll = gmm_log_likelihood(&models[trial.model.as_str()], feat)?;
        scores.push(ll - base);
    }
    let set = ScoreSet::new(trials, scores)?;
    write_scores(out, &set)?;
    eprintln!("scored {} trials into {}", set.trials().len(), out.display());
    Ok(())
}

fn cmd_train_tv(
    ubm_path: &Path,
    features: &Path,
    ids: Option<&Path>,
    rank: usize,
    iters: usize,
    seed: u64,
    out: &Path,
) -> Result<()> {
    let ubm = read_gmm(ubm_path)?;
    let train = training_features(features, ids)?;
    let mut stats = Vec::with_capacity(train.len());
    for feat in &train {
        stats.push(accumulate_bw_stats(&ubm, feat)?);
    }
    let (tv, _objective) = train_tv_em(&stats, &ubm, rank, iters, seed)?;
    write_tv(out, &tv, ubm_path)?;
    eprintln!(
        "trained rank-{rank} subspace on {} utterances into {}",
        train.len(),
        out.display()
    );
    Ok(())
}

fn cmd_extract_ivector(ubm_path: &Path, tv_path: &Path, features: &Path, out: &Path) -> Result<()> {
    let ubm = read_gmm(ubm_path)?;
    let tv = read_tv(tv_path, ubm_path)?;
    let feats = read_feature_archive(features)?;
    let mut vectors = Vec::with_capacity(feats.len());
    for feat in &feats {
        let stats = accumulate_bw_stats(&ubm, feat)?;
        vectors.push(extract_ivector(&tv, &stats)?);
    }
    write_vector_archive(out, &vectors)?;
    eprintln!("extracted {} i-vectors into {}", vectors.len(), out.display());
    Ok(())
}

fn cmd_enroll(vectors: &Path, enroll_map: &Path, out: &Path) -> Result<()> {
    let map = vector_map(vectors)?;
    let enroll = read_enroll_map(enroll_map)?;
    let mut models = Vec::with_capacity(enroll.len());
    for (model, utts) in &enroll {
        let mut raw = Vec::with_capacity(utts.len());
        for utt in utts {
            raw.push(IVector {
                id: model.clone(),
                w: require_vec(&map, utt, vectors)?.clone(),
            });
        }
        models.push(enroll_average(&raw, model)?);
    }
    write_vector_archive(out, &models)?;
    eprintln!("enrolled {} models into {}", models.len(), out.display());
    Ok(())
}

fn cmd_train_plda(
    vectors: &Path,
    classes: &Path,
    iters: usize,
    spherical_iters: usize,
    seed: u64,
    out: &Path,
) -> Result<()> {
    let map = vector_map(vectors)?;
    let (class_of, _count) = read_class_file(classes)?;
    let mut raw = Vec::with_capacity(class_of.len());
    let mut labels = Vec::with_capacity(class_of.len());
    for (id, class) in &class_of {
        raw.push(require_vec(&map, id, vectors)?.clone());
        labels.push(*class);
    }
    let norm = train_spherical_norm(&raw, spherical_iters)?;
    let mut normalized = Vec::with_capacity(raw.len());
    for w in &raw {
        normalized.push(apply_spherical_norm(&norm, w)?);
    }
    let (plda, _objective) = train_plda(&normalized, &labels, iters, seed)?;
    write_plda(out, &plda, &norm)?;
    eprintln!(
        "trained PLDA on {} vectors into {}",
        normalized.len(),
        out.display()
    );
    Ok(())
}

fn cmd_score_plda(
    plda_path: &Path,
    model_vectors: &Path,
    test_vectors: &Path,
    trials_path: &Path,
    out: &Path,
) -> Result<()> {
    let (plda, norm) = read_plda(plda_path)?;
    let models_raw = vector_map(model_vectors)?;
    let tests_raw = vector_map(test_vectors)?;
    let trials = read_trials(trials_path)?;
    let mut models: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    let mut tests: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    let mut scores = Vec::with_capacity(trials.len());
    for trial in trials.trials() {
        if !models.contains_key(trial.model.as_str()) {
            let raw = require_vec(&models_raw, &trial.model, model_vectors)?;
            models.insert(&trial.model, apply_spherical_norm(&norm, raw)?);
        }
        if !tests.contains_key(trial.utterance.as_str()) {
            let raw = require_vec(&tests_raw, &trial.utterance, test_vectors)?;
            tests.insert(&trial.utterance, apply_spherical_norm(&norm, raw)?);
        }
        scores.push(plda_score(
            &plda,
            &models[trial.model.as_str()],
            &tests[trial.utterance.as_str()],
        )?);
    }
    let set = ScoreSet::new(trials, scores)?;
    write_scores(out, &set)?;
    eprintln!("scored {} trials into {}", set.trials().len(), out.display());
    Ok(())
}

struct TrainBnArgs {
    features: PathBuf,
    labels: PathBuf,
    task: BnTask,
    secondary_labels: Option<PathBuf>,
    class_table: Option<PathBuf>,
    classes: Option<usize>,
    secondary_classes: Option<usize>,
    gamma: f64,
    depth: usize,
    width: usize,
    epochs: usize,
    lr_start: f64,
    lr_end: f64,
    batch_size: usize,
    layer: Option<usize>,
    pca_dim: usize,
    pre_activation: bool,
    seed: u64,
    out: PathBuf,
}

fn cmd_train_bn(args: TrainBnArgs) -> Result<()> {
    let primary_task = match args.task {
        BnTask::Spkr | BnTask::SpkrPhrase => LabelTask::Speaker,
        BnTask::Phone => LabelTask::Phone,
        BnTask::Stcl | BnTask::Utcl => LabelTask::Tcl,
    };
    let mut primary = read_labels(&args.labels, primary_task, args.classes)?;
    if args.task == BnTask::SpkrPhrase && args.secondary_labels.is_none() {
        bail!("task spkr+phrase requires --secondary-labels");
    }
    if args.task == BnTask::Phone && args.class_table.is_none() {
        bail!("task phone requires --class-table");
    }
    let secondary = match &args.secondary_labels {
        Some(path) => Some(read_labels(path, LabelTask::Phrase, args.secondary_classes)?),
        None => None,
    };

    let feats = feature_map(&args.features)?;
    // Training features follow the labels: silence frames are dropped for
    // the phone task, and labels shorter than an utterance (a trimmed sTCL
    // stream tail) truncate it.
    let mut train_feats = Vec::with_capacity(primary.len());
    let mut kept_labels = LabelSet::new(primary.task, primary.num_classes);
    for (id, labels) in primary.iter() {
        let feat = require_utt(&feats, id, &args.features)?;
        let frames = feat.num_frames();
        match &args.class_table {
            Some(table_path) => {
                let table = parse_class_table(table_path)?;
                if labels.len() != frames {
                    bail!(
                        "utterance {id}: {} labels but {} feature frames",
                        labels.len(),
                        frames
                    );
                }
                let mask = table.speech_mask(labels);
                let kept = feat.select_rows(&mask);
                if kept.num_frames() == 0 {
                    continue;
                }
                let kept_l: Vec<usize> = labels
                    .iter()
                    .zip(&mask)
                    .filter(|(_, &keep)| keep)
                    .map(|(&l, _)| l)
                    .collect();
                kept_labels.insert(id.to_string(), kept_l);
                train_feats.push(kept);
            }
            None if labels.len() < frames => {
                let mut mask = vec![false; frames];
                for slot in mask.iter_mut().take(labels.len()) {
                    *slot = true;
                }
                let kept = feat.select_rows(&mask);
                if kept.num_frames() == 0 {
                    continue;
                }
                kept_labels.insert(id.to_string(), labels.to_vec());
                train_feats.push(kept);
            }
            None if labels.len() > frames => {
                bail!(
                    "utterance {id}: {} labels but only {} feature frames",
                    labels.len(),
                    frames
                );
            }
            None => {
                kept_labels.insert(id.to_string(), labels.to_vec());
                train_feats.push(feat.clone());
            }
        }
    }
    primary = kept_labels;

    let cfg = MlpTrainConfig {
        depth: args.depth,
        width: args.width,
        lr_start: args.lr_start,
        lr_end: args.lr_end,
        epochs: args.epochs,
        batch_size: args.batch_size,
        gamma: args.gamma,
        ..MlpTrainConfig::default()
    };
    let (net, _loss) = train_bn_dnn(&train_feats, &primary, secondary.as_ref(), &cfg, args.seed)?;
    let default_tap = match args.task {
        BnTask::Spkr | BnTask::SpkrPhrase => 4,
        BnTask::Phone | BnTask::Stcl | BnTask::Utcl => 2,
    };
    let tap = args.layer.unwrap_or(default_tap).min(args.depth).max(1);
    let post_activation = !args.pre_activation;
    let mut deep = Vec::with_capacity(train_feats.len());
    for feat in &train_feats {
        deep.push(extract_deep_features(&net, feat, tap, post_activation)?);
    }
    let pca = train_pca(&deep, args.pca_dim)?;
    write_network(
        &args.out,
        &NetworkFile::Mlp {
            net,
            projection: Some(BnProjection {
                pca,
                layer: tap,
                post_activation,
            }),
        },
    )?;
    eprintln!(
        "trained {}x{} bottleneck network (tap layer {tap}) into {}",
        args.depth,
        args.width,
        args.out.display()
    );
    Ok(())
}

fn cmd_extract_bn(
    net_path: &Path,
    features: &Path,
    layer: Option<usize>,
    pca_dim: Option<usize>,
    out: &Path,
) -> Result<()> {
    let (net, projection) = match read_network(net_path)? {
        NetworkFile::Mlp { net, projection } => (net, projection),
        NetworkFile::Xvector(_) => {
            bail!("{} holds an x-vector network", net_path.display())
        }
    };
    let projection = projection.with_context(|| {
        format!("{} carries no bottleneck projection", net_path.display())
    })?;
    if let Some(layer) = layer {
        if layer != projection.layer {
            bail!(
                "--layer {layer} does not match the tap layer {} the projection was trained at",
                projection.layer
            );
        }
    }
    if let Some(dim) = pca_dim {
        if dim != projection.pca.output_dim() {
            bail!(
                "--pca-dim {dim} does not match the stored projection dimension {}",
                projection.pca.output_dim()
            );
        }
    }
    let feats = read_feature_archive(features)?;
    let mut out_feats = Vec::with_capacity(feats.len());
    for feat in &feats {
        let deep = extract_deep_features(&net, feat, projection.layer, projection.post_activation)?;
        out_feats.push(project_pca(&projection.pca, &deep)?);
    }
    write_feature_archive(out, &out_feats)?;
    eprintln!(
        "extracted {}-dim bottleneck features for {} utterances into {}",
        projection.pca.output_dim(),
        out_feats.len(),
        out.display()
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_train_xvector(
    features: &Path,
    classes: &Path,
    embedding_dim: usize,
    epochs: usize,
    min_chunk: usize,
    max_chunk: usize,
    seed: u64,
    out: &Path,
) -> Result<()> {
    let (class_of, count) = read_class_file(classes)?;
    let map = feature_map(features)?;
    let mut train = Vec::with_capacity(class_of.len());
    let mut labels = Vec::with_capacity(class_of.len());
    for (id, class) in &class_of {
        train.push(require_utt(&map, id, features)?.clone());
        labels.push(*class);
    }
    let cfg = XvectorConfig {
        embedding_dim,
        epochs,
        min_chunk,
        max_chunk,
        ..XvectorConfig::default()
    };
    let (net, log) = train_xvector_net(&train, &labels, count, &cfg, seed)?;
    write_network(out, &NetworkFile::Xvector(net))?;
    if log.short_utterances > 0 {
        eprintln!(
            "note: {} utterances were shorter than min_chunk and trained as whole segments",
            log.short_utterances
        );
    }
    eprintln!(
        "trained x-vector network on {} utterances ({count} classes) into {}",
        train.len(),
        out.display()
    );
    Ok(())
}

fn cmd_extract_xvector(net_path: &Path, features: &Path, out: &Path) -> Result<()> {
    let net = match read_network(net_path)? {
        NetworkFile::Xvector(net) => net,
        NetworkFile::Mlp { .. } => {
            bail!("{} holds a bottleneck network", net_path.display())
        }
    };
    let feats = read_feature_archive(features)?;
    let mut vectors = Vec::with_capacity(feats.len());
    for feat in &feats {
        vectors.push(extract_xvector(&net, feat)?);
    }
    write_vector_archive(out, &vectors)?;
    eprintln!("extracted {} x-vectors into {}", vectors.len(), out.display());
    Ok(())
}

fn cmd_tcl_labels(
    features: &Path,
    mode: TclMode,
    classes: usize,
    chunk: usize,
    drop_partial: bool,
    seed: u64,
    out: &Path,
) -> Result<()> {
    let feats = read_feature_archive(features)?;
    let cfg = TclConfig {
        classes,
        chunk,
        drop_partial,
    };
    let labels = match mode {
        TclMode::Utterance => {
            let stream: Vec<(String, usize)> = feats
                .iter()
                .map(|f| (f.id.clone(), f.num_frames()))
                .collect();
            utcl_labels(&stream, &cfg)?
        }
        TclMode::Stream => {
            let order = shuffle_utterance_order(feats.len(), seed);
            let stream: Vec<(String, usize)> = order
                .iter()
                .map(|&i| (feats[i].id.clone(), feats[i].num_frames()))
                .collect();
            let (mut set, dropped) = stcl_labels(&stream, &cfg)?;
            if dropped > 0 {
                let mut remaining = dropped;
                for (id, frames) in stream.iter().rev() {
                    if remaining == 0 {
                        break;
                    }
                    let cut = remaining.min(*frames);
                    let mut ls = set.get(id).expect("labeled utterance").to_vec();
                    ls.truncate(frames - cut);
                    set.insert(id.clone(), ls);
                    remaining -= cut;
                }
                eprintln!("trimmed {dropped} trailing frames of a partial chunk");
            }
            set
        }
    };
    write_labels(out, &labels)?;
    eprintln!(
        "labeled {} utterances ({} classes) into {}",
        labels.len(),
        labels.num_classes,
        out.display()
    );
    Ok(())
}

fn cmd_evaluate(scores_path: &Path, trials_path: &Path, out: Option<&Path>) -> Result<()> {
    let set = read_scores(scores_path)?;
    let trials = read_trials(trials_path)?;
    if set.trials() != &trials {
        bail!(
            "{} does not score the trial list {}",
            scores_path.display(),
            trials_path.display()
        );
    }
    let rep = report(&set)?;
    let name = scores_path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("scores");
    let text = render_report(name, &[(name.to_string(), rep)]);
    print!("{text}");
    if let Some(path) = out {
        fs::write(path, &text).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn cmd_fuse(weights: &str, score_paths: &[PathBuf], out: Option<&Path>) -> Result<()> {
    let mut sets = Vec::with_capacity(score_paths.len());
    for path in score_paths {
        sets.push(read_scores(path)?);
    }
    let parsed_weights = if weights == "equal" {
        None
    } else {
        let w: Vec<f64> = weights
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .with_context(|| format!("bad weight {t:?}"))
            })
            .collect::<Result<_>>()?;
        if w.len() != sets.len() {
            bail!("{} weights for {} score files", w.len(), sets.len());
        }
        Some(w)
    };
    let fused = fuse_scores(&sets, parsed_weights.as_deref())?;
    match out {
        Some(path) => {
            write_scores(path, &fused)?;
            eprintln!("fused {} score files into {}", sets.len(), path.display());
        }
        None => {
            for (trial, score) in fused.iter() {
                println!(
                    "{}\t{}\t{}\t{score:.6}",
                    trial.model, trial.utterance, trial.trial_type
                );
            }
        }
    }
    Ok(())
}

fn cmd_run(config: &Path, force: bool, quiet: bool) -> Result<()> {
    let cfg = ExperimentConfig::from_path(config)?;
    let opts = RunOptions {
        force,
        cache_dir: None,
        quiet,
    };
    let outcome = run_pipeline(&cfg, &opts)?;
    print!("{}", outcome.report_text);
    eprintln!("report written to {}", outcome.report_path.display());
    Ok(())
}

fn cmd_synth(spec_path: &Path, out_dir: &Path) -> Result<()> {
    let spec = SyntheticCorpusSpec::from_path(spec_path)?;
    let corpus = generate_synthetic_corpus(&spec)?;
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;

    write_feature_archive(&out_dir.join("features.ark"), &corpus.features)?;
    write_trials(&out_dir.join("eval.trials"), &corpus.trials)?;

    let mut enroll_lines = String::new();
    for (model, utts) in &corpus.enroll {
        for utt in utts {
            enroll_lines.push_str(&format!("{model}\t{utt}\n"));
        }
    }
    let enroll_path = out_dir.join("enroll.map");
    fs::write(&enroll_path, enroll_lines)
        .with_context(|| format!("writing {}", enroll_path.display()))?;

    let bg_path = out_dir.join("background.lst");
    fs::write(&bg_path, corpus.background.join("\n") + "\n")
        .with_context(|| format!("writing {}", bg_path.display()))?;
    let test_path = out_dir.join("test.lst");
    fs::write(&test_path, corpus.test.join("\n") + "\n")
        .with_context(|| format!("writing {}", test_path.display()))?;

    // (speaker, phrase) pair classes over the training utterances, the
    // class file `train-plda` and `train-xvector` expect.
    let mut class_lines = String::new();
    for id in &corpus.background {
        class_lines.push_str(&format!(
            "{id}\ts{:04}-p{:04}\n",
            corpus.speaker_of[id], corpus.phrase_of[id]
        ));
    }
    let classes_path = out_dir.join("classes.txt");
    fs::write(&classes_path, class_lines)
        .with_context(|| format!("writing {}", classes_path.display()))?;

    eprintln!(
        "generated {} utterances, {} models, {} trials into {}",
        corpus.features.len(),
        corpus.enroll.len(),
        corpus.trials.len(),
        out_dir.display()
    );
    Ok(())
}
