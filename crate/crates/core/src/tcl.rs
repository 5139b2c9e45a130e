//! Time-contrastive labeling: weak labels that index position in time
//! rather than any annotated class, in stream-wise (sTCL) and utterance-wise
//! (uTCL) variants.

use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::types::{LabelSet, LabelTask};

/// Time-contrastive labeling parameters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TclConfig {
    /// Class count c.
    pub classes: usize,
    /// sTCL chunk length M in frames.
    pub chunk: usize,
    /// When set, the trailing partial chunk of the sTCL stream is reported
    /// for exclusion instead of being trained on.
    pub drop_partial: bool,
}

impl Default for TclConfig {
    fn default() -> Self {
        Self {
            classes: 10,
            chunk: 6,
            drop_partial: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TclError {
    #[error("empty stream")]
    EmptyStream,
    #[error("utterance {id} has no frames")]
    EmptyUtterance { id: String },
    #[error("invalid configuration: {reason}")]
    BadConfig { reason: String },
}

fn check(cfg: &TclConfig) -> Result<(), TclError> {
    if cfg.classes < 2 {
        return Err(TclError::BadConfig {
            reason: String::from("class count must be at least 2"),
        });
    }
    if cfg.chunk < 1 {
        return Err(TclError::BadConfig {
            reason: String::from("chunk length must be at least 1"),
        });
    }
    Ok(())
}

/// A deterministic utterance-order permutation for sTCL stream assembly.
/// The stream is shuffled at utterance granularity; frames inside an
/// utterance keep their temporal order.
pub fn shuffle_utterance_order(count: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..count).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    order
}

/// Stream-wise labels: the concatenated stream (utterances in the given
/// order) is cut into consecutive chunks of `chunk` frames and chunk i gets
/// label i mod classes, so the pattern repeats with period classes·chunk.
/// The trailing partial chunk is labeled like a full chunk; the returned
/// count is how many trailing frames the consumer should drop when
/// `drop_partial` is set (0 otherwise).
pub fn stcl_labels(
    utterances: &[(String, usize)],
    cfg: &TclConfig,
) -> Result<(LabelSet, usize), TclError> {
    check(cfg)?;
    if utterances.is_empty() {
        return Err(TclError::EmptyStream);
    }
    let mut set = LabelSet::new(LabelTask::Tcl, cfg.classes);
    let mut global = 0usize;
    for (id, frames) in utterances {
        if *frames == 0 {
            return Err(TclError::EmptyUtterance { id: id.clone() });
        }
        let labels: Vec<usize> = (0..*frames)
            .map(|_| {
                let label = (global / cfg.chunk) % cfg.classes;
                global += 1;
                label
            })
            .collect();
        set.insert(id.clone(), labels);
    }
    let tail = global % cfg.chunk;
    let dropped = if cfg.drop_partial && tail != 0 { tail } else { 0 };
    Ok((set, dropped))
}

/// Utterance-wise labels: each utterance is split into `classes` contiguous
/// segments whose sizes differ by at most one frame (the remainder goes to
/// the earliest segments); all frames of segment n get label n. Utterances
/// shorter than the class count give the first frame_count classes one
/// frame each.
pub fn utcl_labels(
    utterances: &[(String, usize)],
    cfg: &TclConfig,
) -> Result<LabelSet, TclError> {
    check(cfg)?;
    let mut set = LabelSet::new(LabelTask::Tcl, cfg.classes);
    for (id, frames) in utterances {
        if *frames == 0 {
            return Err(TclError::EmptyUtterance { id: id.clone() });
        }
        set.insert(id.clone(), utcl_sequence(*frames, cfg.classes));
    }
    Ok(set)
}

/// Label sequence for a single utterance of `frames` frames.
pub fn utcl_sequence(frames: usize, classes: usize) -> Vec<usize> {
    let base = frames / classes;
    let rem = frames % classes;
    let mut labels = Vec::with_capacity(frames);
    for seg in 0..classes {
        let len = base + usize::from(seg < rem);
        for _ in 0..len {
            labels.push(seg);
        }
    }
    labels
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn stream(counts: &[usize]) -> Vec<(String, usize)> {
        counts
            .iter()
            .enumerate()
            .map(|(i, &n)| (alloc::format!("utt{i}"), n))
            .collect()
    }

    fn flat(set: &LabelSet, utts: &[(String, usize)]) -> Vec<usize> {
        let mut out = Vec::new();
        for (id, _) in utts {
            out.extend_from_slice(set.get(id).unwrap());
        }
        out
    }

    #[test]
    fn stcl_period_is_classes_times_chunk() {
        let utts = stream(&[60, 60]);
        let (set, dropped) = stcl_labels(&utts, &TclConfig::default()).unwrap();
        assert_eq!(dropped, 0);
        let labels = flat(&set, &utts);
        for f in 0..6 {
            assert_eq!(labels[f], 0);
        }
        for f in 6..12 {
            assert_eq!(labels[f], 1);
        }
        for f in 60..66 {
            assert_eq!(labels[f], 0, "period must be 60 at frame {f}");
        }
        for (f, &l) in labels.iter().enumerate() {
            assert_eq!(l, labels[f % 60]);
        }
    }

    #[test]
    fn stcl_short_stream_is_all_zero() {
        let utts = stream(&[5]);
        let (set, _) = stcl_labels(&utts, &TclConfig::default()).unwrap();
        assert_eq!(set.get("utt0").unwrap(), &[0, 0, 0, 0, 0]);
    }

    #[test]
    fn stcl_histogram_of_balanced_stream() {
        let utts = stream(&[200, 250, 150]);
        let (set, _) = stcl_labels(&utts, &TclConfig::default()).unwrap();
        let labels = flat(&set, &utts);
        let mut hist = [0usize; 10];
        for &l in &labels {
            hist[l] += 1;
        }
        assert_eq!(hist, [60; 10]);
    }

    #[test]
    fn stcl_reports_partial_tail_when_dropping() {
        let cfg = TclConfig {
            drop_partial: true,
            ..TclConfig::default()
        };
        let utts = stream(&[64]);
        let (set, dropped) = stcl_labels(&utts, &cfg).unwrap();
        assert_eq!(dropped, 4);
        // The tail is still labeled positionally.
        assert_eq!(set.get("utt0").unwrap()[60], 0);
    }

    #[test]
    fn stcl_rejects_empty() {
        assert_eq!(
            stcl_labels(&[], &TclConfig::default()),
            Err(TclError::EmptyStream)
        );
        assert!(matches!(
            stcl_labels(&stream(&[10, 0]), &TclConfig::default()),
            Err(TclError::EmptyUtterance { .. })
        ));
    }

    #[test]
    fn utcl_even_split() {
        let labels = utcl_sequence(100, 10);
        for (f, &l) in labels.iter().enumerate() {
            assert_eq!(l, f / 10);
        }
    }

    #[test]
    fn utcl_remainder_goes_to_early_segments() {
        let labels = utcl_sequence(103, 10);
        let mut sizes = [0usize; 10];
        for &l in &labels {
            sizes[l] += 1;
        }
        assert_eq!(sizes[..3], [11, 11, 11]);
        assert_eq!(sizes[3..], [10, 10, 10, 10, 10, 10, 10]);
        for w in labels.windows(2) {
            assert!(w[0] <= w[1], "labels must be non-decreasing");
        }
    }

    #[test]
    fn utcl_single_frame() {
        assert_eq!(utcl_sequence(1, 10), vec![0]);
    }

    #[test]
    fn utcl_fewer_frames_than_classes() {
        let labels = utcl_sequence(7, 10);
        assert_eq!(labels, vec![0, 1, 2, 3, 4, 5, 6]);
    }

    #[test]
    fn shuffle_is_deterministic_permutation() {
        let a = shuffle_utterance_order(10, 42);
        let b = shuffle_utterance_order(10, 42);
        assert_eq!(a, b);
        let mut sorted = a.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..10).collect::<Vec<_>>());
        assert_ne!(a, (0..10).collect::<Vec<_>>());
    }
}
