//! Shared data types: audio clips, feature matrices, frame label sets.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

/// Mono PCM16 audio with its utterance id.
#[derive(Debug, Clone)]
pub struct AudioClip {
    pub id: String,
    pub samples: Vec<i16>,
    pub sample_rate: u32,
}

impl AudioClip {
    pub fn new(id: impl Into<String>, samples: Vec<i16>, sample_rate: u32) -> Self {
        Self {
            id: id.into(),
            samples,
            sample_rate,
        }
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

/// Per-utterance sequence of fixed-dimension feature vectors, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub id: String,
    dim: usize,
    pub frame_shift_ms: f64,
    data: Vec<f64>,
}

impl FeatureMatrix {
    /// Builds an empty matrix to which rows of width `dim` can be appended.
    pub fn empty(id: impl Into<String>, dim: usize) -> Self {
        Self {
            id: id.into(),
            dim,
            frame_shift_ms: 10.0,
            data: Vec::new(),
        }
    }

    /// Wraps a row-major buffer. `data.len()` must be a multiple of `dim`.
    pub fn from_data(id: impl Into<String>, dim: usize, data: Vec<f64>) -> Self {
        assert!(dim > 0, "feature dim must be positive");
        assert!(
            data.len().is_multiple_of(dim),
            "buffer length {} not a multiple of dim {}",
            data.len(),
            dim
        );
        Self {
            id: id.into(),
            dim,
            frame_shift_ms: 10.0,
            data,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_frames(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.data[t * self.dim..(t + 1) * self.dim]
    }

    pub fn row_mut(&mut self, t: usize) -> &mut [f64] {
        &mut self.data[t * self.dim..(t + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn push_row(&mut self, row: &[f64]) {
        assert_eq!(row.len(), self.dim);
        self.data.extend_from_slice(row);
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Keeps the rows whose mask entry is true, preserving order.
    pub fn select_rows(&self, mask: &[bool]) -> FeatureMatrix {
        assert_eq!(mask.len(), self.num_frames());
        let mut out = FeatureMatrix::empty(self.id.clone(), self.dim);
        out.frame_shift_ms = self.frame_shift_ms;
        for (t, &keep) in mask.iter().enumerate() {
            if keep {
                out.push_row(self.row(t));
            }
        }
        out
    }

    pub fn has_non_finite(&self) -> bool {
        self.data.iter().any(|v| !v.is_finite())
    }
}

/// What a frame-label set discriminates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelTask {
    Speaker,
    Phrase,
    Phone,
    Tcl,
}

/// Integer frame labels per utterance, aligned to that utterance's frames.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelSet {
    pub task: LabelTask,
    pub num_classes: usize,
    labels: BTreeMap<String, Vec<usize>>,
}

impl LabelSet {
    pub fn new(task: LabelTask, num_classes: usize) -> Self {
        Self {
            task,
            num_classes,
            labels: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, utt_id: impl Into<String>, frame_labels: Vec<usize>) {
        self.labels.insert(utt_id.into(), frame_labels);
    }

    pub fn get(&self, utt_id: &str) -> Option<&[usize]> {
        self.labels.get(utt_id).map(|v| v.as_slice())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Iterates utterances in id order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &[usize])> {
        self.labels.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    /// Checks the alignment contract against a set of feature matrices:
    /// every matrix has labels, lengths match, and labels are in range.
    pub fn validate_against(&self, feats: &[FeatureMatrix]) -> Result<(), LabelMismatch> {
        for f in feats {
            let labels = self
                .labels
                .get(&f.id)
                .ok_or_else(|| LabelMismatch::MissingUtterance { utt_id: f.id.clone() })?;
            if labels.len() != f.num_frames() {
                return Err(LabelMismatch::LengthMismatch {
                    utt_id: f.id.clone(),
                    frames: f.num_frames(),
                    labels: labels.len(),
                });
            }
            if let Some(&bad) = labels.iter().find(|&&l| l >= self.num_classes) {
                return Err(LabelMismatch::ClassOutOfRange {
                    utt_id: f.id.clone(),
                    label: bad,
                    num_classes: self.num_classes,
                });
            }
        }
        Ok(())
    }
}

/// Violation of the label/feature alignment contract.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LabelMismatch {
    #[error("no labels for utterance `{utt_id}`")]
    MissingUtterance { utt_id: String },
    #[error("utterance `{utt_id}` has {frames} frames but {labels} labels")]
    LengthMismatch {
        utt_id: String,
        frames: usize,
        labels: usize,
    },
    #[error("utterance `{utt_id}` label {label} out of range (classes: {num_classes})")]
    ClassOutOfRange {
        utt_id: String,
        label: usize,
        num_classes: usize,
    },
}
