//! Line-oriented text formats: trial lists, score files, DET points, frame
//! labels, and class-name tables. All are UTF-8 with tab or space separated
//! fields as documented per reader; parse errors carry 1-based line numbers.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use tdsv_core::eval::{ScoreSet, Trial, TrialList, TrialType};
use tdsv_core::types::{LabelSet, LabelTask};

use super::FormatError;

fn parse_err(path: &str, line: usize, reason: impl Into<String>) -> FormatError {
    FormatError::Parse {
        path: path.to_string(),
        line,
        reason: reason.into(),
    }
}

fn open_lines(path: &Path, p: &str) -> Result<impl Iterator<Item = std::io::Result<String>>, FormatError> {
    let file = File::open(path).map_err(|e| FormatError::io(p, e))?;
    Ok(BufReader::new(file).lines())
}

/// Reads a trial list: one `model<TAB>utterance<TAB>type` per line, where
/// type is one of genuine, target-wrong, impostor-correct, impostor-wrong.
/// Blank lines are ignored. Duplicate triples are rejected with their line.
pub fn read_trials(path: &Path) -> Result<TrialList, FormatError> {
    let p = path.display().to_string();
    let mut trials = Vec::new();
    let mut seen = BTreeSet::new();
    for (idx, line) in open_lines(path, &p)?.enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| FormatError::io(&p, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(parse_err(
                &p,
                lineno,
                format!("expected 3 tab-separated fields, found {}", fields.len()),
            ));
        }
        let trial_type = TrialType::parse(fields[2]).ok_or_else(|| {
            parse_err(&p, lineno, format!("unknown trial type `{}`", fields[2]))
        })?;
        if !seen.insert((fields[0].to_string(), fields[1].to_string(), trial_type)) {
            return Err(parse_err(
                &p,
                lineno,
                format!("duplicate trial ({}, {}, {trial_type})", fields[0], fields[1]),
            ));
        }
        trials.push(Trial {
            model: fields[0].to_string(),
            utterance: fields[1].to_string(),
            trial_type,
        });
    }
    TrialList::new(trials).map_err(|e| FormatError::bad(&p, e.to_string()))
}

pub fn write_trials(path: &Path, trials: &TrialList) -> Result<(), FormatError> {
    let p = path.display().to_string();
    let file = File::create(path).map_err(|e| FormatError::io(&p, e))?;
    let mut w = BufWriter::new(file);
    for t in trials.trials() {
        writeln!(w, "{}\t{}\t{}", t.model, t.utterance, t.trial_type)
            .map_err(|e| FormatError::io(&p, e))?;
    }
    w.flush().map_err(|e| FormatError::io(&p, e))
}

/// Reads a score file: a trial line plus `<TAB>score` per line.
pub fn read_scores(path: &Path) -> Result<ScoreSet, FormatError> {
    let p = path.display().to_string();
    let mut trials = Vec::new();
    let mut scores = Vec::new();
    let mut seen = BTreeSet::new();
    for (idx, line) in open_lines(path, &p)?.enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| FormatError::io(&p, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(parse_err(
                &p,
                lineno,
                format!("expected 4 tab-separated fields, found {}", fields.len()),
            ));
        }
        let trial_type = TrialType::parse(fields[2]).ok_or_else(|| {
            parse_err(&p, lineno, format!("unknown trial type `{}`", fields[2]))
        })?;
        let score: f64 = fields[3]
            .parse()
            .map_err(|_| parse_err(&p, lineno, format!("bad score `{}`", fields[3])))?;
        if !score.is_finite() {
            return Err(parse_err(&p, lineno, format!("non-finite score `{}`", fields[3])));
        }
        if !seen.insert((fields[0].to_string(), fields[1].to_string(), trial_type)) {
            return Err(parse_err(
                &p,
                lineno,
                format!("duplicate trial ({}, {}, {trial_type})", fields[0], fields[1]),
            ));
        }
        trials.push(Trial {
            model: fields[0].to_string(),
            utterance: fields[1].to_string(),
            trial_type,
        });
        scores.push(score);
    }
    let list = TrialList::new(trials).map_err(|e| FormatError::bad(&p, e.to_string()))?;
    ScoreSet::new(list, scores).map_err(|e| FormatError::bad(&p, e.to_string()))
}

/// Writes scores with six decimal places.
pub fn write_scores(path: &Path, scores: &ScoreSet) -> Result<(), FormatError> {
    let p = path.display().to_string();
    let file = File::create(path).map_err(|e| FormatError::io(&p, e))?;
    let mut w = BufWriter::new(file);
    for (t, s) in scores.iter() {
        writeln!(w, "{}\t{}\t{}\t{s:.6}", t.model, t.utterance, t.trial_type)
            .map_err(|e| FormatError::io(&p, e))?;
    }
    w.flush().map_err(|e| FormatError::io(&p, e))
}

/// Reads DET points: `P_fa<TAB>P_miss` per line.
pub fn read_det_points(path: &Path) -> Result<Vec<(f64, f64)>, FormatError> {
    let p = path.display().to_string();
    let mut points = Vec::new();
    for (idx, line) in open_lines(path, &p)?.enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| FormatError::io(&p, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 2 {
            return Err(parse_err(
                &p,
                lineno,
                format!("expected 2 tab-separated fields, found {}", fields.len()),
            ));
        }
        let pa: f64 = fields[0]
            .parse()
            .map_err(|_| parse_err(&p, lineno, format!("bad probability `{}`", fields[0])))?;
        let pm: f64 = fields[1]
            .parse()
            .map_err(|_| parse_err(&p, lineno, format!("bad probability `{}`", fields[1])))?;
        points.push((pa, pm));
    }
    Ok(points)
}

pub fn write_det_points(path: &Path, points: &[(f64, f64)]) -> Result<(), FormatError> {
    let p = path.display().to_string();
    let file = File::create(path).map_err(|e| FormatError::io(&p, e))?;
    let mut w = BufWriter::new(file);
    for &(pa, pm) in points {
        writeln!(w, "{pa:.6}\t{pm:.6}").map_err(|e| FormatError::io(&p, e))?;
    }
    w.flush().map_err(|e| FormatError::io(&p, e))
}

/// Reads frame labels: one `utt-id n_frames l0 l1 … l(n-1)` line per
/// utterance, whitespace separated. With `num_classes` given, labels are
/// checked against it; otherwise the class count is inferred as the largest
/// label plus one.
pub fn read_labels(
    path: &Path,
    task: LabelTask,
    num_classes: Option<usize>,
) -> Result<LabelSet, FormatError> {
    let p = path.display().to_string();
    let mut entries: Vec<(String, Vec<usize>)> = Vec::new();
    let mut seen = BTreeSet::new();
    let mut max_label = None::<usize>;
    for (idx, line) in open_lines(path, &p)?.enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| FormatError::io(&p, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let utt_id = tokens.next().expect("non-blank line has a first token");
        if !seen.insert(utt_id.to_string()) {
            return Err(parse_err(&p, lineno, format!("duplicate utterance `{utt_id}`")));
        }
        let n_frames: usize = match tokens.next() {
            Some(tok) => tok
                .parse()
                .map_err(|_| parse_err(&p, lineno, format!("bad frame count `{tok}`")))?,
            None => return Err(parse_err(&p, lineno, "missing frame count")),
        };
        let mut labels = Vec::with_capacity(n_frames);
        for tok in tokens {
            let label: usize = tok
                .parse()
                .map_err(|_| parse_err(&p, lineno, format!("bad label `{tok}`")))?;
            if let Some(c) = num_classes {
                if label >= c {
                    return Err(parse_err(
                        &p,
                        lineno,
                        format!("label {label} outside 0..{c}"),
                    ));
                }
            }
            max_label = Some(max_label.map_or(label, |m| m.max(label)));
            labels.push(label);
        }
        if labels.len() != n_frames {
            return Err(parse_err(
                &p,
                lineno,
                format!("declared {n_frames} frames but listed {} labels", labels.len()),
            ));
        }
        entries.push((utt_id.to_string(), labels));
    }
    if entries.is_empty() {
        return Err(FormatError::bad(&p, "no utterances in label file"));
    }
    let classes = num_classes.unwrap_or_else(|| max_label.map_or(0, |m| m + 1));
    let mut set = LabelSet::new(task, classes);
    for (id, labels) in entries {
        set.insert(id, labels);
    }
    Ok(set)
}

pub fn write_labels(path: &Path, labels: &LabelSet) -> Result<(), FormatError> {
    let p = path.display().to_string();
    let file = File::create(path).map_err(|e| FormatError::io(&p, e))?;
    let mut w = BufWriter::new(file);
    for (id, ls) in labels.iter() {
        write!(w, "{id} {}", ls.len()).map_err(|e| FormatError::io(&p, e))?;
        for l in ls {
            write!(w, " {l}").map_err(|e| FormatError::io(&p, e))?;
        }
        writeln!(w).map_err(|e| FormatError::io(&p, e))?;
    }
    w.flush().map_err(|e| FormatError::io(&p, e))
}

/// Class-name table for ingested phone labels: one name per line, the
/// 0-based line position is the class index. The names `sil` and `pause`
/// are reserved for non-speech and their frames are dropped before
/// bottleneck training.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassTable {
    names: Vec<String>,
}

impl ClassTable {
    pub const RESERVED_SILENCE: [&'static str; 2] = ["sil", "pause"];

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, index: usize) -> Option<&str> {
        self.names.get(index).map(|s| s.as_str())
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn is_silence(&self, index: usize) -> bool {
        self.name(index)
            .is_some_and(|n| Self::RESERVED_SILENCE.contains(&n))
    }

    /// Mask of frames to keep: true where the label is a speech class.
    pub fn speech_mask(&self, labels: &[usize]) -> Vec<bool> {
        labels.iter().map(|&l| !self.is_silence(l)).collect()
    }
}

/// Reads a class table. Blank lines are ignored; names must be unique
/// single tokens.
pub fn parse_class_table(path: &Path) -> Result<ClassTable, FormatError> {
    let p = path.display().to_string();
    let mut names = Vec::new();
    for (idx, line) in open_lines(path, &p)?.enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| FormatError::io(&p, e))?;
        let name = line.trim();
        if name.is_empty() {
            continue;
        }
        if name.split_whitespace().count() != 1 {
            return Err(parse_err(&p, lineno, format!("class name `{name}` is not a single token")));
        }
        if names.iter().any(|n| n == name) {
            return Err(parse_err(&p, lineno, format!("duplicate class name `{name}`")));
        }
        names.push(name.to_string());
    }
    if names.is_empty() {
        return Err(FormatError::bad(&p, "empty class table"));
    }
    Ok(ClassTable { names })
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn sample_trials() -> TrialList {
        let mk = |m: &str, u: &str, t| Trial {
            model: m.to_string(),
            utterance: u.to_string(),
            trial_type: t,
        };
        TrialList::new(vec![
            mk("spk001-phr001", "u1", TrialType::Genuine),
            mk("spk001-phr001", "u2", TrialType::TargetWrong),
            mk("spk001-phr001", "u3", TrialType::ImpostorCorrect),
            mk("spk001-phr001", "u4", TrialType::ImpostorWrong),
            mk("spk002-phr001", "u1", TrialType::ImpostorCorrect),
        ])
        .unwrap()
    }

    #[test]
    fn trials_round_trip_with_exact_type_counts() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("eval.trials");
        let trials = sample_trials();
        write_trials(&path, &trials).unwrap();
        let back = read_trials(&path).unwrap();
        assert_eq!(back, trials);
        let count = |ty| back.trials().iter().filter(|t| t.trial_type == ty).count();
        assert_eq!(count(TrialType::Genuine), 1);
        assert_eq!(count(TrialType::TargetWrong), 1);
        assert_eq!(count(TrialType::ImpostorCorrect), 2);
        assert_eq!(count(TrialType::ImpostorWrong), 1);
    }

    #[test]
    fn trial_parse_errors_carry_line_numbers() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("eval.trials");

        std::fs::write(&path, "m\tu\tgenuine\nm\tu\n").unwrap();
        match read_trials(&path).unwrap_err() {
            FormatError::Parse { line, reason, .. } => {
                assert_eq!(line, 2);
                assert!(reason.contains("3 tab-separated"));
            }
            other => panic!("unexpected {other}"),
        }

        std::fs::write(&path, "m\tu\tgenuine\nm\tu2\tbogus-type\n").unwrap();
        match read_trials(&path).unwrap_err() {
            FormatError::Parse { line, reason, .. } => {
                assert_eq!(line, 2);
                assert!(reason.contains("bogus-type"));
            }
            other => panic!("unexpected {other}"),
        }

        std::fs::write(&path, "m\tu\tgenuine\n\nm\tu\tgenuine\n").unwrap();
        match read_trials(&path).unwrap_err() {
            FormatError::Parse { line, reason, .. } => {
                assert_eq!(line, 3);
                assert!(reason.contains("duplicate"));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn scores_round_trip_at_six_decimals() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("gmm.score");
        let trials = sample_trials();
        let scores: Vec<f64> = vec![1.5, -0.25, 0.0, 3.141593, -10.0];
        let set = ScoreSet::new(trials, scores.clone()).unwrap();
        write_scores(&path, &set).unwrap();
        let back = read_scores(&path).unwrap();
        assert_eq!(back.trials(), set.trials());
        for (a, b) in back.scores().iter().zip(&scores) {
            assert!((a - b).abs() < 5e-7, "{a} vs {b}");
        }
    }

    #[test]
    fn non_finite_score_is_rejected_with_line() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("gmm.score");
        std::fs::write(&path, "m\tu\tgenuine\t1.0\nm\tu2\tgenuine\tNaN\n").unwrap();
        match read_scores(&path).unwrap_err() {
            FormatError::Parse { line, reason, .. } => {
                assert_eq!(line, 2);
                assert!(reason.contains("non-finite"));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn det_points_round_trip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("system.det");
        let points = vec![(0.5, 0.001), (0.25, 0.125)];
        write_det_points(&path, &points).unwrap();
        assert_eq!(read_det_points(&path).unwrap(), points);
    }

    #[test]
    fn labels_round_trip_and_count_check() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("tcl.labels");
        let mut labels = LabelSet::new(LabelTask::Tcl, 3);
        labels.insert("u1", vec![0, 0, 1, 2]);
        labels.insert("u2", vec![2]);
        write_labels(&path, &labels).unwrap();
        let back = read_labels(&path, LabelTask::Tcl, Some(3)).unwrap();
        assert_eq!(back, labels);

        // Inference takes the largest label plus one.
        let inferred = read_labels(&path, LabelTask::Tcl, None).unwrap();
        assert_eq!(inferred.num_classes, 3);

        std::fs::write(&path, "u1 3 0 1\n").unwrap();
        match read_labels(&path, LabelTask::Tcl, None).unwrap_err() {
            FormatError::Parse { line, reason, .. } => {
                assert_eq!(line, 1);
                assert!(reason.contains("declared 3 frames"));
            }
            other => panic!("unexpected {other}"),
        }

        std::fs::write(&path, "u1 2 0 5\n").unwrap();
        match read_labels(&path, LabelTask::Phone, Some(4)).unwrap_err() {
            FormatError::Parse { line, reason, .. } => {
                assert_eq!(line, 1);
                assert!(reason.contains("outside 0..4"));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn class_table_marks_reserved_silence() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("phones.table");
        std::fs::write(&path, "sil\naa\nee\npause\noo\n").unwrap();
        let table = parse_class_table(&path).unwrap();
        assert_eq!(table.len(), 5);
        assert_eq!(table.index_of("ee"), Some(2));
        assert!(table.is_silence(0));
        assert!(table.is_silence(3));
        assert!(!table.is_silence(1));
        assert_eq!(
            table.speech_mask(&[0, 1, 2, 3, 4]),
            vec![false, true, true, false, true]
        );

        std::fs::write(&path, "aa\naa\n").unwrap();
        match parse_class_table(&path).unwrap_err() {
            FormatError::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other}"),
        }
    }
}
