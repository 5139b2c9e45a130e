//! On-disk formats. Binary containers open with an 8-byte magic whose
//! first four bytes are "TDSV", then a three-letter kind, then a version
//! digit; all integers are little-endian u32 and payloads are f32 or f64
//! as documented per format. Text formats (trials, scores, labels, DET
//! points) are line-oriented UTF-8.

pub mod archive;
pub mod model;
pub mod nnet;
pub mod text;

pub use archive::{
    read_feature_archive, read_features_by_id, read_vector_archive, write_feature_archive,
    write_vector_archive,
};
pub use model::{file_sha256, read_gmm, read_plda, read_tv, write_gmm, write_plda, write_tv};
pub use nnet::{read_network, write_network, BnProjection, NetworkFile};
pub use text::{
    parse_class_table, read_det_points, read_labels, read_scores, read_trials, write_det_points,
    write_labels, write_scores, write_trials, ClassTable,
};

use std::io::{Read, Write};

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: truncated file")]
    Truncated { path: String },
    #[error("{path}: unknown format (magic {found:?})")]
    UnknownFormat { path: String, found: String },
    #[error("{path}: format tag mismatch: expected {expected}, found {found}")]
    TagMismatch {
        path: String,
        expected: String,
        found: String,
    },
    #[error("{path}: version mismatch: expected {expected}, found {found}")]
    VersionMismatch {
        path: String,
        expected: String,
        found: String,
    },
    #[error("{path}:{line}: {reason}")]
    Parse {
        path: String,
        line: usize,
        reason: String,
    },
    #[error("{path}: {reason}")]
    BadContents { path: String, reason: String },
}

impl FormatError {
    pub(crate) fn io(path: &str, source: std::io::Error) -> Self {
        FormatError::Io {
            path: path.to_string(),
            source,
        }
    }

    pub(crate) fn truncated(path: &str) -> Self {
        FormatError::Truncated {
            path: path.to_string(),
        }
    }

    pub(crate) fn bad(path: &str, reason: impl Into<String>) -> Self {
        FormatError::BadContents {
            path: path.to_string(),
            reason: reason.into(),
        }
    }
}

/// Reads and classifies an 8-byte magic. A wrong kind with the right
/// prefix is a tag mismatch (file from another module); a right kind with
/// a different trailing version digit is a version mismatch; anything not
/// starting with "TDSV" is not ours.
pub(crate) fn expect_magic<R: Read>(
    r: &mut R,
    expected: &[u8; 8],
    path: &str,
) -> Result<(), FormatError> {
    let mut found = [0u8; 8];
    r.read_exact(&mut found)
        .map_err(|_| FormatError::truncated(path))?;
    if found == *expected {
        return Ok(());
    }
    let printable = |m: &[u8]| String::from_utf8_lossy(m).into_owned();
    if &found[..4] != b"TDSV" {
        return Err(FormatError::UnknownFormat {
            path: path.to_string(),
            found: printable(&found),
        });
    }
    if found[4..7] != expected[4..7] {
        return Err(FormatError::TagMismatch {
            path: path.to_string(),
            expected: printable(expected),
            found: printable(&found),
        });
    }
    Err(FormatError::VersionMismatch {
        path: path.to_string(),
        expected: printable(expected),
        found: printable(&found),
    })
}

pub(crate) fn read_u32<R: Read>(r: &mut R, path: &str) -> Result<u32, FormatError> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)
        .map_err(|_| FormatError::truncated(path))?;
    Ok(u32::from_le_bytes(b))
}

pub(crate) fn read_f32s<R: Read>(r: &mut R, n: usize, path: &str) -> Result<Vec<f64>, FormatError> {
    let mut bytes = vec![0u8; n * 4];
    r.read_exact(&mut bytes)
        .map_err(|_| FormatError::truncated(path))?;
    Ok(bytes
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64)
        .collect())
}

pub(crate) fn read_f64s<R: Read>(r: &mut R, n: usize, path: &str) -> Result<Vec<f64>, FormatError> {
    let mut bytes = vec![0u8; n * 8];
    r.read_exact(&mut bytes)
        .map_err(|_| FormatError::truncated(path))?;
    Ok(bytes
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
        .collect())
}

/// u32 length-prefixed UTF-8 string.
pub(crate) fn read_string<R: Read>(r: &mut R, path: &str) -> Result<String, FormatError> {
    let len = read_u32(r, path)? as usize;
    if len > 1 << 20 {
        return Err(FormatError::bad(path, format!("implausible id length {len}")));
    }
    let mut bytes = vec![0u8; len];
    r.read_exact(&mut bytes)
        .map_err(|_| FormatError::truncated(path))?;
    String::from_utf8(bytes).map_err(|_| FormatError::bad(path, "id is not valid UTF-8"))
}

pub(crate) fn write_u32<W: Write>(w: &mut W, v: u32, path: &str) -> Result<(), FormatError> {
    w.write_all(&v.to_le_bytes())
        .map_err(|e| FormatError::io(path, e))
}

pub(crate) fn write_f32s<W: Write>(w: &mut W, vs: &[f64], path: &str) -> Result<(), FormatError> {
    let mut bytes = Vec::with_capacity(vs.len() * 4);
    for &v in vs {
        bytes.extend_from_slice(&(v as f32).to_le_bytes());
    }
    w.write_all(&bytes).map_err(|e| FormatError::io(path, e))
}

pub(crate) fn write_f64s<W: Write>(w: &mut W, vs: &[f64], path: &str) -> Result<(), FormatError> {
    let mut bytes = Vec::with_capacity(vs.len() * 8);
    for &v in vs {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&bytes).map_err(|e| FormatError::io(path, e))
}

pub(crate) fn write_string<W: Write>(w: &mut W, s: &str, path: &str) -> Result<(), FormatError> {
    write_u32(w, s.len() as u32, path)?;
    w.write_all(s.as_bytes())
        .map_err(|e| FormatError::io(path, e))
}
