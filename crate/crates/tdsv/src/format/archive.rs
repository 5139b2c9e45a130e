//! Feature and vector archives.
//!
//! "TDSVFT01": magic, then one record per utterance: u32 dim, u32 frame
//! count, length-prefixed id, row-major f32 payload. A side index at
//! `<archive>.idx` holds `id<TAB>byte-offset` lines (offset of the record's
//! dim field) for random access.
//!
//! "TDSVVEC1": magic, then records of (length-prefixed id, u32 dim, f32
//! payload).

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::Path;

use tdsv_core::ivector::IVector;
use tdsv_core::types::FeatureMatrix;

use super::{
    expect_magic, read_f32s, read_string, read_u32, write_f32s, write_string, write_u32,
    FormatError,
};

const FEATURE_MAGIC: &[u8; 8] = b"TDSVFT01";
const VECTOR_MAGIC: &[u8; 8] = b"TDSVVEC1";

fn index_path(path: &Path) -> std::path::PathBuf {
    let mut os = path.as_os_str().to_owned();
    os.push(".idx");
    os.into()
}

/// Writes all utterances into one archive plus its side index.
pub fn write_feature_archive(path: &Path, features: &[FeatureMatrix]) -> Result<(), FormatError> {
    let p = path.display().to_string();
    let file = File::create(path).map_err(|e| FormatError::io(&p, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(FEATURE_MAGIC)
        .map_err(|e| FormatError::io(&p, e))?;
    let mut offset = FEATURE_MAGIC.len() as u64;
    let mut index = String::new();
    for feat in features {
        index.push_str(&format!("{}\t{}\n", feat.id, offset));
        write_u32(&mut w, feat.dim() as u32, &p)?;
        write_u32(&mut w, feat.num_frames() as u32, &p)?;
        write_string(&mut w, &feat.id, &p)?;
        write_f32s(&mut w, feat.data(), &p)?;
        offset += 4 + 4 + 4 + feat.id.len() as u64 + 4 * feat.data().len() as u64;
    }
    w.flush().map_err(|e| FormatError::io(&p, e))?;
    let ip = index_path(path);
    std::fs::write(&ip, index).map_err(|e| FormatError::io(&ip.display().to_string(), e))?;
    Ok(())
}

fn read_feature_record<R: Read>(r: &mut R, path: &str) -> Result<FeatureMatrix, FormatError> {
    let dim = read_u32(r, path)? as usize;
    let frames = read_u32(r, path)? as usize;
    if dim == 0 {
        return Err(FormatError::bad(path, "zero feature dimension"));
    }
    let id = read_string(r, path)?;
    let data = read_f32s(r, frames * dim, path)?;
    Ok(FeatureMatrix::from_data(id, dim, data))
}

/// Reads every record in file order.
pub fn read_feature_archive(path: &Path) -> Result<Vec<FeatureMatrix>, FormatError> {
    let p = path.display().to_string();
    let file = File::open(path).map_err(|e| FormatError::io(&p, e))?;
    let len = file.metadata().map_err(|e| FormatError::io(&p, e))?.len();
    let mut r = BufReader::new(file);
    expect_magic(&mut r, FEATURE_MAGIC, &p)?;
    let mut out = Vec::new();
    let mut consumed = FEATURE_MAGIC.len() as u64;
    while consumed < len {
        let feat = read_feature_record(&mut r, &p)?;
        consumed += 4 + 4 + 4 + feat.id.len() as u64 + 4 * feat.data().len() as u64;
        out.push(feat);
    }
    Ok(out)
}

/// Loads the side index: id → record byte offset.
pub fn read_feature_index(path: &Path) -> Result<BTreeMap<String, u64>, FormatError> {
    let ip = index_path(path);
    let p = ip.display().to_string();
    let text = std::fs::read_to_string(&ip).map_err(|e| FormatError::io(&p, e))?;
    let mut map = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let (id, off) = line.split_once('\t').ok_or_else(|| FormatError::Parse {
            path: p.clone(),
            line: lineno + 1,
            reason: "expected id<TAB>offset".to_string(),
        })?;
        let offset: u64 = off.parse().map_err(|_| FormatError::Parse {
            path: p.clone(),
            line: lineno + 1,
            reason: format!("bad offset {off:?}"),
        })?;
        map.insert(id.to_string(), offset);
    }
    Ok(map)
}

/// Random access through the side index; ids are returned in the order
/// requested.
pub fn read_features_by_id(path: &Path, ids: &[&str]) -> Result<Vec<FeatureMatrix>, FormatError> {
    let p = path.display().to_string();
    let index = read_feature_index(path)?;
    let mut file = File::open(path).map_err(|e| FormatError::io(&p, e))?;
    {
        let mut r = BufReader::new(&mut file);
        expect_magic(&mut r, FEATURE_MAGIC, &p)?;
    }
    let mut out = Vec::with_capacity(ids.len());
    for &id in ids {
        let &offset = index
            .get(id)
            .ok_or_else(|| FormatError::bad(&p, format!("utterance {id:?} not in index")))?;
        file.seek(SeekFrom::Start(offset))
            .map_err(|e| FormatError::io(&p, e))?;
        let mut r = BufReader::new(&mut file);
        let feat = read_feature_record(&mut r, &p)?;
        if feat.id != id {
            return Err(FormatError::bad(
                &p,
                format!("index points {id:?} at a record named {:?}", feat.id),
            ));
        }
        out.push(feat);
    }
    Ok(out)
}

/// Writes an i-vector/x-vector archive.
pub fn write_vector_archive(path: &Path, vectors: &[IVector]) -> Result<(), FormatError> {
    let p = path.display().to_string();
    let file = File::create(path).map_err(|e| FormatError::io(&p, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(VECTOR_MAGIC)
        .map_err(|e| FormatError::io(&p, e))?;
    for v in vectors {
        write_string(&mut w, &v.id, &p)?;
        write_u32(&mut w, v.w.len() as u32, &p)?;
        write_f32s(&mut w, &v.w, &p)?;
    }
    w.flush().map_err(|e| FormatError::io(&p, e))
}

pub fn read_vector_archive(path: &Path) -> Result<Vec<IVector>, FormatError> {
    let p = path.display().to_string();
    let file = File::open(path).map_err(|e| FormatError::io(&p, e))?;
    let len = file.metadata().map_err(|e| FormatError::io(&p, e))?.len();
    let mut r = BufReader::new(file);
    expect_magic(&mut r, VECTOR_MAGIC, &p)?;
    let mut out = Vec::new();
    let mut consumed = VECTOR_MAGIC.len() as u64;
    while consumed < len {
        let id = read_string(&mut r, &p)?;
        let dim = read_u32(&mut r, &p)? as usize;
        let w = read_f32s(&mut r, dim, &p)?;
        consumed += 4 + id.len() as u64 + 4 + 4 * dim as u64;
        out.push(IVector { id, w });
    }
    Ok(out)
}
