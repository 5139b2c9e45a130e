//! Model containers.
//!
//! "TDSVGMM1": u32 C, u32 D, then f64 weights (C), means (C·D), variances
//! (C·D).
//!
//! "TDSVTV01": u32 C, u32 D, u32 R, f64 T matrix ((C·D)×R row-major), then
//! the 32-byte SHA-256 of the UBM file this subspace was trained against.
//! Loading requires that UBM and verifies the pairing.
//!
//! "TDSVPLDA": u32 dim, f64 μ (dim), Σ_b (dim²), Σ_w (dim²), then the
//! spherical-normalization chain: u32 step count, per step f64 mean (dim)
//! and whitening matrix (dim²), then u32 loaded-iteration count and the
//! iteration indices.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use tdsv_core::gmm::DiagGmm;
use tdsv_core::ivector::TotalVariabilityModel;
use tdsv_core::linalg::Mat;
use tdsv_core::plda::{PldaModel, SphericalNorm, SphericalNormStep};

use super::{expect_magic, read_f64s, read_u32, write_f64s, write_u32, FormatError};

const GMM_MAGIC: &[u8; 8] = b"TDSVGMM1";
const TV_MAGIC: &[u8; 8] = b"TDSVTV01";
const PLDA_MAGIC: &[u8; 8] = b"TDSVPLDA";

/// SHA-256 of a file's contents.
pub fn file_sha256(path: &Path) -> Result<[u8; 32], FormatError> {
    use sha2::{Digest, Sha256};
    let p = path.display().to_string();
    let bytes = std::fs::read(path).map_err(|e| FormatError::io(&p, e))?;
    Ok(Sha256::digest(&bytes).into())
}

pub fn write_gmm(path: &Path, gmm: &DiagGmm) -> Result<(), FormatError> {
    let p = path.display().to_string();
    let file = File::create(path).map_err(|e| FormatError::io(&p, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(GMM_MAGIC).map_err(|e| FormatError::io(&p, e))?;
    write_u32(&mut w, gmm.num_components() as u32, &p)?;
    write_u32(&mut w, gmm.dim() as u32, &p)?;
    write_f64s(&mut w, gmm.weights(), &p)?;
    write_f64s(&mut w, gmm.means_flat(), &p)?;
    write_f64s(&mut w, gmm.vars_flat(), &p)?;
    w.flush().map_err(|e| FormatError::io(&p, e))
}

pub fn read_gmm(path: &Path) -> Result<DiagGmm, FormatError> {
    let p = path.display().to_string();
    let file = File::open(path).map_err(|e| FormatError::io(&p, e))?;
    let mut r = BufReader::new(file);
    expect_magic(&mut r, GMM_MAGIC, &p)?;
    let c = read_u32(&mut r, &p)? as usize;
    let d = read_u32(&mut r, &p)? as usize;
    if c == 0 || d == 0 {
        return Err(FormatError::bad(&p, "zero component count or dimension"));
    }
    let weights = read_f64s(&mut r, c, &p)?;
    let means = read_f64s(&mut r, c * d, &p)?;
    let vars = read_f64s(&mut r, c * d, &p)?;
    Ok(DiagGmm::new(weights, means, vars, d))
}

/// Writes the total-variability subspace, stamping it with the hash of the
/// UBM file it belongs to.
pub fn write_tv(path: &Path, tv: &TotalVariabilityModel, ubm_path: &Path) -> Result<(), FormatError> {
    let p = path.display().to_string();
    let ubm_hash = file_sha256(ubm_path)?;
    let file = File::create(path).map_err(|e| FormatError::io(&p, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(TV_MAGIC).map_err(|e| FormatError::io(&p, e))?;
    write_u32(&mut w, tv.num_components() as u32, &p)?;
    write_u32(&mut w, tv.dim() as u32, &p)?;
    write_u32(&mut w, tv.rank() as u32, &p)?;
    write_f64s(&mut w, tv.t().data(), &p)?;
    w.write_all(&ubm_hash).map_err(|e| FormatError::io(&p, e))?;
    w.flush().map_err(|e| FormatError::io(&p, e))
}

/// Loads a subspace together with its UBM, refusing a UBM file whose hash
/// differs from the one recorded at training time.
pub fn read_tv(path: &Path, ubm_path: &Path) -> Result<TotalVariabilityModel, FormatError> {
    let p = path.display().to_string();
    let file = File::open(path).map_err(|e| FormatError::io(&p, e))?;
    let mut r = BufReader::new(file);
    expect_magic(&mut r, TV_MAGIC, &p)?;
    let c = read_u32(&mut r, &p)? as usize;
    let d = read_u32(&mut r, &p)? as usize;
    let rank = read_u32(&mut r, &p)? as usize;
    let t = read_f64s(&mut r, c * d * rank, &p)?;
    let mut stored_hash = [0u8; 32];
    r.read_exact(&mut stored_hash)
        .map_err(|_| FormatError::truncated(&p))?;

    let actual = file_sha256(ubm_path)?;
    if actual != stored_hash {
        return Err(FormatError::bad(
            &p,
            format!(
                "UBM file {} does not match the one this subspace was trained against",
                ubm_path.display()
            ),
        ));
    }
    let ubm = read_gmm(ubm_path)?;
    if ubm.num_components() != c || ubm.dim() != d {
        return Err(FormatError::bad(
            &p,
            format!(
                "UBM shape {}x{} does not match header {c}x{d}",
                ubm.num_components(),
                ubm.dim()
            ),
        ));
    }
    Ok(TotalVariabilityModel::new(
        Mat::from_vec(c * d, rank, t),
        &ubm,
    ))
}

/// Writes a PLDA model together with its normalization chain.
pub fn write_plda(path: &Path, plda: &PldaModel, norm: &SphericalNorm) -> Result<(), FormatError> {
    let p = path.display().to_string();
    let dim = plda.dim();
    let file = File::create(path).map_err(|e| FormatError::io(&p, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(PLDA_MAGIC).map_err(|e| FormatError::io(&p, e))?;
    write_u32(&mut w, dim as u32, &p)?;
    write_f64s(&mut w, &plda.mu, &p)?;
    write_f64s(&mut w, plda.sigma_b.data(), &p)?;
    write_f64s(&mut w, plda.sigma_w.data(), &p)?;
    write_u32(&mut w, norm.steps.len() as u32, &p)?;
    for step in &norm.steps {
        write_f64s(&mut w, &step.mean, &p)?;
        write_f64s(&mut w, step.whiten.data(), &p)?;
    }
    write_u32(&mut w, norm.loaded_iters.len() as u32, &p)?;
    for &it in &norm.loaded_iters {
        write_u32(&mut w, it as u32, &p)?;
    }
    w.flush().map_err(|e| FormatError::io(&p, e))
}

pub fn read_plda(path: &Path) -> Result<(PldaModel, SphericalNorm), FormatError> {
    let p = path.display().to_string();
    let file = File::open(path).map_err(|e| FormatError::io(&p, e))?;
    let mut r = BufReader::new(file);
    expect_magic(&mut r, PLDA_MAGIC, &p)?;
    let dim = read_u32(&mut r, &p)? as usize;
    if dim == 0 {
        return Err(FormatError::bad(&p, "zero dimension"));
    }
    let mu = read_f64s(&mut r, dim, &p)?;
    let sigma_b = Mat::from_vec(dim, dim, read_f64s(&mut r, dim * dim, &p)?);
    let sigma_w = Mat::from_vec(dim, dim, read_f64s(&mut r, dim * dim, &p)?);
    let steps = read_u32(&mut r, &p)? as usize;
    let mut norm = SphericalNorm {
        steps: Vec::with_capacity(steps),
        loaded_iters: Vec::new(),
    };
    for _ in 0..steps {
        let mean = read_f64s(&mut r, dim, &p)?;
        let whiten = Mat::from_vec(dim, dim, read_f64s(&mut r, dim * dim, &p)?);
        norm.steps.push(SphericalNormStep { mean, whiten });
    }
    let loaded = read_u32(&mut r, &p)? as usize;
    for _ in 0..loaded {
        norm.loaded_iters.push(read_u32(&mut r, &p)? as usize);
    }
    Ok((
        PldaModel {
            mu,
            sigma_b,
            sigma_w,
        },
        norm,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn sample_gmm() -> DiagGmm {
        DiagGmm::new(
            vec![0.25, 0.75],
            vec![1.0, -2.0, 0.5, 3.25],
            vec![1.5, 0.5, 2.0, 1.0],
            2,
        )
    }

    #[test]
    fn gmm_round_trip_is_bit_exact() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("ubm.gmm");
        let gmm = sample_gmm();
        write_gmm(&path, &gmm).unwrap();
        let back = read_gmm(&path).unwrap();
        assert_eq!(back.weights(), gmm.weights());
        assert_eq!(back.means_flat(), gmm.means_flat());
        assert_eq!(back.vars_flat(), gmm.vars_flat());
    }

    #[test]
    fn tv_round_trip_and_hash_check() {
        let dir = tempdir().unwrap();
        let ubm_path = dir.path().join("ubm.gmm");
        let tv_path = dir.path().join("t.tv");
        let gmm = sample_gmm();
        write_gmm(&ubm_path, &gmm).unwrap();
        let t = Mat::from_vec(4, 2, (0..8).map(|i| i as f64 / 7.0).collect());
        let tv = TotalVariabilityModel::new(t.clone(), &gmm);
        write_tv(&tv_path, &tv, &ubm_path).unwrap();

        let back = read_tv(&tv_path, &ubm_path).unwrap();
        assert_eq!(back.t().data(), t.data());
        assert_eq!(back.rank(), 2);

        // A modified UBM file no longer matches the recorded hash.
        let other = DiagGmm::new(
            vec![0.25, 0.75],
            vec![2.0, -2.0, 0.5, 3.25],
            vec![1.5, 0.5, 2.0, 1.0],
            2,
        );
        write_gmm(&ubm_path, &other).unwrap();
        let err = read_tv(&tv_path, &ubm_path).unwrap_err();
        assert!(err.to_string().contains("does not match"));
    }

    #[test]
    fn plda_round_trip_with_norm_chain() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("model.plda");
        let plda = PldaModel {
            mu: vec![0.5, -0.5],
            sigma_b: Mat::from_diag(&[2.0, 1.0]),
            sigma_w: Mat::from_diag(&[1.0, 0.5]),
        };
        let norm = SphericalNorm {
            steps: vec![SphericalNormStep {
                mean: vec![0.1, 0.2],
                whiten: Mat::identity(2),
            }],
            loaded_iters: vec![0],
        };
        write_plda(&path, &plda, &norm).unwrap();
        let (p2, n2) = read_plda(&path).unwrap();
        assert_eq!(p2, plda);
        assert_eq!(n2, norm);
    }

    #[test]
    fn cross_module_load_is_tag_mismatch() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("ubm.gmm");
        write_gmm(&path, &sample_gmm()).unwrap();
        let err = read_plda(&path).unwrap_err();
        match err {
            FormatError::TagMismatch { expected, found, .. } => {
                assert_eq!(expected, "TDSVPLDA");
                assert_eq!(found, "TDSVGMM1");
            }
            other => panic!("expected tag mismatch, got {other}"),
        }
    }

    #[test]
    fn version_bump_is_version_mismatch() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("ubm.gmm");
        write_gmm(&path, &sample_gmm()).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[7] = b'2'; // TDSVGMM2
        std::fs::write(&path, bytes).unwrap();
        let err = read_gmm(&path).unwrap_err();
        assert!(matches!(err, FormatError::VersionMismatch { .. }), "{err}");
    }

    #[test]
    fn truncated_model_is_reported() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("ubm.gmm");
        write_gmm(&path, &sample_gmm()).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 1]).unwrap();
        assert!(matches!(
            read_gmm(&path).unwrap_err(),
            FormatError::Truncated { .. }
        ));
    }
}
