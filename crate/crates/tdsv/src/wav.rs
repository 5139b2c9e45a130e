//! RIFF WAV reading, restricted to the one encoding the toolkit accepts:
//! PCM16, mono. Everything else is rejected with a reason rather than
//! resampled or converted.

use std::fs;
use std::path::Path;

use tdsv_core::types::AudioClip;

#[derive(Debug, thiserror::Error)]
pub enum WavError {
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: not a RIFF/WAVE file")]
    NotRiff { path: String },
    #[error("{path}: truncated file")]
    Truncated { path: String },
    #[error("{path}: unsupported encoding: {reason}")]
    Unsupported { path: String, reason: String },
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a str,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], WavError> {
        if self.pos + n > self.bytes.len() {
            return Err(WavError::Truncated {
                path: self.path.to_string(),
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, WavError> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn u16(&mut self) -> Result<u16, WavError> {
        let b = self.take(2)?;
        Ok(u16::from_le_bytes([b[0], b[1]]))
    }
}

/// Reads one PCM16 mono WAV file. The clip id is the file stem.
pub fn read_wav(path: &Path) -> Result<AudioClip, WavError> {
    let display = path.display().to_string();
    let bytes = fs::read(path).map_err(|source| WavError::Io {
        path: display.clone(),
        source,
    })?;
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| display.clone());
    parse_wav(&bytes, &id, &display)
}

/// Parses WAV bytes; split out so tests can feed crafted buffers.
pub fn parse_wav(bytes: &[u8], id: &str, path: &str) -> Result<AudioClip, WavError> {
    let mut c = Cursor {
        bytes,
        pos: 0,
        path,
    };
    if c.take(4)? != b"RIFF" {
        return Err(WavError::NotRiff {
            path: path.to_string(),
        });
    }
    c.u32()?; // RIFF size; chunk walking below bounds every read anyway
    if c.take(4)? != b"WAVE" {
        return Err(WavError::NotRiff {
            path: path.to_string(),
        });
    }

    let unsupported = |reason: String| WavError::Unsupported {
        path: path.to_string(),
        reason,
    };

    let mut format: Option<(u16, u16, u32, u16)> = None;
    loop {
        let tag: [u8; 4] = c.take(4)?.try_into().unwrap();
        let size = c.u32()? as usize;
        match &tag {
            b"fmt " => {
                if size < 16 {
                    return Err(WavError::Truncated {
                        path: path.to_string(),
                    });
                }
                let start = c.pos;
                let audio_format = c.u16()?;
                let channels = c.u16()?;
                let sample_rate = c.u32()?;
                c.u32()?; // byte rate
                c.u16()?; // block align
                let bits = c.u16()?;
                format = Some((audio_format, channels, sample_rate, bits));
                c.pos = start + size + (size & 1);
            }
            b"data" => {
                let (audio_format, channels, sample_rate, bits) = format
                    .ok_or_else(|| unsupported("data chunk precedes fmt chunk".to_string()))?;
                if audio_format != 1 {
                    return Err(unsupported(format!(
                        "audio format {audio_format}, only PCM (1) accepted"
                    )));
                }
                if bits != 16 {
                    return Err(unsupported(format!("{bits}-bit samples, only 16-bit accepted")));
                }
                if channels != 1 {
                    return Err(unsupported(format!(
                        "{channels} channels, only mono accepted"
                    )));
                }
                let payload = c.take(size)?;
                let samples: Vec<i16> = payload
                    .chunks_exact(2)
                    .map(|b| i16::from_le_bytes([b[0], b[1]]))
                    .collect();
                return Ok(AudioClip::new(id, samples, sample_rate));
            }
            _ => {
                // Skip unknown chunks (LIST, fact, ...), honoring padding.
                c.take(size + (size & 1))?;
            }
        }
    }
}

/// Serializes a clip as PCM16 mono WAV (used by tests and corpus tooling).
pub fn wav_bytes(samples: &[i16], sample_rate: u32) -> Vec<u8> {
    let data_len = samples.len() * 2;
    let mut out = Vec::with_capacity(44 + data_len);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len as u32).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes()); // PCM
    out.extend_from_slice(&1u16.to_le_bytes()); // mono
    out.extend_from_slice(&sample_rate.to_le_bytes());
    out.extend_from_slice(&(sample_rate * 2).to_le_bytes()); // byte rate
    out.extend_from_slice(&2u16.to_le_bytes()); // block align
    out.extend_from_slice(&16u16.to_le_bytes()); // bits
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());
    for s in samples {
        out.extend_from_slice(&s.to_le_bytes());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_pcm16_mono() {
        let samples: Vec<i16> = (0..100).map(|i| (i * 31 - 1500) as i16).collect();
        let bytes = wav_bytes(&samples, 16000);
        let clip = parse_wav(&bytes, "clip", "mem").unwrap();
        assert_eq!(clip.samples, samples);
        assert_eq!(clip.sample_rate, 16000);
    }

    #[test]
    fn rejects_stereo() {
        let mut bytes = wav_bytes(&[0, 1, 2, 3], 8000);
        bytes[22] = 2; // channel count
        let err = parse_wav(&bytes, "c", "mem").unwrap_err();
        assert!(matches!(err, WavError::Unsupported { .. }));
        assert!(err.to_string().contains("2 channels"));
    }

    #[test]
    fn rejects_non_pcm() {
        let mut bytes = wav_bytes(&[0, 1], 8000);
        bytes[20] = 3; // IEEE float tag
        let err = parse_wav(&bytes, "c", "mem").unwrap_err();
        assert!(matches!(err, WavError::Unsupported { .. }));
    }

    #[test]
    fn rejects_eight_bit() {
        let mut bytes = wav_bytes(&[0, 1], 8000);
        bytes[34] = 8;
        let err = parse_wav(&bytes, "c", "mem").unwrap_err();
        assert!(err.to_string().contains("8-bit"));
    }

    #[test]
    fn rejects_non_riff() {
        let err = parse_wav(b"OggS junk that is not wav", "c", "mem").unwrap_err();
        assert!(matches!(err, WavError::NotRiff { .. }));
    }

    #[test]
    fn truncated_data_chunk_is_reported() {
        let mut bytes = wav_bytes(&[0i16; 50], 8000);
        bytes.truncate(bytes.len() - 10);
        let err = parse_wav(&bytes, "c", "mem").unwrap_err();
        assert!(matches!(err, WavError::Truncated { .. }));
    }

    #[test]
    fn skips_extra_chunks_before_data() {
        // RIFF + LIST chunk + fmt + data.
        let samples = [5i16, -5, 10];
        let inner = wav_bytes(&samples, 8000);
        let mut bytes = Vec::new();
        bytes.extend_from_slice(b"RIFF");
        bytes.extend_from_slice(&0u32.to_le_bytes());
        bytes.extend_from_slice(b"WAVE");
        bytes.extend_from_slice(b"LIST");
        bytes.extend_from_slice(&4u32.to_le_bytes());
        bytes.extend_from_slice(b"INFO");
        bytes.extend_from_slice(&inner[12..]); // fmt + data from the plain file
        let clip = parse_wav(&bytes, "c", "mem").unwrap();
        assert_eq!(clip.samples, samples);
    }
}
