//! Acoustic front-end: MFCC extraction, delta appending, energy-based voice
//! activity detection, and utterance-level cepstral mean/variance
//! normalization.
//!
//! The intended order is: extract static cepstra, compute the VAD mask from
//! frame energies, append deltas on the full matrix, apply the mask, then
//! normalize the kept frames. Deltas are computed before masking so that
//! dropped frames do not introduce discontinuity artifacts.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

// Whenever std is anywhere in the build graph its inherent float methods
// shadow this trait, leaving the import unused; pure no_std builds need it.
#[allow(unused_imports)]
use crate::math::FloatExt;
use crate::types::{AudioClip, FeatureMatrix};

/// Front-end configuration. Field defaults follow common MFCC practice and
/// are documented on each accessor.
#[derive(Debug, Clone, PartialEq)]
pub struct FrontendConfig {
    /// Analysis window length in milliseconds.
    pub window_ms: u32,
    /// Frame shift in milliseconds.
    pub shift_ms: u32,
    /// Number of cepstra kept per frame (c1..c_n; c0 is excluded).
    pub num_ceps: usize,
    /// Mel filterbank size; `None` selects 26 filters at 16 kHz and 20 at 8 kHz.
    pub num_filters: Option<usize>,
    /// Pre-emphasis coefficient applied as y[t] = x[t] − a·x[t−1].
    pub pre_emphasis: f64,
    /// Linear-energy clamp applied before taking logs.
    pub log_floor: f64,
    /// VAD: frames more than this many dB below the utterance maximum are dropped.
    pub vad_margin_db: f64,
    /// VAD: frames below this energy percentile (fraction in [0, 1]) are dropped.
    pub vad_percentile: f64,
    /// VAD: frames whose linear energy does not strictly exceed this are dropped.
    pub min_energy: f64,
    /// Delta regression half-width K.
    pub delta_window: usize,
}

impl Default for FrontendConfig {
    fn default() -> Self {
        Self {
            window_ms: 20,
            shift_ms: 10,
            num_ceps: 19,
            num_filters: None,
            pre_emphasis: 0.97,
            log_floor: 1e-10,
            vad_margin_db: 30.0,
            vad_percentile: 0.10,
            min_energy: 1e-10,
            delta_window: 2,
        }
    }
}

impl FrontendConfig {
    /// Filterbank size for the given rate, honoring an explicit override.
    pub fn filters_for(&self, sample_rate: u32) -> usize {
        self.num_filters
            .unwrap_or(if sample_rate >= 16000 { 26 } else { 20 })
    }

    fn window_samples(&self, sample_rate: u32) -> usize {
        (sample_rate as usize * self.window_ms as usize) / 1000
    }

    fn shift_samples(&self, sample_rate: u32) -> usize {
        (sample_rate as usize * self.shift_ms as usize) / 1000
    }
}

/// Front-end failure conditions.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FrontendError {
    #[error("utterance too short: {samples} samples, window is {window}")]
    UtteranceTooShort { samples: usize, window: usize },
    #[error("unsupported sample rate {rate} Hz (expected 8000 or 16000)")]
    UnsupportedSampleRate { rate: u32 },
    #[error("invalid front-end configuration: {reason}")]
    BadConfig { reason: String },
    #[error("no speech detected")]
    NoSpeechDetected,
    #[error("insufficient frames for normalization: {frames}")]
    InsufficientFrames { frames: usize },
    #[error("clip framing yields {expected} frames but matrix has {got}")]
    FramingMismatch { expected: usize, got: usize },
}

/// Number of frames produced by sliding a window of `w` samples with shift
/// `s` over `n` samples: floor((n − w)/s) + 1, defined for n ≥ w.
pub fn frame_count(n: usize, w: usize, s: usize) -> usize {
    debug_assert!(n >= w && s > 0);
    (n - w) / s + 1
}

/// PCM samples scaled to [−1, 1) and pre-emphasized, plus framing constants.
struct Framing {
    signal: Vec<f64>,
    window: usize,
    shift: usize,
    frames: usize,
}

fn prepare(clip: &AudioClip, cfg: &FrontendConfig) -> Result<Framing, FrontendError> {
    if clip.sample_rate != 8000 && clip.sample_rate != 16000 {
        return Err(FrontendError::UnsupportedSampleRate {
            rate: clip.sample_rate,
        });
    }
    let window = cfg.window_samples(clip.sample_rate);
    let shift = cfg.shift_samples(clip.sample_rate);
    if window == 0 || shift == 0 {
        return Err(FrontendError::BadConfig {
            reason: String::from("window and shift must be at least one sample"),
        });
    }
    if clip.samples.len() < window {
        return Err(FrontendError::UtteranceTooShort {
            samples: clip.samples.len(),
            window,
        });
    }
    let a = cfg.pre_emphasis;
    let mut signal: Vec<f64> = clip.samples.iter().map(|&s| s as f64 / 32768.0).collect();
    for t in (1..signal.len()).rev() {
        signal[t] -= a * signal[t - 1];
    }
    signal[0] -= a * signal[0];
    let frames = frame_count(signal.len(), window, shift);
    Ok(Framing {
        signal,
        window,
        shift,
        frames,
    })
}

fn hamming(window: usize) -> Vec<f64> {
    if window == 1 {
        return vec![1.0];
    }
    let denom = (window - 1) as f64;
    (0..window)
        .map(|n| 0.54 - 0.46 * (2.0 * core::f64::consts::PI * n as f64 / denom).cos())
        .collect()
}

fn windowed_frame(framing: &Framing, taper: &[f64], t: usize) -> Vec<f64> {
    let start = t * framing.shift;
    framing.signal[start..start + framing.window]
        .iter()
        .zip(taper)
        .map(|(x, w)| x * w)
        .collect()
}

/// Linear energy of each Hamming-windowed, pre-emphasized frame.
pub fn frame_energies(clip: &AudioClip, cfg: &FrontendConfig) -> Result<Vec<f64>, FrontendError> {
    let framing = prepare(clip, cfg)?;
    let taper = hamming(framing.window);
    Ok((0..framing.frames)
        .map(|t| {
            windowed_frame(&framing, &taper, t)
                .iter()
                .map(|x| x * x)
                .sum()
        })
        .collect())
}

fn next_pow2(n: usize) -> usize {
    let mut p = 1;
    while p < n {
        p <<= 1;
    }
    p
}

/// In-place radix-2 decimation-in-time FFT. Length must be a power of two.
fn fft_in_place(re: &mut [f64], im: &mut [f64]) {
    let n = re.len();
    debug_assert!(n.is_power_of_two() && im.len() == n);
    // Bit-reversal permutation.
    let mut j = 0usize;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            re.swap(i, j);
            im.swap(i, j);
        }
    }
    let mut len = 2;
    while len <= n {
        let ang = -2.0 * core::f64::consts::PI / len as f64;
        let (wr, wi) = (ang.cos(), ang.sin());
        let mut start = 0;
        while start < n {
            let (mut cr, mut ci) = (1.0f64, 0.0f64);
            for k in 0..len / 2 {
                let (er, ei) = (re[start + k], im[start + k]);
                let (or_, oi) = (re[start + k + len / 2], im[start + k + len / 2]);
                let (tr, ti) = (cr * or_ - ci * oi, cr * oi + ci * or_);
                re[start + k] = er + tr;
                im[start + k] = ei + ti;
                re[start + k + len / 2] = er - tr;
                im[start + k + len / 2] = ei - ti;
                let next_cr = cr * wr - ci * wi;
                ci = cr * wi + ci * wr;
                cr = next_cr;
            }
            start += len;
        }
        len <<= 1;
    }
}

/// One-sided power spectrum |X_k|² for k = 0..n_fft/2 of a zero-padded frame.
fn power_spectrum(frame: &[f64], n_fft: usize) -> Vec<f64> {
    let mut re = vec![0.0; n_fft];
    let mut im = vec![0.0; n_fft];
    re[..frame.len()].copy_from_slice(frame);
    fft_in_place(&mut re, &mut im);
    (0..=n_fft / 2)
        .map(|k| re[k] * re[k] + im[k] * im[k])
        .collect()
}

fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10.0f64.powf(m / 2595.0) - 1.0)
}

/// Triangular mel filterbank over one-sided FFT bins, filters spanning
/// 0 Hz to Nyquist with centers equally spaced on the mel scale.
fn mel_filterbank(sample_rate: u32, n_fft: usize, num_filters: usize) -> Vec<Vec<f64>> {
    let nyquist = sample_rate as f64 / 2.0;
    let mel_hi = hz_to_mel(nyquist);
    let edges: Vec<f64> = (0..num_filters + 2)
        .map(|j| mel_to_hz(mel_hi * j as f64 / (num_filters + 1) as f64))
        .collect();
    let bins = n_fft / 2 + 1;
    let bin_hz = sample_rate as f64 / n_fft as f64;
    (0..num_filters)
        .map(|m| {
            let (lo, center, hi) = (edges[m], edges[m + 1], edges[m + 2]);
            (0..bins)
                .map(|k| {
                    let f = k as f64 * bin_hz;
                    let w = if f <= center {
                        (f - lo) / (center - lo)
                    } else {
                        (hi - f) / (hi - center)
                    };
                    w.max(0.0)
                })
                .collect()
        })
        .collect()
}

/// Per-frame linear mel filterbank energies (rows = frames, columns = bands).
/// `extract_mfcc` applies the log floor and DCT on top of these.
pub fn mel_energies(clip: &AudioClip, cfg: &FrontendConfig) -> Result<FeatureMatrix, FrontendError> {
    let framing = prepare(clip, cfg)?;
    let taper = hamming(framing.window);
    let n_fft = next_pow2(framing.window);
    let filters = mel_filterbank(clip.sample_rate, n_fft, cfg.filters_for(clip.sample_rate));
    let mut out = FeatureMatrix::empty(clip.id.clone(), filters.len());
    out.frame_shift_ms = cfg.shift_ms as f64;
    for t in 0..framing.frames {
        let spec = power_spectrum(&windowed_frame(&framing, &taper, t), n_fft);
        let row: Vec<f64> = filters
            .iter()
            .map(|filt| filt.iter().zip(&spec).map(|(w, p)| w * p).sum())
            .collect();
        out.push_row(&row);
    }
    Ok(out)
}

/// Static MFCCs: log mel filterbank energies followed by an orthonormal
/// type-II DCT, keeping c1..c_{num_ceps}.
pub fn extract_mfcc(clip: &AudioClip, cfg: &FrontendConfig) -> Result<FeatureMatrix, FrontendError> {
    let num_filters = cfg.filters_for(clip.sample_rate);
    if cfg.num_ceps == 0 || cfg.num_ceps >= num_filters {
        return Err(FrontendError::BadConfig {
            reason: String::from("num_ceps must be in 1..num_filters"),
        });
    }
    let energies = mel_energies(clip, cfg)?;
    // Orthonormal DCT-II rows for c1..c_{num_ceps}.
    let m = num_filters as f64;
    let scale = (2.0 / m).sqrt();
    let dct: Vec<Vec<f64>> = (1..=cfg.num_ceps)
        .map(|j| {
            (0..num_filters)
                .map(|b| scale * (core::f64::consts::PI * j as f64 * (b as f64 + 0.5) / m).cos())
                .collect()
        })
        .collect();
    let mut out = FeatureMatrix::empty(clip.id.clone(), cfg.num_ceps);
    out.frame_shift_ms = cfg.shift_ms as f64;
    let mut log_bands = vec![0.0; num_filters];
    for t in 0..energies.num_frames() {
        for (lb, &e) in log_bands.iter_mut().zip(energies.row(t)) {
            *lb = e.max(cfg.log_floor).ln();
        }
        let row: Vec<f64> = dct
            .iter()
            .map(|basis| basis.iter().zip(&log_bands).map(|(c, e)| c * e).sum())
            .collect();
        out.push_row(&row);
    }
    Ok(out)
}

/// Appends Δ and ΔΔ columns: D → 3D. Deltas use the regression formula
/// Δ_t = Σ_k k·(x_{t+k} − x_{t−k}) / (2·Σ_k k²) over k = 1..=half_width with
/// edge frames replicated.
pub fn append_deltas(feat: &FeatureMatrix, half_width: usize) -> FeatureMatrix {
    assert!(half_width >= 1, "delta window must be at least 1");
    let d = deltas_of(feat, half_width);
    let dd = deltas_of(&d, half_width);
    let dim = feat.dim();
    let mut out = FeatureMatrix::empty(feat.id.clone(), 3 * dim);
    out.frame_shift_ms = feat.frame_shift_ms;
    let mut row = vec![0.0; 3 * dim];
    for t in 0..feat.num_frames() {
        row[..dim].copy_from_slice(feat.row(t));
        row[dim..2 * dim].copy_from_slice(d.row(t));
        row[2 * dim..].copy_from_slice(dd.row(t));
        out.push_row(&row);
    }
    out
}

fn deltas_of(feat: &FeatureMatrix, half_width: usize) -> FeatureMatrix {
    let t_max = feat.num_frames();
    let denom: f64 = 2.0 * (1..=half_width).map(|k| (k * k) as f64).sum::<f64>();
    let mut out = FeatureMatrix::empty(feat.id.clone(), feat.dim());
    out.frame_shift_ms = feat.frame_shift_ms;
    let mut row = vec![0.0; feat.dim()];
    for t in 0..t_max {
        row.iter_mut().for_each(|v| *v = 0.0);
        for k in 1..=half_width {
            let ahead = feat.row((t + k).min(t_max - 1));
            let behind = feat.row(t.saturating_sub(k));
            for (r, (a, b)) in row.iter_mut().zip(ahead.iter().zip(behind)) {
                *r += k as f64 * (a - b);
            }
        }
        row.iter_mut().for_each(|v| *v /= denom);
        out.push_row(&row);
    }
    out
}

/// Keeps frames that pass all three energy rules: within `vad_margin_db` of
/// the loudest frame, at or above the `vad_percentile` energy, and with
/// linear energy strictly above `min_energy`. Returns the surviving rows of
/// `feat` in their original order plus the per-frame keep mask.
pub fn energy_vad(
    clip: &AudioClip,
    feat: &FeatureMatrix,
    cfg: &FrontendConfig,
) -> Result<(FeatureMatrix, Vec<bool>), FrontendError> {
    let energies = frame_energies(clip, cfg)?;
    if energies.len() != feat.num_frames() {
        return Err(FrontendError::FramingMismatch {
            expected: energies.len(),
            got: feat.num_frames(),
        });
    }
    let log_e: Vec<f64> = energies
        .iter()
        .map(|&e| e.max(cfg.min_energy).ln())
        .collect();
    let max_log = log_e.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    // margin in dB of energy: 10·log10(E), so margin_db maps to ln-space as /10·ln10.
    let margin_ln = cfg.vad_margin_db / 10.0 * core::f64::consts::LN_10;
    let mut sorted = log_e.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let idx = ((cfg.vad_percentile * sorted.len() as f64).floor() as usize).min(sorted.len() - 1);
    let percentile_ln = sorted[idx];
    let mask: Vec<bool> = log_e
        .iter()
        .zip(&energies)
        .map(|(&le, &e)| le >= max_log - margin_ln && le >= percentile_ln && e > cfg.min_energy)
        .collect();
    if !mask.iter().any(|&k| k) {
        return Err(FrontendError::NoSpeechDetected);
    }
    Ok((feat.select_rows(&mask), mask))
}

/// Utterance-level normalization to zero mean and unit population variance
/// per column. Columns with variance below 1e-10 are mean-subtracted only.
pub fn cmvn(feat: &FeatureMatrix) -> Result<FeatureMatrix, FrontendError> {
    let t = feat.num_frames();
    if t < 2 {
        return Err(FrontendError::InsufficientFrames { frames: t });
    }
    let d = feat.dim();
    let mut mean = vec![0.0; d];
    for r in 0..t {
        for (m, x) in mean.iter_mut().zip(feat.row(r)) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= t as f64);
    let mut var = vec![0.0; d];
    for r in 0..t {
        for ((v, x), m) in var.iter_mut().zip(feat.row(r)).zip(&mean) {
            let c = x - m;
            *v += c * c;
        }
    }
    var.iter_mut().for_each(|v| *v /= t as f64);
    let inv_std: Vec<f64> = var
        .iter()
        .map(|&v| if v < 1e-10 { 1.0 } else { 1.0 / v.sqrt() })
        .collect();
    let mut out = FeatureMatrix::empty(feat.id.clone(), d);
    out.frame_shift_ms = feat.frame_shift_ms;
    let mut row = vec![0.0; d];
    for r in 0..t {
        for (i, x) in feat.row(r).iter().enumerate() {
            row[i] = (x - mean[i]) * inv_std[i];
        }
        out.push_row(&row);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;
    use alloc::string::ToString;

    fn clip_from(samples: Vec<i16>, rate: u32) -> AudioClip {
        AudioClip::new("test".to_string(), samples, rate)
    }

    fn sine_clip(freq: f64, rate: u32, n: usize, amp: f64) -> AudioClip {
        let samples = (0..n)
            .map(|t| {
                (amp * (2.0 * core::f64::consts::PI * freq * t as f64 / rate as f64).sin()) as i16
            })
            .collect();
        clip_from(samples, rate)
    }

    #[test]
    fn frame_count_one_second_at_16k() {
        let clip = sine_clip(440.0, 16000, 16000, 8000.0);
        let feat = extract_mfcc(&clip, &FrontendConfig::default()).unwrap();
        assert_eq!(feat.num_frames(), 99);
        assert_eq!(feat.dim(), 19);
    }

    #[test]
    fn silence_gives_identical_frames() {
        let clip = clip_from(vec![0; 4800], 16000);
        let feat = extract_mfcc(&clip, &FrontendConfig::default()).unwrap();
        let first = feat.row(0).to_vec();
        for t in 1..feat.num_frames() {
            assert_eq!(feat.row(t), &first[..]);
        }
        assert!(!feat.has_non_finite());
    }

    #[test]
    fn short_clip_rejected() {
        let clip = clip_from(vec![0; 100], 16000);
        assert!(matches!(
            extract_mfcc(&clip, &FrontendConfig::default()),
            Err(FrontendError::UtteranceTooShort { .. })
        ));
    }

    #[test]
    fn odd_sample_rate_rejected() {
        let clip = clip_from(vec![0; 44100], 44100);
        assert!(matches!(
            extract_mfcc(&clip, &FrontendConfig::default()),
            Err(FrontendError::UnsupportedSampleRate { rate: 44100 })
        ));
    }

    #[test]
    fn sine_peaks_in_band_containing_tone() {
        let clip = sine_clip(1000.0, 16000, 8000, 12000.0);
        let cfg = FrontendConfig::default();
        let bands = mel_energies(&clip, &cfg).unwrap();
        let n_fft = 512;
        let filters = mel_filterbank(16000, n_fft, cfg.filters_for(16000));
        // The band with maximal energy must have nonzero response at 1 kHz.
        let row = bands.row(bands.num_frames() / 2);
        let best = row
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        let bin_1k = (1000.0 / (16000.0 / n_fft as f64)).round() as usize;
        assert!(
            filters[best][bin_1k] > 0.0,
            "peak band {best} has no response at 1 kHz"
        );
    }

    #[test]
    fn deltas_of_constant_are_zero() {
        let mut feat = FeatureMatrix::empty("c".to_string(), 3);
        for _ in 0..8 {
            feat.push_row(&[1.0, -2.0, 0.5]);
        }
        let out = append_deltas(&feat, 2);
        assert_eq!(out.dim(), 9);
        for t in 0..out.num_frames() {
            for &v in &out.row(t)[3..] {
                assert_eq!(v, 0.0);
            }
        }
    }

    #[test]
    fn deltas_of_ramp_are_one_inside() {
        let mut feat = FeatureMatrix::empty("r".to_string(), 1);
        for t in 0..10 {
            feat.push_row(&[t as f64]);
        }
        let out = append_deltas(&feat, 2);
        for t in 2..8 {
            assert!((out.row(t)[1] - 1.0).abs() < 1e-12, "frame {t}");
        }
    }

    #[test]
    fn vad_keeps_all_equal_energy_frames() {
        let clip = sine_clip(500.0, 16000, 4800, 8000.0);
        let cfg = FrontendConfig {
            vad_percentile: 0.0,
            ..FrontendConfig::default()
        };
        let feat = extract_mfcc(&clip, &cfg).unwrap();
        let (kept, mask) = energy_vad(&clip, &feat, &cfg).unwrap();
        assert_eq!(kept.num_frames(), feat.num_frames());
        assert!(mask.iter().all(|&k| k));
    }

    #[test]
    fn vad_keeps_exactly_the_loud_half() {
        // 0.3 s of digital silence then 0.3 s of loud tone.
        let rate = 16000;
        let half = 4800usize;
        let mut samples = vec![0i16; half];
        samples.extend(
            (0..half)
                .map(|t| (9000.0 * (2.0 * core::f64::consts::PI * 700.0 * t as f64 / rate as f64).sin()) as i16),
        );
        let clip = clip_from(samples, rate);
        let cfg = FrontendConfig::default();
        let feat = extract_mfcc(&clip, &cfg).unwrap();
        let (_, mask) = energy_vad(&clip, &feat, &cfg).unwrap();
        let energies = frame_energies(&clip, &cfg).unwrap();
        for (t, (&kept, &e)) in mask.iter().zip(&energies).enumerate() {
            // Frames wholly inside the silent half carry zero energy.
            if e == 0.0 {
                assert!(!kept, "silent frame {t} kept");
            }
            if e > 0.01 {
                assert!(kept, "loud frame {t} dropped");
            }
        }
        assert!(mask.iter().filter(|&&k| k).count() >= half / 160 - 2);
    }

    #[test]
    fn vad_rejects_pure_silence() {
        let clip = clip_from(vec![0; 3200], 16000);
        let feat = extract_mfcc(&clip, &FrontendConfig::default()).unwrap();
        let err = energy_vad(&clip, &feat, &FrontendConfig::default()).unwrap_err();
        assert_eq!(err, FrontendError::NoSpeechDetected);
        assert_eq!(format!("{err}"), "no speech detected");
    }

    #[test]
    fn cmvn_centers_and_scales() {
        let mut feat = FeatureMatrix::empty("n".to_string(), 2);
        for t in 0..50 {
            feat.push_row(&[t as f64 * 0.3 + 4.0, (t as f64).sin() * 2.0 - 1.0]);
        }
        let out = cmvn(&feat).unwrap();
        let t = out.num_frames() as f64;
        for c in 0..2 {
            let mean: f64 = (0..out.num_frames()).map(|r| out.row(r)[c]).sum::<f64>() / t;
            let var: f64 = (0..out.num_frames())
                .map(|r| (out.row(r)[c] - mean) * (out.row(r)[c] - mean))
                .sum::<f64>()
                / t;
            assert!(mean.abs() < 1e-6);
            assert!((var - 1.0).abs() < 1e-4);
        }
    }

    #[test]
    fn cmvn_is_idempotent() {
        let mut feat = FeatureMatrix::empty("i".to_string(), 1);
        for t in 0..20 {
            feat.push_row(&[(t as f64 * 1.7).cos() * 3.0]);
        }
        let once = cmvn(&feat).unwrap();
        let twice = cmvn(&once).unwrap();
        for t in 0..once.num_frames() {
            assert!((once.row(t)[0] - twice.row(t)[0]).abs() < 1e-6);
        }
    }

    #[test]
    fn cmvn_zero_variance_column_passes_through_centered() {
        let mut feat = FeatureMatrix::empty("z".to_string(), 2);
        for t in 0..10 {
            feat.push_row(&[7.5, t as f64]);
        }
        let out = cmvn(&feat).unwrap();
        for t in 0..10 {
            assert_eq!(out.row(t)[0], 0.0);
        }
        assert!(!out.has_non_finite());
    }

    #[test]
    fn cmvn_requires_two_frames() {
        let mut feat = FeatureMatrix::empty("s".to_string(), 2);
        feat.push_row(&[1.0, 2.0]);
        assert!(matches!(
            cmvn(&feat),
            Err(FrontendError::InsufficientFrames { frames: 1 })
        ));
    }

    #[test]
    fn fft_matches_two_point_dft() {
        let mut re = vec![1.0, 2.0, 3.0, 4.0];
        let mut im = vec![0.0; 4];
        fft_in_place(&mut re, &mut im);
        // X_0 = 10, X_2 = 1−2+3−4 = −2 (both real).
        assert!((re[0] - 10.0).abs() < 1e-12 && im[0].abs() < 1e-12);
        assert!((re[2] + 2.0).abs() < 1e-12 && im[2].abs() < 1e-12);
        // X_1 = (1−3) + i(4−2) = −2 + 2i with e^{-2πik/4} convention.
        assert!((re[1] + 2.0).abs() < 1e-12 && (im[1] - 2.0).abs() < 1e-12);
    }
}
