//! Hand-crafted scalar perceptual descriptors, one value per clip.
//!
//! Six classic extractors approximate perceptual qualities directly from the
//! signal: sensory dissonance from pairwise spectral-peak interaction,
//! inharmonicity from deviation of partials off the harmonic grid, pulse
//! clarity from onset-envelope autocorrelation, attack leap from onset rise
//! heights, harmonic-change flux from tonal-centroid motion, and majorness
//! from key-profile correlation. `extract_all` runs the whole set over shared
//! intermediates.

use crate::audio::{
    chroma, mel_spectrogram, onset_envelope, spectral_peaks, stft_magnitude, AudioClip,
    AudioError, ChromaGram, OnsetEnvelope, SpectralPeakList, DEFAULT_FMAX, DEFAULT_HOP,
    DEFAULT_N_MELS, DEFAULT_WINDOW,
};

/// Peak-picking defaults used by the clip-level extractors.
const MAX_PEAKS: usize = 100;
const FLOOR_DB: f64 = -60.0;

/// Plomp-Levelt curve constants (Sethares parameterization).
const B1: f64 = 3.5;
const B2: f64 = 5.75;
const S1: f64 = 0.0207;
const S2: f64 = 18.96;
const XSTAR: f64 = 0.24;

/// Partials above this are never chosen as the fundamental.
const F0_CEILING_HZ: f64 = 2000.0;

/// Tempo window for pulse clarity, in BPM.
const BPM_LO: f64 = 40.0;
const BPM_HI: f64 = 200.0;

/// Krumhansl-Kessler key profiles, index 0 = tonic.
const KK_MAJOR: [f64; 12] =
    [6.35, 2.23, 3.48, 2.33, 4.38, 4.09, 2.52, 5.19, 2.39, 3.66, 2.29, 2.88];
const KK_MINOR: [f64; 12] =
    [6.33, 2.68, 3.52, 5.38, 2.60, 3.53, 2.54, 4.75, 3.98, 2.69, 3.34, 3.17];

#[derive(Debug, thiserror::Error)]
pub enum FeatureError {
    #[error("invalid frequency: {0}")]
    InvalidFrequency(String),
    #[error("onset envelope too short: {have} frames, need at least {need}")]
    EnvelopeTooShort { have: usize, need: usize },
    #[error("too few frames: have {have}, need {need}")]
    TooFewFrames { have: usize, need: usize },
    #[error(transparent)]
    Audio(#[from] AudioError),
}

/// The seven perceptual qualities annotated in the rating campaign.
/// Order is fixed; indexes into score vectors follow it everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MidLevelName {
    Melodiousness,
    Articulation,
    RhythmicStability,
    RhythmicComplexity,
    Dissonance,
    TonalStability,
    Modality,
}

impl MidLevelName {
    pub const ALL: [MidLevelName; 7] = [
        MidLevelName::Melodiousness,
        MidLevelName::Articulation,
        MidLevelName::RhythmicStability,
        MidLevelName::RhythmicComplexity,
        MidLevelName::Dissonance,
        MidLevelName::TonalStability,
        MidLevelName::Modality,
    ];

    pub const COUNT: usize = 7;

    /// Canonical column name in data files.
    pub fn as_str(self) -> &'static str {
        match self {
            MidLevelName::Melodiousness => "melodiousness",
            MidLevelName::Articulation => "articulation",
            MidLevelName::RhythmicStability => "rhythmic_stability",
            MidLevelName::RhythmicComplexity => "rhythmic_complexity",
            MidLevelName::Dissonance => "dissonance",
            MidLevelName::TonalStability => "tonal_stability",
            MidLevelName::Modality => "modality",
        }
    }

    /// Position in [`Self::ALL`].
    pub fn index(self) -> usize {
        Self::ALL.iter().position(|m| *m == self).expect("member of ALL")
    }
}

impl std::fmt::Display for MidLevelName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for MidLevelName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .iter()
            .find(|m| m.as_str() == s)
            .copied()
            .ok_or_else(|| format!("unknown mid-level feature name: {s:?}"))
    }
}

/// One scalar per hand-crafted extractor.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct HandcraftedFeatures {
    /// Mean pairwise spectral-peak dissonance, >= 0.
    pub dissonance: f64,
    /// Mean deviation of partials from the harmonic grid, in [0, 0.5].
    pub inharmonicity: f64,
    /// Peak normalized onset autocorrelation in the 40-200 BPM window, in [0, 1].
    pub pulse_clarity: f64,
    /// Mean onset rise height, >= 0.
    pub attack_leap: f64,
    /// Mean consecutive tonal-centroid distance, >= 0.
    pub hcdf_mean: f64,
    /// Best-major minus best-minor key-profile correlation, in [-1, 1].
    pub majorness: f64,
}

/// Dissonance of one pair of partials:
/// `a1 a2 (e^(-b1 s df) - e^(-b2 s df))` with `s = x* / (s1 min(f1,f2) + s2)`.
/// Symmetric in its arguments; zero at unison.
pub fn dissonance_pair(f1: f64, a1: f64, f2: f64, a2: f64) -> Result<f64, FeatureError> {
    if !(f1 > 0.0) || !(f2 > 0.0) {
        return Err(FeatureError::InvalidFrequency(format!(
            "frequencies must be positive, got {f1} and {f2}"
        )));
    }
    Ok(pair_dissonance(f1, a1, f2, a2))
}

fn pair_dissonance(f1: f64, a1: f64, f2: f64, a2: f64) -> f64 {
    let df = (f2 - f1).abs();
    let s = XSTAR / (S1 * f1.min(f2) + S2);
    a1 * a2 * ((-B1 * s * df).exp() - (-B2 * s * df).exp())
}

/// Sum of pair dissonances with amplitudes scaled so the largest peak is 1.
/// `None` when the frame has fewer than two peaks.
fn frame_dissonance(list: &SpectralPeakList) -> Option<f64> {
    if list.len() < 2 {
        return None;
    }
    let amax = list.peaks.iter().map(|p| p.amplitude).fold(0.0f64, f64::max);
    let mut total = 0.0;
    for i in 0..list.len() {
        for j in i + 1..list.len() {
            let (p, q) = (&list.peaks[i], &list.peaks[j]);
            total += pair_dissonance(p.freq_hz, p.amplitude / amax, q.freq_hz, q.amplitude / amax);
        }
    }
    Some(total)
}

fn sensory_dissonance_from_peaks(frames: &[SpectralPeakList]) -> f64 {
    let scores: Vec<f64> = frames.iter().filter_map(frame_dissonance).collect();
    if scores.is_empty() {
        0.0
    } else {
        scores.iter().sum::<f64>() / scores.len() as f64
    }
}

/// Mean over frames (with at least two peaks) of summed pairwise peak
/// dissonance; peak amplitudes are normalized per frame, so the result is
/// invariant to global gain. 0 when no frame has two peaks.
pub fn sensory_dissonance(clip: &AudioClip) -> Result<f64, FeatureError> {
    let spec = stft_magnitude(clip, DEFAULT_WINDOW, DEFAULT_HOP)?;
    let frames = peak_frames(&spec);
    Ok(sensory_dissonance_from_peaks(&frames))
}

/// Inharmonicity of one exact peak set: amplitude-weighted deviation of each
/// partial from the nearest multiple of the fundamental (the strongest peak
/// below 2 kHz), normalized by half the fundamental and clamped to [0, 0.5].
/// `None` when no peak sits below 2 kHz (unvoiced frame).
pub fn inharmonicity_frame(list: &SpectralPeakList) -> Option<f64> {
    // Ties go to the lowest frequency so an equal-amplitude harmonic stack
    // anchors on its true fundamental (peaks arrive frequency-ascending).
    let f0 = list
        .peaks
        .iter()
        .filter(|p| p.freq_hz < F0_CEILING_HZ)
        .fold(None::<&crate::audio::SpectralPeak>, |best, p| match best {
            Some(b) if p.amplitude <= b.amplitude => Some(b),
            _ => Some(p),
        })?
        .freq_hz;
    let mut weighted = 0.0;
    let mut total = 0.0;
    for p in &list.peaks {
        let k = (p.freq_hz / f0).round().max(1.0);
        let dev = (p.freq_hz - k * f0).abs() / (f0 / 2.0);
        weighted += p.amplitude * dev;
        total += p.amplitude;
    }
    Some((weighted / total).clamp(0.0, 0.5))
}

fn inharmonicity_from_peaks(frames: &[SpectralPeakList]) -> f64 {
    let scores: Vec<f64> = frames.iter().filter_map(inharmonicity_frame).collect();
    if scores.is_empty() {
        0.0
    } else {
        scores.iter().sum::<f64>() / scores.len() as f64
    }
}

/// Mean frame inharmonicity over voiced frames; 0 for unvoiced clips.
pub fn inharmonicity(clip: &AudioClip) -> Result<f64, FeatureError> {
    let spec = stft_magnitude(clip, DEFAULT_WINDOW, DEFAULT_HOP)?;
    let frames = peak_frames(&spec);
    Ok(inharmonicity_from_peaks(&frames))
}

fn peak_frames(spec: &crate::audio::MagnitudeSpectrogram) -> Vec<SpectralPeakList> {
    (0..spec.n_frames)
        .map(|t| spectral_peaks(spec.frame(t), spec.bin_width(), MAX_PEAKS, FLOOR_DB))
        .collect()
}

/// Lag window (in frames) covering the BPM range at this frame rate.
fn lag_window(frame_rate: f64) -> (usize, usize) {
    let lo = (frame_rate * 60.0 / BPM_HI).ceil().max(1.0) as usize;
    let hi = (frame_rate * 60.0 / BPM_LO).floor() as usize;
    (lo, hi)
}

fn autocorr_peak(values: &[f64], lag_lo: usize, lag_hi: usize) -> (f64, usize) {
    let r0: f64 = values.iter().map(|v| v * v).sum();
    if r0 == 0.0 {
        return (0.0, 0);
    }
    let mut best = (f64::NEG_INFINITY, lag_lo);
    for lag in lag_lo..=lag_hi {
        let r: f64 = values[..values.len() - lag]
            .iter()
            .zip(&values[lag..])
            .map(|(a, b)| a * b)
            .sum();
        if r > best.0 {
            best = (r, lag);
        }
    }
    ((best.0 / r0).clamp(0.0, 1.0), best.1)
}

/// Strongest normalized autocorrelation of the onset envelope over lags
/// spanning 40-200 BPM, plus the lag where it occurs. The degenerate all-zero
/// envelope returns (0, 0).
pub fn pulse_clarity_with_lag(env: &OnsetEnvelope) -> Result<(f64, usize), FeatureError> {
    let (lag_lo, lag_hi) = lag_window(env.frame_rate);
    let need = 2 * lag_hi.max(lag_lo);
    if lag_hi < lag_lo || env.values.len() < need {
        return Err(FeatureError::EnvelopeTooShort { have: env.values.len(), need });
    }
    Ok(autocorr_peak(&env.values, lag_lo, lag_hi))
}

/// See [`pulse_clarity_with_lag`]; returns the clarity value alone.
pub fn pulse_clarity(env: &OnsetEnvelope) -> Result<f64, FeatureError> {
    pulse_clarity_with_lag(env).map(|(v, _)| v)
}

/// Variant for whole-clip extraction: the slow-tempo end of the lag window is
/// capped at half the envelope length, so clips as short as 2 s still get a
/// value. Identical to `pulse_clarity` whenever the envelope covers the full
/// 40 BPM lag twice.
fn pulse_clarity_capped(env: &OnsetEnvelope) -> f64 {
    let (lag_lo, mut lag_hi) = lag_window(env.frame_rate);
    lag_hi = lag_hi.min(env.values.len() / 2);
    if lag_hi < lag_lo {
        return 0.0;
    }
    autocorr_peak(&env.values, lag_lo, lag_hi).0
}

/// Mean onset rise: onsets are strict local maxima above mean + 1 std
/// (population) of the envelope; each contributes peak minus the valley
/// found by walking back while values keep descending. 0 when nothing
/// crosses the threshold.
pub fn attack_leap(env: &OnsetEnvelope) -> f64 {
    let e = &env.values;
    let n = e.len();
    if n < 3 {
        return 0.0;
    }
    let mean = e.iter().sum::<f64>() / n as f64;
    let var = e.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
    let threshold = mean + var.sqrt();
    let mut leaps = Vec::new();
    for t in 1..n - 1 {
        if e[t] > e[t - 1] && e[t] > e[t + 1] && e[t] > threshold {
            let mut j = t;
            while j > 0 && e[j - 1] < e[j] {
                j -= 1;
            }
            leaps.push(e[t] - e[j]);
        }
    }
    if leaps.is_empty() {
        0.0
    } else {
        leaps.iter().sum::<f64>() / leaps.len() as f64
    }
}

/// 6-D tonal centroid of one chroma frame: each pitch class projects onto
/// fifths, minor-thirds, and major-thirds circles (radii 1, 1, 0.5).
fn tonal_centroid(frame: &[f64]) -> [f64; 6] {
    use std::f64::consts::PI;
    let mut phi = [0.0; 6];
    for (l, &c) in frame.iter().enumerate() {
        let l = l as f64;
        phi[0] += c * (7.0 * PI / 6.0 * l).sin();
        phi[1] += c * (7.0 * PI / 6.0 * l).cos();
        phi[2] += c * (3.0 * PI / 2.0 * l).sin();
        phi[3] += c * (3.0 * PI / 2.0 * l).cos();
        phi[4] += c * 0.5 * (2.0 * PI / 3.0 * l).sin();
        phi[5] += c * 0.5 * (2.0 * PI / 3.0 * l).cos();
    }
    phi
}

/// Harmonic change: mean Euclidean distance between consecutive tonal
/// centroids.
pub fn hcdf(gram: &ChromaGram) -> Result<f64, FeatureError> {
    if gram.n_frames < 2 {
        return Err(FeatureError::TooFewFrames { have: gram.n_frames, need: 2 });
    }
    let centroids: Vec<[f64; 6]> = (0..gram.n_frames).map(|t| tonal_centroid(gram.frame(t))).collect();
    let total: f64 = centroids
        .windows(2)
        .map(|w| {
            w[0].iter()
                .zip(&w[1])
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .sum();
    Ok(total / (gram.n_frames - 1) as f64)
}

/// Pearson correlation of two 12-vectors; `None` when either is constant.
fn pearson12(x: &[f64; 12], y: &[f64; 12]) -> Option<f64> {
    let mx = x.iter().sum::<f64>() / 12.0;
    let my = y.iter().sum::<f64>() / 12.0;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for i in 0..12 {
        let dx = x[i] - mx;
        let dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

fn mean_chroma(gram: &ChromaGram) -> [f64; 12] {
    let mut mean = [0.0; 12];
    if gram.n_frames == 0 {
        return mean;
    }
    for t in 0..gram.n_frames {
        for (m, v) in mean.iter_mut().zip(gram.frame(t)) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= gram.n_frames as f64;
    }
    mean
}

fn majorness_of_mean(mean: &[f64; 12]) -> f64 {
    let best = |profile: &[f64; 12]| -> f64 {
        (0..12)
            .filter_map(|rot| {
                let mut p = [0.0; 12];
                for (l, v) in p.iter_mut().enumerate() {
                    *v = profile[(l + 12 - rot) % 12];
                }
                pearson12(mean, &p)
            })
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let major = best(&KK_MAJOR);
    let minor = best(&KK_MINOR);
    if !major.is_finite() || !minor.is_finite() {
        // Constant chroma correlates with nothing; call it neutral.
        return 0.0;
    }
    (major - minor).clamp(-1.0, 1.0)
}

/// Best major-key profile correlation minus best minor-key correlation of
/// the time-averaged chroma, in [-1, 1]. Degenerate (constant) chroma gives 0.
pub fn majorness(gram: &ChromaGram) -> f64 {
    majorness_of_mean(&mean_chroma(gram))
}

/// Runs every extractor over shared intermediates (one STFT, one peak list
/// per frame, one mel spectrogram, one chromagram). Identical to calling the
/// individual extractors, bit for bit, except that pulse clarity caps its lag
/// window on clips shorter than twice the 40 BPM period.
pub fn extract_all(clip: &AudioClip) -> Result<HandcraftedFeatures, FeatureError> {
    let need = 2 * clip.sample_rate() as usize;
    if clip.len() < need {
        return Err(AudioError::ClipTooShort { have: clip.len(), need }.into());
    }
    let spec = stft_magnitude(clip, DEFAULT_WINDOW, DEFAULT_HOP)?;
    let frames = peak_frames(&spec);
    let mel = mel_spectrogram(&spec, DEFAULT_N_MELS, DEFAULT_FMAX)?;
    let env = onset_envelope(&mel)?;
    let gram = chroma(&spec);
    Ok(HandcraftedFeatures {
        dissonance: sensory_dissonance_from_peaks(&frames),
        inharmonicity: inharmonicity_from_peaks(&frames),
        pulse_clarity: pulse_clarity_capped(&env),
        attack_leap: attack_leap(&env),
        hcdf_mean: hcdf(&gram)?,
        majorness: majorness(&gram),
    })
}
