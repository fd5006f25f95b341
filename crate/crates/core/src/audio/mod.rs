//! Deterministic signal-processing frontend.
//!
//! Converts raw audio into the representations the rest of the toolkit
//! consumes: magnitude spectrograms, log-mel spectrograms, square mel patches
//! for the network, chromagrams, onset envelopes, and spectral peak lists.
//! All functions are pure; identical inputs give bit-identical outputs.

mod chroma;
mod mel;
mod onset;
mod peaks;
mod stft;
mod wav;

pub use chroma::chroma;
pub use mel::{crop_patch, mel_band_centers, mel_spectrogram, CropOffset};
pub use onset::onset_envelope;
pub use peaks::spectral_peaks;
pub use stft::stft_magnitude;
pub use wav::{load_wav, write_wav_mono16};

use std::path::PathBuf;

/// Canonical sample rate; files at other rates are resampled on load.
pub const TARGET_SAMPLE_RATE: u32 = 44100;
/// Default STFT window length in samples.
pub const DEFAULT_WINDOW: usize = 2048;
/// Default STFT hop in samples.
pub const DEFAULT_HOP: usize = 1536;
/// Default mel band count.
pub const DEFAULT_N_MELS: usize = 299;
/// Default mel filterbank upper frequency in Hz.
pub const DEFAULT_FMAX: f64 = 18000.0;
/// Side length of a network input patch (frames and mel bands).
pub const PATCH_SIZE: usize = 299;

#[derive(Debug, thiserror::Error)]
pub enum AudioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("corrupt wav file: {0}")]
    CorruptFile(String),
    #[error("unsupported wav format: {0}")]
    UnsupportedFormat(String),
    #[error("clip too short: {have} samples, need at least {need}")]
    ClipTooShort { have: usize, need: usize },
    #[error("invalid stft parameters: {0}")]
    InvalidParams(String),
    #[error("invalid frequency range: {0}")]
    InvalidRange(String),
    #[error("invalid mel band count: {0}")]
    InvalidMelCount(String),
    #[error("too few frames: have {have}, need {need}")]
    TooFewFrames { have: usize, need: usize },
}

/// Mono audio at a known sample rate, samples within [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl AudioClip {
    /// Wraps raw samples. Non-finite samples are rejected; values outside
    /// [-1, 1] are clamped, matching the normalization done on load.
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self, AudioError> {
        if samples.is_empty() {
            return Err(AudioError::CorruptFile("empty clip".into()));
        }
        if sample_rate == 0 {
            return Err(AudioError::InvalidParams("sample rate 0".into()));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(AudioError::CorruptFile("non-finite sample".into()));
        }
        let samples = samples.into_iter().map(|s| s.clamp(-1.0, 1.0)).collect();
        Ok(Self { samples, sample_rate })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

/// STFT magnitudes, time-major storage: frame t occupies
/// `[t * n_bins, (t+1) * n_bins)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MagnitudeSpectrogram {
    pub(crate) data: Vec<f64>,
    pub n_frames: usize,
    pub n_bins: usize,
    pub window: usize,
    pub hop: usize,
    pub sample_rate: u32,
}

impl MagnitudeSpectrogram {
    pub fn frame(&self, t: usize) -> &[f64] {
        &self.data[t * self.n_bins..(t + 1) * self.n_bins]
    }

    /// Center frequency of bin `b` in Hz.
    pub fn bin_hz(&self, b: usize) -> f64 {
        b as f64 * self.sample_rate as f64 / self.window as f64
    }

    /// Width of one frequency bin in Hz.
    pub fn bin_width(&self) -> f64 {
        self.sample_rate as f64 / self.window as f64
    }
}

/// Log-compressed mel spectrogram, time-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct MelSpectrogram {
    pub(crate) data: Vec<f64>,
    pub n_frames: usize,
    pub n_mels: usize,
    pub fmax: f64,
    pub hop: usize,
    pub sample_rate: u32,
}

impl MelSpectrogram {
    pub fn frame(&self, t: usize) -> &[f64] {
        &self.data[t * self.n_mels..(t + 1) * self.n_mels]
    }

    /// Frames per second.
    pub fn frame_rate(&self) -> f64 {
        self.sample_rate as f64 / self.hop as f64
    }
}

/// Square network input patch, min-max normalized to [0, 1].
/// Stored time-major: `data[t * PATCH_SIZE + m]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MelPatch {
    pub data: Vec<f64>,
    /// Frame offset within the source spectrogram the patch was cut at.
    pub offset: usize,
}

/// Per-frame pitch-class energy distribution, classes C..B (A = index 9).
/// Each frame sums to 1 unless it was silent (then all-zero).
#[derive(Debug, Clone, PartialEq)]
pub struct ChromaGram {
    pub(crate) data: Vec<f64>,
    pub n_frames: usize,
    pub frame_rate: f64,
}

impl ChromaGram {
    pub fn frame(&self, t: usize) -> &[f64] {
        &self.data[t * 12..(t + 1) * 12]
    }

    /// Builds a chromagram directly from per-frame class distributions.
    /// Frames are L1-normalized; all-zero frames stay zero.
    pub fn from_frames(frames: &[[f64; 12]], frame_rate: f64) -> Self {
        let mut data = Vec::with_capacity(frames.len() * 12);
        for f in frames {
            let sum: f64 = f.iter().sum();
            if sum > 0.0 {
                data.extend(f.iter().map(|v| v / sum));
            } else {
                data.extend_from_slice(f);
            }
        }
        Self { data, n_frames: frames.len(), frame_rate }
    }
}

/// Half-wave-rectified spectral flux per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct OnsetEnvelope {
    pub values: Vec<f64>,
    pub frame_rate: f64,
}

/// One interpolated spectral peak.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralPeak {
    pub freq_hz: f64,
    pub amplitude: f64,
}

/// Peaks of one spectrogram frame, frequency-ascending.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SpectralPeakList {
    pub peaks: Vec<SpectralPeak>,
}

impl SpectralPeakList {
    pub fn len(&self) -> usize {
        self.peaks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.peaks.is_empty()
    }
}
