//! Mel filterbank, log compression, and square patch cropping.

use super::{AudioError, MagnitudeSpectrogram, MelPatch, MelSpectrogram, PATCH_SIZE};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Additive floor inside the log, so silence maps to `ln(1e-10)`.
pub(crate) const LOG_FLOOR: f64 = 1e-10;

pub(crate) fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

pub(crate) fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10.0f64.powf(m / 2595.0) - 1.0)
}

/// Center frequencies (Hz) of the `n_mels` triangles spanning [0, fmax].
pub fn mel_band_centers(n_mels: usize, fmax: f64) -> Vec<f64> {
    let top = hz_to_mel(fmax);
    (1..=n_mels)
        .map(|k| mel_to_hz(top * k as f64 / (n_mels + 1) as f64))
        .collect()
}

/// Integral of the unit-peak triangle (lo, c, hi) over [a, b].
fn tri_integral(lo: f64, c: f64, hi: f64, a: f64, b: f64) -> f64 {
    let mut area = 0.0;
    // Rising edge on [lo, c].
    if c > lo {
        let x0 = a.max(lo);
        let x1 = b.min(c);
        if x1 > x0 {
            let h0 = (x0 - lo) / (c - lo);
            let h1 = (x1 - lo) / (c - lo);
            area += 0.5 * (h0 + h1) * (x1 - x0);
        }
    }
    // Falling edge on [c, hi].
    if hi > c {
        let x0 = a.max(c);
        let x1 = b.min(hi);
        if x1 > x0 {
            let h0 = (hi - x0) / (hi - c);
            let h1 = (hi - x1) / (hi - c);
            area += 0.5 * (h0 + h1) * (x1 - x0);
        }
    }
    area
}

/// One filter: weights for bins `start..start + weights.len()`.
struct Filter {
    start: usize,
    weights: Vec<f64>,
}

/// Unit-peak triangles equally spaced on the mel scale, sampled by averaging
/// each triangle over the width of every frequency bin it touches. Plain
/// point sampling would zero out triangles narrower than one bin, which
/// happens in the low bands at high filter counts; averaging keeps every
/// band responsive while agreeing with point sampling for wide triangles.
fn build_filterbank(n_bins: usize, bin_width: f64, n_mels: usize, fmax: f64) -> Vec<Filter> {
    let top = hz_to_mel(fmax);
    let edges: Vec<f64> = (0..=n_mels + 1)
        .map(|k| mel_to_hz(top * k as f64 / (n_mels + 1) as f64))
        .collect();
    let mut filters = Vec::with_capacity(n_mels);
    for i in 0..n_mels {
        let (lo, c, hi) = (edges[i], edges[i + 1], edges[i + 2]);
        // Bin b's cell covers [(b - 0.5) dx, (b + 0.5) dx].
        let b_lo = ((lo / bin_width - 0.5).ceil().max(0.0)) as usize;
        let b_hi = (((hi / bin_width + 0.5).floor()) as usize).min(n_bins - 1);
        let mut start = b_lo;
        let mut weights = Vec::new();
        for b in b_lo..=b_hi {
            let a = (b as f64 - 0.5) * bin_width;
            let z = (b as f64 + 0.5) * bin_width;
            let w = tri_integral(lo, c, hi, a, z) / bin_width;
            if w > 0.0 {
                weights.push(w);
            } else if weights.is_empty() {
                start = b + 1;
            } else {
                break;
            }
        }
        filters.push(Filter { start, weights });
    }
    filters
}

/// Applies a mel filterbank and natural-log compression:
/// `out[t][k] = ln(sum_b w[k][b] * mag[t][b] + 1e-10)`.
pub fn mel_spectrogram(
    spec: &MagnitudeSpectrogram,
    n_mels: usize,
    fmax: f64,
) -> Result<MelSpectrogram, AudioError> {
    let nyquist = spec.sample_rate as f64 / 2.0;
    if fmax <= 0.0 || fmax > nyquist {
        return Err(AudioError::InvalidRange(format!(
            "fmax {fmax} Hz outside (0, {nyquist}]"
        )));
    }
    if n_mels < 1 || n_mels > spec.n_bins {
        return Err(AudioError::InvalidMelCount(format!(
            "{n_mels} bands for {} bins",
            spec.n_bins
        )));
    }
    let filters = build_filterbank(spec.n_bins, spec.bin_width(), n_mels, fmax);
    let mut data = Vec::with_capacity(spec.n_frames * n_mels);
    for t in 0..spec.n_frames {
        let frame = spec.frame(t);
        for f in &filters {
            let x: f64 = f
                .weights
                .iter()
                .zip(&frame[f.start..f.start + f.weights.len()])
                .map(|(w, m)| w * m)
                .sum();
            data.push((x + LOG_FLOOR).ln());
        }
    }
    Ok(MelSpectrogram {
        data,
        n_frames: spec.n_frames,
        n_mels,
        fmax,
        hop: spec.hop,
        sample_rate: spec.sample_rate,
    })
}

/// Where to cut a patch from a longer spectrogram.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CropOffset {
    /// Start at this frame.
    Fixed(usize),
    /// Uniform over all valid offsets, deterministic per seed.
    Random { seed: u64 },
}

/// Cuts a PATCH_SIZE-frame square slice and min-max normalizes it to [0, 1].
/// A constant slice normalizes to all zeros.
pub fn crop_patch(mel: &MelSpectrogram, offset: CropOffset) -> Result<MelPatch, AudioError> {
    if mel.n_frames < PATCH_SIZE {
        return Err(AudioError::TooFewFrames { have: mel.n_frames, need: PATCH_SIZE });
    }
    if mel.n_mels != PATCH_SIZE {
        return Err(AudioError::InvalidMelCount(format!(
            "patches need {PATCH_SIZE} mel bands, spectrogram has {}",
            mel.n_mels
        )));
    }
    let max_offset = mel.n_frames - PATCH_SIZE;
    let at = match offset {
        CropOffset::Fixed(k) => {
            if k > max_offset {
                return Err(AudioError::InvalidParams(format!(
                    "offset {k} exceeds maximum {max_offset}"
                )));
            }
            k
        }
        CropOffset::Random { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.random_range(0..=max_offset)
        }
    };
    let mut data = mel.data[at * mel.n_mels..(at + PATCH_SIZE) * mel.n_mels].to_vec();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in &data {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if hi > lo {
        let span = hi - lo;
        for v in &mut data {
            *v = (*v - lo) / span;
        }
    } else {
        data.fill(0.0);
    }
    Ok(MelPatch { data, offset: at })
}
