//! Short-time Fourier transform magnitudes.

use super::{AudioClip, AudioError, MagnitudeSpectrogram};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

/// Computes a magnitude spectrogram with a periodic Hann window and no
/// center padding: frame t covers samples [t*hop, t*hop + window).
///
/// Output has `1 + (len - window) / hop` frames and `window / 2 + 1` bins;
/// bin b is centered at `b * sample_rate / window` Hz.
pub fn stft_magnitude(
    clip: &AudioClip,
    window: usize,
    hop: usize,
) -> Result<MagnitudeSpectrogram, AudioError> {
    if window < 2 || window % 2 != 0 {
        return Err(AudioError::InvalidParams(format!(
            "window must be even and >= 2, got {window}"
        )));
    }
    if hop == 0 {
        return Err(AudioError::InvalidParams("hop must be positive".into()));
    }
    let len = clip.len();
    if len < window {
        return Err(AudioError::ClipTooShort { have: len, need: window });
    }
    let n_frames = 1 + (len - window) / hop;
    let n_bins = window / 2 + 1;

    // Periodic Hann: w[n] = 0.5 - 0.5 cos(2 pi n / N).
    let hann: Vec<f64> = (0..window)
        .map(|n| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * n as f64 / window as f64).cos())
        .collect();

    let fft = FftPlanner::<f64>::new().plan_fft_forward(window);
    let samples = clip.samples();
    let mut data = Vec::with_capacity(n_frames * n_bins);
    let mut buf = vec![Complex::new(0.0, 0.0); window];
    let mut scratch = vec![Complex::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    for t in 0..n_frames {
        let start = t * hop;
        for n in 0..window {
            buf[n] = Complex::new(samples[start + n] * hann[n], 0.0);
        }
        fft.process_with_scratch(&mut buf, &mut scratch);
        data.extend(buf[..n_bins].iter().map(|c| c.norm()));
    }

    Ok(MagnitudeSpectrogram {
        data,
        n_frames,
        n_bins,
        window,
        hop,
        sample_rate: clip.sample_rate(),
    })
}
