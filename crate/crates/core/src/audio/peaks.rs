//! Spectral peak picking with parabolic interpolation.

use super::{SpectralPeak, SpectralPeakList};

/// Finds local maxima of one magnitude frame above
/// `max(frame) * 10^(floor_db / 20)`, refines each by fitting a parabola
/// through the peak bin and its neighbors, keeps the `max_peaks` strongest,
/// and returns them frequency-ascending.
///
/// `bin_width` is the frequency step between bins (sample_rate / window).
/// DC and Nyquist bins are never peaks. Silence gives an empty list.
pub fn spectral_peaks(
    frame: &[f64],
    bin_width: f64,
    max_peaks: usize,
    floor_db: f64,
) -> SpectralPeakList {
    if frame.len() < 3 || max_peaks == 0 {
        return SpectralPeakList::default();
    }
    let max = frame.iter().cloned().fold(0.0f64, f64::max);
    if max <= 0.0 {
        return SpectralPeakList::default();
    }
    let threshold = max * 10.0f64.powf(floor_db / 20.0);
    let mut peaks = Vec::new();
    for k in 1..frame.len() - 1 {
        let (a, b, c) = (frame[k - 1], frame[k], frame[k + 1]);
        if b > a && b > c && b > threshold {
            // Vertex of the parabola through (-1, a), (0, b), (1, c).
            let denom = a - 2.0 * b + c;
            let delta = if denom == 0.0 {
                0.0
            } else {
                (0.5 * (a - c) / denom).clamp(-0.5, 0.5)
            };
            let amplitude = b - 0.25 * (a - c) * delta;
            peaks.push(SpectralPeak {
                freq_hz: (k as f64 + delta) * bin_width,
                amplitude,
            });
        }
    }
    if peaks.len() > max_peaks {
        peaks.sort_by(|x, y| y.amplitude.total_cmp(&x.amplitude));
        peaks.truncate(max_peaks);
        peaks.sort_by(|x, y| x.freq_hz.total_cmp(&y.freq_hz));
    }
    SpectralPeakList { peaks }
}
