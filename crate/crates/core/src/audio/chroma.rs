//! Pitch-class energy folding.

use super::{ChromaGram, MagnitudeSpectrogram};

/// Analysis band: bins outside [55, 8000] Hz carry mostly rumble and noise
/// for tonal purposes and are ignored.
const F_LO: f64 = 55.0;
const F_HI: f64 = 8000.0;

/// Pitch class of a frequency, 0 = C .. 11 = B, with A4 = 440 Hz at class 9.
fn pitch_class(f: f64) -> usize {
    let semis = (12.0 * (f / 440.0).log2()).round() as i64;
    (semis + 9).rem_euclid(12) as usize
}

/// Folds per-bin energy (magnitude squared) into 12 pitch classes and
/// L1-normalizes each frame. Silent frames stay all-zero.
pub fn chroma(spec: &MagnitudeSpectrogram) -> ChromaGram {
    let classes: Vec<Option<usize>> = (0..spec.n_bins)
        .map(|b| {
            let f = spec.bin_hz(b);
            (F_LO..=F_HI).contains(&f).then(|| pitch_class(f))
        })
        .collect();
    let mut data = Vec::with_capacity(spec.n_frames * 12);
    for t in 0..spec.n_frames {
        let frame = spec.frame(t);
        let mut acc = [0.0f64; 12];
        for (m, class) in frame.iter().zip(&classes) {
            if let Some(c) = class {
                acc[*c] += m * m;
            }
        }
        let sum: f64 = acc.iter().sum();
        if sum > 0.0 {
            data.extend(acc.iter().map(|v| v / sum));
        } else {
            data.extend_from_slice(&acc);
        }
    }
    ChromaGram {
        data,
        n_frames: spec.n_frames,
        frame_rate: spec.sample_rate as f64 / spec.hop as f64,
    }
}
