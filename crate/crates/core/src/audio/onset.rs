//! Onset strength from half-wave-rectified spectral flux.

use super::{AudioError, MelSpectrogram, OnsetEnvelope};

/// `e[t] = sum_m max(0, mel[t][m] - mel[t-1][m])`, with `e[0] = 0`.
pub fn onset_envelope(mel: &MelSpectrogram) -> Result<OnsetEnvelope, AudioError> {
    if mel.n_frames < 2 {
        return Err(AudioError::TooFewFrames { have: mel.n_frames, need: 2 });
    }
    let mut values = Vec::with_capacity(mel.n_frames);
    values.push(0.0);
    for t in 1..mel.n_frames {
        let flux: f64 = mel
            .frame(t)
            .iter()
            .zip(mel.frame(t - 1))
            .map(|(cur, prev)| (cur - prev).max(0.0))
            .sum();
        values.push(flux);
    }
    Ok(OnsetEnvelope { values, frame_rate: mel.frame_rate() })
}
