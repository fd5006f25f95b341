//! Shared fixtures for the benchmark suite.

use midlevel_core::AudioClip;

/// Deterministic multi-tone test clip: a quasi-musical mixture with a beat,
/// long enough for every benchmarked stage.
pub fn bench_clip(secs: f64) -> AudioClip {
    let sr = 44100u32;
    let n = (secs * sr as f64) as usize;
    let mut samples = Vec::with_capacity(n);
    let beat = sr as usize / 2;
    for i in 0..n {
        let t = i as f64 / sr as f64;
        let env = 1.0 - ((i % beat) as f64 / beat as f64);
        let s = 0.30 * (2.0 * std::f64::consts::PI * 220.0 * t).sin()
            + 0.22 * (2.0 * std::f64::consts::PI * 277.18 * t).sin()
            + 0.18 * (2.0 * std::f64::consts::PI * 329.63 * t).sin()
            + 0.10 * env * (2.0 * std::f64::consts::PI * 1760.0 * t).sin();
        samples.push(s * 0.9);
    }
    AudioClip::new(samples, sr).expect("fixture clip is valid")
}
