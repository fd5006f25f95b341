//! Fixture builders shared by the CLI integration and acceptance suites:
//! tiny WAV synthesis, CSV tables with known structure, and a runner that
//! captures the compiled binary's exit code and output.
#![allow(dead_code)]

use midlevel_core::MidLevelName;
use std::path::Path;
use std::process::Command;

pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Runs the compiled `midlevel` binary with a scrubbed dataset root so the
/// host environment cannot leak into path resolution.
pub fn midlevel(args: &[&str]) -> Run {
    midlevel_env(args, &[])
}

pub fn midlevel_env(args: &[&str], envs: &[(&str, &str)]) -> Run {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_midlevel"));
    cmd.args(args).env_remove("MIDLEVEL_DATA_DIR");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    let out = cmd.output().expect("midlevel binary should spawn");
    Run {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

/// Writes a mono 16-bit WAV holding a sum of equal-amplitude sine partials,
/// total peak 0.9.
pub fn tone_wav(path: &Path, freqs: &[f64], secs: f64) {
    let sr = midlevel_core::TARGET_SAMPLE_RATE;
    let n = (secs * f64::from(sr)).round() as usize;
    let amp = 0.9 / freqs.len() as f64;
    let samples: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64 / f64::from(sr);
            freqs
                .iter()
                .map(|f| amp * (2.0 * std::f64::consts::PI * f * t).sin())
                .sum()
        })
        .collect();
    midlevel_core::audio::write_wav_mono16(path, &samples, sr).expect("fixture wav");
}

pub const QUALITY_HEADER: &str = "song_id,melodiousness,articulation,rhythmic_stability,\
rhythmic_complexity,dissonance,tonal_stability,modality";

/// Forty songs with smooth deterministic quality values inside [1, 9].
pub fn averaged_rows() -> Vec<(String, [f64; 7])> {
    (0..40)
        .map(|i| {
            let t = f64::from(i);
            let v = [
                5.0 + 3.0 * (0.37 * t).sin(),
                5.0 + 3.0 * (0.61 * t).cos(),
                5.0 + 2.5 * (0.23 * t).sin(),
                5.0 + 2.5 * (0.83 * t).cos(),
                5.0 + 3.5 * (0.47 * t).sin(),
                5.0 + 2.0 * (0.71 * t).cos(),
                5.0 + 3.0 * (0.29 * t).sin(),
            ];
            (format!("s{i:03}"), v)
        })
        .collect()
}

pub fn averaged_csv(rows: &[(String, [f64; 7])]) -> String {
    let mut out = String::from(QUALITY_HEADER);
    out.push('\n');
    for (id, v) in rows {
        out.push_str(id);
        for x in v {
            out.push_str(&format!(",{x}"));
        }
        out.push('\n');
    }
    out
}

/// Emotion targets as fixed linear blends of the quality values, so a
/// regression over the qualities has real structure to recover.
pub fn emotion_targets_csv(rows: &[(String, [f64; 7])]) -> String {
    let mut out = String::from("song_id,valence,energy,tension\n");
    for (id, v) in rows {
        let valence = 0.9 * v[0] - 0.6 * v[4] + 0.2 * v[6];
        let energy = 0.8 * v[3] + 0.5 * v[1] - 0.3 * v[2];
        let tension = 0.7 * v[4] - 0.5 * v[5] + 0.3 * v[3];
        out.push_str(&format!("{id},{valence},{energy},{tension}\n"));
    }
    out
}

/// Five clusters of ten songs at mutually distant corners of the quality
/// cube (sign patterns with pairwise Hamming distance >= 3, deviation 3.0,
/// jitter 0.4), so a linear one-vs-rest model separates them cleanly.
/// Returns (quality table, cluster label table).
pub fn separable_clusters_csv() -> (String, String) {
    const PATTERNS: [[f64; 7]; 5] = [
        [1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0],
        [-1.0, -1.0, -1.0, -1.0, -1.0, -1.0, -1.0],
        [1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0],
        [-1.0, 1.0, -1.0, 1.0, -1.0, 1.0, -1.0],
        [1.0, 1.0, -1.0, -1.0, 1.0, 1.0, -1.0],
    ];
    let mut quality = String::from(QUALITY_HEADER);
    quality.push('\n');
    let mut labels = String::from("song_id,cluster\n");
    for (c, pattern) in PATTERNS.iter().enumerate() {
        for j in 0..10 {
            let id = format!("c{}s{j:02}", c + 1);
            quality.push_str(&id);
            for (d, sign) in pattern.iter().enumerate() {
                let jitter = 0.4 * (2.1 * j as f64 + 0.7 * c as f64 + 1.3 * d as f64).sin();
                quality.push_str(&format!(",{}", 5.0 + 3.0 * sign + jitter));
            }
            quality.push('\n');
            labels.push_str(&format!("{id},{}\n", c + 1));
        }
    }
    (quality, labels)
}

/// Raw per-worker ratings where every worker reports the same value for a
/// given song and quality, with values varying across songs. Any pseudo-rater
/// deal of this table has identical rows, so internal consistency is exact.
pub fn perfect_raw_csv(n_workers: usize, n_songs: usize) -> String {
    let mut out = String::from("worker_id,song_id,feature,rating\n");
    for s in 0..n_songs {
        for (fi, f) in MidLevelName::ALL.iter().enumerate() {
            let rating = 1 + (s * 7 + fi * 3) % 9;
            for w in 0..n_workers {
                out.push_str(&format!("w{w},g{s:02},{},{rating}\n", f.as_str()));
            }
        }
    }
    out
}

/// The same table as [`perfect_raw_csv`] plus one worker who rates every
/// song three points high (clamped to 9), and a golden table holding the
/// honest values. Returns (raw ratings, golden averages).
pub fn deviant_raw_csv(n_workers: usize, n_songs: usize) -> (String, String) {
    let mut raw = perfect_raw_csv(n_workers, n_songs);
    let mut golden = String::from(QUALITY_HEADER);
    golden.push('\n');
    for s in 0..n_songs {
        golden.push_str(&format!("g{s:02}"));
        for fi in 0..MidLevelName::ALL.len() {
            let rating = 1 + (s * 7 + fi * 3) % 9;
            golden.push_str(&format!(",{rating}"));
            raw.push_str(&format!(
                "w-off,g{s:02},{},{}\n",
                MidLevelName::ALL[fi].as_str(),
                (rating + 3).min(9)
            ));
        }
        golden.push('\n');
    }
    (raw, golden)
}
