//! Minimal RIFF/WAVE reader and a small writer for fixtures.
//!
//! Supported encodings: PCM 8/16/24/32-bit integer and 32-bit IEEE float,
//! 1 or 2 channels. Stereo is downmixed by channel mean, integer samples are
//! scaled to [-1, 1], and anything not at 44100 Hz is linearly resampled.

use super::{AudioClip, AudioError, TARGET_SAMPLE_RATE};
use std::io::Write;
use std::path::Path;

const FORMAT_PCM: u16 = 1;
const FORMAT_IEEE_FLOAT: u16 = 3;
const FORMAT_EXTENSIBLE: u16 = 0xFFFE;

struct Fmt {
    format: u16,
    channels: u16,
    sample_rate: u32,
    bits: u16,
}

pub fn load_wav(path: impl AsRef<Path>) -> Result<AudioClip, AudioError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|source| AudioError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    decode_wav(&bytes)
}

fn decode_wav(bytes: &[u8]) -> Result<AudioClip, AudioError> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(AudioError::CorruptFile("missing RIFF/WAVE header".into()));
    }
    let mut fmt: Option<Fmt> = None;
    let mut data: Option<&[u8]> = None;
    let mut pos = 12;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32::from_le_bytes(bytes[pos + 4..pos + 8].try_into().unwrap()) as usize;
        let body_start = pos + 8;
        let body_end = body_start + size;
        if body_end > bytes.len() {
            return Err(AudioError::CorruptFile(format!(
                "chunk {} overruns file",
                String::from_utf8_lossy(id)
            )));
        }
        let body = &bytes[body_start..body_end];
        match id {
            b"fmt " => fmt = Some(parse_fmt(body)?),
            b"data" => data = Some(body),
            _ => {}
        }
        // Chunks are word-aligned: odd sizes carry one pad byte.
        pos = body_end + (size & 1);
    }
    let fmt = fmt.ok_or_else(|| AudioError::CorruptFile("no fmt chunk".into()))?;
    let data = data.ok_or_else(|| AudioError::CorruptFile("no data chunk".into()))?;
    if fmt.channels == 0 || fmt.channels > 2 {
        return Err(AudioError::UnsupportedFormat(format!(
            "{} channels (1 or 2 supported)",
            fmt.channels
        )));
    }
    if fmt.sample_rate == 0 {
        return Err(AudioError::CorruptFile("sample rate 0".into()));
    }
    let mono = decode_samples(&fmt, data)?;
    if mono.is_empty() {
        return Err(AudioError::CorruptFile("empty data chunk".into()));
    }
    let resampled = if fmt.sample_rate == TARGET_SAMPLE_RATE {
        mono
    } else {
        resample_linear(&mono, fmt.sample_rate, TARGET_SAMPLE_RATE)
    };
    AudioClip::new(resampled, TARGET_SAMPLE_RATE)
}

fn parse_fmt(body: &[u8]) -> Result<Fmt, AudioError> {
    if body.len() < 16 {
        return Err(AudioError::CorruptFile("fmt chunk truncated".into()));
    }
    let mut format = u16::from_le_bytes([body[0], body[1]]);
    let channels = u16::from_le_bytes([body[2], body[3]]);
    let sample_rate = u32::from_le_bytes(body[4..8].try_into().unwrap());
    let bits = u16::from_le_bytes([body[14], body[15]]);
    if format == FORMAT_EXTENSIBLE {
        // Extensible fmt stores the real code in the first two bytes of the
        // subformat GUID at offset 24.
        if body.len() < 26 {
            return Err(AudioError::CorruptFile("extensible fmt truncated".into()));
        }
        format = u16::from_le_bytes([body[24], body[25]]);
    }
    Ok(Fmt { format, channels, sample_rate, bits })
}

fn decode_samples(fmt: &Fmt, data: &[u8]) -> Result<Vec<f64>, AudioError> {
    let bytes_per_sample = match (fmt.format, fmt.bits) {
        (FORMAT_PCM, 8) => 1,
        (FORMAT_PCM, 16) => 2,
        (FORMAT_PCM, 24) => 3,
        (FORMAT_PCM, 32) => 4,
        (FORMAT_IEEE_FLOAT, 32) => 4,
        (f, b) => {
            return Err(AudioError::UnsupportedFormat(format!(
                "format code {f}, {b}-bit"
            )))
        }
    };
    let frame_bytes = bytes_per_sample * fmt.channels as usize;
    if data.len() % frame_bytes != 0 {
        return Err(AudioError::CorruptFile("data chunk not frame-aligned".into()));
    }
    let n_frames = data.len() / frame_bytes;
    let mut mono = Vec::with_capacity(n_frames);
    for f in 0..n_frames {
        let mut acc = 0.0;
        for c in 0..fmt.channels as usize {
            let at = f * frame_bytes + c * bytes_per_sample;
            let s = &data[at..at + bytes_per_sample];
            acc += match (fmt.format, fmt.bits) {
                // 8-bit wav is unsigned with midpoint 128.
                (FORMAT_PCM, 8) => (s[0] as f64 - 128.0) / 128.0,
                (FORMAT_PCM, 16) => i16::from_le_bytes([s[0], s[1]]) as f64 / 32768.0,
                (FORMAT_PCM, 24) => {
                    let v = i32::from_le_bytes([0, s[0], s[1], s[2]]) >> 8;
                    v as f64 / 8388608.0
                }
                (FORMAT_PCM, 32) => {
                    i32::from_le_bytes([s[0], s[1], s[2], s[3]]) as f64 / 2147483648.0
                }
                (FORMAT_IEEE_FLOAT, 32) => {
                    let v = f32::from_le_bytes([s[0], s[1], s[2], s[3]]);
                    if !v.is_finite() {
                        return Err(AudioError::CorruptFile("non-finite float sample".into()));
                    }
                    v as f64
                }
                _ => unreachable!(),
            };
        }
        mono.push(acc / fmt.channels as f64);
    }
    Ok(mono)
}

fn resample_linear(input: &[f64], from: u32, to: u32) -> Vec<f64> {
    if input.len() == 1 {
        return input.to_vec();
    }
    let ratio = from as f64 / to as f64;
    let n_out = ((input.len() - 1) as f64 / ratio).floor() as usize + 1;
    let mut out = Vec::with_capacity(n_out);
    for i in 0..n_out {
        let p = i as f64 * ratio;
        let lo = p.floor() as usize;
        let hi = (lo + 1).min(input.len() - 1);
        let frac = p - lo as f64;
        out.push(input[lo] * (1.0 - frac) + input[hi] * frac);
    }
    out
}

/// Writes a mono 16-bit PCM wav. Samples are clamped to [-1, 1].
/// Intended for generating fixtures and small exports.
pub fn write_wav_mono16(
    path: impl AsRef<Path>,
    samples: &[f64],
    sample_rate: u32,
) -> Result<(), AudioError> {
    let path = path.as_ref();
    let io_err = |source| AudioError::Io { path: path.to_path_buf(), source };
    let data_len = samples.len() * 2;
    let mut out = Vec::with_capacity(44 + data_len);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&((36 + data_len) as u32).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&FORMAT_PCM.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&sample_rate.to_le_bytes());
    out.extend_from_slice(&(sample_rate * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());
    for s in samples {
        let v = (s.clamp(-1.0, 1.0) * 32767.0).round() as i16;
        out.extend_from_slice(&v.to_le_bytes());
    }
    let mut file = std::fs::File::create(path).map_err(io_err)?;
    file.write_all(&out).map_err(io_err)?;
    Ok(())
}
