//! Batch feature extraction over WAV files.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use clap::Args;
use midlevel_core::{
    extract_all, load_wav, write_features, FeatureRecords, FeatureRow, OutputFormat,
};
use rayon::prelude::*;

use crate::run::{self, FileConfig};

#[derive(Args, Debug)]
pub struct ExtractArgs {
    /// WAV file or directory of WAVs; repeatable.
    #[arg(long = "input", value_name = "PATH")]
    inputs: Vec<PathBuf>,
    /// Feature table to write; a config echo lands beside it.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Recorded in the config echo; extraction itself is deterministic.
    #[arg(long)]
    seed: Option<u64>,
    /// Output format: csv or json [default: csv].
    #[arg(long, value_name = "FMT")]
    format: Option<String>,
    /// key=value settings file; flags override it.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
}

/// Every WAV under the inputs, sorted by path. Directories are scanned one
/// level deep; explicit files are taken as-is.
fn gather(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut wavs = Vec::new();
    for input in inputs {
        let input = run::resolve_input(input);
        if input.is_dir() {
            let entries = std::fs::read_dir(&input)
                .with_context(|| format!("reading directory {}", input.display()))?;
            for entry in entries {
                let path = entry?.path();
                let is_wav = path
                    .extension()
                    .is_some_and(|e| e.eq_ignore_ascii_case("wav"));
                if path.is_file() && is_wav {
                    wavs.push(path);
                }
            }
        } else {
            wavs.push(input);
        }
    }
    wavs.sort();
    wavs.dedup();
    Ok(wavs)
}

/// File stems name the rows; colliding stems fall back to the full path so
/// ids stay unique.
fn row_ids(paths: &[PathBuf]) -> Vec<String> {
    let mut stem_count: BTreeMap<String, usize> = BTreeMap::new();
    let stems: Vec<String> = paths
        .iter()
        .map(|p| {
            let stem = p
                .file_stem()
                .map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into_owned());
            *stem_count.entry(stem.clone()).or_insert(0) += 1;
            stem
        })
        .collect();
    paths
        .iter()
        .zip(stems)
        .map(|(p, stem)| {
            if stem_count[&stem] > 1 {
                p.display().to_string()
            } else {
                stem
            }
        })
        .collect()
}

pub fn run(args: ExtractArgs) -> Result<i32> {
    let mut cfg = FileConfig::load(args.config.as_deref())?;
    let mut inputs = args.inputs;
    let file_input: Option<PathBuf> = cfg.resolve_opt("input", None)?;
    if inputs.is_empty() {
        inputs.extend(file_input);
    }
    let out: PathBuf = cfg
        .resolve_opt("out", args.out)?
        .context("--out is required")?;
    let seed: u64 = cfg.resolve("seed", args.seed, 0)?;
    let format_name: String = cfg.resolve("format", args.format, "csv".to_string())?;
    let format = OutputFormat::from_str(&format_name)
        .map_err(|e| anyhow::anyhow!("--format: {e}"))?;
    cfg.finish()?;

    if inputs.is_empty() {
        bail!("no inputs: pass --input with a WAV file or directory");
    }
    let wavs = gather(&inputs)?;
    if wavs.is_empty() {
        bail!("no .wav files found under the given inputs");
    }

    // Parallel per file; output order is the sorted path order regardless
    // of which file finishes first.
    let results: Vec<Result<_, String>> = wavs
        .par_iter()
        .map(|path| {
            load_wav(path)
                .map_err(|e| e.to_string())
                .and_then(|clip| extract_all(&clip).map_err(|e| e.to_string()))
        })
        .collect();

    let ids = row_ids(&wavs);
    let mut rows = Vec::new();
    let mut failures = 0usize;
    for ((path, id), result) in wavs.iter().zip(ids).zip(results) {
        match result {
            Ok(features) => rows.push(FeatureRow { song_id: id, features }),
            Err(e) => {
                failures += 1;
                eprintln!("error: {}: {e}", path.display());
            }
        }
    }
    if rows.is_empty() {
        bail!("all {failures} inputs failed; no feature table written");
    }

    write_features(FeatureRecords::Handcrafted(&rows), &out, format)?;
    let echo = [
        ("command", "extract".to_string()),
        ("format", format.as_str().to_string()),
        (
            "inputs",
            wavs.iter()
                .map(|p| p.display().to_string())
                .collect::<Vec<_>>()
                .join(";"),
        ),
        ("out", out.display().to_string()),
        ("seed", seed.to_string()),
    ];
    run::write_echo(&run::echo_path_for(&out), &echo)?;

    println!(
        "extracted {} of {} clips -> {}",
        rows.len(),
        wavs.len(),
        out.display()
    );
    if failures > 0 {
        eprintln!("{failures} clips failed");
        return Ok(run::EXIT_PARTIAL);
    }
    Ok(0)
}
