//! Cross-validated prediction of emotion ratings from the seven qualities.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use midlevel_core::{
    emotion_report, load_emotion_targets, MidLevelName, MIN_EMOTION_OVERLAP,
};

use crate::run::{self, FileConfig};

#[derive(Args, Debug)]
pub struct EmotionArgs {
    /// Averaged per-song quality table.
    #[arg(long, value_name = "FILE")]
    input: Option<PathBuf>,
    /// Emotion target table (song_id plus dimension columns).
    #[arg(long, value_name = "FILE")]
    targets: Option<PathBuf>,
    /// Report CSV to write.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Drives the fold assignment [default: 0].
    #[arg(long)]
    seed: Option<u64>,
    /// Cross-validation folds [default: 10].
    #[arg(long, value_name = "K")]
    k: Option<usize>,
    /// key=value settings file; flags override it.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
}

pub fn run(args: EmotionArgs) -> Result<i32> {
    let mut cfg = FileConfig::load(args.config.as_deref())?;
    let input: PathBuf = cfg
        .resolve_opt("input", args.input)?
        .context("--input is required")?;
    let targets_path: PathBuf = cfg
        .resolve_opt("targets", args.targets)?
        .context("--targets is required")?;
    let out: PathBuf = cfg
        .resolve_opt("out", args.out)?
        .context("--out is required")?;
    let seed: u64 = cfg.resolve("seed", args.seed, 0)?;
    let k: usize = cfg.resolve("k", args.k, 10)?;
    cfg.finish()?;

    let input = run::resolve_input(&input);
    let targets_path = run::resolve_input(&targets_path);

    let (matrix, dropped, complaints) = run::load_midlevel_matrix(&input)?;
    let mut partial = !complaints.is_empty();
    for c in &complaints {
        eprintln!("{}: {c}", input.display());
    }
    if !dropped.is_empty() {
        partial = true;
        eprintln!(
            "{}: dropped {} songs missing some quality",
            input.display(),
            dropped.len()
        );
    }

    let table = load_emotion_targets(&targets_path)
        .with_context(|| format!("loading {}", targets_path.display()))?;
    for issue in &table.issues {
        partial = true;
        eprintln!("{}: {issue}", targets_path.display());
    }
    for w in &table.warnings {
        eprintln!("{}: {w}", targets_path.display());
    }

    // Dimensions without enough shared songs are reported, not fatal.
    let known: BTreeSet<&str> = matrix.row_ids().iter().map(String::as_str).collect();
    let mut kept = Vec::new();
    for (dimension, pairs) in table.value.all_targets() {
        let overlap = pairs
            .iter()
            .filter(|(id, _)| known.contains(id.as_str()))
            .count();
        if overlap >= MIN_EMOTION_OVERLAP {
            kept.push((dimension, pairs));
        } else {
            partial = true;
            eprintln!(
                "skipping {dimension}: {overlap} songs shared with the quality table, need {MIN_EMOTION_OVERLAP}"
            );
        }
    }
    if kept.is_empty() {
        bail!(
            "no emotion dimension shares at least {MIN_EMOTION_OVERLAP} songs with {}",
            input.display()
        );
    }

    let report = emotion_report(&matrix, &kept, k, seed)?;

    let mut csv = String::from("dimension,n_songs,rho");
    for name in MidLevelName::ALL {
        write!(csv, ",w_{}", name.as_str()).expect("string write");
    }
    csv.push('\n');
    let mut table_out = String::new();
    writeln!(table_out, "emotion regression ({k}-fold, seed {seed})").expect("string write");
    writeln!(
        table_out,
        "{:<12}{:>7}{:>7}  strongest weights",
        "dimension", "songs", "rho"
    )
    .expect("string write");
    for dim in &report.dimensions {
        write!(csv, "{},{},{}", run::csv_field(&dim.dimension), dim.n_songs, dim.rho)
            .expect("string write");
        for name in MidLevelName::ALL {
            let w = dim
                .weights
                .iter()
                .find(|(n, _)| n == name.as_str())
                .map(|(_, w)| *w)
                .unwrap_or(0.0);
            write!(csv, ",{w}").expect("string write");
        }
        csv.push('\n');
        let top: Vec<String> = dim
            .weights
            .iter()
            .take(3)
            .map(|(n, w)| format!("{n}({w:+.2})"))
            .collect();
        writeln!(
            table_out,
            "{:<12}{:>7}{:>7.3}  {}",
            dim.dimension,
            dim.n_songs,
            dim.rho,
            top.join(" ")
        )
        .expect("string write");
    }
    fs::write(&out, &csv).with_context(|| format!("writing {}", out.display()))?;
    print!("{table_out}");

    let echo = [
        ("command", "emotion".to_string()),
        ("input", input.display().to_string()),
        ("k", k.to_string()),
        ("out", out.display().to_string()),
        ("seed", seed.to_string()),
        ("targets", targets_path.display().to_string()),
    ];
    run::write_echo(&run::echo_path_for(&out), &echo)?;
    Ok(if partial { run::EXIT_PARTIAL } else { 0 })
}
