//! Inter-rater consistency report over raw crowd ratings, with optional
//! worker screening against a trusted golden table.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use midlevel_core::{
    cronbach_alpha, load_annotations, pseudo_rater_matrix, screen_workers, Annotations,
    MidLevelName,
};

use crate::run::{self, FileConfig};

#[derive(Args, Debug)]
pub struct ReliabilityArgs {
    /// Raw per-worker ratings CSV (worker_id,song_id,feature,rating).
    #[arg(long, value_name = "FILE")]
    input: Option<PathBuf>,
    /// Averaged table of trusted songs; enables the worker report.
    #[arg(long, value_name = "FILE")]
    golden: Option<PathBuf>,
    /// Per-quality consistency CSV to write.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Drives the pseudo-rater shuffle [default: 0].
    #[arg(long)]
    seed: Option<u64>,
    /// Pseudo-rater slots per song [default: 5].
    #[arg(long, value_name = "N")]
    max_raters: Option<usize>,
    /// Ban when a worker's mean |rating - golden mean| exceeds this [default: 2].
    #[arg(long, value_name = "X")]
    dev_tolerance: Option<f64>,
    /// Ban when the deviation spread reaches this [default: 2.5].
    #[arg(long, value_name = "X")]
    std_tolerance: Option<f64>,
    /// key=value settings file; flags override it.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
}

pub fn run(args: ReliabilityArgs) -> Result<i32> {
    let mut cfg = FileConfig::load(args.config.as_deref())?;
    let input: PathBuf = cfg
        .resolve_opt("input", args.input)?
        .context("--input is required")?;
    let golden: Option<PathBuf> = cfg.resolve_opt("golden", args.golden)?;
    let out: PathBuf = cfg
        .resolve_opt("out", args.out)?
        .context("--out is required")?;
    let seed: u64 = cfg.resolve("seed", args.seed, 0)?;
    let max_raters: usize = cfg.resolve("max_raters", args.max_raters, 5)?;
    let dev_tolerance: f64 = cfg.resolve("dev_tolerance", args.dev_tolerance, 2.0)?;
    let std_tolerance: f64 = cfg.resolve("std_tolerance", args.std_tolerance, 2.5)?;
    cfg.finish()?;

    let input = run::resolve_input(&input);
    let loaded = load_annotations(&input)
        .with_context(|| format!("loading {}", input.display()))?;
    let mut partial = false;
    for issue in &loaded.issues {
        partial = true;
        eprintln!("{}: {issue}", input.display());
    }
    for w in &loaded.warnings {
        eprintln!("{}: {w}", input.display());
    }
    let Annotations::Raw(records) = loaded.value else {
        bail!(
            "{} holds per-song averages; consistency needs raw per-worker ratings",
            input.display()
        );
    };

    let mut csv = String::from("feature,alpha,n_raters,n_songs\n");
    let mut table = String::new();
    writeln!(
        table,
        "internal consistency (seed {seed}, up to {max_raters} pseudo-raters)"
    )
    .expect("string write");
    writeln!(table, "{:<22}{:>8}{:>8}{:>8}", "feature", "alpha", "raters", "songs")
        .expect("string write");
    for feature in MidLevelName::ALL {
        match pseudo_rater_matrix(&records, feature, max_raters, seed)
            .and_then(|m| cronbach_alpha(&m).map(|a| (a, m.len(), m[0].len())))
        {
            Ok((alpha, n_raters, n_songs)) => {
                writeln!(csv, "{},{alpha},{n_raters},{n_songs}", feature.as_str())
                    .expect("string write");
                writeln!(
                    table,
                    "{:<22}{:>8.3}{:>8}{:>8}",
                    feature.as_str(),
                    alpha,
                    n_raters,
                    n_songs
                )
                .expect("string write");
            }
            Err(e) => {
                partial = true;
                eprintln!("skipping {}: {e}", feature.as_str());
                writeln!(csv, "{},,,", feature.as_str()).expect("string write");
                writeln!(table, "{:<22}{:>8}", feature.as_str(), "-").expect("string write");
            }
        }
    }
    fs::write(&out, &csv).with_context(|| format!("writing {}", out.display()))?;
    print!("{table}");

    let mut echo = vec![
        ("command", "reliability".to_string()),
        ("dev_tolerance", dev_tolerance.to_string()),
        ("input", input.display().to_string()),
        ("max_raters", max_raters.to_string()),
        ("out", out.display().to_string()),
        ("seed", seed.to_string()),
        ("std_tolerance", std_tolerance.to_string()),
    ];

    if let Some(golden_path) = golden {
        let golden_path = run::resolve_input(&golden_path);
        let loaded = load_annotations(&golden_path)
            .with_context(|| format!("loading {}", golden_path.display()))?;
        for issue in &loaded.issues {
            partial = true;
            eprintln!("{}: {issue}", golden_path.display());
        }
        let Annotations::Averaged(golden_rows) = loaded.value else {
            bail!(
                "{} holds raw ratings; the golden table must be per-song averages",
                golden_path.display()
            );
        };
        let stats = screen_workers(&records, &golden_rows, dev_tolerance, std_tolerance);
        let mut wcsv =
            String::from("worker_id,n_ratings,mean_abs_dev_from_song_mean,dev_std,banned\n");
        let banned = stats.iter().filter(|s| s.banned).count();
        for s in &stats {
            let fmt = |v: f64| if v.is_nan() { String::new() } else { v.to_string() };
            writeln!(
                wcsv,
                "{},{},{},{},{}",
                run::csv_field(&s.worker_id),
                s.n_ratings,
                fmt(s.mean_abs_dev_from_song_mean),
                fmt(s.dev_std),
                s.banned
            )
            .expect("string write");
        }
        let workers_out = run::sibling(&out, "workers");
        fs::write(&workers_out, &wcsv)
            .with_context(|| format!("writing {}", workers_out.display()))?;
        println!(
            "screened {} workers against {}: {banned} banned -> {}",
            stats.len(),
            golden_path.display(),
            workers_out.display()
        );
        echo.push(("golden", golden_path.display().to_string()));
    }

    run::write_echo(&run::echo_path_for(&out), &echo)?;
    Ok(if partial { run::EXIT_PARTIAL } else { 0 })
}
