//! Out-of-fold cluster classification from the seven qualities.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use midlevel_core::{
    f1_weighted, fit_ovr_classifier, kfold, load_cluster_labels, roc_auc, scores,
};

use crate::run::{self, FileConfig};

const N_CLUSTERS: usize = 5;

#[derive(Args, Debug)]
pub struct ClustersArgs {
    /// Averaged per-song quality table.
    #[arg(long, value_name = "FILE")]
    input: Option<PathBuf>,
    /// Cluster assignment CSV (song_id,cluster) with clusters 1-5.
    #[arg(long, value_name = "FILE")]
    labels: Option<PathBuf>,
    /// Report CSV to write.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Drives the fold assignment [default: 0].
    #[arg(long)]
    seed: Option<u64>,
    /// Cross-validation folds [default: 10].
    #[arg(long, value_name = "K")]
    k: Option<usize>,
    /// L2 penalty of the per-cluster logistic models [default: 1].
    #[arg(long, value_name = "X")]
    lambda: Option<f64>,
    /// key=value settings file; flags override it.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
}

pub fn run(args: ClustersArgs) -> Result<i32> {
    let mut cfg = FileConfig::load(args.config.as_deref())?;
    let input: PathBuf = cfg
        .resolve_opt("input", args.input)?
        .context("--input is required")?;
    let labels_path: PathBuf = cfg
        .resolve_opt("labels", args.labels)?
        .context("--labels is required")?;
    let out: PathBuf = cfg
        .resolve_opt("out", args.out)?
        .context("--out is required")?;
    let seed: u64 = cfg.resolve("seed", args.seed, 0)?;
    let k: usize = cfg.resolve("k", args.k, 10)?;
    let lambda: f64 = cfg.resolve("lambda", args.lambda, 1.0)?;
    cfg.finish()?;

    let input = run::resolve_input(&input);
    let labels_path = run::resolve_input(&labels_path);

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

    let loaded = load_cluster_labels(&labels_path)
        .with_context(|| format!("loading {}", labels_path.display()))?;
    for issue in &loaded.issues {
        partial = true;
        eprintln!("{}: {issue}", labels_path.display());
    }
    if let Some((id, c)) = loaded.value.iter().find(|(_, c)| *c > N_CLUSTERS) {
        bail!("song {id} has cluster {c}; clusters run 1-{N_CLUSTERS}");
    }

    // Join on song id; the classifier sees only songs present in both files.
    let label_of: BTreeMap<&str, usize> = loaded
        .value
        .iter()
        .map(|(id, c)| (id.as_str(), *c))
        .collect();
    let mut joined: Vec<(usize, usize)> = matrix
        .row_ids()
        .iter()
        .enumerate()
        .filter_map(|(row, id)| label_of.get(id.as_str()).map(|c| (row, *c)))
        .collect();
    joined.sort_by(|a, b| matrix.row_ids()[a.0].cmp(&matrix.row_ids()[b.0]));
    if joined.is_empty() {
        bail!(
            "no song ids shared between {} and {}",
            input.display(),
            labels_path.display()
        );
    }
    let rows: Vec<usize> = joined.iter().map(|(row, _)| *row).collect();
    let truth: Vec<usize> = joined.iter().map(|(_, c)| *c).collect();
    let x = matrix.select_rows(&rows);
    let ids: Vec<String> = x.row_ids().to_vec();

    // Out-of-fold scores for every song, one class column per cluster.
    let folds = kfold(&ids, k, seed)?;
    let mut oof = vec![[f64::NAN; N_CLUSTERS]; ids.len()];
    for fold in 0..folds.n_folds() {
        let (mut train_pos, mut test_pos) = (Vec::new(), Vec::new());
        for (pos, id) in ids.iter().enumerate() {
            if folds.fold_of(id) == Some(fold) {
                test_pos.push(pos);
            } else {
                train_pos.push(pos);
            }
        }
        let xtr = x.select_rows(&train_pos);
        let ytr: Vec<usize> = train_pos.iter().map(|&p| truth[p]).collect();
        let clf = fit_ovr_classifier(&xtr, &ytr, lambda)?;
        let xte = x.select_rows(&test_pos);
        let sc = scores(&clf, &xte)?;
        for (row, &pos) in test_pos.iter().enumerate() {
            // A cluster absent from this training fold scores zero: the
            // model never saw it, so it never votes for it.
            for c in 1..=N_CLUSTERS {
                let col = clf.classes.iter().position(|&cl| cl == c);
                oof[pos][c - 1] = col.map_or(0.0, |j| sc[row][j]);
            }
        }
    }

    let predicted: Vec<usize> = oof
        .iter()
        .map(|scores| {
            let mut best = 0;
            for c in 1..N_CLUSTERS {
                if scores[c] > scores[best] {
                    best = c;
                }
            }
            best + 1
        })
        .collect();
    let weighted = f1_weighted(&predicted, &truth)?;

    let mut csv = String::from("cluster,n_songs,auc,f1\n");
    let mut table = String::new();
    writeln!(table, "cluster separation ({k}-fold, seed {seed})").expect("string write");
    writeln!(table, "{:<9}{:>7}{:>8}{:>8}", "cluster", "songs", "auc", "f1").expect("string write");
    for c in 1..=N_CLUSTERS {
        let members = truth.iter().filter(|&&t| t == c).count();
        if members == 0 {
            partial = true;
            eprintln!("cluster {c} has no songs");
            writeln!(csv, "{c},0,,").expect("string write");
            continue;
        }
        let col: Vec<f64> = oof.iter().map(|s| s[c - 1]).collect();
        let is_c: Vec<bool> = truth.iter().map(|&t| t == c).collect();
        let auc = roc_auc(&col, &is_c)?;
        let f1 = class_f1(&predicted, &truth, c);
        writeln!(csv, "{c},{members},{auc},{f1}").expect("string write");
        writeln!(table, "{:<9}{:>7}{:>8.3}{:>8.3}", c, members, auc, f1).expect("string write");
    }
    writeln!(csv, "all,{},,{weighted}", ids.len()).expect("string write");
    writeln!(table, "weighted F1 {weighted:.3} over {} songs", ids.len()).expect("string write");
    fs::write(&out, &csv).with_context(|| format!("writing {}", out.display()))?;
    print!("{table}");

    let echo = [
        ("command", "clusters".to_string()),
        ("input", input.display().to_string()),
        ("k", k.to_string()),
        ("labels", labels_path.display().to_string()),
        ("lambda", lambda.to_string()),
        ("out", out.display().to_string()),
        ("seed", seed.to_string()),
    ];
    run::write_echo(&run::echo_path_for(&out), &echo)?;
    Ok(if partial { run::EXIT_PARTIAL } else { 0 })
}

/// Binary F1 of one cluster against the rest; 0 when never predicted.
fn class_f1(predicted: &[usize], truth: &[usize], c: usize) -> f64 {
    let tp = predicted
        .iter()
        .zip(truth)
        .filter(|(p, t)| **p == c && **t == c)
        .count() as f64;
    let fp = predicted
        .iter()
        .zip(truth)
        .filter(|(p, t)| **p == c && **t != c)
        .count() as f64;
    let fn_ = predicted
        .iter()
        .zip(truth)
        .filter(|(p, t)| **p != c && **t == c)
        .count() as f64;
    if tp == 0.0 {
        return 0.0;
    }
    2.0 * tp / (2.0 * tp + fp + fn_)
}
