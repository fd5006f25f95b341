//! Network pipeline stages: pretrain, embed, transfer, finetune, gradcheck.
//! Without --input the stages run on the bundled synthetic texture set, so
//! the whole pipeline is exercisable on any machine.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use midlevel_core::{
    crop_patch, fit_kernel_rbf, gradient_check, kfold, load_annotations, load_checkpoint,
    load_song_manifest, load_tag_assignments, load_wav, mel_spectrogram, metrics_csv,
    pca_apply, pca_fit, pearson, predict_kernel, save_checkpoint, stft_magnitude,
    synthetic_midlevel_data, synthetic_tag_data, train_tags, tune_kernel_rbf, Annotations,
    CropOffset, DesignMatrix, Head, MidLevelName, Network, NetworkSpec, TagManifest,
    Tensor, TrainConfig, DEFAULT_FMAX, DEFAULT_HOP, DEFAULT_N_MELS, DEFAULT_WINDOW,
};

use crate::run::{self, FileConfig};

/// Worst acceptable relative error between analytic and finite-difference
/// gradients; double precision leaves orders of magnitude of headroom.
const GRADCHECK_THRESHOLD: f64 = 1e-4;

/// Seed offsets keep data synthesis and weight init on distinct streams.
const DATA_STREAM: u64 = 0x5eed_da7a;
const NET_STREAM: u64 = 0x5eed_0137;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Stage {
    /// Multi-label tag training from scratch; writes pretrain.ckpt.
    Pretrain,
    /// Push clips through a checkpoint's backbone; writes embeddings.csv.
    Embed,
    /// Embed, project (PCA), kernel-fit the seven qualities; writes transfer.csv.
    Transfer,
    /// Two-stage head-then-full training from a checkpoint; writes finetune.ckpt.
    Finetune,
    /// Compare analytic gradients against finite differences on a fresh net.
    Gradcheck,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Pipeline stage to run.
    #[arg(long, value_enum)]
    stage: Stage,
    /// Directory for artifacts; created if missing. Every stage drops
    /// config.txt there beside its results.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// WAV file, directory, or song manifest CSV; repeatable. Without
    /// inputs, stages run on the bundled synthetic texture set.
    #[arg(long = "input", value_name = "PATH")]
    inputs: Vec<PathBuf>,
    /// Tag assignment CSV (song_id,tags) for pretraining on real audio.
    #[arg(long, value_name = "FILE")]
    tags: Option<PathBuf>,
    /// Averaged quality table for transfer/finetune on real audio.
    #[arg(long, value_name = "FILE")]
    targets: Option<PathBuf>,
    /// Starting network; required by embed, transfer, and finetune.
    #[arg(long, value_name = "FILE")]
    checkpoint: Option<PathBuf>,
    /// Drives data synthesis, initialization, and batch order [default: 0].
    #[arg(long)]
    seed: Option<u64>,
    /// Network size: desk, tiny, or micro [default: tiny; micro for gradcheck].
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,
    /// Training epochs [default: 160 pretrain, 40 finetune].
    #[arg(long, value_name = "N")]
    epochs: Option<usize>,
    /// Minibatch size [default: 16].
    #[arg(long, value_name = "N")]
    batch_size: Option<usize>,
    /// Adam learning rate [default: 0.005 pretrain, 0.02 finetune].
    #[arg(long, value_name = "X")]
    lr: Option<f64>,
    /// Held-out fraction for epoch selection [default: 0.25].
    #[arg(long, value_name = "X")]
    val_frac: Option<f64>,
    /// Non-improving epochs tolerated before finetune stops [default: 5].
    #[arg(long, value_name = "N")]
    patience: Option<usize>,
    /// Synthetic set size [default: 96].
    #[arg(long, value_name = "N")]
    n: Option<usize>,
    /// Synthetic patch side [default: the preset's input side].
    #[arg(long, value_name = "PX")]
    side: Option<usize>,
    /// Keep tags appearing on at least this many songs [default: 1].
    #[arg(long, value_name = "N")]
    min_tag_count: Option<usize>,
    /// Transfer-report cross-validation folds [default: 10].
    #[arg(long, value_name = "K")]
    k: Option<usize>,
    /// Gradcheck finite-difference step [default: 1e-5].
    #[arg(long, value_name = "X")]
    eps: Option<f64>,
    /// Gradcheck sampled coordinates per head [default: 60].
    #[arg(long, value_name = "N")]
    samples: Option<usize>,
    /// key=value settings file; flags override it.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
}

/// Everything a stage needs, resolved from flags, config file, and defaults.
struct Resolved {
    stage: Stage,
    out: PathBuf,
    inputs: Vec<PathBuf>,
    tags: Option<PathBuf>,
    targets: Option<PathBuf>,
    checkpoint: Option<PathBuf>,
    seed: u64,
    preset: String,
    train: TrainConfig,
    n: usize,
    side: Option<usize>,
    min_tag_count: usize,
    k: usize,
    eps: f64,
    samples: usize,
}

fn resolve(args: TrainArgs) -> Result<Resolved> {
    let mut cfg = FileConfig::load(args.config.as_deref())?;
    let stage = args.stage;
    let out: PathBuf = cfg
        .resolve_opt("out", args.out)?
        .context("--out is required")?;
    let mut inputs = args.inputs;
    let file_input: Option<PathBuf> = cfg.resolve_opt("input", None)?;
    if inputs.is_empty() {
        inputs.extend(file_input);
    }
    let default_preset = if stage == Stage::Gradcheck { "micro" } else { "tiny" };
    let (default_epochs, default_lr) = match stage {
        Stage::Finetune => (40, 0.02),
        _ => (160, 0.005),
    };
    let resolved = Resolved {
        stage,
        out,
        tags: cfg.resolve_opt("tags", args.tags)?,
        targets: cfg.resolve_opt("targets", args.targets)?,
        checkpoint: cfg.resolve_opt("checkpoint", args.checkpoint)?,
        seed: cfg.resolve("seed", args.seed, 0)?,
        preset: cfg.resolve("preset", args.preset, default_preset.to_string())?,
        train: TrainConfig {
            batch_size: cfg.resolve("batch_size", args.batch_size, 16)?,
            epochs: cfg.resolve("epochs", args.epochs, default_epochs)?,
            lr: cfg.resolve("lr", args.lr, default_lr)?,
            seed: 0,
            val_frac: cfg.resolve("val_frac", args.val_frac, 0.25)?,
            patience: cfg.resolve("patience", args.patience, 5)?,
        },
        n: cfg.resolve("n", args.n, 96)?,
        side: cfg.resolve_opt("side", args.side)?,
        min_tag_count: cfg.resolve("min_tag_count", args.min_tag_count, 1)?,
        k: cfg.resolve("k", args.k, 10)?,
        eps: cfg.resolve("eps", args.eps, 1e-5)?,
        samples: cfg.resolve("samples", args.samples, 60)?,
        inputs,
    };
    cfg.finish()?;
    Ok(resolved)
}

fn preset_spec(name: &str, n_tags: usize) -> Result<NetworkSpec> {
    Ok(match name {
        "desk" => NetworkSpec::desk(n_tags),
        "tiny" => NetworkSpec::tiny(n_tags),
        "micro" => NetworkSpec::micro(n_tags),
        other => bail!("unknown preset {other:?}; use desk, tiny, or micro"),
    })
}

fn preset_side(name: &str) -> usize {
    match name {
        "desk" => 64,
        "micro" => 8,
        _ => 16,
    }
}

pub fn run(args: TrainArgs) -> Result<i32> {
    let r = resolve(args)?;
    fs::create_dir_all(&r.out)
        .with_context(|| format!("creating {}", r.out.display()))?;
    let mut r = r;
    r.train.seed = r.seed;
    match r.stage {
        Stage::Gradcheck => gradcheck(&r),
        Stage::Pretrain => pretrain(&r),
        Stage::Embed => embed(&r),
        Stage::Transfer => transfer(&r),
        Stage::Finetune => finetune_stage(&r),
    }
}

fn base_echo(r: &Resolved, stage: &str) -> Vec<(&'static str, String)> {
    let mut echo = vec![
        ("command", "train".to_string()),
        ("stage", stage.to_string()),
        ("out", r.out.display().to_string()),
        ("seed", r.seed.to_string()),
        ("preset", r.preset.clone()),
    ];
    if r.inputs.is_empty() {
        echo.push(("data", "synthetic".to_string()));
        echo.push(("n", r.n.to_string()));
        echo.push(("side", r.side.unwrap_or_else(|| preset_side(&r.preset)).to_string()));
    } else {
        echo.push((
            "inputs",
            r.inputs
                .iter()
                .map(|p| p.display().to_string())
                .collect::<Vec<_>>()
                .join(";"),
        ));
    }
    if let Some(c) = &r.checkpoint {
        echo.push(("checkpoint", c.display().to_string()));
    }
    echo
}

fn training_echo(r: &Resolved, echo: &mut Vec<(&'static str, String)>) {
    echo.push(("batch_size", r.train.batch_size.to_string()));
    echo.push(("epochs", r.train.epochs.to_string()));
    echo.push(("lr", r.train.lr.to_string()));
    echo.push(("val_frac", r.train.val_frac.to_string()));
    echo.push(("patience", r.train.patience.to_string()));
}

fn gradcheck(r: &Resolved) -> Result<i32> {
    let spec = preset_spec(&r.preset, 4)?;
    let net = Network::new(spec, r.seed ^ NET_STREAM)?;
    let tags = gradient_check(&net, Head::Tags, r.eps, r.samples, r.seed)?;
    let mid = gradient_check(&net, Head::MidLevel, r.eps, r.samples, r.seed)?;
    let worst = tags.max(mid);
    println!(
        "max relative error {worst:.3e} over {} coordinates per head (threshold {GRADCHECK_THRESHOLD:e})",
        r.samples
    );
    let mut result = String::new();
    writeln!(result, "eps={}", r.eps).expect("string write");
    writeln!(result, "max_relative_error={worst}").expect("string write");
    writeln!(result, "samples_per_head={}", r.samples).expect("string write");
    writeln!(result, "threshold={GRADCHECK_THRESHOLD}").expect("string write");
    fs::write(r.out.join("gradcheck.txt"), result)?;
    let mut echo = base_echo(r, "gradcheck");
    echo.push(("eps", r.eps.to_string()));
    echo.push(("samples", r.samples.to_string()));
    run::write_echo(&r.out.join("config.txt"), &echo)?;
    Ok(if worst < GRADCHECK_THRESHOLD { 0 } else { 1 })
}

/// Mel patch for one clip, cropped at the clip start so reruns are stable.
fn patch_of(path: &Path) -> Result<Tensor> {
    let clip = load_wav(path)?;
    let spec = stft_magnitude(&clip, DEFAULT_WINDOW, DEFAULT_HOP)?;
    let mel = mel_spectrogram(&spec, DEFAULT_N_MELS, DEFAULT_FMAX)?;
    let patch = crop_patch(&mel, CropOffset::Fixed(0))?;
    Ok(Tensor::from_patch(&patch))
}

/// Named patches from WAV paths, directories, or song manifest CSVs.
/// Unreadable clips are reported and skipped; the second value counts them.
fn load_patches(inputs: &[PathBuf]) -> Result<(Vec<(String, Tensor)>, usize)> {
    let mut named: Vec<(String, PathBuf)> = Vec::new();
    let mut skipped = 0usize;
    for input in inputs {
        let input = run::resolve_input(input);
        if input.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
            let loaded = load_song_manifest(&input)
                .with_context(|| format!("loading {}", input.display()))?;
            for issue in &loaded.issues {
                skipped += 1;
                eprintln!("{}: {issue}", input.display());
            }
            let base = input.parent().map(Path::to_path_buf).unwrap_or_default();
            for entry in loaded.value {
                let Some(path) = entry.path else {
                    skipped += 1;
                    eprintln!("{}: no local audio path", entry.song_id);
                    continue;
                };
                let path = if path.is_absolute() { path } else { base.join(path) };
                named.push((entry.song_id, path));
            }
        } else if input.is_dir() {
            let mut wavs: Vec<PathBuf> = fs::read_dir(&input)
                .with_context(|| format!("reading directory {}", input.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| {
                    p.is_file() && p.extension().is_some_and(|e| e.eq_ignore_ascii_case("wav"))
                })
                .collect();
            wavs.sort();
            for path in wavs {
                let id = path
                    .file_stem()
                    .map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned());
                named.push((id, path));
            }
        } else {
            let id = input
                .file_stem()
                .map_or_else(|| input.display().to_string(), |s| s.to_string_lossy().into_owned());
            named.push((id, input));
        }
    }
    let mut out = Vec::with_capacity(named.len());
    for (id, path) in named {
        match patch_of(&path) {
            Ok(t) => out.push((id, t)),
            Err(e) => {
                skipped += 1;
                eprintln!("error: {}: {e:#}", path.display());
            }
        }
    }
    if out.is_empty() {
        bail!("no usable clips among the inputs");
    }
    Ok((out, skipped))
}

fn synth_side(r: &Resolved) -> usize {
    r.side.unwrap_or_else(|| preset_side(&r.preset))
}

fn synth_ids(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("synth-{i:04}")).collect()
}

fn pretrain(r: &Resolved) -> Result<i32> {
    let mut skipped = 0usize;
    let (items, tags): (Vec<Tensor>, Vec<Vec<bool>>) = if r.inputs.is_empty() {
        let (items, tags) = synthetic_tag_data(r.n, synth_side(r), r.seed ^ DATA_STREAM);
        (items, tags)
    } else {
        let tag_path = r
            .tags
            .as_deref()
            .context("--tags is required to pretrain on real audio")?;
        let loaded = load_tag_assignments(&run::resolve_input(tag_path))?;
        for issue in &loaded.issues {
            skipped += 1;
            eprintln!("{}: {issue}", tag_path.display());
        }
        let manifest = TagManifest::new(&loaded.value, r.min_tag_count)?;
        let (patches, s) = load_patches(&r.inputs)?;
        skipped += s;
        let mut items = Vec::new();
        let mut tags = Vec::new();
        for (id, tensor) in patches {
            match manifest.for_song(&id) {
                Some(bits) => {
                    items.push(tensor);
                    tags.push(bits.to_vec());
                }
                None => {
                    skipped += 1;
                    eprintln!("{id}: no tag row, clip dropped");
                }
            }
        }
        if items.is_empty() {
            bail!("no clips with tag rows; nothing to pretrain on");
        }
        println!(
            "pretraining on {} clips, {} tags kept (min count {})",
            items.len(),
            manifest.tags().len(),
            r.min_tag_count
        );
        (items, tags)
    };

    let n_tags = tags[0].len();
    let spec = preset_spec(&r.preset, n_tags)?;
    let mut net = Network::new(spec, r.seed ^ NET_STREAM)?;
    let report = train_tags(&mut net, &items, &tags, &r.train)?;
    fs::write(r.out.join("metrics.csv"), metrics_csv(&report.metrics))?;
    let ckpt = r.out.join("pretrain.ckpt");
    save_checkpoint(&net, &ckpt)?;

    match (report.best_epoch, report.best_val) {
        (Some(e), Some(v)) => {
            println!("best held-out mean tag AUC {v:.3} at epoch {e} -> {}", ckpt.display())
        }
        _ => {
            let last = report.metrics.last().map_or(f64::NAN, |m| m.loss);
            println!("final training loss {last:.4} -> {}", ckpt.display());
        }
    }
    let mut echo = base_echo(r, "pretrain");
    training_echo(r, &mut echo);
    echo.push(("min_tag_count", r.min_tag_count.to_string()));
    run::write_echo(&r.out.join("config.txt"), &echo)?;
    Ok(if skipped > 0 { run::EXIT_PARTIAL } else { 0 })
}

fn require_checkpoint(r: &Resolved, why: &str) -> Result<Network> {
    let path = r
        .checkpoint
        .as_deref()
        .with_context(|| format!("--checkpoint is required: {why}"))?;
    let path = run::resolve_input(path);
    load_checkpoint(&path).with_context(|| format!("loading {}", path.display()))
}

/// Backbone outputs for every item, in order.
fn embed_all(net: &Network, items: &[Tensor]) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::with_capacity(items.len());
    let idx: Vec<usize> = (0..items.len()).collect();
    for chunk in idx.chunks(32) {
        let refs: Vec<&Tensor> = chunk.iter().map(|&i| &items[i]).collect();
        let x = Tensor::stack(&refs)?;
        let e = net.embed(&x)?;
        let dim = e.shape()[1];
        for row in 0..chunk.len() {
            out.push(e.data()[row * dim..(row + 1) * dim].to_vec());
        }
    }
    Ok(out)
}

fn write_embeddings(path: &Path, ids: &[String], emb: &[Vec<f64>]) -> Result<()> {
    let dim = emb.first().map_or(0, Vec::len);
    let mut csv = String::from("id");
    for j in 0..dim {
        write!(csv, ",e{j}").expect("string write");
    }
    csv.push('\n');
    for (id, row) in ids.iter().zip(emb) {
        csv.push_str(&run::csv_field(id));
        for v in row {
            write!(csv, ",{v}").expect("string write");
        }
        csv.push('\n');
    }
    fs::write(path, csv).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Items plus seven-quality targets, synthetic or joined from real files.
fn mid_dataset(r: &Resolved) -> Result<(Vec<String>, Vec<Tensor>, Vec<[f64; 7]>, usize)> {
    if r.inputs.is_empty() {
        let (items, targets) = synthetic_midlevel_data(r.n, synth_side(r), r.seed ^ DATA_STREAM);
        return Ok((synth_ids(items.len()), items, targets, 0));
    }
    let targets_path = r
        .targets
        .as_deref()
        .context("--targets is required with real audio: an averaged quality table")?;
    let targets_path = run::resolve_input(targets_path);
    let loaded = load_annotations(&targets_path)
        .with_context(|| format!("loading {}", targets_path.display()))?;
    let mut skipped = loaded.issues.len();
    for issue in &loaded.issues {
        eprintln!("{}: {issue}", targets_path.display());
    }
    let Annotations::Averaged(vectors) = loaded.value else {
        bail!("{} holds raw ratings; targets must be per-song averages", targets_path.display());
    };
    let by_id: std::collections::BTreeMap<&str, [f64; 7]> = vectors
        .iter()
        .filter_map(|v| v.as_array().map(|a| (v.song_id.as_str(), a)))
        .collect();
    let (patches, s) = load_patches(&r.inputs)?;
    skipped += s;
    let mut ids = Vec::new();
    let mut items = Vec::new();
    let mut targets = Vec::new();
    for (id, tensor) in patches {
        match by_id.get(id.as_str()) {
            Some(t) => {
                ids.push(id);
                items.push(tensor);
                targets.push(*t);
            }
            None => {
                skipped += 1;
                eprintln!("{id}: no complete quality row, clip dropped");
            }
        }
    }
    if items.is_empty() {
        bail!("no clips with quality targets; nothing to train on");
    }
    Ok((ids, items, targets, skipped))
}

fn embed(r: &Resolved) -> Result<i32> {
    let net = require_checkpoint(r, "embed pushes clips through a trained backbone")?;
    let (ids, items, skipped) = if r.inputs.is_empty() {
        let (items, _) = synthetic_midlevel_data(r.n, synth_side(r), r.seed ^ DATA_STREAM);
        (synth_ids(items.len()), items, 0)
    } else {
        let (patches, skipped) = load_patches(&r.inputs)?;
        let (ids, items) = patches.into_iter().unzip();
        (ids, items, skipped)
    };
    let emb = embed_all(&net, &items)?;
    let path = r.out.join("embeddings.csv");
    write_embeddings(&path, &ids, &emb)?;
    println!(
        "embedded {} clips into {} dimensions -> {}",
        ids.len(),
        emb.first().map_or(0, Vec::len),
        path.display()
    );
    run::write_echo(&r.out.join("config.txt"), &base_echo(r, "embed"))?;
    Ok(if skipped > 0 { run::EXIT_PARTIAL } else { 0 })
}

fn transfer(r: &Resolved) -> Result<i32> {
    let net = require_checkpoint(r, "transfer starts from a pretrained backbone")?;
    let (ids, items, targets, skipped) = mid_dataset(r)?;
    let emb = embed_all(&net, &items)?;
    write_embeddings(&r.out.join("embeddings.csv"), &ids, &emb)?;

    let dim = emb.first().map_or(0, Vec::len);
    let col_names = (0..dim).map(|j| format!("e{j}")).collect();
    let x = DesignMatrix::from_rows(ids.clone(), col_names, &emb)?;
    let n_comp = 30.min(dim).min(x.n_rows());
    let pca = pca_fit(&x, n_comp)?;
    let z = pca_apply(&pca, &x)?;
    println!(
        "PCA kept {n_comp} components ({:.0}% of variance)",
        pca.explained_fraction() * 100.0
    );

    let k = r.k.min(ids.len());
    let folds = kfold(&ids, k, r.seed)?;
    let mut csv = String::from("quality,n_songs,rho\n");
    let mut table = String::new();
    writeln!(table, "kernel transfer ({k}-fold, seed {})", r.seed).expect("string write");
    for (q, name) in MidLevelName::ALL.iter().enumerate() {
        let y: Vec<f64> = targets.iter().map(|t| t[q]).collect();
        let tuned = tune_kernel_rbf(&z, &y, 0.2, r.seed)?;
        let mut oof = vec![0.0; ids.len()];
        for fold in 0..folds.n_folds() {
            let (mut train_pos, mut test_pos) = (Vec::new(), Vec::new());
            for (pos, id) in ids.iter().enumerate() {
                if folds.fold_of(id) == Some(fold) {
                    test_pos.push(pos);
                } else {
                    train_pos.push(pos);
                }
            }
            let ztr = z.select_rows(&train_pos);
            let ytr: Vec<f64> = train_pos.iter().map(|&p| y[p]).collect();
            let model = fit_kernel_rbf(&ztr, &ytr, tuned.lambda, tuned.gamma)?;
            let pred = predict_kernel(&model, &z.select_rows(&test_pos))?;
            for (&pos, p) in test_pos.iter().zip(pred) {
                oof[pos] = p;
            }
        }
        let rho = pearson(&oof, &y)?;
        writeln!(csv, "{},{},{rho}", name.as_str(), ids.len()).expect("string write");
        writeln!(table, "{:<22}{rho:>7.3}", name.as_str()).expect("string write");
    }
    fs::write(r.out.join("transfer.csv"), csv)?;
    print!("{table}");

    let mut echo = base_echo(r, "transfer");
    echo.push(("k", k.to_string()));
    echo.push(("pca_components", n_comp.to_string()));
    run::write_echo(&r.out.join("config.txt"), &echo)?;
    Ok(if skipped > 0 { run::EXIT_PARTIAL } else { 0 })
}

fn finetune_stage(r: &Resolved) -> Result<i32> {
    let mut net = require_checkpoint(r, "finetune continues from a pretrained network")?;
    let (_, items, targets, skipped) = mid_dataset(r)?;
    let report = midlevel_core::finetune(&mut net, &items, &targets, &r.train)?;

    let mut csv = String::from("stage,epoch,loss,val_mse\n");
    for (stage, metrics) in [(1, &report.stage1.metrics), (2, &report.stage2.metrics)] {
        for m in metrics {
            let val = m.val_metric.map_or(String::new(), |v| v.to_string());
            writeln!(csv, "{stage},{},{},{val}", m.epoch, m.loss).expect("string write");
        }
    }
    fs::write(r.out.join("metrics.csv"), csv)?;
    let ckpt = r.out.join("finetune.ckpt");
    save_checkpoint(&net, &ckpt)?;

    let show = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.4}"));
    println!(
        "head-only val MSE {} -> full-network val MSE {} -> {}",
        show(report.stage1_best_val),
        show(report.stage2.best_val),
        ckpt.display()
    );
    let mut echo = base_echo(r, "finetune");
    training_echo(r, &mut echo);
    run::write_echo(&r.out.join("config.txt"), &echo)?;
    Ok(if skipped > 0 { run::EXIT_PARTIAL } else { 0 })
}
