//! End-to-end tests of the `midlevel` binary: exit codes, file outputs,
//! config merging, and determinism of seeded runs.

mod common;

use common::*;
use std::fs;
use std::path::Path;

fn write(path: &Path, text: &str) {
    fs::write(path, text).expect("fixture write");
}

fn lines_of(path: &Path) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap_or_else(|e| panic!("read {}: {e}", path.display()))
        .lines()
        .map(str::to_string)
        .collect()
}

#[test]
fn extract_reports_partial_failures_and_sorts_rows() {
    let dir = tempfile::tempdir().unwrap();
    tone_wav(&dir.path().join("b.wav"), &[440.0], 2.5);
    tone_wav(&dir.path().join("a.wav"), &[300.0, 450.0], 2.5);
    tone_wav(&dir.path().join("c.wav"), &[523.25], 2.5);
    write(&dir.path().join("broken.wav"), "not audio at all");
    let out = dir.path().join("feats.csv");
    let dir_arg = dir.path().to_str().unwrap();
    let out_arg = out.to_str().unwrap();

    let run = midlevel(&["extract", "--input", dir_arg, "--out", out_arg]);
    assert_eq!(run.code, 1, "one bad file means a partial run: {}", run.stderr);
    assert!(run.stderr.contains("broken.wav"), "stderr names the bad file: {}", run.stderr);
    assert!(run.stdout.contains("extracted 3 of 4"), "stdout: {}", run.stdout);

    let rows = lines_of(&out);
    assert_eq!(rows.len(), 4, "header plus three rows");
    let ids: Vec<&str> = rows[1..].iter().map(|r| r.split(',').next().unwrap()).collect();
    assert_eq!(ids, ["a", "b", "c"], "rows sorted by input path");

    let echo = lines_of(&dir.path().join("feats.csv.config.txt"));
    assert!(echo.iter().any(|l| l.starts_with("seed=")), "echo pins the seed: {echo:?}");
    assert!(echo.iter().any(|l| l == "command=extract"), "echo names the command: {echo:?}");

    fs::remove_file(dir.path().join("broken.wav")).unwrap();
    let clean = midlevel(&["extract", "--input", dir_arg, "--out", out_arg]);
    assert_eq!(clean.code, 0, "all files good: {}", clean.stderr);
}

#[test]
fn relative_inputs_resolve_against_the_data_dir() {
    let dir = tempfile::tempdir().unwrap();
    tone_wav(&dir.path().join("clip.wav"), &[440.0], 2.5);
    let out = dir.path().join("feats.csv");
    let run = midlevel_env(
        &["extract", "--input", "clip.wav", "--out", out.to_str().unwrap()],
        &[("MIDLEVEL_DATA_DIR", dir.path().to_str().unwrap())],
    );
    assert_eq!(run.code, 0, "stderr: {}", run.stderr);
    assert_eq!(lines_of(&out).len(), 2, "header plus the one resolved clip");
}

#[test]
fn fatal_configuration_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    let out_arg = out.to_str().unwrap();

    let no_inputs = midlevel(&["extract", "--out", out_arg]);
    assert_eq!(no_inputs.code, 2);
    assert!(no_inputs.stderr.contains("no inputs"), "stderr: {}", no_inputs.stderr);

    let conf = dir.path().join("bad.conf");
    write(&conf, "sede=3\n");
    tone_wav(&dir.path().join("t.wav"), &[440.0], 2.5);
    let bad_key = midlevel(&[
        "extract",
        "--input",
        dir.path().join("t.wav").to_str().unwrap(),
        "--out",
        out_arg,
        "--config",
        conf.to_str().unwrap(),
    ]);
    assert_eq!(bad_key.code, 2);
    assert!(bad_key.stderr.contains("unknown config key"), "stderr: {}", bad_key.stderr);

    let no_ckpt = midlevel(&["train", "--stage", "embed", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(no_ckpt.code, 2);
    assert!(no_ckpt.stderr.contains("checkpoint"), "stderr: {}", no_ckpt.stderr);

    let (quality, _) = separable_clusters_csv();
    let qpath = dir.path().join("q.csv");
    let lpath = dir.path().join("l.csv");
    write(&qpath, &quality);
    write(&lpath, "song_id,cluster\nc1s00,7\n");
    let bad_label = midlevel(&[
        "clusters",
        "--input",
        qpath.to_str().unwrap(),
        "--labels",
        lpath.to_str().unwrap(),
        "--out",
        out_arg,
    ]);
    assert_eq!(bad_label.code, 2);
    assert!(bad_label.stderr.contains("clusters run 1-5"), "stderr: {}", bad_label.stderr);

    assert_eq!(midlevel(&["frobnicate"]).code, 2, "unknown subcommand");
}

#[test]
fn config_file_values_yield_to_flags() {
    let dir = tempfile::tempdir().unwrap();
    let rows = averaged_rows();
    let qpath = dir.path().join("avg.csv");
    let tpath = dir.path().join("targets.csv");
    let conf = dir.path().join("run.conf");
    let out = dir.path().join("emotion.csv");
    write(&qpath, &averaged_csv(&rows));
    write(&tpath, &emotion_targets_csv(&rows));
    write(&conf, "# fixture config\nk=4\nseed=9\n");

    let run = midlevel(&[
        "emotion",
        "--input",
        qpath.to_str().unwrap(),
        "--targets",
        tpath.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--config",
        conf.to_str().unwrap(),
        "--k",
        "8",
    ]);
    assert_eq!(run.code, 0, "stderr: {}", run.stderr);
    let echo = lines_of(&dir.path().join("emotion.csv.config.txt"));
    assert!(echo.contains(&"k=8".to_string()), "flag beats file: {echo:?}");
    assert!(echo.contains(&"seed=9".to_string()), "file fills the gap: {echo:?}");
}

#[test]
fn seeded_reruns_write_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let rows = averaged_rows();
    let qpath = dir.path().join("avg.csv");
    let tpath = dir.path().join("targets.csv");
    let out = dir.path().join("emotion.csv");
    write(&qpath, &averaged_csv(&rows));
    write(&tpath, &emotion_targets_csv(&rows));
    let args = [
        "emotion",
        "--input",
        qpath.to_str().unwrap(),
        "--targets",
        tpath.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--seed",
        "4",
    ];
    assert_eq!(midlevel(&args).code, 0);
    let first = fs::read(&out).unwrap();
    let first_echo = fs::read(dir.path().join("emotion.csv.config.txt")).unwrap();
    assert_eq!(midlevel(&args).code, 0);
    assert_eq!(fs::read(&out).unwrap(), first, "result bytes");
    assert_eq!(
        fs::read(dir.path().join("emotion.csv.config.txt")).unwrap(),
        first_echo,
        "echo bytes"
    );

    // Training writes a binary checkpoint; those bytes must replay too.
    let t1 = dir.path().join("t1");
    let t2 = dir.path().join("t2");
    for tdir in [&t1, &t2] {
        let run = midlevel(&[
            "train",
            "--stage",
            "pretrain",
            "--preset",
            "micro",
            "--n",
            "10",
            "--epochs",
            "2",
            "--batch-size",
            "4",
            "--seed",
            "5",
            "--out",
            tdir.to_str().unwrap(),
        ]);
        assert_eq!(run.code, 0, "stderr: {}", run.stderr);
    }
    assert_eq!(
        fs::read(t1.join("pretrain.ckpt")).unwrap(),
        fs::read(t2.join("pretrain.ckpt")).unwrap(),
        "checkpoint bytes"
    );
    assert_eq!(
        fs::read(t1.join("metrics.csv")).unwrap(),
        fs::read(t2.join("metrics.csv")).unwrap(),
        "metric bytes"
    );
}

#[test]
fn reliability_is_exact_for_perfect_agreement_and_flags_the_deviant() {
    let dir = tempfile::tempdir().unwrap();
    let raw = dir.path().join("raw.csv");
    let out = dir.path().join("alpha.csv");
    write(&raw, &perfect_raw_csv(4, 8));
    let run = midlevel(&[
        "reliability",
        "--input",
        raw.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(run.code, 0, "stderr: {}", run.stderr);
    let rows = lines_of(&out);
    assert_eq!(rows[0], "feature,alpha,n_raters,n_songs");
    assert_eq!(rows.len(), 8, "one row per quality");
    for row in &rows[1..] {
        let alpha = row.split(',').nth(1).unwrap();
        assert_eq!(alpha, "1", "perfect agreement must print exactly 1: {row}");
    }

    let (deviant, golden) = deviant_raw_csv(4, 8);
    let raw2 = dir.path().join("raw2.csv");
    let gold = dir.path().join("golden.csv");
    let out2 = dir.path().join("alpha2.csv");
    write(&raw2, &deviant);
    write(&gold, &golden);
    let screened = midlevel(&[
        "reliability",
        "--input",
        raw2.to_str().unwrap(),
        "--golden",
        gold.to_str().unwrap(),
        "--out",
        out2.to_str().unwrap(),
    ]);
    assert_eq!(screened.code, 0, "stderr: {}", screened.stderr);
    let workers = lines_of(&dir.path().join("alpha2.workers.csv"));
    assert_eq!(workers[0], "worker_id,n_ratings,mean_abs_dev_from_song_mean,dev_std,banned");
    for row in &workers[1..] {
        let mut fields = row.split(',');
        let id = fields.next().unwrap();
        let banned = row.rsplit(',').next().unwrap();
        let expected = if id == "w-off" { "true" } else { "false" };
        assert_eq!(banned, expected, "screening verdict for {id}: {row}");
    }
}

#[test]
fn train_stages_chain_on_synthetic_data() {
    let dir = tempfile::tempdir().unwrap();
    let pre = dir.path().join("pre");
    let small = |stage: &str, out: &Path, extra: &[&str]| {
        let mut args = vec![
            "train",
            "--stage",
            stage,
            "--preset",
            "micro",
            "--n",
            "12",
            "--epochs",
            "3",
            "--batch-size",
            "4",
            "--seed",
            "7",
            "--out",
            out.to_str().unwrap(),
        ];
        args.extend_from_slice(extra);
        midlevel(&args)
    };

    let p = small("pretrain", &pre, &[]);
    assert_eq!(p.code, 0, "stderr: {}", p.stderr);
    assert!(pre.join("pretrain.ckpt").exists());
    assert!(pre.join("metrics.csv").exists());
    assert!(pre.join("config.txt").exists());

    let ckpt = pre.join("pretrain.ckpt");
    let ckpt_arg = ckpt.to_str().unwrap();

    let fin = dir.path().join("fin");
    let f = small("finetune", &fin, &["--checkpoint", ckpt_arg]);
    assert_eq!(f.code, 0, "stderr: {}", f.stderr);
    assert!(fin.join("finetune.ckpt").exists());
    let metrics = lines_of(&fin.join("metrics.csv"));
    assert_eq!(metrics[0], "stage,epoch,loss,val_mse");
    assert!(metrics.iter().any(|l| l.starts_with("1,")), "stage-one rows");
    assert!(metrics.iter().any(|l| l.starts_with("2,")), "stage-two rows");

    let emb = dir.path().join("emb");
    let e = small("embed", &emb, &["--checkpoint", ckpt_arg]);
    assert_eq!(e.code, 0, "stderr: {}", e.stderr);
    let embeddings = lines_of(&emb.join("embeddings.csv"));
    assert_eq!(embeddings.len(), 13, "header plus one row per clip");
    assert!(embeddings[0].starts_with("id,e0,"));

    let tra = dir.path().join("tra");
    let t = small("transfer", &tra, &["--checkpoint", ckpt_arg, "--k", "3"]);
    assert_eq!(t.code, 0, "stderr: {}", t.stderr);
    let transfer = lines_of(&tra.join("transfer.csv"));
    assert_eq!(transfer[0], "quality,n_songs,rho");
    assert_eq!(transfer.len(), 8, "one row per quality");

    let gc = dir.path().join("gc");
    let g = small("gradcheck", &gc, &["--samples", "10"]);
    assert_eq!(g.code, 0, "gradcheck verdict: {} {}", g.stdout, g.stderr);
    let report = fs::read_to_string(gc.join("gradcheck.txt")).unwrap();
    assert!(report.contains("max_relative_error="), "report: {report}");
}

#[test]
fn clusters_separate_a_separable_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let (quality, labels) = separable_clusters_csv();
    let qpath = dir.path().join("q.csv");
    let lpath = dir.path().join("l.csv");
    let out = dir.path().join("clusters.csv");
    write(&qpath, &quality);
    write(&lpath, &labels);
    let run = midlevel(&[
        "clusters",
        "--input",
        qpath.to_str().unwrap(),
        "--labels",
        lpath.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(run.code, 0, "stderr: {}", run.stderr);
    assert!(run.stdout.contains("weighted F1"), "stdout: {}", run.stdout);

    let rows = lines_of(&out);
    assert_eq!(rows[0], "cluster,n_songs,auc,f1");
    let mut weighted = None;
    for row in &rows[1..] {
        let fields: Vec<&str> = row.split(',').collect();
        if fields[0] == "all" {
            weighted = Some(fields[3].parse::<f64>().unwrap());
            continue;
        }
        let auc: f64 = fields[2].parse().unwrap();
        assert!(auc > 0.95, "cluster {} out-of-fold AUC {auc}", fields[0]);
    }
    let weighted = weighted.expect("summary row");
    assert!(weighted > 0.8, "weighted F1 {weighted}");
}
