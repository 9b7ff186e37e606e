use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use modewise::cli::RunManifest;
use modewise::ingest::{format_plt, GpsPoint, ModeLabel};
use modewise::pipeline::read_dataset_file;
use modewise::synth::{generate, SynthConfig};
use serde_json::Value;
use tempfile::TempDir;

/// Run the binary in `dir` with whitespace-separated arguments.
fn modewise(dir: &Path, args: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_modewise"))
        .args(args.split_whitespace())
        .current_dir(dir)
        .env_remove("MODEWISE_LOG")
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &str) -> String {
    let out = modewise(dir, args);
    assert!(
        out.status.success(),
        "{args} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(dir: &Path, args: &str) -> i32 {
    modewise(dir, args).status.code().unwrap()
}

fn json_file(path: PathBuf) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// synth -> preprocess in `dir`, returning the dataset path.
fn prepare(dir: &Path, per_mode: usize, points: usize, seed: u64) -> PathBuf {
    ok(
        dir,
        &format!("synth --per-mode {per_mode} --points {points} --seed {seed} --out trips.jsonl"),
    );
    ok(dir, "preprocess --in trips.jsonl --out data.tmsg");
    dir.join("data.tmsg")
}

#[test]
fn split_of_ten_samples_is_eight_two() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    let data = prepare(d, 2, 200, 1);
    assert_eq!(read_dataset_file(&data).unwrap().len(), 10);
    let stdout = ok(
        d,
        "split --in data.tmsg --frac 0.8 --seed 4 --out-train a.tmsg --out-test b.tmsg",
    );
    assert_eq!(stdout.trim(), "train 8 test 2");
    assert_eq!(read_dataset_file(&d.join("a.tmsg")).unwrap().len(), 8);
    assert_eq!(read_dataset_file(&d.join("b.tmsg")).unwrap().len(), 2);
    let m = RunManifest::read(&d.join("a.tmsg.manifest.json")).unwrap();
    assert_eq!(m.seeds["seed"], 4);
    assert_eq!(m.inputs.len(), 1);
    assert_eq!(m.inputs[0].sha256.as_deref().map(str::len), Some(64));
}

#[test]
fn spec_show_lists_the_layers() {
    let tmp = TempDir::new().unwrap();
    let v: Value = serde_json::from_str(&ok(tmp.path(), "spec show G")).unwrap();
    assert_eq!(v["name"], "G");
    assert_eq!(v["hidden_widths"], serde_json::json!([800]));
    let layers = v["layers"].as_array().unwrap();
    let kinds: Vec<&str> = layers.iter().map(|l| l["type"].as_str().unwrap()).collect();
    assert_eq!(kinds.iter().filter(|k| **k == "conv").count(), 6);
    assert_eq!(kinds.iter().filter(|k| **k == "pool").count(), 3);
    assert_eq!(kinds.iter().filter(|k| **k == "dense").count(), 2);
    assert_eq!(kinds.last(), Some(&"dense"));
    assert_eq!(layers.last().unwrap()["units"], 5);
}

#[test]
fn exit_codes() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    assert_eq!(code(d, "train --bogus"), 1);
    assert_eq!(code(d, "spec show Q"), 1);
    assert_eq!(code(d, "split --in missing.tmsg --out-train a --out-test b"), 2);
    fs::write(d.join("junk.tmsg"), b"NOPE0000000000000000").unwrap();
    assert_eq!(code(d, "split --in junk.tmsg --out-train a --out-test b"), 2);
    fs::write(d.join("junk.tmmd"), b"TMSG\x01\x00\x00\x00").unwrap();
    assert_eq!(code(d, "evaluate --model junk.tmmd --test junk.tmsg"), 2);
}

#[test]
fn identical_runs_give_identical_files() {
    let runs: Vec<TempDir> = (0..2).map(|_| TempDir::new().unwrap()).collect();
    for (tmp, jobs) in runs.iter().zip([1, 2]) {
        let d = tmp.path();
        ok(
            d,
            &format!("--jobs {jobs} synth --per-mode 3 --points 250 --seed 9 --noise --out trips.jsonl"),
        );
        ok(d, &format!("--jobs {jobs} preprocess --in trips.jsonl --out data.tmsg"));
        ok(
            d,
            &format!(
                "--jobs {jobs} ensemble-train --train data.tmsg --n 2 --config C --filters 4,4,4,4 --epochs 2 \
                 --batch-size 8 --early-stop-on none --seed 5 --out ens --report ens.json"
            ),
        );
    }
    for f in [
        "trips.jsonl",
        "data.tmsg",
        "data.tmsg.hcf",
        "ens/member_00.tmmd",
        "ens/member_01.tmmd",
    ] {
        let a = fs::read(runs[0].path().join(f)).unwrap();
        let b = fs::read(runs[1].path().join(f)).unwrap();
        assert!(a == b, "{f} differs");
    }
    let m = RunManifest::read(&runs[0].path().join("ens.manifest.json")).unwrap();
    let n = RunManifest::read(&runs[1].path().join("ens.manifest.json")).unwrap();
    assert_eq!(m.config_hash, n.config_hash);
    assert_eq!(m.inputs, n.inputs);
    assert_eq!(m.seeds.len(), 3);
}

#[test]
fn trained_model_labels_a_walk_track() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    prepare(d, 30, 400, 2);
    ok(
        d,
        "split --in data.tmsg --frac 0.8 --seed 2 --out-train a.tmsg --out-test b.tmsg",
    );
    ok(
        d,
        "train --train a.tmsg --monitor b.tmsg --early-stop-on test --config G --filters 8,16,32,64 \
         --epochs 8 --batch-size 8 --seed 1 --out m.tmmd --report run.json",
    );
    ok(d, "evaluate --model m.tmmd --test b.tmsg --report eval.json");
    assert!(json_file(d.join("eval.json"))["accuracy"].as_f64().unwrap() > 0.6);

    let walk = generate(&SynthConfig::new(1, 200, 77))
        .tracks
        .into_iter()
        .find(|t| t.trip.points[0].mode == ModeLabel::Walk)
        .unwrap();
    let points: Vec<GpsPoint> = walk.trip.points.iter().map(|p| p.point).collect();
    fs::write(d.join("walk.plt"), format_plt(&points)).unwrap();
    let v: Value = serde_json::from_str(&ok(d, "predict --model m.tmmd --plt walk.plt")).unwrap();
    let chunks = v["chunks"].as_array().unwrap();
    assert_eq!(chunks.len(), 1);
    assert_eq!(chunks[0]["points"], 200);
    assert_eq!(chunks[0]["label"], 0);
    assert_eq!(chunks[0]["mode"], "Walk");
    let p: Vec<f64> = chunks[0]["probabilities"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect();
    assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    assert!(p[1..].iter().all(|&q| q < p[0]));
}

#[test]
fn baseline_and_ensemble_evaluation_write_reports() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    prepare(d, 6, 200, 3);
    ok(d, "split --in data.tmsg --seed 1 --out-train a.tmsg --out-test b.tmsg");
    ok(
        d,
        "baseline --algo dt --train a.tmsg --test b.tmsg --search --report dt.json",
    );
    assert_eq!(json_file(d.join("dt.json"))["search"].as_array().unwrap().len(), 40);
    ok(
        d,
        "ensemble-train --train a.tmsg --n 3 --config A --filters 4,4,4,4 --epochs 1 --early-stop-on none --out ens",
    );
    assert!(ok(d, "evaluate --model ens --test b.tmsg").contains("accuracy"));
    // the test-set monitor needs --monitor
    assert_eq!(code(d, "train --train a.tmsg --early-stop-on test --out x.tmmd"), 1);
}
