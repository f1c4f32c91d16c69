//! End-to-end runs of the `synthts` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use synthts::bench::{self, BenchOptions};
use synthts::dataset::read_instance;
use synthts::exchange::{write_predictions, PredictionFormat};

const SMALL: &str = "[data]\nsamples = 2000\nvariates = 4\nseed = 3\n[noise]\nkind = \"white\"\n";

const GRID: &str = r#"
[data]
samples = 2000
variates = 4

[grid]
seasonal_kinds = ["sine", "sawtooth", "square"]
bands = [[1, 40], [40, 80], [80, 120]]
noise_kinds = ["white"]
snrs = [10.0]
data_seeds = 2
train_seeds = 3
"#;

fn synthts(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_synthts"));
    cmd.args(args).env_remove("SYNTHTS_OUT").env_remove("SYNTHTS_SEED");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("spawn synthts")
}

fn ok_json(out: &Output) -> Vec<Value> {
    assert!(
        out.status.success(),
        "exit {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .map(|l| serde_json::from_str(l).expect("stdout line is JSON"))
        .collect()
}

fn err_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(text.lines().last().expect("stderr line")).expect("stderr is JSON")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn generate_twice_gives_identical_checksums() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.toml", SMALL);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let ra = ok_json(&synthts(&["generate", "--config", &cfg, "--out", s(&a), "--format", "csv"], &[]));
    let rb = ok_json(&synthts(&["generate", "--config", &cfg, "--out", s(&b), "--workers", "3"], &[]));
    assert_eq!(ra[0]["mixed_sha256"], rb[0]["mixed_sha256"]);
    assert_eq!(ra[0]["clean_sha256"], rb[0]["clean_sha256"]);
    assert_eq!(fs::read(a.join("mixed.f64")).unwrap(), fs::read(b.join("mixed.f64")).unwrap());
    assert!(a.join("instance.csv").exists() && !b.join("instance.csv").exists());
    ok_json(&synthts(&["validate", s(&a)], &[]));
}

#[test]
fn environment_overrides_seed_and_out() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.toml", SMALL);
    let out = tmp.path().join("env");
    let r = ok_json(&synthts(
        &["generate", "--config", &cfg],
        &[("SYNTHTS_OUT", s(&out)), ("SYNTHTS_SEED", "11")],
    ));
    let inst = read_instance(&out).unwrap();
    assert_eq!(inst.config().data_seed, 11);
    assert_eq!(r[0]["mixed_sha256"], inst.manifest.checksums.mixed_sha256.as_str());

    let flag = tmp.path().join("flag");
    ok_json(&synthts(
        &["generate", "--config", &cfg, "--out", s(&flag), "--seed", "12"],
        &[("SYNTHTS_SEED", "11")],
    ));
    assert_eq!(read_instance(&flag).unwrap().config().data_seed, 12);
}

#[test]
fn invalid_config_exits_2_naming_field() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg =
        write(tmp.path(), "c.toml", "[data]\nsamples = 2000\n[components]\nfrequency_band = [900, 1100]\n");
    let out = synthts(&["generate", "--config", &cfg, "--out", s(&tmp.path().join("x"))], &[]);
    assert_eq!(out.status.code(), Some(2));
    let e = err_json(&out);
    assert_eq!(e["field"], "frequency_band");
    assert!(!tmp.path().join("x").join("manifest.json").exists());

    let cfg = write(tmp.path(), "d.toml", "[noise]\nkind = \"none\"\n[snr]\nglobal = 5.0\n");
    let out = synthts(&["validate", "--config", &cfg], &[]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(err_json(&out)["field"], "snr");
}

#[test]
fn grid_generates_resumes_and_summarizes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "g.toml", GRID);
    let root = tmp.path().join("grid");
    let r = ok_json(&synthts(&["grid", "--grid", &cfg, "--out", s(&root), "--workers", "4"], &[]));
    assert_eq!(r[0]["cells"], 18);
    assert_eq!(r[0]["generated"], 18);
    assert_eq!(r[0]["runs"], 54);
    let dirs: Vec<_> = fs::read_dir(&root)
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.path().join("manifest.json").exists())
        .collect();
    assert_eq!(dirs.len(), 18);

    // remove two cells and corrupt a third; only those are regenerated
    let mut names: Vec<_> = dirs.iter().map(|d| d.path()).collect();
    names.sort();
    let before = fs::read(names[2].join("mixed.f64")).unwrap();
    fs::remove_dir_all(&names[0]).unwrap();
    fs::remove_file(names[1].join("manifest.json")).unwrap();
    let mut bytes = before.clone();
    bytes[0] ^= 1;
    fs::write(names[2].join("mixed.f64"), bytes).unwrap();

    let r = ok_json(&synthts(&["grid", "--config", &cfg, "--out", s(&root)], &[]));
    assert_eq!(r[0]["generated"], 3);
    assert_eq!(r[0]["skipped"], 15);
    assert_eq!(fs::read(names[2].join("mixed.f64")).unwrap(), before);

    let summary = fs::read_to_string(root.join("grid_summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 19);
    for n in &names {
        let key = n.file_name().unwrap().to_str().unwrap();
        assert!(summary.contains(key), "{key} missing from summary");
    }
}

#[test]
fn bench_noise_free_scores_equal_targets() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "c.toml",
        "[data]\nvariates = 4\nseed = 1\n[components]\nfrequency_band = [1500, 1625]\n[snr]\nglobal = inf\n",
    );
    let inst = tmp.path().join("i");
    ok_json(&synthts(&["generate", "--config", &cfg, "--out", s(&inst)], &[]));
    let r = ok_json(&synthts(&["bench", s(&inst), "--stride", "4"], &[]));
    let (mc, mn) = (r[0]["mse_clean"].as_f64().unwrap(), r[0]["mse_noisy"].as_f64().unwrap());
    assert_eq!(mc, mn);
    assert!(mc < 0.05, "mse_clean {mc}");
    assert!(inst.join("reports/linear_s0.json").exists());
    assert!(inst.join("reports/linear_s0.model").exists());
    assert!(inst.join("bench.csv").exists());
}

#[test]
fn eval_scores_exchange_files_and_rejects_bad_ones() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.toml", SMALL);
    let dir = tmp.path().join("i");
    ok_json(&synthts(&["generate", "--config", &cfg, "--out", s(&dir)], &[]));
    let inst = read_instance(&dir).unwrap();
    let opts = BenchOptions { lookback: 48, horizon: 24, stride: 8, ..Default::default() };
    let pairs = bench::test_windows(&inst, &opts).unwrap();
    let perfect = bench::target_tensor(&inst.clean, &pairs, 24);
    let bin = tmp.path().join("p.bin");
    let csv = tmp.path().join("p.csv");
    write_predictions(&perfect, &bin, PredictionFormat::Binary).unwrap();
    write_predictions(&perfect, &csv, PredictionFormat::Csv).unwrap();

    let win = ["--lookback", "48", "--horizon", "24", "--stride", "8"];
    for (p, seed) in [(&bin, "0"), (&csv, "1")] {
        let mut args = vec!["eval", "--predictions", s(p), "--instance", s(&dir), "--train-seed", seed];
        args.extend(win);
        let r = ok_json(&synthts(&args, &[]));
        assert_eq!(r[0]["mse_clean"], 0.0);
        assert!(r[0]["mse_noisy"].as_f64().unwrap() > 0.0);
        let profile = Path::new(r[0]["csv"].as_str().unwrap()).with_extension("profile.csv");
        assert_eq!(fs::read_to_string(profile).unwrap().lines().count(), 25);
    }

    let bad = tmp.path().join("bad.csv");
    fs::write(&bad, "window,variate,h0\n0,0,zzz\n").unwrap();
    let mut args = vec!["eval", "--predictions", s(&bad), "--instance", s(&dir)];
    args.extend(win);
    let out = synthts(&args, &[]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(err_json(&out)["error"], "malformed");

    // right format, wrong window count
    let mut args =
        vec!["eval", "--predictions", s(&bin), "--instance", s(&dir), "--lookback", "48", "--horizon", "24"];
    args.push("--stride");
    args.push("1");
    let out = synthts(&args, &[]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(err_json(&out)["error"], "shape");

    let r = ok_json(&synthts(&["report", s(&dir)], &[]));
    assert_eq!(r[0]["reports"], 2);
    let heat = fs::read_to_string(dir.join("heatmap.csv")).unwrap();
    let mut lines = heat.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = |name: &str| row[header.iter().position(|h| *h == name).unwrap()];
    assert_eq!(col("runs"), "2");
    assert_eq!(col("mse_clean_std").parse::<f64>().unwrap(), 0.0);
    assert!(dir.join("radar.csv").exists() && dir.join("spectral_overlay.csv").exists());
}

#[test]
fn report_warns_about_instances_without_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.toml", SMALL);
    let root = tmp.path().join("root");
    for (name, seed) in [("a", "1"), ("b", "2")] {
        ok_json(&synthts(&["generate", "--config", &cfg, "--out", s(&root.join(name)), "--seed", seed], &[]));
    }
    ok_json(&synthts(
        &["bench", s(&root.join("a")), "--lookback", "48", "--horizon", "24", "--stride", "8"],
        &[],
    ));
    let out = synthts(&["report", s(&root), "--out", s(&tmp.path().join("tables"))], &[]);
    let r = ok_json(&out);
    assert_eq!(r[0]["missing"], 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing_report"));
    assert!(tmp.path().join("tables/heatmap.csv").exists());
}
