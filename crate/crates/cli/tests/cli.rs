use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sotdd"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn sotdd")
}

fn json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "status {:?}\nstderr: {}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("report is JSON")
}

/// Deterministic labeled CSV: `n` rows, `d` features, labels cycling over `classes`.
fn write_csv(dir: &Path, name: &str, n: usize, d: usize, classes: usize, shift: f64) -> PathBuf {
    let mut text = String::new();
    let mut state = 0x2545_f491_4f6c_dd1du64 ^ (shift.to_bits());
    let mut next = || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    for i in 0..n {
        let label = i % classes;
        for _ in 0..d {
            text.push_str(&format!("{},", 2.0 * next() - 1.0 + shift + label as f64));
        }
        text.push_str(&format!("{label}\n"));
    }
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn distance_to_itself_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let a = write_csv(dir.path(), "a.csv", 40, 3, 3, 0.0);
    let report = json(&run(&[
        "distance",
        a.to_str().unwrap(),
        a.to_str().unwrap(),
        "--L",
        "100",
        "--seed",
        "1",
    ]));
    assert_eq!(report["value"].as_f64(), Some(0.0));
    assert_eq!(report["L"].as_u64(), Some(100));
    assert_eq!(report["command"], "distance");
    assert_eq!(report["inputs"].as_array().unwrap().len(), 2);
}

#[test]
fn project_then_merge_matches_distance() {
    let dir = tempfile::tempdir().unwrap();
    let a = write_csv(dir.path(), "a.csv", 50, 4, 3, 0.0);
    let b = write_csv(dir.path(), "b.csv", 35, 4, 2, 0.7);
    let flags = ["--L", "80", "--seed", "9", "--k", "3", "--p", "2"];
    let sa = dir.path().join("a.skch");
    let sb = dir.path().join("b.skch");

    let mut args = vec!["distance", a.to_str().unwrap(), b.to_str().unwrap()];
    args.extend(flags);
    let direct = json(&run(&args));

    for (input, out) in [(&a, &sa), (&b, &sb)] {
        let mut args = vec!["project", input.to_str().unwrap(), "--out", out.to_str().unwrap()];
        args.extend(flags);
        json(&run(&args));
    }
    let mut args = vec!["merge", sa.to_str().unwrap(), sb.to_str().unwrap()];
    args.extend(flags);
    let merged = json(&run(&args));

    let bits = |v: &Value| v.as_f64().unwrap().to_bits();
    assert_eq!(bits(&direct["value"]), bits(&merged["value"]));
    assert_eq!(bits(&direct["mean_pp"]), bits(&merged["mean_pp"]));
    assert_eq!(bits(&direct["stderr_pp"]), bits(&merged["stderr_pp"]));
    assert_eq!(direct["config_fingerprint"], merged["config_fingerprint"]);
}

#[test]
fn merge_rejects_mismatched_fingerprints() {
    let dir = tempfile::tempdir().unwrap();
    let a = write_csv(dir.path(), "a.csv", 20, 2, 2, 0.0);
    let s1 = dir.path().join("s1.skch");
    let s2 = dir.path().join("s2.skch");
    json(&run(&[
        "project",
        a.to_str().unwrap(),
        "--out",
        s1.to_str().unwrap(),
        "--L",
        "10",
        "--seed",
        "1",
    ]));
    json(&run(&[
        "project",
        a.to_str().unwrap(),
        "--out",
        s2.to_str().unwrap(),
        "--L",
        "10",
        "--seed",
        "2",
    ]));
    for _ in 0..2 {
        let out = run(&["merge", s1.to_str().unwrap(), s2.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(1));
        assert!(String::from_utf8_lossy(&out.stderr).contains("fingerprint"));
        assert!(out.stdout.is_empty());
    }
}

#[test]
fn correlate_reports_both_coefficients() {
    let dir = tempfile::tempdir().unwrap();
    let pool = write_csv(dir.path(), "pool.csv", 200, 3, 4, 0.0);
    let report = json(&run(&[
        "correlate",
        pool.to_str().unwrap(),
        "--splits",
        "40",
        "--pairs",
        "10",
        "--baseline",
        "exact-otdd",
        "--L",
        "200",
    ]));
    let c = &report["correlate"];
    for field in ["pearson", "spearman"] {
        let v = c[field].as_f64().unwrap();
        assert!((-1.0..=1.0).contains(&v), "{field} = {v}");
    }
    assert_eq!(c["baseline"], "exact-otdd");
    assert_eq!(c["sotdd"].as_array().unwrap().len(), 10);
    assert_eq!(c["reference"].as_array().unwrap().len(), 10);
}

#[test]
fn decay_reports_slope() {
    let dir = tempfile::tempdir().unwrap();
    let a = write_csv(dir.path(), "a.csv", 60, 3, 3, 0.0);
    let b = write_csv(dir.path(), "b.csv", 60, 3, 3, 0.5);
    let report = json(&run(&[
        "decay",
        a.to_str().unwrap(),
        b.to_str().unwrap(),
        "--grid",
        "10,40,160",
        "--repeats",
        "4",
    ]));
    let decay = &report["decay"];
    assert_eq!(decay["points"].as_array().unwrap().len(), 3);
    assert!(decay["slope"].as_f64().unwrap().is_finite());
}

#[test]
fn identical_runs_give_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    let a = write_csv(dir.path(), "a.csv", 30, 2, 2, 0.0);
    let b = write_csv(dir.path(), "b.csv", 30, 2, 3, 1.0);
    let args = [
        "distance",
        a.to_str().unwrap(),
        b.to_str().unwrap(),
        "--L",
        "50",
        "--workers",
        "2",
    ];
    let mut r1 = json(&run(&args));
    let mut r2 = json(&run(&args));
    r1["wall_seconds"] = Value::Null;
    r2["wall_seconds"] = Value::Null;
    assert_eq!(r1, r2);
}

#[test]
fn binary_inputs_are_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write_csv(dir.path(), "a.csv", 25, 2, 2, 0.0);
    let ds = sotdd::io::read_csv_dataset(&csv, &sotdd::io::LabelColumn::Last).unwrap();
    let bin_path = dir.path().join("a.sotd");
    sotdd::io::write_binary_dataset(&ds, &bin_path).unwrap();
    let from_csv = json(&run(&[
        "distance",
        csv.to_str().unwrap(),
        bin_path.to_str().unwrap(),
        "--L",
        "20",
    ]));
    assert_eq!(from_csv["value"].as_f64(), Some(0.0));
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let a = write_csv(dir.path(), "a.csv", 10, 2, 2, 0.0);
    let a = a.to_str().unwrap();

    let out = run(&["distance", a, a, "--projector", "conv:2,2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--projector"));

    let out = run(&["distance", a, a, "--moment-law", "gamma:1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--moment-law"));

    let out = run(&["project", a, "--out", "x.skch", "--standardize"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--standardize"));

    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn computation_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let a = write_csv(dir.path(), "a.csv", 10, 2, 2, 0.0);
    let b = write_csv(dir.path(), "b.csv", 10, 3, 2, 0.0);
    let out = run(&["distance", a.to_str().unwrap(), b.to_str().unwrap(), "--L", "5"]);
    assert_eq!(out.status.code(), Some(1));
    let missing = dir.path().join("missing.csv");
    let out = run(&["distance", missing.to_str().unwrap(), a.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn idx_pairs_are_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let mut images = vec![0, 0, 8, 3, 0, 0, 0, 3, 0, 0, 0, 2, 0, 0, 0, 2];
    images.extend([0u8, 10, 20, 30, 255, 0, 7, 1, 3, 3, 3, 3]);
    let labels = vec![0, 0, 8, 1, 0, 0, 0, 3, 1, 0, 1];
    let (ip, lp) = (dir.path().join("img.idx3"), dir.path().join("lab.idx1"));
    fs::write(&ip, images).unwrap();
    fs::write(&lp, labels).unwrap();
    let arg = format!("idx:{},{}", ip.display(), lp.display());
    let report = json(&run(&["distance", &arg, &arg, "--L", "10"]));
    assert_eq!(report["value"].as_f64(), Some(0.0));

    fs::write(&lp, [0, 0, 8, 1, 0, 0, 0, 2, 1, 0]).unwrap();
    assert_eq!(run(&["distance", &arg, &arg]).status.code(), Some(1));
}
