use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn wmt(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wmt"))
        .arg("--out-dir")
        .arg(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = wmt(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Nine samples on the geodesic from N(0, 1) to N(2, 4): the standard
/// deviation moves linearly from 1 to 2.
fn geodesic_file(dir: &Path) -> std::path::PathBuf {
    let elems: Vec<String> = (0..9)
        .map(|k| {
            let t = k as f64 / 8.0;
            let s = 1.0 + t;
            format!(r#"{{"mean":{},"variance":{}}}"#, 2.0 * t, s * s)
        })
        .collect();
    let file = dir.join("geo.json");
    let text = format!(r#"{{"kind":"gaussian","level":3,"elements":[{}]}}"#, elems.join(","));
    std::fs::write(&file, text).unwrap();
    file
}

#[test]
fn geodesic_has_zero_omega_and_zero_norms() {
    let dir = tempfile::tempdir().unwrap();
    let input = geodesic_file(dir.path());
    let out = ok(dir.path(), &["analyze", path(&input)]);
    assert_eq!(out.trim(), "omega: 0.000000");
    let csv = std::fs::read_to_string(dir.path().join("norms.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("level,index,time,norm"));
    assert!(lines.all(|l| l.ends_with(",0")));
    assert_eq!(report(dir.path())["levels"].as_array().unwrap().len(), 3);

    let out = ok(dir.path(), &["optimality", path(&input)]);
    assert_eq!(out.trim(), "omega: 0.000000");
}

#[test]
fn bad_length_exits_with_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("six.json");
    let elems = [r#"{"mean":0,"variance":1}"#; 6].join(",");
    std::fs::write(&file, format!(r#"{{"kind":"gaussian","elements":[{elems}]}}"#)).unwrap();
    let out = wmt(dir.path(), &["analyze", path(&file), "--levels", "2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not 1 mod 2^2"));
}

#[test]
fn missing_input_exits_with_io_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = wmt(dir.path(), &["optimality", "/no/such/file.json"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn analyze_synthesize_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let gen = dir.path().join("gen");
    ok(&gen, &["gen-gaussian", "--bump", "0.5", "--noise-mean", "0.05", "--noise-var", "0.05", "--seed", "3"]);
    let input = gen.join("sequence.json");
    let a = dir.path().join("a");
    ok(&a, &["analyze", path(&input), "--levels", "6"]);
    let s = dir.path().join("s");
    ok(&s, &["synthesize", path(&a.join("pyramid.json")), "--reference", path(&input)]);
    assert!(report(&s)["metrics"]["max_error"].as_f64().unwrap() <= 1e-8);
}

#[test]
fn corrupt_pyramid_exits_with_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    let input = geodesic_file(dir.path());
    ok(dir.path(), &["analyze", path(&input)]);
    let file = dir.path().join("pyramid.json");
    let mut pyr: Value = serde_json::from_str(&std::fs::read_to_string(&file).unwrap()).unwrap();
    pyr["layers"][0]["details"].as_array_mut().unwrap().pop();
    std::fs::write(&file, pyr.to_string()).unwrap();
    let out = wmt(dir.path(), &["synthesize", path(&file)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn denoise_extremes_and_truth_report() {
    let dir = tempfile::tempdir().unwrap();
    let truth_dir = dir.path().join("truth");
    ok(&truth_dir, &["gen-gaussian", "--bump", "0.5", "--seed", "1"]);
    let noisy_dir = dir.path().join("noisy");
    ok(&noisy_dir, &["gen-gaussian", "--bump", "0.5", "--noise-mean", "0.05", "--noise-var", "0.05", "--seed", "1"]);
    let noisy = noisy_dir.join("sequence.json");

    let keep = dir.path().join("keep");
    ok(&keep, &["denoise", path(&noisy), "--threshold", "inf"]);
    let r = report(&keep);
    assert_eq!(r["metrics"]["zeroed_details"], 0);
    assert!(r["metrics"]["max_deviation_from_input"].as_f64().unwrap() <= 1e-8);

    let flat = dir.path().join("flat");
    ok(&flat, &["denoise", path(&noisy), "--threshold", "0", "--levels", "6"]);
    let seq: Value = serde_json::from_str(&std::fs::read_to_string(flat.join("sequence.json")).unwrap()).unwrap();
    let means: Vec<f64> = seq["elements"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["mean"].as_f64().unwrap())
        .collect();
    // With every detail removed the output is the geodesic between the two
    // coarse samples, whose means are linear in the index.
    for w in means.windows(3) {
        assert!((w[0] - 2.0 * w[1] + w[2]).abs() <= 1e-12);
    }

    let den = dir.path().join("den");
    ok(&den, &["denoise", path(&noisy), "--threshold", "0.01", "--levels", "4", "--truth", path(&truth_dir.join("sequence.json"))]);
    let m = &report(&den)["metrics"];
    assert!(m["output_distance_to_truth"].as_f64().unwrap() < m["input_distance_to_truth"].as_f64().unwrap());

    let out = wmt(dir.path(), &["denoise", path(&noisy), "--threshold", "-1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn noisy_dipole_has_larger_omega() {
    let dir = tempfile::tempdir().unwrap();
    let omega = |noise: &str| {
        let d = dir.path().join(format!("n{noise}"));
        ok(&d, &["simulate-dipole", "--noise", noise, "--seed", "7", "--steps", "128"]);
        assert!(d.join("trajectories.csv").exists());
        let out = ok(&d, &["optimality", path(&d.join("sequence.json"))]);
        out.trim().strip_prefix("omega: ").unwrap().parse::<f64>().unwrap()
    };
    let (clean, noisy) = (omega("0"), omega("0.1"));
    assert!(noisy > clean, "{noisy} <= {clean}");
}

#[test]
fn detect_finds_the_jump_edges() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["gen-gaussian", "--bump", "0.5", "--jump", "0.05"]);
    let input = dir.path().join("sequence.json");
    ok(dir.path(), &["detect", path(&input)]);
    let csv = std::fs::read_to_string(dir.path().join("anomalies.csv")).unwrap();
    let times: Vec<f64> = csv
        .lines()
        .skip(1)
        .take(2)
        .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    let step = 1.0 / 64.0;
    assert!(times.iter().any(|t| (t - 1.0 / 3.0).abs() <= step));
    assert!(times.iter().any(|t| (t - 2.0 / 3.0).abs() <= step));
    assert_eq!(report(dir.path())["anomalies"].as_array().unwrap().len(), csv.lines().count() - 1);
}

#[test]
fn family_endpoint_is_a_geodesic() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["gen-gaussian", "--bump", "0.5"]);
    let smooth = dir.path().join("sequence.json");
    let fam = dir.path().join("fam");
    let out = ok(&fam, &["gen-family", path(&smooth), "--k", "0"]);
    assert_eq!(out.trim(), "omega: 0.000000");
    let out = wmt(&fam, &["gen-family", path(&smooth), "--k", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let d = dir.path().join(name);
        ok(&d, &["gen-gaussian", "--noise-mean", "0.02", "--noise-var", "0.02", "--seed", "5"]);
        ok(&d, &["analyze", path(&d.join("sequence.json"))]);
        (
            std::fs::read(d.join("sequence.json")).unwrap(),
            std::fs::read(d.join("norms.csv")).unwrap(),
        )
    };
    assert_eq!(run("a"), run("b"));
}

#[test]
fn csv_sequences_in_and_out() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("hist.csv");
    let mut text = String::from("0,1,2\n");
    for k in 0..5 {
        let a = 0.2 + 0.1 * k as f64;
        text.push_str(&format!("{a},{},0.3\n", 0.7 - a));
    }
    std::fs::write(&file, text).unwrap();
    ok(dir.path(), &["analyze", path(&file)]);
    ok(dir.path(), &["--format", "csv", "synthesize", path(&dir.path().join("pyramid.json"))]);
    let out = std::fs::read_to_string(dir.path().join("sequence.csv")).unwrap();
    assert_eq!(out.lines().count(), 6);
}

#[test]
fn gaussian_rejects_other_exponents() {
    let dir = tempfile::tempdir().unwrap();
    let input = geodesic_file(dir.path());
    let out = wmt(dir.path(), &["--p", "1", "analyze", path(&input)]);
    assert_eq!(out.status.code(), Some(2));
}
