//! Black-box tests of the binary: exit codes, error reporting, run
//! reproducibility and the export/import round trips.

use std::path::Path;
use std::process::{Command, Output};

fn fractal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fractal")).args(args).output().expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).to_string()
}

fn read_artifacts(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap())
        .map(|e| (e.file_name().to_string_lossy().to_string(), std::fs::read(e.path()).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn unknown_preset_exits_one_and_lists_names() {
    let out = fractal(&["run", "does-not-exist"]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    for name in ["jaffard-unit", "cantor-half", "mdp-certify"] {
        assert!(err.contains(name), "missing {name} in {err}");
    }
}

#[test]
fn parse_error_reports_position() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("broken.toml");
    std::fs::write(&path, "version = 1\nname = \"x\"\n[spec\n").unwrap();
    let out = fractal(&["run", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(err.contains("line 3"), "no position in error: {err}");
}

#[test]
fn unknown_scenario_keys_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("typo.toml");
    std::fs::write(
        &path,
        "version = 1\nname = \"x\"\n\n[spec]\nkind = \"full-interval\"\n\n[[steps]]\nop = \"cover\"\nj = 4\nemitt = \"rle\"\n",
    )
    .unwrap();
    let out = fractal(&["run", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("emitt"), "typo not named: {}", stderr(&out));
}

#[test]
fn audit_failure_exits_two() {
    // A hand-built cover whose children all sit under one parent: the
    // fast-duplication cardinality bound must fail and name the step.
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("adversarial.toml");
    std::fs::write(
        &path,
        r#"
version = 1
name = "adversarial"

[spec]
kind = "explicit-cover"
levels = [
  { scale = 4, members = [0, 1, 2, 3, 4, 5, 6, 7] },
  { scale = 8, members = [0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15] },
]

[[steps]]
op = "classify"
j = 4
beta = 1.0
eps = 0.1
dim = 0.0
"#,
    )
    .unwrap();
    let out_dir = tmp.path().join("out");
    let out = fractal(&[
        "run",
        path.to_str().unwrap(),
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2), "stderr: {}", stderr(&out));
    assert!(stderr(&out).contains("classify"));
}

#[test]
fn identical_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for dir in [&a, &b] {
        let out = fractal(&[
            "run",
            "jaffard-unit",
            "--seed",
            "42",
            "--out-dir",
            dir.to_str().unwrap(),
        ]);
        assert!(out.status.success());
    }
    let files_a = read_artifacts(&a);
    let files_b = read_artifacts(&b);
    // Manifests differ only in wall times; everything else matches byte
    // for byte.
    for ((na, ba), (nb, bb)) in files_a.iter().zip(&files_b) {
        assert_eq!(na, nb);
        if na != "manifest.json" {
            assert_eq!(ba, bb, "{na} differs between identical runs");
        }
    }
    // The manifest lists every artifact with its hash.
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(a.join("manifest.json")).unwrap()).unwrap();
    let listed: Vec<String> = manifest["artifacts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["file"].as_str().unwrap().to_string())
        .collect();
    for (name, bytes) in &files_a {
        if name == "manifest.json" {
            continue;
        }
        assert!(listed.contains(name), "{name} missing from manifest");
        let entry = manifest["artifacts"]
            .as_array()
            .unwrap()
            .iter()
            .find(|e| e["file"] == name.as_str())
            .unwrap();
        let expected = entry["sha256"].as_str().unwrap();
        let mut hasher = <sha2::Sha256 as sha2::Digest>::new();
        sha2::Digest::update(&mut hasher, bytes);
        let got = format!("{:x}", sha2::Digest::finalize(hasher));
        assert_eq!(got, expected, "{name} hash mismatch");
    }
}

#[test]
fn cover_export_reimports_as_spec() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("covers");
    let out = fractal(&[
        "cover",
        "--spec",
        "cantor-half",
        "--j",
        "8",
        "--emit",
        "rle",
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let rle = out_dir.join("00-cover.rle");
    // Use the exported cover as an explicit-cover spec at the same scale.
    let reread = tmp.path().join("reread");
    let out = fractal(&[
        "cover",
        "--spec",
        rle.to_str().unwrap(),
        "--j",
        "8",
        "--emit",
        "rle",
        "--out-dir",
        reread.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let original = std::fs::read_to_string(&rle).unwrap();
    let roundtrip = std::fs::read_to_string(reread.join("00-cover.rle")).unwrap();
    assert_eq!(original, roundtrip);
}

#[test]
fn coefficient_export_feeds_spectrum() {
    let tmp = tempfile::tempdir().unwrap();
    let lws_dir = tmp.path().join("lws");
    let out = fractal(&[
        "lws",
        "--spec",
        "full",
        "--alpha",
        "1.0",
        "--eta",
        "0.5",
        "--dim",
        "1.0",
        "--j-max",
        "10",
        "--seed",
        "5",
        "--out-dir",
        lws_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let coeffs = lws_dir.join("00-coefficients.csv");
    let spec_dir = tmp.path().join("spec");
    let out = fractal(&[
        "spectrum",
        "--spec",
        "full",
        "--alpha",
        "1.0",
        "--eta",
        "0.5",
        "--dim",
        "1.0",
        "--j-max",
        "10",
        "--seed",
        "5",
        "--coefficients",
        coeffs.to_str().unwrap(),
        "--h-grid",
        "1.0,1.4",
        "--out-dir",
        spec_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(spec_dir.join("00-spectrum.csv").exists());

    // Mismatched parameters are refused.
    let out = fractal(&[
        "spectrum",
        "--spec",
        "full",
        "--alpha",
        "0.7",
        "--eta",
        "0.5",
        "--dim",
        "1.0",
        "--j-max",
        "10",
        "--coefficients",
        coeffs.to_str().unwrap(),
        "--h-grid",
        "1.0",
        "--out-dir",
        tmp.path().join("bad").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("do not match"));
}

#[test]
fn json_format_switches_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("json");
    let out = fractal(&[
        "dims",
        "--spec",
        "cantor-half",
        "--j-min",
        "4",
        "--j-max",
        "12",
        "--format",
        "json",
        "--out-dir",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(dir.join("00-dims.json").exists());
    assert!(!dir.join("00-dims.csv").exists());
}

#[test]
fn override_flag_reaches_the_plan() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("ovr");
    let out = fractal(&[
        "run",
        "cantor-half",
        "--set",
        "steps.0.j=6",
        "--out-dir",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let rle = std::fs::read_to_string(dir.join("00-cover.rle")).unwrap();
    assert!(rle.contains("scale 6"), "override ignored: {rle}");
}
