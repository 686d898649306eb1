use std::path::Path;
use std::process::{Command, Output};

use unmix::commands::read_report;

fn unmix(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_unmix")).args(args).output().unwrap()
}

fn ok(args: &[&str]) {
    let out = unmix(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn small_scene(dir: &Path) {
    ok(&["synth", "--rows", "12", "--cols", "10", "--p-initial", "2", "--bands", "16", "--snr", "30", "--seed", "5", "--out", s(dir)]);
}

#[test]
fn identical_estimate_and_truth_give_zero_errors() {
    let dir = tempfile::tempdir().unwrap();
    small_scene(dir.path());
    let truth = dir.path().join("abundances.hsic");
    let out = dir.path().join("eval");
    ok(&["eval", "--estimate", s(&truth), "--truth", s(&truth), "--out", s(&out)]);
    let report = read_report(&out.join("eval.json")).unwrap();
    assert_eq!(report.pixels, 120);
    assert_eq!(report.armse, Some(0.0));
    assert_eq!(report.rms_aad, Some(0.0));
    assert!(out.join("eval.manifest.json").exists());
}

#[test]
fn fcls_unmix_then_render_writes_one_map_per_endmember() {
    let dir = tempfile::tempdir().unwrap();
    small_scene(dir.path());
    let est = dir.path().join("fcls");
    ok(&[
        "unmix",
        "--cube",
        s(&dir.path().join("cube.hsic")),
        "--baseline",
        "fcls",
        "--endmembers",
        s(&dir.path().join("endmembers.csv")),
        "--out",
        s(&est),
    ]);
    let maps = dir.path().join("maps");
    ok(&["render", "--input", s(&est.join("abundances.hsic")), "--png", "--out", s(&maps)]);
    let mut names: Vec<String> = std::fs::read_dir(&maps)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.ends_with(".pgm") || n.ends_with(".png"))
        .collect();
    names.sort();
    assert_eq!(
        names,
        [
            "abundance_00.pgm",
            "abundance_00.png",
            "abundance_01.pgm",
            "abundance_01.png",
            "abundance_02.pgm",
            "abundance_02.png",
            "abundance_03.pgm",
            "abundance_03.png"
        ]
    );
    let pgm = std::fs::read(maps.join("abundance_00.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n10 12\n255\n"));
}

#[test]
fn bad_inputs_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.hsic");
    let out = unmix(&["eval", "--estimate", s(&missing), "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));

    small_scene(dir.path());
    let cube = dir.path().join("cube.hsic");
    // Neither a checkpoint nor a baseline.
    assert_eq!(unmix(&["unmix", "--cube", s(&cube), "--out", s(dir.path())]).status.code(), Some(2));
    // Training without labels or endmembers.
    assert_eq!(unmix(&["train", "--cube", s(&cube), "--out", s(dir.path())]).status.code(), Some(2));
    // Unknown flag.
    assert_eq!(unmix(&["synth", "--bogus"]).status.code(), Some(2));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"rows": 8, "cols": 8, "bands": 12, "p_initial": 2, "seed": 1}"#).unwrap();
    let out = dir.path().join("scene");
    ok(&["synth", "--config", s(&cfg), "--cols", "6", "--out", s(&out)]);
    let manifest: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("synth.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["rows"], 8);
    assert_eq!(manifest["config"]["cols"], 6);
    assert_eq!(manifest["config"]["bands"], 12);
}
