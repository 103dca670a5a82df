use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SCENE: &str = r#"{
  "width": 48, "height": 36, "frames": 30,
  "background": {"kind": "noise", "base": [100, 100, 100], "amplitude": 6},
  "objects": [{"shape": {"rect": {"width": 8, "height": 8}}, "color": [250, 250, 250],
               "start": [2, 14], "velocity": [1, 0], "enter": 21}],
  "seed": 5
}"#;

fn segment(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_segment"))
        .args(args)
        .output()
        .unwrap()
}

fn synthgen(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_synthgen"))
        .args(args)
        .output()
        .unwrap()
}

fn make_scene(dir: &Path) -> String {
    let spec = dir.join("scene.json");
    fs::write(&spec, SCENE).unwrap();
    let out = dir.join("scene");
    let o = synthgen(&["--spec", spec.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out.to_str().unwrap().to_string()
}

#[test]
fn synthgen_then_segment_with_report() {
    let dir = tempfile::tempdir().unwrap();
    let scene = make_scene(dir.path());
    let report = dir.path().join("report.csv");
    let masks = dir.path().join("masks");
    let o = segment(&[
        "--input",
        &format!("{scene}/input"),
        "--gt",
        &format!("{scene}/groundtruth"),
        "--train",
        "20",
        "--method",
        "cb+canny",
        "--out",
        masks.to_str().unwrap(),
        "--report",
        report.to_str().unwrap(),
        "--dataset",
        "demo",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("demo [cb+canny]"), "{stdout}");
    let csv = fs::read_to_string(report).unwrap();
    assert!(csv.starts_with("dataset,method,FPR,TPR,PR,FM,PCC,JC\ndemo,cb+canny,"));
    assert_eq!(fs::read_dir(masks).unwrap().count(), 10);
}

#[test]
fn config_file_and_set_flags_are_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let scene = make_scene(dir.path());
    let conf = dir.path().join("run.conf");
    fs::write(
        &conf,
        format!("preset = fountain01\ninput = {scene}/input\ntrain = 20\n"),
    )
    .unwrap();
    let o = segment(&[
        "--config",
        conf.to_str().unwrap(),
        "--set",
        "mog-components=3",
        "--method",
        "mog",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn configuration_errors_exit_with_1() {
    let dir = tempfile::tempdir().unwrap();
    let scene = make_scene(dir.path());
    let input = format!("{scene}/input");
    for args in [
        vec!["--input", input.as_str(), "--method", "cb+prewitt"],
        vec!["--input", input.as_str(), "--theta", "1.5"],
        vec!["--input", input.as_str(), "--set", "no_such_key=1"],
        vec!["--input", input.as_str(), "--train", "40"],
        vec!["--no-such-flag"],
    ] {
        let o = segment(&args);
        assert_eq!(
            o.status.code(),
            Some(1),
            "{args:?}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
}

#[test]
fn missing_files_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing");
    let o = segment(&["--input", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let o = synthgen(&[
        "--spec",
        missing.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let o = segment(&["--config", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn malformed_scene_spec_exits_with_1() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("bad.json");
    fs::write(&spec, "{\"width\": 4}").unwrap();
    let o = synthgen(&[
        "--spec",
        spec.to_str().unwrap(),
        "--out",
        dir.path().join("x").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn help_exits_cleanly() {
    let o = segment(&["--help"]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("--method"));
}
