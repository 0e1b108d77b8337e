use std::path::Path;
use std::process::{Command, Output};

use roofkit_core::baselines::inpaint_idw;
use roofkit_core::raster::{read_rhm, read_rhm_mask, write_rhm};

fn roofkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_roofkit"))
        .args(args)
        .env("ROOFKIT_THREADS", "1")
        .env("RUST_LOG", "error")
        .output()
        .expect("roofkit runs")
}

fn ok(args: &[&str]) {
    let out = roofkit(args);
    assert!(
        out.status.success(),
        "roofkit {args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn s(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

fn toy_set(root: &Path, count: &str) -> String {
    let data = root.join("data");
    ok(&["gen-toy", "--out", &s(&data), "--test", count, "--seed", "3"]);
    s(&data.join("manifest.csv"))
}

#[test]
fn synth_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    toy_set(dir.path(), "1");
    let gt = s(&dir.path().join("data/gt/roof_0000.rhm"));
    let fp = s(&dir.path().join("data/footprint/roof_0000.rhm"));
    let mut runs = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        ok(&["synth", "--gt", &gt, "--footprint", &fp, "--preset", "s95_i30", "--seed", "7", "--out", &s(&out)]);
        runs.push((
            std::fs::read(out.join("corrupted.rhm")).unwrap(),
            std::fs::read(out.join("provenance.json")).unwrap(),
        ));
    }
    assert_eq!(runs[0], runs[1]);

    let other = dir.path().join("c");
    ok(&["synth", "--gt", &gt, "--footprint", &fp, "--preset", "s95_i30", "--seed", "8", "--out", &s(&other)]);
    assert_ne!(std::fs::read(other.join("corrupted.rhm")).unwrap(), runs[0].0);
}

#[test]
fn restore_idw_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    toy_set(dir.path(), "1");
    let gt = s(&dir.path().join("data/gt/roof_0000.rhm"));
    let fp = s(&dir.path().join("data/footprint/roof_0000.rhm"));
    let damaged = dir.path().join("damaged");
    ok(&["synth", "--gt", &gt, "--footprint", &fp, "--preset", "s90_i30", "--seed", "1", "--out", &s(&damaged)]);
    let input = damaged.join("corrupted.rhm");
    let restored = dir.path().join("restored.rhm");
    ok(&["restore", "--input", &s(&input), "--footprint", &fp, "--method", "idw", "--out", &s(&restored)]);

    let expected = inpaint_idw(&read_rhm(&input).unwrap(), &read_rhm_mask(&fp).unwrap(), 2.0, 16).unwrap();
    let reference = dir.path().join("reference.rhm");
    write_rhm(&reference, &expected).unwrap();
    assert_eq!(std::fs::read(&restored).unwrap(), std::fs::read(&reference).unwrap());
}

#[test]
fn sweep_writes_one_row_per_step_count() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = toy_set(dir.path(), "2");
    let ckpt = s(&dir.path().join("model.ckpt"));
    ok(&["train", "--out", &ckpt, "--steps", "2", "--batch", "1", "--side", "16"]);
    assert!(dir.path().join("model.losses.csv").exists());

    let out = dir.path().join("sweep");
    ok(&["sweep-steps", "--manifest", &manifest, "--checkpoint", &ckpt, "--steps", "3,5", "--out", &s(&out)]);
    let table = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "steps,mae_m,rmse_m,iou");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("3,") && lines[2].starts_with("5,"));
    assert!(out.join("steps_3.csv").exists() && out.join("steps_5.json").exists());
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = s(&dir.path().join("nope.csv"));
    let out = dir.path().join("out");
    for args in [
        vec!["eval", "--manifest", missing.as_str(), "--out", &s(&out)],
        vec!["eval", "--bogus-flag"],
        vec!["synth", "--gt", missing.as_str(), "--preset", "s90_i30", "--out", &s(&out)],
        vec!["synth", "--gt", missing.as_str(), "--preset", "x90", "--out", &s(&out)],
    ] {
        assert_eq!(roofkit(&args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn skipped_samples_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = toy_set(dir.path(), "2");
    let pred = dir.path().join("pred");
    std::fs::create_dir_all(&pred).unwrap();
    std::fs::copy(dir.path().join("data/gt/roof_0000.rhm"), pred.join("roof_0000.rhm")).unwrap();

    let report = dir.path().join("report");
    let out = roofkit(&["eval", "--manifest", &manifest, "--pred", &s(&pred), "--out", &s(&report)]);
    assert_eq!(out.status.code(), Some(1));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(report.join("report.json")).unwrap()).unwrap();
    assert_eq!(json["skipped"][0]["id"], "roof_0001");
    assert_eq!(json["samples"][0]["mae_m"], 0.0);
}

#[test]
fn config_file_overrides_flags() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let config = dir.path().join("toy.toml");
    std::fs::write(&config, "test = 3\n").unwrap();
    ok(&["gen-toy", "--out", &s(&data), "--test", "1", "--config", &s(&config)]);
    let manifest = std::fs::read_to_string(data.join("manifest.csv")).unwrap();
    assert_eq!(manifest.lines().count(), 4);
    let echo: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(data.join("gen-toy.config.json")).unwrap()).unwrap();
    assert_eq!(echo["test"], 3);
}
