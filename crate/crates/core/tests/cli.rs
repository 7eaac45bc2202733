use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use vpp::hints::load_sparse_hints;
use vpp::io::{read_disparity, read_image};
use vpp::occlusion::{classify_occluded, warp_hints};
use vpp::{evaluate, OcclusionConfig};

fn vpp(dir: &Path, args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_vpp"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs");
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn kv(out: &Output) -> Vec<(String, String)> {
    String::from_utf8(out.stdout.clone())
        .unwrap()
        .lines()
        .filter_map(|l| l.split_once('=').map(|(k, v)| (k.to_string(), v.to_string())))
        .collect()
}

fn value(pairs: &[(String, String)], key: &str) -> f64 {
    pairs.iter().find(|(k, _)| k == key).unwrap_or_else(|| panic!("missing {key}")).1.parse().unwrap()
}

/// Small desk scene with hints, shared by several tests.
fn desk(dir: &Path) {
    vpp(dir, &["synth", "--scene", "desk", "--width", "128", "--height", "96", "--out-dir", "."]);
    vpp(dir, &["sample-hints", "--gt", "gt.pfm", "--out", "hints.csv", "--seed", "3"]);
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

#[test]
fn zero_alpha_leaves_images_untouched() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    desk(d);
    vpp(d, &[
        "project", "--left", "left.png", "--right", "right.png", "--hints", "hints.csv", "--out-left", "a.png",
        "--out-right", "b.png", "--alpha", "0",
    ]);
    assert_eq!(read_image(&d.join("a.png")).unwrap(), read_image(&d.join("left.png")).unwrap());
    assert_eq!(read_image(&d.join("b.png")).unwrap(), read_image(&d.join("right.png")).unwrap());
}

#[test]
fn same_seed_same_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    desk(d);
    for out in ["r1.png", "r2.png"] {
        vpp(d, &[
            "project", "--left", "left.png", "--right", "right.png", "--hints", "hints.csv", "--out-left", "l.png",
            "--out-right", out, "--pattern", "random", "--seed", "9",
        ]);
    }
    assert_eq!(std::fs::read(d.join("r1.png")).unwrap(), std::fs::read(d.join("r2.png")).unwrap());
}

#[test]
fn debug_mask_matches_classifier() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    desk(d);
    vpp(d, &[
        "project", "--left", "left.png", "--right", "right.png", "--hints", "hints.csv", "--out-left", "l.png",
        "--out-right", "r.png", "--density-debug", "mask.png", "--policy", "fgd",
    ]);
    let mask = read_image(&d.join("mask.png")).unwrap();
    let hints = load_sparse_hints(&d.join("hints.csv"), 128, 96).unwrap();
    let expected = classify_occluded(&warp_hints(&hints), &OcclusionConfig::default());
    let mut occluded = 0;
    for y in 0..96 {
        for x in 0..128 {
            let set = mask.get(x, y, 0) == 255;
            assert_eq!(set, expected.is_occluded(x, y), "({x}, {y})");
            occluded += set as usize;
        }
    }
    assert!(occluded > 0);
}

#[test]
fn eval_of_ground_truth_is_perfect() {
    let tmp = tempfile::tempdir().unwrap();
    let gt = fixture("desk").join("gt.pfm");
    let out = vpp(tmp.path(), &["eval", "--pred", gt.to_str().unwrap(), "--gt", gt.to_str().unwrap()]);
    let pairs = kv(&out);
    for key in ["bad_1", "bad_2", "bad_3", "bad_4", "avg"] {
        assert_eq!(value(&pairs, key), 0.0, "{key}");
    }
    assert_eq!(value(&pairs, "evaluated_pixels"), 384.0 * 288.0);
}

#[test]
fn full_density_sampling_returns_ground_truth() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    desk(d);
    vpp(d, &["sample-hints", "--gt", "gt.pfm", "--out", "all.pfm", "--density", "1"]);
    assert_eq!(read_disparity(&d.join("all.pfm")).unwrap(), read_disparity(&d.join("gt.pfm")).unwrap());
}

#[test]
fn match_recovers_bundled_plane() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = fixture("plane");
    let (l, r) = (dir.join("left.png"), dir.join("right.png"));
    vpp(tmp.path(), &["match", "--left", l.to_str().unwrap(), "--right", r.to_str().unwrap(), "--out", "d.pfm"]);
    let pred = read_disparity(&tmp.path().join("d.pfm")).unwrap();
    let gt = read_disparity(&dir.join("gt.pfm")).unwrap();
    let report = evaluate(&pred, &gt, &[1.0]).unwrap();
    assert!(report.bad[0] < 1.0, "bad_1 {}", report.bad[0]);

    // 16-bit PNG output decodes to the same map up to 1/256 px.
    vpp(tmp.path(), &["match", "--left", l.to_str().unwrap(), "--right", r.to_str().unwrap(), "--out", "d.png"]);
    let png = read_disparity(&tmp.path().join("d.png")).unwrap();
    for (a, b) in png.values().iter().zip(pred.values()) {
        assert!((a - b).abs() <= 1.0 / 256.0);
    }
}

#[test]
fn vanilla_only_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    desk(d);
    let out = vpp(d, &[
        "pipeline", "--left", "left.png", "--right", "right.png", "--gt", "gt.pfm", "--densities", "0",
        "--max-disparity", "64",
    ]);
    let pairs = kv(&out);
    assert!(pairs.iter().all(|(k, _)| k.starts_with("density_0.")));
    assert!(!pairs.iter().any(|(k, _)| k.ends_with("reduction")));
    assert_eq!(value(&pairs, "density_0.hints"), 0.0);
}

#[test]
fn occlusion_policies_reported() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    desk(d);
    for policy in ["no", "fgd"] {
        let out = vpp(d, &[
            "pipeline", "--left", "left.png", "--right", "right.png", "--gt", "gt.pfm", "--max-disparity", "64",
            "--policy", policy,
        ]);
        let pairs = kv(&out);
        println!(
            "policy {policy}: bad_2 {:.2} -> {:.2}",
            value(&pairs, "density_0.bad_2"),
            value(&pairs, "density_0.05.bad_2")
        );
    }
}

#[test]
fn config_file_and_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    std::fs::write(d.join("run.cfg"), "# tuned\nalpha = 0.7\npolicy = bkgd\n").unwrap();
    let out = vpp(d, &["--config", "run.cfg", "--alpha", "0.5", "--print-config", "synth", "--scene", "plane", "--out-dir", "x"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("alpha = 0.5"));
    assert!(text.contains("policy = bkgd"));
    assert!(!d.join("x").exists());

    let bad = Command::new(env!("CARGO_BIN_EXE_vpp"))
        .args(["--alpha", "1.5", "synth", "--scene", "plane", "--out-dir", "x"])
        .current_dir(d)
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn missing_input_is_a_runtime_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_vpp"))
        .args(["eval", "--pred", "nope.pfm", "--gt", "nope.pfm"])
        .current_dir(tmp.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());
}
