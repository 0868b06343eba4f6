use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const PYRAMID: &str = r#"{"label": "pyramid", "points": [[0, 0, 1], [1, 0, 0], [0, 1, 0], [-1, 0, 0], [0, -1, 0]]}"#;
const SPATIAL: &str = r#"{"points": [[0.1, -0.4, 0.3], [1.2, 0.5, -0.7], [-0.8, 1.1, 0.2], [0.4, 0.9, 1.5], [-1.0, -0.6, -0.9]]}"#;
const SPATIAL_SCALED: &str = r#"{"points": [[0.2, -0.8, 0.6], [2.4, 1.0, -1.4], [-1.6, 2.2, 0.4], [0.8, 1.8, 3.0], [-2.0, -1.2, -1.8]]}"#;

fn moebius(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_moebius")).args(args).output().expect("binary runs")
}

fn moebius_env(args: &[&str], threads: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_moebius"))
        .args(args)
        .env("MOEBIUS_THREADS", threads)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn degree_of_pyramid_is_ten() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "pyr.json", PYRAMID);
    let out = moebius(&["degree", s(&f)]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["image_degree"], 10);
    assert_eq!(v["root_count_degree"], 10);
}

#[test]
fn degree_of_collinear_configuration_is_constant() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "line.json", r#"{"points": [[0,0,0],[1,0,0],[2,0,0],[3,0,0],[5,0,0]]}"#);
    let v = json(&moebius(&["degree", s(&f)]));
    assert_eq!(v["image_degree"], "Constant");
}

#[test]
fn self_test_round_trip_seed_five() {
    let out = moebius(&["reconstruct", "--self-test", "--seed", "5"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    let r = v["similarity_fit"]["residual"].as_f64().unwrap();
    assert!(r <= 1e-6, "residual {r}");
}

#[test]
fn reconstruct_with_truth_reports_fit() {
    let dir = TempDir::new().unwrap();
    let a = write(&dir, "a.json", SPATIAL);
    let b = write(&dir, "b.json", SPATIAL_SCALED);
    let v = json(&moebius(&["reconstruct", s(&a), "--truth", s(&b)]));
    let r = v["similarity_fit"]["residual"].as_f64().unwrap();
    assert!(r <= 1e-6, "residual {r}");
}

#[test]
fn pentapod_check_similar_platform() {
    let dir = TempDir::new().unwrap();
    let f = write(
        &dir,
        "pp.json",
        &format!(r#"{{"platform": {SPATIAL}, "base": {SPATIAL_SCALED}}}"#),
    );
    let v = json(&moebius(&["pentapod-check", s(&f)]));
    assert_eq!(v["cond_a"]["holds"], true);
    assert_eq!(v["camera_images_equal"]["holds"], true);
    assert_eq!(v["verdict"], "mobility >= 2 possible");
}

#[test]
fn image_compare_and_nverify() {
    let dir = TempDir::new().unwrap();
    let a = write(&dir, "a.json", SPATIAL);
    let b = write(&dir, "b.json", SPATIAL_SCALED);
    let v = json(&moebius(&["image-compare", s(&a), s(&b)]));
    assert!(v["distance"].as_f64().unwrap() <= 1e-7);
    let six_a = write(&dir, "6a.json", r#"{"points": [[0,0,0],[1,0,0],[0,1,0],[0,0,1],[1,1,2],[-1,2,0.5]]}"#);
    let six_b = write(&dir, "6b.json", r#"{"points": [[1,1,1],[3,1,1],[1,3,1],[1,1,3],[3,3,5],[-1,5,2]]}"#);
    let v = json(&moebius(&["nverify", s(&six_a), s(&six_b)]));
    assert_eq!(v["equivalent"], true);
}

#[test]
fn camera_eval_exact_is_normalized_fractions() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "pyr.json", PYRAMID);
    let v = json(&moebius(&["camera-eval", s(&f), "--param", "1,0,2,1", "--mode", "exact"]));
    let w = v["w"].as_array().unwrap();
    assert_eq!(w.len(), 6);
    assert_eq!(w[0], serde_json::json!(["1", "0"]));
    for z in w {
        for part in z.as_array().unwrap() {
            let t = part.as_str().unwrap();
            assert!(t.chars().all(|c| c.is_ascii_digit() || c == '/' || c == '-'), "{t}");
        }
    }
}

#[test]
fn camera_eval_float_matches_direction_and_param_alike() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "pyr.json", PYRAMID);
    let v = json(&moebius(&["camera-eval", s(&f), "--direction", "1,2,3"]));
    assert_eq!(v["w"].as_array().unwrap().len(), 6);
}

#[test]
fn camera_sample_csv_is_deterministic_across_thread_counts() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "spatial.json", SPATIAL);
    let one = moebius_env(&["camera-sample", s(&f), "--n", "200"], "1");
    let four = moebius_env(&["camera-sample", s(&f), "--n", "200"], "4");
    assert!(one.status.success());
    assert_eq!(one.stdout, four.stdout);
    let text = String::from_utf8(one.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "s_re,s_im,t_re,t_im,dir_x,dir_y,dir_z,w0_re,w0_im,w1_re,w1_im,w2_re,w2_im,w3_re,w3_im,w4_re,w4_im,w5_re,w5_im"
    );
    assert_eq!(lines.count(), 200);

    let out = dir.path().join("curve.csv");
    let report = json(&moebius(&["camera-sample", s(&f), "--n", "200", "--output", s(&out)]));
    assert_eq!(report["samples"], 200);
    assert_eq!(std::fs::read_to_string(&out).unwrap(), text);
}

#[test]
fn seed_changes_samples() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "spatial.json", SPATIAL);
    let a = moebius(&["camera-sample", s(&f), "--n", "20"]);
    let b = moebius(&["camera-sample", s(&f), "--n", "20", "--seed", "0"]);
    let c = moebius(&["camera-sample", s(&f), "--n", "20", "--seed", "3"]);
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn reconstruct_is_byte_identical() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "pyr.json", PYRAMID);
    let a = moebius_env(&["reconstruct", s(&f)], "1");
    let b = moebius_env(&["reconstruct", s(&f)], "3");
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn cross_ratio_with_infinity() {
    let v = json(&moebius(&["cross-ratio", r#"[[0,0],[1,0],"inf",[2,0]]"#]));
    let c = v["cross_ratio"].as_array().unwrap();
    assert!((c[0].as_f64().unwrap() - 0.5).abs() < 1e-15);
    assert_eq!(c[1].as_f64().unwrap(), 0.0);
    let v = json(&moebius(&["cross-ratio", r#"[[0,0],[1,0],[1,0],[5,0]]"#]));
    assert_eq!(v["cross_ratio"], "inf");
}

#[test]
fn parse_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    let bad = write(&dir, "bad.json", r#"{"points": [[1, 2]]}"#);
    for args in [
        vec!["classify", s(&bad)],
        vec!["classify", "/nonexistent/config.json"],
        vec!["cross-ratio", "[1, 2]"],
    ] {
        let out = moebius(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert_eq!(json(&out)["kind"], "parse");
        assert!(!out.stderr.is_empty());
    }
    assert_eq!(moebius(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(moebius(&["camera-sample", s(&bad), "--n", "ten"]).status.code(), Some(2));
    assert_eq!(moebius_env(&["classify", s(&bad)], "zero").status.code(), Some(2));
}

#[test]
fn precondition_violations_exit_three() {
    let dir = TempDir::new().unwrap();
    let four = write(&dir, "four.json", r#"{"points": [[0,0,0],[1,0,0],[0,1,0],[0,0,1]]}"#);
    let line = write(&dir, "line.json", r#"{"points": [[0,0,0],[1,0,0],[2,0,0],[3,0,0],[5,0,0]]}"#);
    let pyr = write(&dir, "pyr.json", PYRAMID);
    for args in [
        vec!["camera-eval", s(&four), "--direction", "0,0,1"],
        vec!["image-compare", s(&line), s(&pyr)],
        vec!["camera-eval", s(&pyr), "--direction", "0,0,0"],
        vec!["reconstruct"],
    ] {
        let out = moebius(&args);
        assert_eq!(out.status.code(), Some(3), "{args:?}");
        let v = json(&out);
        assert_eq!(v["kind"], "precondition");
        assert_eq!(v["exit_code"], 3);
    }
}

#[test]
fn classify_reports_tag() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "pyr.json", PYRAMID);
    let v = json(&moebius(&["classify", s(&f)]));
    assert_eq!(v["tag"], "SpatialFourCoplanar");
}
