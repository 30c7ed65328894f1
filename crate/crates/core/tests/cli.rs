use std::path::Path;
use std::process::{Command, Output};

use scseg::io::{load_mask, save_image, save_mask};
use scseg::{BasisSet, GrayImage, LabelMask, SynthKind, SynthSpec, Tiling};

fn scseg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scseg"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn segment_flat_image_gives_empty_mask() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("flat.pgm");
    let mask = dir.path().join("m.png");
    save_image(&GrayImage::filled(96, 80, 140.0).unwrap(), &input).unwrap();
    let out = scseg(&["segment", s(&input), "--mask-out", s(&mask)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let m = load_mask(&mask).unwrap();
    assert_eq!((m.width(), m.height()), (96, 80));
    assert_eq!(m.foreground_count(), 0);
}

#[test]
fn eval_self_comparison_is_perfect() {
    let dir = tempfile::tempdir().unwrap();
    let mask = dir.path().join("m.png");
    let report = dir.path().join("r.json");
    let flags: Vec<bool> = (0..64 * 64).map(|i| i % 13 == 0).collect();
    save_mask(&LabelMask::from_foreground_flags(64, 64, &flags).unwrap(), &mask).unwrap();
    let out = scseg(&["eval", "--pred", s(&mask), "--truth", s(&mask), "--report", s(&report)]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["mode"], "macro");
    for key in ["precision", "recall", "f1"] {
        assert_eq!(v["aggregate"][key], 1.0);
        assert_eq!(v["per_image"][0][key], 1.0);
    }
    assert_eq!(v["per_image"][0]["name"], "m.png");
    assert_eq!(v["per_image"][0]["fp"], 0);
}

#[test]
fn synth_segment_eval_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n);
    let out = scseg(&[
        "synth", "--kind", "outliers", "--out", s(&p("img.pgm")), "--truth-out", s(&p("truth.png")),
        "--width", "128", "--height", "64", "--fraction", "0.1", "--offset", "90", "--seed", "3",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let out = scseg(&[
        "segment", s(&p("img.pgm")), "--mask-out", s(&p("pred.png")), "--fill-out", s(&p("fill.pgm")),
        "--decisions-out", s(&p("decisions.json")),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let d: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(p("decisions.json")).unwrap()).unwrap();
    assert_eq!(d["grid_cols"], 2);
    assert_eq!(d["params"]["block_size"], 64);
    assert!(d["blocks"].as_array().unwrap().iter().all(|b| b["stage"] == "Ransac"));
    assert_eq!(d["blocks"][0]["coeffs"].as_array().unwrap().len(), 10);

    let fill = scseg::io::load_image(p("fill.pgm")).unwrap();
    assert_eq!((fill.width(), fill.height()), (128, 64));

    let out = scseg(&["eval", "--pred", s(&p("pred.png")), "--truth", s(&p("truth.png")), "--micro", "--report", s(&p("r.json"))]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(p("r.json")).unwrap()).unwrap();
    assert_eq!(v["mode"], "micro");
    assert!(v["aggregate"]["f1"].as_f64().unwrap() > 0.99);
    assert!(String::from_utf8_lossy(&out.stdout).contains("Precision"));
}

#[test]
fn eval_directory_mode_pairs_by_stem() {
    let dir = tempfile::tempdir().unwrap();
    let pred = dir.path().join("pred");
    let truth = dir.path().join("truth");
    std::fs::create_dir_all(&pred).unwrap();
    std::fs::create_dir_all(&truth).unwrap();

    let full = LabelMask::from_foreground_flags(4, 4, &[true; 16]).unwrap();
    let empty = LabelMask::background(4, 4);
    save_mask(&full, pred.join("a.png")).unwrap();
    save_mask(&full, truth.join("a.pgm")).unwrap();
    save_mask(&empty, pred.join("b.png")).unwrap();
    save_mask(&full, truth.join("b.png")).unwrap();
    save_mask(&full, pred.join("orphan.png")).unwrap();

    let report = dir.path().join("r.json");
    let out = scseg(&["eval", "--pred", s(&pred), "--truth", s(&truth), "--report", s(&report)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    let names: Vec<&str> = v["per_image"].as_array().unwrap().iter().map(|r| r["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["a", "b"]);
    // a: perfect; b: precision 1 by convention, recall 0.
    assert_eq!(v["aggregate"]["precision"], 1.0);
    assert_eq!(v["aggregate"]["recall"], 0.5);
    assert_eq!(v["aggregate"]["tp"], 16);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n);
    let basis = BasisSet::new(64, 10).unwrap();
    let (img, _) = scseg::generate_image(&SynthSpec::new(64, SynthKind::Smooth, 4), &basis, 200, 130, Tiling::Mixed).unwrap();
    save_image(&img, p("x.pgm")).unwrap();
    for (name, threads) in [("1.pgm", "1"), ("2.pgm", "4")] {
        let out = scseg(&["segment", s(&p("x.pgm")), "--seed", "7", "--threads", threads, "--mask-out", s(&p(name))]);
        assert!(out.status.success());
    }
    assert_eq!(std::fs::read(p("1.pgm")).unwrap(), std::fs::read(p("2.pgm")).unwrap());
}

#[test]
fn errors_exit_nonzero_with_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n);

    let out = scseg(&["segment", "--mask-out", "x.png"]);
    assert!(!out.status.success());

    let out = scseg(&["segment", s(&p("missing.pgm")), "--mask-out", s(&p("m.png"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.pgm"));

    std::fs::write(p("junk.pgm"), b"P5\n10 10\n255\nabc").unwrap();
    let out = scseg(&["segment", s(&p("junk.pgm")), "--mask-out", s(&p("m.png"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("corrupt"));

    save_image(&GrayImage::filled(8, 8, 1.0).unwrap(), p("ok.pgm")).unwrap();
    let out = scseg(&["segment", s(&p("ok.pgm")), "--mask-out", s(&p("m.png")), "--consensus", "1.5"]);
    assert_eq!(out.status.code(), Some(1));
    let out = scseg(&["segment", s(&p("ok.pgm")), "--mask-out", s(&p("m.png")), "--threads", "0"]);
    assert_eq!(out.status.code(), Some(1));

    save_mask(&LabelMask::background(8, 8), p("a.png")).unwrap();
    save_mask(&LabelMask::background(8, 9), p("b.png")).unwrap();
    let out = scseg(&["eval", "--pred", s(&p("a.png")), "--truth", s(&p("b.png")), "--report", s(&p("r.json"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("mismatch"));
}
