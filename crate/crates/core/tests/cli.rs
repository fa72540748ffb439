use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn gtg(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gtg"))
        .args(args)
        .current_dir(dir)
        .env("SOURCE_DATE_EPOCH", "1700000000")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn json(path: impl AsRef<Path>) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn synth_writes_features_and_truth() {
    let dir = tempfile::tempdir().unwrap();
    let out = gtg(
        &[
            "synth",
            "--n",
            "30",
            "--d",
            "2",
            "--m",
            "3",
            "--separation",
            "6",
            "--seed",
            "1",
            "--out-dir",
            "data",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let features = fs::read_to_string(dir.path().join("data/features.csv")).unwrap();
    let truth = fs::read_to_string(dir.path().join("data/truth.csv")).unwrap();
    assert!(features.starts_with("id,f0,f1\n"));
    assert_eq!(features.lines().count(), 31);
    assert!(truth.starts_with("id,label\n"));
    for class in ["c0", "c1", "c2"] {
        assert_eq!(truth.lines().filter(|l| l.ends_with(&format!(",{class}"))).count(), 10);
    }
}

/// Two seeds and one free object on a line; k = 2 gives scales (5, 4, 5).
#[test]
fn propagate_toy_matches_fixed_point() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("f.csv"), "id,f0\na,0.0\nb,1.0\nc,5.0\n").unwrap();
    fs::write(dir.path().join("l.csv"), "id,label\na,cat\nc,dog\n").unwrap();
    let out = gtg(
        &[
            "propagate",
            "--features",
            "f.csv",
            "--labels",
            "l.csv",
            "--scale-k",
            "2",
            "--out",
            "p.csv",
            "--trace",
            "t.csv",
            "--report",
            "r.json",
            "--dump-weights",
            "w.csv",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    // scalar oracle: x <- x*u0 / (x*u0 + (1-x)*u1) with u0 = w_ab, u1 = w_bc
    let (u0, u1) = ((-1.0f64 / 20.0).exp(), (-4.0f64 / 20.0).exp());
    let mut x = 0.5f64;
    let mut iters = 0;
    loop {
        let next = x * u0 / (x * u0 + (1.0 - x) * u1);
        // two entries move by the same amount
        let residual = (2.0f64).sqrt() * (next - x).abs();
        x = next;
        iters += 1;
        if residual <= 1e-5 || iters == 100 {
            break;
        }
    }
    let labels = fs::read_to_string(dir.path().join("p.csv")).unwrap();
    let lines: Vec<&str> = labels.lines().collect();
    assert_eq!(lines[0], "id,label,confidence,source");
    assert_eq!(lines[1], "a,cat,1.000000,given");
    assert_eq!(lines[2], format!("b,cat,{x:.6},propagated"));
    assert_eq!(lines[3], "c,dog,1.000000,given");

    let report = json(dir.path().join("r.json"));
    assert_eq!(report["iterations"], iters);
    assert_eq!(report["converged"], true);
    assert_eq!(report["config"]["scale_k"], 2);
    assert_eq!(report["config"]["epsilon"], 1e-5);
    let manifest_file = report["manifest"]["file"].as_str().unwrap();
    let manifest = json(dir.path().join(manifest_file));
    assert_eq!(manifest["config"]["gtg"]["scale_k"], 2);
    assert_eq!(manifest["timestamp"], 1_700_000_000u64);

    let trace = fs::read_to_string(dir.path().join("t.csv")).unwrap();
    assert_eq!(trace.lines().next(), Some("iter,residual"));
    assert_eq!(trace.lines().count(), iters + 1);

    let weights = fs::read_to_string(dir.path().join("w.csv")).unwrap();
    let w01: f64 = weights
        .lines()
        .next()
        .unwrap()
        .split(',')
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();
    assert!((w01 - u0).abs() < 1e-12);
}

#[test]
fn propagate_default_scale_k_is_echoed() {
    let dir = tempfile::tempdir().unwrap();
    let mut f = String::from("id,f0\n");
    let mut l = String::from("id,label\n");
    // clusters larger than the scale rank, so scales stay local
    for i in 0..20 {
        f.push_str(&format!("o{i:02},{}\n", i as f64 + if i >= 10 { 30.0 } else { 0.0 }));
    }
    l.push_str("o00,left\no19,right\n");
    fs::write(dir.path().join("f.csv"), f).unwrap();
    fs::write(dir.path().join("l.csv"), l).unwrap();
    let out = gtg(
        &[
            "propagate",
            "--features",
            "f.csv",
            "--labels",
            "l.csv",
            "--out",
            "p.csv",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(dir.path().join("p.csv.report.json"));
    assert_eq!(report["config"]["scale_k"], 7);
    let stdout: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(stdout["propagated"], 18);
    let labels = fs::read_to_string(dir.path().join("p.csv")).unwrap();
    for (i, line) in labels.lines().skip(1).enumerate() {
        let want = if i < 10 { "left" } else { "right" };
        assert_eq!(line.split(',').nth(1), Some(want), "{line}");
    }
}

#[test]
fn propagate_with_prior_mask() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("f.csv"), "id,f0\na,0.0\nb,1.0\nc,5.0\nd,6.0\n").unwrap();
    fs::write(dir.path().join("l.csv"), "id,label\na,x\nd,y\n").unwrap();
    // b sits next to x but is only allowed y or z
    fs::write(dir.path().join("m.csv"), "id,allowed\nb,y;z\n").unwrap();
    let out = gtg(
        &[
            "propagate",
            "--features",
            "f.csv",
            "--labels",
            "l.csv",
            "--classes",
            "z",
            "--scale-k",
            "1",
            "--mask",
            "m.csv",
            "--out",
            "p.csv",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let labels = fs::read_to_string(dir.path().join("p.csv")).unwrap();
    let b = labels.lines().find(|l| l.starts_with("b,")).unwrap();
    assert!(b.starts_with("b,y,"), "{b}");

    fs::write(dir.path().join("bad.csv"), "id,allowed\na,y\n").unwrap();
    let out = gtg(
        &[
            "propagate",
            "--features",
            "f.csv",
            "--labels",
            "l.csv",
            "--mask",
            "bad.csv",
            "--out",
            "p.csv",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 1);
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("f.csv"), "id,f0\na,0.0\nb,1.0\n").unwrap();
    fs::write(dir.path().join("l.csv"), "id,label\na,x\n").unwrap();
    let base = [
        "propagate",
        "--features",
        "f.csv",
        "--labels",
        "l.csv",
        "--out",
        "p.csv",
    ];
    for extra in [
        &["--eps", "0"][..],
        &["--eps", "-1"],
        &["--max-iter", "0"],
        &["--scale-k", "0"],
        &["--bogus"],
    ] {
        let args: Vec<&str> = base.iter().chain(extra).copied().collect();
        assert_eq!(code(&gtg(&args, dir.path())), 2, "{extra:?}");
    }
    assert_eq!(
        code(&gtg(&["eval", "--pred", "l.csv", "--out", "e.json"], dir.path())),
        2
    );
    assert_eq!(
        code(&gtg(
            &[
                "experiment",
                "--features",
                "f.csv",
                "--truth",
                "l.csv",
                "--methods",
                "svm",
                "--out-dir",
                "x"
            ],
            dir.path()
        )),
        2
    );
    assert_eq!(code(&gtg(&["frobnicate"], dir.path())), 2);
}

#[test]
fn input_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("f.csv"), "id,f0\na,0.0\na,1.0\n").unwrap();
    fs::write(dir.path().join("l.csv"), "id,label\na,x\n").unwrap();
    let out = gtg(
        &[
            "propagate",
            "--features",
            "f.csv",
            "--labels",
            "l.csv",
            "--out",
            "p.csv",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
    let out = gtg(
        &[
            "propagate",
            "--features",
            "nope.csv",
            "--labels",
            "l.csv",
            "--out",
            "p.csv",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 1);
}

#[test]
fn eval_reports() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(p.join("truth.csv"), "id,label\nw,a\nx,a\ny,b\nz,b\n").unwrap();
    fs::write(p.join("pred.csv"), "id,label\nw,a\nx,a\ny,a\nz,a\n").unwrap();

    assert_eq!(
        code(&gtg(
            &[
                "eval",
                "--pred",
                "truth.csv",
                "--truth",
                "truth.csv",
                "--out",
                "same.json"
            ],
            p
        )),
        0
    );
    assert_eq!(json(p.join("same.json"))["accuracy"], 1.0);

    assert_eq!(
        code(&gtg(
            &["eval", "--pred", "pred.csv", "--truth", "truth.csv", "--out", "e.json"],
            p
        )),
        0
    );
    let r = json(p.join("e.json"));
    assert!((r["macro_f1"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-12);
    assert_eq!(r["accuracy"], 0.5);
    assert_eq!(r["confusion"], serde_json::json!([[2, 0], [2, 0]]));
    assert_eq!(r["iterations"], Value::Null);

    fs::write(p.join("short.csv"), "id,label\nw,a\n").unwrap();
    assert_eq!(
        code(&gtg(
            &["eval", "--pred", "short.csv", "--truth", "truth.csv", "--out", "e.json"],
            p
        )),
        1
    );
}

#[test]
fn eval_restrict_skips_given_rows() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(p.join("truth.csv"), "id,label\nw,a\nx,b\ny,b\n").unwrap();
    fs::write(
        p.join("pred.csv"),
        "id,label,confidence,source\nw,a,1.000000,given\nx,a,0.600000,propagated\ny,b,0.900000,propagated\n",
    )
    .unwrap();
    gtg(
        &["eval", "--pred", "pred.csv", "--truth", "truth.csv", "--out", "u.json"],
        p,
    );
    gtg(
        &[
            "eval",
            "--pred",
            "pred.csv",
            "--truth",
            "truth.csv",
            "--restrict",
            "all",
            "--out",
            "a.json",
        ],
        p,
    );
    assert_eq!(json(p.join("u.json"))["accuracy"], 0.5);
    assert_eq!(json(p.join("u.json"))["evaluated"], 2);
    assert!((json(p.join("a.json"))["accuracy"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-15);
}

#[test]
fn experiment_writes_nine_reports_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let synth = [
        "synth",
        "--n",
        "300",
        "--d",
        "2",
        "--m",
        "3",
        "--separation",
        "4",
        "--seed",
        "2",
        "--out-dir",
        "d",
    ];
    assert_eq!(code(&gtg(&synth, p)), 0);
    let exp = |out: &str| {
        let o = gtg(
            &[
                "experiment",
                "--features",
                "d/features.csv",
                "--truth",
                "d/truth.csv",
                "--seed",
                "5",
                "--out-dir",
                out,
            ],
            p,
        );
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    };
    exp("r1");
    exp("r2");
    let mut reports = 0;
    for entry in fs::read_dir(p.join("r1")).unwrap() {
        let name = entry.unwrap().file_name().into_string().unwrap();
        let a = fs::read(p.join("r1").join(&name)).unwrap();
        let b = fs::read(p.join("r2").join(&name)).unwrap();
        assert_eq!(a, b, "{name} differs");
        if name.starts_with("report_") {
            reports += 1;
            let r = json(p.join("r1").join(&name));
            for key in [
                "method",
                "labeled_fraction",
                "accuracy",
                "macro_f1",
                "iterations",
                "converged",
                "config",
            ] {
                assert!(r.get(key).is_some(), "{name} lacks {key}");
            }
        }
    }
    assert_eq!(reports, 9);
    let summary = fs::read_to_string(p.join("r1/summary.csv")).unwrap();
    assert_eq!(summary.lines().next(), Some("fraction,method,accuracy,macro_f1"));
    assert_eq!(summary.lines().count(), 10);
    let gtg_report = json(p.join("r1/report_0.02_gtg.json"));
    assert!(gtg_report["relative_improvement"]["linear"].is_number());
}
