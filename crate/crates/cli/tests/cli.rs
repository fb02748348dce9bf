use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use jpeg_noise::io::{read_plane, write_pgm, write_plane, AnyPlane};
use jpeg_noise::synth::{synth_image, SynthConfig};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_jpegnoise"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn pgm(dir: &Path, name: &str, side: usize, seed: u64) -> PathBuf {
    let img = synth_image(side, side, seed, &SynthConfig::default()).unwrap();
    let p = dir.join(name);
    write_pgm(&p, &img, 255, true).unwrap();
    p
}

fn ok(o: &Output) {
    assert!(o.status.success(), "exit {:?}\nstdout:\n{}\nstderr:\n{}", o.status.code(), stdout(o), stderr(o));
}

#[test]
fn simulate_writes_two_cycle_trace() {
    let d = tempfile::tempdir().unwrap();
    pgm(d.path(), "a.pgm", 64, 1);
    let o = run(d.path(), &["simulate", "--input", "a.pgm", "--tables", "qf:75", "qf:90", "--out", "t"]);
    ok(&o);
    let t = d.path().join("t");
    for f in ["trace.toml", "summary.csv", "manifest.json", "source.plane"] {
        assert!(t.join(f).is_file(), "{f}");
    }
    for k in 1..=2 {
        for f in ["levels.plane", "output.plane", "rounding_noise.plane", "table.txt"] {
            assert!(t.join(format!("cycle_{k}")).join(f).is_file(), "cycle {k} {f}");
        }
    }
    assert!(!t.join("cycle_3").exists());
    let summary = fs::read_to_string(t.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 3);
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(t.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "simulate");
    assert_eq!(manifest["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn missing_table_file_is_a_config_error() {
    let d = tempfile::tempdir().unwrap();
    pgm(d.path(), "a.pgm", 32, 1);
    let o = run(d.path(), &["simulate", "--input", "a.pgm", "--tables", "nope.txt", "--out", "t"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("nope.txt"));
    assert!(!d.path().join("t").exists());
}

#[test]
fn malformed_pgm_is_a_parse_error() {
    let d = tempfile::tempdir().unwrap();
    fs::write(d.path().join("bad.pgm"), b"P5\n16 16\n255\nshort").unwrap();
    let o = run(d.path(), &["simulate", "--input", "bad.pgm", "--tables", "qf:75", "--out", "t"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn clipping_only_changes_saturated_pixels() {
    let d = tempfile::tempdir().unwrap();
    // Bright image so that a coarse table overshoots 255.
    let img = synth_image(64, 64, 4, &SynthConfig::default())
        .unwrap()
        .map(|v| (v + 110).clamp(0, 255));
    write_pgm(d.path().join("b.pgm"), &img, 255, true).unwrap();
    for (out, clip) in [("plain", false), ("clipped", true)] {
        let mut args = vec!["simulate", "--input", "b.pgm", "--tables", "qf:20", "--out", out];
        if clip {
            args.push("--clip");
        }
        ok(&run(d.path(), &args));
    }
    let read = |dir: &str| {
        read_plane(d.path().join(dir).join("cycle_1").join("output.plane"))
            .unwrap()
            .into_int()
            .unwrap()
    };
    let (plain, clipped) = (read("plain"), read("clipped"));
    let mut differing = 0;
    for (a, b) in plain.as_slice().iter().zip(clipped.as_slice()) {
        if a != b {
            differing += 1;
            assert!(*a > 255 || *a < 0, "unsaturated pixel {a} changed to {b}");
            assert_eq!(*b, (*a).clamp(0, 255));
        }
    }
    assert!(differing > 0, "test image never saturated");
}

#[test]
fn estimate_recovers_simulated_step() {
    let d = tempfile::tempdir().unwrap();
    pgm(d.path(), "a.pgm", 128, 7);
    fs::write(d.path().join("q5.txt"), "5\n").unwrap();
    ok(&run(d.path(), &["simulate", "--input", "a.pgm", "--tables", "q5.txt", "--out", "t"]));
    let o = run(d.path(), &["estimate-qstep", "--input", "t/cycle_1/output.plane", "--out", "e"]);
    ok(&o);
    assert_eq!(stdout(&o).trim(), "5");
    let est = fs::read_to_string(d.path().join("e/estimates.csv")).unwrap();
    assert!(est.lines().nth(1).unwrap().contains(",5,"));
    assert!(d.path().join("e/curves.csv").is_file());
}

#[test]
fn estimate_reads_config_file() {
    let d = tempfile::tempdir().unwrap();
    pgm(d.path(), "a.pgm", 64, 2);
    fs::write(d.path().join("bad.toml"), "t_c = 0.1\nunknown_key = 3\n").unwrap();
    let o = run(d.path(), &["estimate-qstep", "--input", "a.pgm", "--config", "bad.toml", "--out", "e"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    fs::write(d.path().join("neg.toml"), "t_c = -1.0\n").unwrap();
    let o = run(d.path(), &["estimate-qstep", "--input", "a.pgm", "--config", "neg.toml", "--out", "e"]);
    assert_ne!(o.status.code(), Some(0));
}

#[test]
fn detect_separates_single_and_double_with_unit_table() {
    let d = tempfile::tempdir().unwrap();
    pgm(d.path(), "a.pgm", 128, 3);
    ok(&run(d.path(), &["simulate", "--input", "a.pgm", "--tables", "qf:100", "qf:100", "--clip", "--out", "t"]));
    let o = run(
        d.path(),
        &["detect-recompress", "--input", "t/cycle_1/levels.plane", "t/cycle_2/levels.plane", "--table", "qf:100", "--out", "r"],
    );
    ok(&o);
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].contains("\tSINGLE\t"), "{out}");
    assert!(lines[1].contains("\tIDENTICAL_DOUBLE\t"), "{out}");
    assert!(d.path().join("r/detections.csv").is_file());
}

#[test]
fn detect_without_unit_step_is_out_of_domain() {
    let d = tempfile::tempdir().unwrap();
    pgm(d.path(), "a.pgm", 64, 3);
    fs::write(d.path().join("q5.txt"), "5\n").unwrap();
    ok(&run(d.path(), &["simulate", "--input", "a.pgm", "--tables", "q5.txt", "--out", "t"]));
    let o = run(d.path(), &["detect-recompress", "--input", "t/cycle_1/levels.plane", "--table", "q5.txt", "--out", "r"]);
    ok(&o);
    assert!(stdout(&o).contains("OUT_OF_DOMAIN"));
    assert!(stderr(&o).contains("warning"));
}

#[test]
fn detector_calibration_needs_two_classes() {
    let d = tempfile::tempdir().unwrap();
    pgm(d.path(), "a.pgm", 64, 3);
    ok(&run(d.path(), &["simulate", "--input", "a.pgm", "--tables", "qf:100", "--out", "t"]));
    let o = run(d.path(), &["calibrate-detector", "--single", "t/cycle_1/levels.plane", "--out", "c"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn detector_calibration_on_synthetic_pairs() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), &["calibrate-detector", "--images", "12", "--side", "64", "--out", "c"]);
    ok(&o);
    let cfg: toml::Table = fs::read_to_string(d.path().join("c/detector.toml")).unwrap().parse().unwrap();
    let t = cfg["threshold"].as_float().unwrap();
    assert!(t > 0.0 && t < 1.0 / 12.0, "{t}");
}

#[test]
fn qstep_calibration_writes_thresholds() {
    let d = tempfile::tempdir().unwrap();
    ok(&run(d.path(), &["calibrate-qstep", "--images", "4", "--side", "32", "--steps", "1..4", "--out", "c"]));
    let cfg: toml::Table = fs::read_to_string(d.path().join("c/qstep.toml")).unwrap().parse().unwrap();
    assert!(cfg["t_c"].as_float().unwrap() > 0.0);
    assert!(cfg["t_xi"].as_float().unwrap() > 0.0);
    // The written file is a valid --config for estimation.
    pgm(d.path(), "a.pgm", 64, 2);
    ok(&run(d.path(), &["estimate-qstep", "--input", "a.pgm", "--config", "c/qstep.toml", "--out", "e"]));
}

#[test]
fn validate_model_is_deterministic_for_a_seed() {
    let d = tempfile::tempdir().unwrap();
    let args = |out: &'static str| ["validate-model", "--images", "4", "--side", "128", "--seed", "9", "--out", out];
    ok(&run(d.path(), &args("v1")));
    ok(&run(d.path(), &args("v2")));
    let a = fs::read(d.path().join("v1/checks.csv")).unwrap();
    let b = fs::read(d.path().join("v2/checks.csv")).unwrap();
    assert_eq!(a, b);
    assert!(String::from_utf8(a).unwrap().starts_with("name,statistic,threshold,rule,verdict,samples,detail\n"));
}

#[test]
fn tampered_trace_fails_integrity_row() {
    let d = tempfile::tempdir().unwrap();
    pgm(d.path(), "a.pgm", 64, 5);
    ok(&run(d.path(), &["simulate", "--input", "a.pgm", "--tables", "qf:75", "qf:75", "--out", "t"]));
    let f = d.path().join("t/cycle_1/dequantized.plane");
    let mut p = read_plane(&f).unwrap().into_real();
    let v = p.get(3, 3) + 1.0;
    p.set(3, 3, v);
    write_plane(&f, &AnyPlane::Real(p)).unwrap();

    let base = ["validate-model", "--images", "4", "--side", "128", "--trace", "t", "--out"];
    let o = run(d.path(), &[&base[..], &["v"]].concat());
    ok(&o);
    let report = fs::read_to_string(d.path().join("v/checks.csv")).unwrap();
    let row = report.lines().find(|l| l.starts_with("trace_integrity:")).unwrap();
    assert!(row.contains(",FAIL,"), "{row}");

    let o = run(d.path(), &[&base[..], &["v2", "--strict"]].concat());
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
}

#[test]
fn gen_table_prints_and_writes_files() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), &["gen-table", "--quality", "50", "--out", "g"]);
    ok(&o);
    let text = stdout(&o);
    assert!(text.lines().any(|l| l.split_whitespace().next() == Some("16")), "{text}");
    for f in ["table.txt", "table.csv", "header.jpg", "manifest.json"] {
        assert!(d.path().join("g").join(f).is_file(), "{f}");
    }
    // Both the text file and the JPEG header are accepted wherever a table is.
    pgm(d.path(), "a.pgm", 32, 1);
    ok(&run(d.path(), &["simulate", "--input", "a.pgm", "--tables", "g/table.txt", "g/header.jpg", "--out", "t"]));
    let summary = fs::read_to_string(d.path().join("t/summary.csv")).unwrap();
    let digests: Vec<&str> = summary.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(digests[0], digests[1]);

    let o = run(d.path(), &["gen-table", "--quality", "0"]);
    assert_ne!(o.status.code(), Some(0));
}

#[test]
fn benchmark_estimator_writes_accuracy_table() {
    let d = tempfile::tempdir().unwrap();
    let o = run(
        d.path(),
        &["benchmark", "--task", "estimator", "--images", "4", "--sizes", "64,32", "--steps", "1..3", "--out", "b"],
    );
    ok(&o);
    let csv = fs::read_to_string(d.path().join("b/accuracy.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 3);
}

#[test]
fn benchmark_detector_reports_out_of_domain_tables() {
    let d = tempfile::tempdir().unwrap();
    let o = run(
        d.path(),
        &["benchmark", "--task", "detector", "--images", "6", "--sizes", "32", "--qf", "100,50", "--out", "b"],
    );
    ok(&o);
    let csv = fs::read_to_string(d.path().join("b/accuracy.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.lines().any(|l| l.contains("true")), "{csv}");
}
