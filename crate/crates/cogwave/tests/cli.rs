//! The `cogwave` binary: exit codes, file handoffs and manifest replay.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cogwave::commands::SenseConfig;
use cogwave::io;
use cogwave::sim::{energy_detect, sense_to_mask, Band};
use serde_json::Value;

fn cogwave(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cogwave")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.display().to_string()
}

fn s(p: &Path) -> String {
    p.display().to_string()
}

fn json(path: PathBuf) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// Every file under `dir`, relative, sorted.
fn files(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p.strip_prefix(dir).unwrap().to_path_buf());
            }
        }
    }
    out.sort();
    out
}

fn assert_same_tree(a: &Path, b: &Path) {
    let fa = files(a);
    assert_eq!(fa, files(b));
    for f in fa {
        assert!(fs::read(a.join(&f)).unwrap() == fs::read(b.join(&f)).unwrap(), "{} differs", f.display());
    }
}

const SENSE_LTE: &str = r#"{
  "sample_rate_hz": 40e6, "n_samples": 65536, "bin_hz": 1e6, "threshold_db": 6,
  "noise_power_dbm": 0, "radar_bandwidth_hz": 40e6, "n": 64, "seed": 5,
  "source": {"lte": {"allocation": "1111111111110000000111111", "center_offset_hz": 10e6, "power_dbm": 10}}
}"#;

#[test]
fn help_and_usage_errors() {
    assert_eq!(code(&cogwave(&["--help"])), 0);
    assert_eq!(code(&cogwave(&["design", "--help"])), 0);
    assert_eq!(code(&cogwave(&[])), 1);
    assert_eq!(code(&cogwave(&["design", "--frobnicate"])), 1);
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "d.json", r#"{"m": 2, "n": 8, "theta": 0.5}"#);
    let bad = cogwave(&["design", "--config", &cfg, "--stopband", "0.3", "--out", "x"]);
    assert_eq!(code(&bad), 1);
}

#[test]
fn theta_out_of_range_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let out = s(&dir.path().join("o"));
    let cfg = write(dir.path(), "a.json", r#"{"m": 2, "n": 8, "theta": 1.5}"#);
    let r = cogwave(&["design", "--config", &cfg, "--out", &out]);
    assert_eq!(code(&r), 1);
    assert!(stderr(&r).contains("theta"), "{}", stderr(&r));

    let cfg = write(dir.path(), "b.json", r#"{"m": 2, "n": 8, "theta": [0.2, -0.1]}"#);
    let r = cogwave(&["design", "--config", &cfg, "--out", &out]);
    assert_eq!(code(&r), 1);
    assert!(stderr(&r).contains("theta[1]"), "{}", stderr(&r));

    let cfg = write(dir.path(), "c.json", r#"{"m": 2, "n": 8, "theta": 0.5, "max_sweeps": "many"}"#);
    let r = cogwave(&["design", "--config", &cfg, "--out", &out]);
    assert_eq!(code(&r), 1);
    assert!(stderr(&r).contains("max_sweeps"), "{}", stderr(&r));
}

#[test]
fn sweep_cap_exits_two_with_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let cfg = write(dir.path(), "d.json", r#"{"m": 3, "n": 32, "theta": 0.5, "max_sweeps": 1}"#);
    let r = cogwave(&["design", "--config", &cfg, "--out", &s(&out)]);
    assert_eq!(code(&r), 2, "{}", stderr(&r));
    assert!(out.join("sequences.csv").exists());
    assert_eq!(json(out.join("design.json"))["converged"], Value::Bool(false));
}

#[test]
fn theta_sweep_writes_one_directory_per_weight() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let cfg = write(
        dir.path(),
        "d.json",
        r#"{"m": 4, "n": 64, "levels": 16, "theta": [0, 0.5, 1], "stopbands": [[0.2, 0.3]]}"#,
    );
    let r = cogwave(&["design", "--config", &cfg, "--out", &s(&out)]);
    assert_eq!(code(&r), 0, "{}", stderr(&r));
    for t in ["theta_0", "theta_0.5", "theta_1"] {
        let trace = fs::read_to_string(out.join(t).join("trace.csv")).unwrap();
        let g: Vec<f64> = trace.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
        assert!(g.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{t}: {g:?}");
    }
}

#[test]
fn evaluate_reproduces_the_design_components() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().join("d");
    let e = dir.path().join("e");
    let cfg = write(dir.path(), "d.json", r#"{"m": 3, "n": 48, "theta": 0.6, "stopbands": [[0.1, 0.25], [0.7, 0.8]]}"#);
    assert!([0, 2].contains(&code(&cogwave(&["design", "--config", &cfg, "--out", &s(&d)]))));
    let r = cogwave(&[
        "evaluate",
        "--sequences",
        &s(&d.join("sequences.csv")),
        "--mask",
        &s(&d.join("mask.json")),
        "--out",
        &s(&e),
    ]);
    assert_eq!(code(&r), 0, "{}", stderr(&r));
    let design = json(d.join("design.json"));
    let report = json(e.join("report.json"));
    for key in ["g_s", "g_c"] {
        let (a, b) = (design[key].as_f64().unwrap(), report[key].as_f64().unwrap());
        assert!((a - b).abs() <= 1e-9 * a.abs().max(1e-300), "{key}: {a} vs {b}");
    }
    assert!(e.join("psd_m2.csv").exists() && e.join("xcorr_0_2.csv").exists());
}

#[test]
fn evaluate_edge_cases() {
    let dir = tempfile::tempdir().unwrap();
    let single = write(dir.path(), "one.csv", "m,n,re,im,phase_index,levels\n0,0,1,0,,\n0,1,0,1,,\n0,2,-1,0,,\n");
    let out = dir.path().join("e");
    assert_eq!(code(&cogwave(&["evaluate", "--sequences", &single, "--out", &s(&out)])), 0);
    let report = json(out.join("report.json"));
    assert_eq!(report["g_c"].as_f64(), Some(0.0));
    assert_eq!(report["g_s"].as_f64(), Some(0.0));

    let broken = write(dir.path(), "bad.csv", "m,n,re,im,phase_index,levels\n0,0,1,oops,,\n");
    let r = cogwave(&["evaluate", "--sequences", &broken, "--out", &s(&out)]);
    assert_eq!(code(&r), 1);
    let r = cogwave(&["evaluate", "--sequences", &s(&dir.path().join("missing.csv")), "--out", &s(&out)]);
    assert_eq!(code(&r), 1);
}

#[test]
fn sensed_mask_hands_off_to_design_unchanged() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = write(dir.path(), "s.json", SENSE_LTE);
    let sensed = dir.path().join("s");
    let r = cogwave(&["sense", "--config", &cfg_path, "--out", &s(&sensed)]);
    assert_eq!(code(&r), 0, "{}", stderr(&r));

    let cfg: SenseConfig = io::read_json(Path::new(&cfg_path)).unwrap();
    let bands = energy_detect(&cfg.capture().unwrap(), cfg.sample_rate_hz, cfg.bin_hz, cfg.threshold_db).unwrap();
    let in_process = sense_to_mask(&bands, cfg.radar_center_hz, cfg.radar_bandwidth_hz, cfg.n).unwrap();
    let from_file = io::read_mask(&sensed.join("mask.json")).unwrap();
    assert_eq!(from_file.undesired(), in_process.undesired());
    assert_eq!(from_file.desired(), in_process.desired());

    let design = dir.path().join("d");
    let dcfg = write(dir.path(), "d.json", r#"{"m": 2, "n": 64, "theta": 1, "max_sweeps": 50}"#);
    let r = cogwave(&[
        "design",
        "--config",
        &dcfg,
        "--mask",
        &s(&sensed.join("mask.json")),
        "--out",
        &s(&design),
    ]);
    assert!([0, 2].contains(&code(&r)), "{}", stderr(&r));
    assert_eq!(io::read_mask(&design.join("mask.json")).unwrap(), in_process);
}

#[test]
fn sensing_edge_cases() {
    let dir = tempfile::tempdir().unwrap();
    let silence = write(
        dir.path(),
        "q.json",
        r#"{"sample_rate_hz": 40e6, "n_samples": 16384, "bin_hz": 1e6, "threshold_db": 10,
            "noise_power_dbm": 0, "radar_bandwidth_hz": 40e6, "n": 64, "source": "silence"}"#,
    );
    let out = dir.path().join("q");
    assert_eq!(code(&cogwave(&["sense", "--config", &silence, "--out", &s(&out)])), 0);
    let mask = json(out.join("mask.json"));
    assert_eq!(mask["undesired"], Value::Array(vec![]));

    let comb = write(
        dir.path(),
        "c.json",
        r#"{"sample_rate_hz": 100e6, "n_samples": 65536, "bin_hz": 1e6, "threshold_db": 6,
            "noise_power_dbm": 0, "radar_bandwidth_hz": 40e6, "n": 64,
            "source": {"comb": {"lo_hz": -20e6, "hi_hz": 20e6, "spacing_hz": 250e3, "power_dbm": 0}}}"#,
    );
    let out = dir.path().join("c");
    let r = cogwave(&["sense", "--config", &comb, "--out", &s(&out)]);
    assert_eq!(code(&r), 2, "{}", stderr(&r));
    assert!(fs::read_to_string(out.join("bands.csv")).unwrap().lines().count() > 1);
    assert_eq!(json(out.join("mask.json"))["degenerate"], Value::Bool(true));

    // A quarter-rate tone: 1 MHz at 4 MHz sampling.
    let tone = "1,0\n0,1\n-1,0\n0,-1\n".repeat(256);
    let signal = write(dir.path(), "sig.csv", &format!("re,im\n{tone}"));
    let file = write(
        dir.path(),
        "f.json",
        &format!(
            r#"{{"sample_rate_hz": 4e6, "n_samples": 0, "bin_hz": 1e6, "threshold_db": 6,
                "radar_bandwidth_hz": 4e6, "n": 16, "source": {{"file": {{"path": "{signal}"}}}}}}"#
        ),
    );
    let out = dir.path().join("f");
    let r = cogwave(&["sense", "--config", &file, "--out", &s(&out)]);
    assert_eq!(code(&r), 0, "{}", stderr(&r));
    let bands: Vec<Band> = io::read_csv(&out.join("bands.csv")).unwrap();
    assert_eq!(bands.len(), 1);
    assert!(bands[0].lo_hz <= 1e6 && 1e6 <= bands[0].hi_hz, "{bands:?}");
}

#[test]
fn degenerate_scene_stops_simulate_after_the_sensing_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "sc.json",
        r#"{"trials": 1, "sensing": {"lte_power_dbm": 10, "noise_power_dbm": 0, "n_samples": 16384,
            "bin_hz": 1e6, "threshold_db": -30}}"#,
    );
    let out = dir.path().join("o");
    let r = cogwave(&["simulate", "--config", &cfg, "--out", &s(&out)]);
    assert_eq!(code(&r), 1, "{}", stderr(&r));
    assert!(stderr(&r).contains("degenerate"), "{}", stderr(&r));
    assert!(out.join("bands.csv").exists() && out.join("mask.json").exists());
    assert!(!out.join("summary.csv").exists());
}

#[test]
fn replay_reproduces_every_command_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let sense_cfg = write(root, "s.json", SENSE_LTE);
    let design_cfg = write(root, "d.json", r#"{"m": 2, "n": 64, "theta": [0.25, 1], "seed": 9, "max_sweeps": 40}"#);
    let scenario = write(
        root,
        "sc.json",
        r#"{"trials": 1, "lte_powers_dbm": [20], "constellations": ["qpsk"],
            "design": {"theta": 0.75, "zeta": 1e-5, "max_sweeps": 5, "grid_points": 256}}"#,
    );
    let runs: Vec<(&str, Vec<String>)> = vec![
        ("s", vec!["sense".into(), "--config".into(), sense_cfg]),
        (
            "d",
            vec![
                "design".into(),
                "--config".into(),
                design_cfg,
                "--mask".into(),
                s(&root.join("s/mask.json")),
            ],
        ),
        (
            "e",
            vec![
                "evaluate".into(),
                "--sequences".into(),
                s(&root.join("d/theta_1/sequences.csv")),
                "--stopband".into(),
                "0.1:0.2".into(),
            ],
        ),
        ("m", vec!["simulate".into(), "--config".into(), scenario]),
    ];
    for (name, mut args) in runs {
        let first = root.join(name);
        args.extend(["--out".into(), s(&first)]);
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let r = cogwave(&args);
        assert!([0, 2].contains(&code(&r)), "{name}: {}", stderr(&r));
        let again = root.join(format!("{name}_replay"));
        let r2 = cogwave(&["replay", &s(&first.join("manifest.json")), "--out", &s(&again)]);
        assert_eq!(code(&r), code(&r2), "{name}: {}", stderr(&r2));
        assert_same_tree(&first, &again);
    }
}

#[test]
fn replay_refuses_changed_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let seqs = write(dir.path(), "x.csv", "m,n,re,im,phase_index,levels\n0,0,1,0,,\n0,1,1,0,,\n");
    let out = dir.path().join("e");
    assert_eq!(code(&cogwave(&["evaluate", "--sequences", &seqs, "--out", &s(&out)])), 0);
    fs::write(&seqs, "m,n,re,im,phase_index,levels\n0,0,1,0,,\n0,1,-1,0,,\n").unwrap();
    let r = cogwave(&["replay", &s(&out.join("manifest.json")), "--out", &s(&dir.path().join("r"))]);
    assert_eq!(code(&r), 1);
    assert!(stderr(&r).contains("changed"), "{}", stderr(&r));
}
