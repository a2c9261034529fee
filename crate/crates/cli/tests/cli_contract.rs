//! Binary-level contract: exit codes, flag-at-fault messages, determinism
//! of file outputs, and the selftest command.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

mod common;

fn maxent() -> Command {
    Command::new(env!("CARGO_BIN_EXE_maxent"))
}

fn write(path: &Path, text: &str) {
    fs::write(path, text).unwrap();
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Report text with the wall-clock line dropped; everything else must be
/// byte-stable across identical runs.
fn strip_timings(text: &str) -> String {
    text.lines().filter(|l| !l.contains("timings_ms")).collect::<Vec<_>>().join("\n")
}

#[test]
fn invert_trivial_bounded_average() {
    let dir = tempfile::tempdir().unwrap();
    let w = dir.path().join("w.csv");
    let z = dir.path().join("z.csv");
    let out = dir.path().join("x.csv");
    let report = dir.path().join("r.json");
    write(&w, "1\n1\n");
    write(&z, "1.0\n");
    let res = maxent()
        .args(["invert", "--w"])
        .arg(&w)
        .arg("--z")
        .arg(&z)
        .args(["--prior", "ted", "--out"])
        .arg(&out)
        .arg("--report")
        .arg(&report)
        .output()
        .unwrap();
    assert_eq!(res.status.code(), Some(0), "stderr: {}", stderr(&res));
    let x = fs::read_to_string(&out).unwrap();
    let vals: Vec<f64> = x.lines().map(|l| l.parse().unwrap()).collect();
    assert_eq!(vals.len(), 2);
    assert!((vals[0] - 0.5).abs() < 1e-12 && (vals[1] - 0.5).abs() < 1e-12);
    let report_text = fs::read_to_string(&report).unwrap();
    assert!(report_text.contains("\"converged\": true"));
}

#[test]
fn invert_rank_deficient_exits_one_naming_rank() {
    let dir = tempfile::tempdir().unwrap();
    let w = dir.path().join("w.csv");
    let z = dir.path().join("z.csv");
    write(&w, "1,2\n0,0\n0,0\n");
    write(&z, "1.0\n0.5\n");
    let res = maxent()
        .args(["invert", "--w"])
        .arg(&w)
        .arg("--z")
        .arg(&z)
        .args(["--prior", "gaussian", "--out"])
        .arg(dir.path().join("x.csv"))
        .arg("--report")
        .arg(dir.path().join("r.json"))
        .output()
        .unwrap();
    assert_eq!(res.status.code(), Some(1));
    let msg = stderr(&res);
    assert!(msg.contains("rank"), "stderr was: {msg}");
    assert!(msg.contains("--w"), "stderr was: {msg}");
}

#[test]
fn invert_infeasible_exits_two() {
    // z above anything reachable from [0,1]^2 through W = (1,2)^T
    let dir = tempfile::tempdir().unwrap();
    let w = dir.path().join("w.csv");
    let z = dir.path().join("z.csv");
    write(&w, "1\n2\n");
    write(&z, "3.5\n");
    let res = maxent()
        .args(["invert", "--w"])
        .arg(&w)
        .arg("--z")
        .arg(&z)
        .args(["--prior", "ted", "--out"])
        .arg(dir.path().join("x.csv"))
        .arg("--report")
        .arg(dir.path().join("r.json"))
        .output()
        .unwrap();
    assert_eq!(res.status.code(), Some(2), "stderr: {}", stderr(&res));
    assert!(stderr(&res).contains("infeasible"));
}

#[test]
fn invert_per_element_priors() {
    let dir = tempfile::tempdir().unwrap();
    let w = dir.path().join("w.csv");
    let z = dir.path().join("z.csv");
    let ids = dir.path().join("ids.csv");
    let out = dir.path().join("x.csv");
    write(&w, "1\n1\n");
    write(&z, "1.4\n");
    write(&ids, "2\n4\n"); // exponential, doubly-bounded
    let res = maxent()
        .args(["invert", "--w"])
        .arg(&w)
        .arg("--z")
        .arg(&z)
        .arg("--prior-per-element")
        .arg(&ids)
        .arg("--out")
        .arg(&out)
        .arg("--report")
        .arg(dir.path().join("r.json"))
        .output()
        .unwrap();
    assert_eq!(res.status.code(), Some(0), "stderr: {}", stderr(&res));
    let vals: Vec<f64> = fs::read_to_string(&out)
        .unwrap()
        .lines()
        .map(|l| l.parse().unwrap())
        .collect();
    assert!(vals[1] > 0.0 && vals[1] < 1.0);
    assert!(((vals[0] + vals[1]) - 1.4).abs() <= 1e-9);

    write(&ids, "2\n9\n");
    let res = maxent()
        .args(["invert", "--w"])
        .arg(&w)
        .arg("--z")
        .arg(&z)
        .arg("--prior-per-element")
        .arg(&ids)
        .arg("--out")
        .arg(&out)
        .arg("--report")
        .arg(dir.path().join("r.json"))
        .output()
        .unwrap();
    assert_eq!(res.status.code(), Some(1));
    assert!(stderr(&res).contains("--prior-per-element"));
}

#[test]
fn invert_requires_a_prior_flag() {
    let dir = tempfile::tempdir().unwrap();
    let w = dir.path().join("w.csv");
    let z = dir.path().join("z.csv");
    write(&w, "1\n1\n");
    write(&z, "1.0\n");
    let res = maxent()
        .args(["invert", "--w"])
        .arg(&w)
        .arg("--z")
        .arg(&z)
        .arg("--out")
        .arg(dir.path().join("x.csv"))
        .arg("--report")
        .arg(dir.path().join("r.json"))
        .output()
        .unwrap();
    assert_eq!(res.status.code(), Some(1));
}

#[test]
fn spectrum_deterministic_and_seed_override() {
    let dir = tempfile::tempdir().unwrap();
    let r1 = dir.path().join("r1.json");
    let r2 = dir.path().join("r2.json");
    let r3 = dir.path().join("r3.json");
    for (path, envseed) in [(&r1, None), (&r2, None), (&r3, Some("9"))] {
        let mut cmd = maxent();
        cmd.args(["spectrum", "--nfft", "64", "--order", "3", "--seed", "5", "--report"])
            .arg(path);
        match envseed {
            Some(s) => {
                cmd.env("MAXENT_SEED", s);
            }
            None => {
                cmd.env_remove("MAXENT_SEED");
            }
        }
        let res = cmd.output().unwrap();
        assert_eq!(res.status.code(), Some(0), "stderr: {}", stderr(&res));
    }
    let t1 = strip_timings(&fs::read_to_string(&r1).unwrap());
    let t2 = strip_timings(&fs::read_to_string(&r2).unwrap());
    let t3 = strip_timings(&fs::read_to_string(&r3).unwrap());
    assert_eq!(t1, t2, "identical flags+seed must give identical reports");
    assert_ne!(t1, t3, "MAXENT_SEED must override --seed");
    assert!(t3.contains("\"seed\": 9"));
}

#[test]
fn spectrum_white_noise_input_scaled_down() {
    // the scaled-down rerun: any signal may be supplied; a white-noise-like
    // one keeps the fitted AR poles small so the two spectra coincide
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("signal.csv");
    let mut r = common::rng(314);
    let mut text = String::new();
    for _ in 0..32 {
        text.push_str(&format!("{:.17}\n", rand_sample(&mut r)));
    }
    write(&input, &text);
    let report = dir.path().join("r.json");
    let res = maxent()
        .args(["spectrum", "--nfft", "32", "--order", "2", "--input"])
        .arg(&input)
        .arg("--report")
        .arg(&report)
        .output()
        .unwrap();
    assert_eq!(res.status.code(), Some(0), "stderr: {}", stderr(&res));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert!(report["max_rel_deviation"].as_f64().unwrap() <= 1e-6);
}

fn rand_sample(r: &mut rand_chacha::ChaCha8Rng) -> f64 {
    use rand::Rng;
    r.sample::<f64, _>(rand_distr::StandardNormal)
}

#[test]
fn spectrum_order_zero_is_flat() {
    // a single mean constraint makes every bin equal; the flat level is
    // nfft * r0 so that the weighted fold reproduces the lag-0 ACF
    use maxent_cli::spectrum::{generate_signal, spectrum_pipeline};
    let nfft = 32;
    let signal = generate_signal(nfft, 3);
    let out = spectrum_pipeline(&signal, 0).unwrap();
    let r0 = signal.iter().map(|v| v * v).sum::<f64>() / nfft as f64;
    let expected = nfft as f64 * r0;
    for &v in out.x_bar.iter() {
        assert!((v - expected).abs() <= 1e-9 * expected, "{v} vs flat level {expected}");
    }
    assert!(out.max_rel_deviation <= 1e-10);
}

#[test]
fn spectrum_rejects_bad_input_length() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("signal.csv");
    write(&input, "1.0\n2.0\n3.0\n");
    let res = maxent()
        .args(["spectrum", "--nfft", "32", "--order", "2", "--input"])
        .arg(&input)
        .arg("--report")
        .arg(dir.path().join("r.json"))
        .output()
        .unwrap();
    assert_eq!(res.status.code(), Some(1));
    assert!(stderr(&res).contains("--input"));
}

#[test]
fn invert_outputs_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let w = dir.path().join("w.csv");
    let z = dir.path().join("z.csv");
    write(&w, "1,0.5\n1,-0.25\n1,2\n0.5,1\n");
    write(&z, "1.1\n0.7\n");
    let mut outs = Vec::new();
    for run in 0..2 {
        let out = dir.path().join(format!("x{run}.csv"));
        let res = maxent()
            .args(["invert", "--w"])
            .arg(&w)
            .arg("--z")
            .arg(&z)
            .args(["--prior", "exp", "--out"])
            .arg(&out)
            .arg("--report")
            .arg(dir.path().join(format!("r{run}.json")))
            .output()
            .unwrap();
        assert_eq!(res.status.code(), Some(0), "stderr: {}", stderr(&res));
        outs.push(fs::read(&out).unwrap());
    }
    assert_eq!(outs[0], outs[1]);
    let t0 = strip_timings(&fs::read_to_string(dir.path().join("r0.json")).unwrap());
    let t1 = strip_timings(&fs::read_to_string(dir.path().join("r1.json")).unwrap());
    assert_eq!(t0, t1);
}

#[test]
fn autoencode_rejects_keep_not_below_side() {
    let dir = tempfile::tempdir().unwrap();
    let archive = common::digit_archive(dir.path(), 1, 1, 28);
    let res = maxent()
        .args(["autoencode", "--images"])
        .arg(&archive)
        .args(["--count", "1", "--side", "28", "--keep", "28", "--out-dir"])
        .arg(dir.path().join("out"))
        .arg("--report")
        .arg(dir.path().join("r.json"))
        .output()
        .unwrap();
    assert_eq!(res.status.code(), Some(1));
    assert!(stderr(&res).contains("keep"));
}

#[test]
fn autoencode_rejects_label_magic() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("labels.idx");
    let mut bytes = Vec::new();
    bytes.extend_from_slice(&0x0000_0801u32.to_be_bytes());
    bytes.extend_from_slice(&1u32.to_be_bytes());
    bytes.push(7);
    fs::write(&bad, bytes).unwrap();
    let res = maxent()
        .args(["autoencode", "--images"])
        .arg(&bad)
        .args(["--count", "1", "--side", "28", "--keep", "7", "--out-dir"])
        .arg(dir.path().join("out"))
        .arg("--report")
        .arg(dir.path().join("r.json"))
        .output()
        .unwrap();
    assert_eq!(res.status.code(), Some(1));
    assert!(stderr(&res).contains("--images"));
}

#[test]
fn selftest_passes_and_env_override_breaks_it() {
    let res = maxent().arg("selftest").env_remove("MAXENT_SELFTEST_TOL_SCALE").output().unwrap();
    assert_eq!(res.status.code(), Some(0), "stderr: {}", stderr(&res));
    let table = String::from_utf8_lossy(&res.stdout).into_owned();
    assert!(table.contains("PASS"));
    assert!(!table.contains("FAIL"));

    let res = maxent()
        .arg("selftest")
        .env("MAXENT_SELFTEST_TOL_SCALE", "1e-30")
        .output()
        .unwrap();
    assert_ne!(res.status.code(), Some(0));

    let res = maxent()
        .args(["selftest", "--json"])
        .env_remove("MAXENT_SELFTEST_TOL_SCALE")
        .output()
        .unwrap();
    assert_eq!(res.status.code(), Some(0));
    let parsed: serde_json::Value =
        serde_json::from_slice(&res.stdout).expect("selftest --json must emit valid JSON");
    assert_eq!(parsed["all_passed"], serde_json::Value::Bool(true));
    assert_eq!(parsed["checks"].as_array().unwrap().len(), 5);
}
