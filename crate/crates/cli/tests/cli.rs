//! Command-line behavior: exit codes, flag precedence, file round trips.

use std::path::{Path, PathBuf};
use std::process::Command;

fn mvk() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mvk"))
}

fn tmp_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("mvk_cli_{}_{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn small_config(dir: &Path, seed: u64) -> PathBuf {
    let path = dir.join("config.json");
    // interaction-free variant keeps initial and terminal supports aligned,
    // so the tiny indicator dictionary stays fully covered
    let cfg = serde_json::json!({
        "model": {"name": "cormier", "j": 0.0, "init": [-2.0, 2.0]},
        "ips": {"particles": 500, "step": 0.1, "horizon": 1.0},
        "decoupled": {"trajectories": 500, "step": 0.1, "lag": 0.5},
        "dictionary": {"kind": "indicator1d", "n": 20},
        "edmd": {"n_eig": 4, "reg": 0.0, "symmetry_augment": false},
        "seed": seed,
        "output": dir.join("out")
    });
    std::fs::write(&path, serde_json::to_string_pretty(&cfg).unwrap()).unwrap();
    path
}

#[test]
fn help_exits_zero_everywhere() {
    for args in [
        vec!["--help"],
        vec!["ips", "--help"],
        vec!["decoupled", "--help"],
        vec!["edmd", "--help"],
        vec!["sweep", "--help"],
        vec!["bench", "--help"],
    ] {
        let out = mvk().args(&args).output().unwrap();
        assert!(out.status.success(), "{args:?} exited {:?}", out.status.code());
    }
}

#[test]
fn unknown_flags_and_commands_exit_two() {
    let out = mvk().args(["ips", "--no-such-flag"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = mvk().args(["frobnicate"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_config_exits_two() {
    let dir = tmp_dir("badcfg");
    let path = dir.join("broken.json");
    std::fs::write(&path, "{ not json").unwrap();
    let out = mvk().args(["ips", "--config"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    // structurally valid JSON, semantically invalid (lag > horizon)
    let path = dir.join("badlag.json");
    std::fs::write(
        &path,
        r#"{"ips": {"particles": 100, "step": 0.1, "horizon": 0.5},
            "decoupled": {"trajectories": 10, "step": 0.1, "lag": 2.0}}"#,
    )
    .unwrap();
    let out = mvk().args(["ips", "--config"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_edmd_input_exits_two() {
    let out = mvk().args(["edmd"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn full_pipeline_round_trips_through_files() {
    let dir = tmp_dir("pipeline");
    let cfg = small_config(&dir, 5);
    let out_dir = dir.join("out");

    let out = mvk().args(["ips", "--config"]).arg(&cfg).output().unwrap();
    assert!(out.status.success(), "ips: {}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("measure_path.mvmp").exists());
    assert!(out_dir.join("ips_meta.json").exists());
    assert!(out_dir.join("config_resolved.json").exists());

    // horizon 1.0 at step 0.1: exactly 11 snapshots in the stored path
    let path = mvk_core::io::read_measure_path(&out_dir.join("measure_path.mvmp")).unwrap();
    assert_eq!(path.snapshots().len(), 11);
    assert_eq!(path.snapshot(0).count(), 500);

    let out = mvk()
        .args(["decoupled", "--config"])
        .arg(&cfg)
        .arg("--path")
        .arg(out_dir.join("measure_path.mvmp"))
        .output()
        .unwrap();
    assert!(out.status.success(), "decoupled: {}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("pairs.csv").exists());

    let out = mvk()
        .args(["edmd", "--config"])
        .arg(&cfg)
        .arg("--data")
        .arg(out_dir.join("pairs.csv"))
        .arg("--write-matrices")
        .output()
        .unwrap();
    assert!(out.status.success(), "edmd: {}", String::from_utf8_lossy(&out.stderr));
    for file in
        ["spectrum.json", "spectrum_perron.json", "eigenfunctions.csv", "matrices.json"]
    {
        assert!(out_dir.join(file).exists(), "{file} missing");
    }

    // spectrum schema
    let spec: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("spectrum.json")).unwrap())
            .unwrap();
    assert_eq!(spec["operator"], "koopman");
    assert!(spec["eigenvalues"].as_array().unwrap().len() <= 4);
    assert!(spec["cond_G"].as_f64().unwrap() >= 1.0);
    assert!(spec["M"].as_u64().unwrap() == 500);

    // leading eigenvalue of the stochastic-matrix estimate is near 1 (tail
    // bins seen only by terminal points are dropped, so exact row sums need
    // the full-size recipes)
    let lam0 = &spec["eigenvalues"][0];
    assert!((lam0["re"].as_f64().unwrap() - 1.0).abs() < 0.05);
}

#[test]
fn flags_override_config() {
    let dir = tmp_dir("flagwin");
    let cfg = small_config(&dir, 5);
    let out = mvk()
        .args(["ips", "--config"])
        .arg(&cfg)
        .args(["--particles", "64", "--seed", "99"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let echo: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.join("out/config_resolved.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(echo["ips"]["particles"], 64);
    assert_eq!(echo["seed"], 99);
}

#[test]
fn edmd_from_ips_pairs_is_available() {
    let dir = tmp_dir("fromips");
    let cfg = small_config(&dir, 6);
    let out_dir = dir.join("out");
    assert!(mvk().args(["ips", "--config"]).arg(&cfg).output().unwrap().status.success());
    let out = mvk()
        .args(["edmd", "--config"])
        .arg(&cfg)
        .arg("--from-ips")
        .arg(out_dir.join("measure_path.mvmp"))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    // the comparison-only caveat is surfaced
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("dependent"), "missing caveat: {stderr}");
}

#[test]
fn gram_sweep_passes_its_window() {
    let dir = tmp_dir("sweep");
    let out = mvk()
        .args(["sweep", "gram", "--seeds", "5", "--out"])
        .arg(&dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("sweep.json")).unwrap()).unwrap();
    assert_eq!(report["kind"], "gram");
    assert_eq!(report["pass"], true);
    assert!(dir.join("sweep.csv").exists());
}

#[test]
fn sweep_window_miss_exits_one() {
    let dir = tmp_dir("sweepmiss");
    // an impossible window forces the failure path
    let out = mvk()
        .args(["sweep", "gram", "--seeds", "3", "--window", "5.0,6.0", "--out"])
        .arg(&dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn zero_threads_rejected() {
    let out = mvk().args(["--threads", "0", "bench", "ou"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn threads_env_var_is_honored() {
    let dir = tmp_dir("envthreads");
    let cfg = small_config(&dir, 3);
    let out = mvk()
        .env("MVK_THREADS", "2")
        .args(["ips", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let out = mvk().env("MVK_THREADS", "0").args(["bench", "ou"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn shipped_recipe_manifests_parse_and_validate() {
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for name in ["cormier", "kuramoto-circle", "kuramoto-sphere", "ou"] {
        let cfg = mvk_cli::config::RunConfig::load(&configs.join(format!("{name}.json")))
            .unwrap_or_else(|e| panic!("{name}.json: {e}"));
        assert_eq!(cfg.model.name(), name);
    }
}

#[test]
fn interpolated_eigenfunctions_and_single_operator() {
    let dir = tmp_dir("interp");
    let cfg = small_config(&dir, 9);
    let out_dir = dir.join("out");
    assert!(mvk().args(["ips", "--config"]).arg(&cfg).output().unwrap().status.success());
    assert!(mvk()
        .args(["decoupled", "--config"])
        .arg(&cfg)
        .arg("--path")
        .arg(out_dir.join("measure_path.mvmp"))
        .output()
        .unwrap()
        .status
        .success());
    let out = mvk()
        .args(["edmd", "--config"])
        .arg(&cfg)
        .arg("--data")
        .arg(out_dir.join("pairs.csv"))
        .args(["--operator", "koopman", "--interpolate", "--grid-points", "101"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("eigenfunctions.csv").exists());
    assert!(!out_dir.join("spectrum_perron.json").exists(), "single-operator run");

    let table = std::fs::read_to_string(out_dir.join("eigenfunctions.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines.len(), 102); // header + grid points
    assert!(lines[0].starts_with("x,f1_re,f1_im"));
    // the interpolated leading eigenfunction is flat across the bins the
    // initial points cover (tail bins seen only by terminal points are
    // dropped and read as zero)
    let interior: Vec<f64> = lines[1..]
        .iter()
        .map(|l| {
            let fields: Vec<f64> = l.split(',').map(|v| v.parse().unwrap()).collect();
            (fields[0], fields[1])
        })
        .filter(|(x, _)| x.abs() <= 1.2)
        .map(|(_, f1)| f1)
        .collect();
    assert!(interior.len() > 10);
    let (lo, hi) = interior
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(*v), h.max(*v)));
    assert!(hi > 0.0 && (hi - lo) <= 0.1 * hi, "f1 flat on covered bins ({lo:.4}..{hi:.4})");
}
