use std::path::{Path, PathBuf};
use std::process::Command;

use adsqf::cli::config::ExperimentConfig;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_adsqf"))
}

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

fn write_config(dir: &Path, value: serde_json::Value) -> PathBuf {
    let p = dir.join("config.json");
    std::fs::write(&p, value.to_string()).unwrap();
    p
}

fn run(cmd: &str, config: &Path, out: &Path, extra: &[&str]) -> i32 {
    bin()
        .args([cmd, "--config", config.to_str().unwrap(), "--out-dir", out.to_str().unwrap()])
        .args(extra)
        .status()
        .unwrap()
        .code()
        .unwrap()
}

fn small_schottky() -> serde_json::Value {
    serde_json::json!({ "seed": 7, "group": { "kind": "schottky" }, "max_word_len": 3, "prune_radius": null })
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

#[test]
fn unknown_command_is_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), small_schottky());
    assert_eq!(run("frobnicate", &cfg, tmp.path(), &[]), 64);
    let code = bin().arg("orbit").status().unwrap().code().unwrap();
    assert_eq!(code, 64, "missing --config");
}

#[test]
fn malformed_configs_exit_65() {
    let tmp = tempfile::tempdir().unwrap();
    let cases = [
        serde_json::json!({ "group": { "kind": "schottky" } }),
        serde_json::json!({ "seed": 1, "colour": "red" }),
        serde_json::json!({ "seed": 1, "eps_grid": [0.1, 0.05] }),
        serde_json::json!({ "seed": 1, "eps_grid": [] }),
        serde_json::json!({ "seed": 1, "group": { "kind": "hyperbolic" } }),
    ];
    for c in cases {
        let cfg = write_config(tmp.path(), c.clone());
        assert_eq!(run("validate", &cfg, tmp.path(), &[]), 65, "{c}");
    }
    let p = tmp.path().join("broken.json");
    std::fs::write(&p, "{ not json").unwrap();
    assert_eq!(run("validate", &p, tmp.path(), &[]), 65);
}

#[test]
fn io_errors_exit_74() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(run("validate", &tmp.path().join("missing.json"), tmp.path(), &[]), 74);
    let cfg = write_config(tmp.path(), small_schottky());
    let blocker = tmp.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    assert_eq!(run("orbit", &cfg, &blocker.join("sub"), &[]), 74);
}

#[test]
fn default_genus2_validates() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), serde_json::json!({ "seed": 1 }));
    assert_eq!(run("validate", &cfg, tmp.path(), &[]), 0);
    let v = json(&tmp.path().join("validate.json"));
    assert_eq!(v["result"]["validation"]["pass"], true);
    assert_eq!(v["status"], "ok");
}

#[test]
fn invalid_group_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let rotation = [0.5f64.cos(), -0.5f64.sin(), 0.5f64.sin(), 0.5f64.cos()];
    let boost = [1.5, 0.0, 0.0, 1.0 / 1.5];
    let cfg = write_config(
        tmp.path(),
        serde_json::json!({
            "seed": 1,
            "group": { "kind": "explicit", "labels": ["a", "b"], "relator": "free",
                       "rho1": [boost, rotation], "rho2": [boost, rotation] },
        }),
    );
    assert_eq!(run("validate", &cfg, tmp.path(), &[]), 2);
}

#[test]
fn exponent_with_short_words_is_numeric_guard() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), serde_json::json!({ "seed": 1, "max_word_len": 2 }));
    assert_eq!(run("exponent", &cfg, tmp.path(), &[]), 3);
    assert_eq!(run("exponent", &cfg, tmp.path(), &["--max-word-len", "1"]), 3);
}

#[test]
fn rigidity_needs_twists() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), serde_json::json!({ "seed": 1, "rigidity": { "twists": [] } }));
    assert_eq!(run("rigidity", &cfg, tmp.path(), &[]), 65);
    let cfg = write_config(tmp.path(), serde_json::json!({ "seed": 1 }));
    assert_eq!(run("rigidity", &cfg, tmp.path(), &[]), 65);
}

#[test]
fn orbit_schema_and_header() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg_path = write_config(tmp.path(), small_schottky());
    assert_eq!(run("orbit", &cfg_path, tmp.path(), &[]), 0);
    let csv = std::fs::read_to_string(tmp.path().join("orbit.csv")).unwrap();
    let cfg: ExperimentConfig = serde_json::from_value(small_schottky()).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        format!("# config_hash={} tool_version={} command=orbit", cfg.hash(), env!("CARGO_PKG_VERSION"))
    );
    assert_eq!(lines.next().unwrap(), "word,len,dist,causal_flag,trace1,trace2");
    assert_eq!(lines.count(), 53);
    assert!(!csv.contains('\r'));
    let report = json(&tmp.path().join("orbit.json"));
    assert_eq!(report["config_hash"], cfg.hash());
    assert_eq!(report["tool_version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(report["result"]["orbit"]["records"], 53);
}

#[test]
fn seed_override_changes_hash() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), small_schottky());
    run("orbit", &cfg, &tmp.path().join("a"), &[]);
    run("orbit", &cfg, &tmp.path().join("b"), &["--seed", "8"]);
    let a = json(&tmp.path().join("a/orbit.json"));
    let b = json(&tmp.path().join("b/orbit.json"));
    assert_ne!(a["config_hash"], b["config_hash"]);
    assert_eq!(b["seed"], 8);
}

#[test]
fn limitset_schema() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), serde_json::json!({ "seed": 3, "max_word_len": 6, "prune_radius": 8.0 }));
    assert_eq!(run("limitset", &cfg, tmp.path(), &[]), 0);
    let csv = std::fs::read_to_string(tmp.path().join("limitset.csv")).unwrap();
    assert_eq!(csv.lines().nth(1).unwrap(), "word,m11,m12,m21,m22,rp1_coord1,rp1_coord2");
    for line in csv.lines().skip(2) {
        let f: Vec<f64> = line.split(',').skip(1).map(|x| x.parse().unwrap()).collect();
        // Fuchsian limit points sit in the trace-zero plane.
        assert!((f[0] + f[3]).abs() < 1e-9, "{line}");
    }
}

#[test]
fn schottky_limit_set_is_flagged() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        serde_json::json!({ "seed": 3, "group": { "kind": "schottky", "second_translation_length": 3.5 }, "max_word_len": 5, "prune_radius": null }),
    );
    assert_eq!(run("limitset", &cfg, tmp.path(), &[]), 0);
    let r = json(&tmp.path().join("limitset.json"));
    assert_eq!(r["result"]["sample"]["notes"][0], "limit set not a circle");
}

#[test]
fn golden_files() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), small_schottky());
    assert_eq!(run("orbit", &cfg, tmp.path(), &[]), 0);
    assert_eq!(run("limitset", &cfg, tmp.path(), &[]), 0);
    for name in ["orbit.csv", "limitset.csv"] {
        let got = std::fs::read(tmp.path().join(name)).unwrap();
        let want = std::fs::read(golden(&format!("schottky_{name}"))).unwrap();
        assert!(got == want, "{name} differs from its golden file");
    }
}

#[test]
fn thread_count_does_not_change_output() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), serde_json::json!({ "seed": 5, "max_word_len": 7, "prune_radius": 9.0 }));
    for (dir, threads) in [("one", "1"), ("four", "4")] {
        let code = bin()
            .env("ADSQF_THREADS", threads)
            .args(["exponent", "--config", cfg.to_str().unwrap(), "--out-dir", tmp.path().join(dir).to_str().unwrap()])
            .status()
            .unwrap()
            .code();
        assert_eq!(code, Some(0));
    }
    for f in ["exponent.json", "counts.csv"] {
        assert_eq!(std::fs::read(tmp.path().join("one").join(f)).unwrap(), std::fs::read(tmp.path().join("four").join(f)).unwrap());
    }
}
