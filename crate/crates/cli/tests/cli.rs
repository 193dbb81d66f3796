use std::path::{Path, PathBuf};
use std::process::{Command as Proc, Output};

use degenlab_cli::config::{Command, ExperimentConfig};
use serde_json::{json, Value};

fn repo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn degenlab(args: &[&str]) -> Output {
    Proc::new(env!("CARGO_BIN_EXE_degenlab")).args(args).env_remove("DEGENLAB_OUT").output().unwrap()
}

fn stderr_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().last().expect("stderr line");
    serde_json::from_str(line).unwrap()
}

fn write(dir: &Path, name: &str, v: &Value) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p
}

fn profile() -> Value {
    json!({"kind": "model", "beta": 1, "delta": 0.6, "M": -5})
}

fn resonance(band_max: f64) -> Value {
    json!({
        "schema_version": 1,
        "command": "resonance",
        "seed": 3,
        "profile": profile(),
        "sweep": {"pairs": [[-14, -4], [-12, -2]], "draws": 10, "theta_samples": 256},
        "acceptance": {"components_max": 8, "band_max": band_max}
    })
}

#[test]
fn missing_config_is_a_validation_error() {
    let out = degenlab(&["kernel-decay", "--config", "/nonexistent/cfg.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)["kind"], "config_not_found");
}

#[test]
fn unknown_command_and_bad_flags_exit_1() {
    let cfg = repo().join("configs/vpnorm.json");
    let out = degenlab(&["wobble", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let out = degenlab(&["vpnorm", "--config", cfg.to_str().unwrap(), "--jobs", "many"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)["kind"], "usage");
}

#[test]
fn command_must_match_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = repo().join("configs/vpnorm.json");
    let out = degenlab(&["solve", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn unknown_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = resonance(10.0);
    v["sweep"]["drawz"] = json!(3);
    let p = write(dir.path(), "bad.json", &v);
    let out = degenlab(&["resonance", "--config", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)["kind"], "schema");
}

#[test]
fn check_profile_passes_and_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = repo().join("configs/check_profile_b1.json");
    let out = degenlab(&["check-profile", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["check_profile.json", "result.json", "manifest.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let result: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("result.json")).unwrap()).unwrap();
    assert_eq!(result["pass"], true);
}

#[test]
fn unresolvable_lattice_shell_names_k() {
    let dir = tempfile::tempdir().unwrap();
    let v = json!({
        "schema_version": 1,
        "command": "strichartz",
        "seed": 1,
        "profile": profile(),
        "grid": {"N": 512, "L": 128},
        "sweep": {
            "ks": [-4, -6],
            "window": {"kind": "fixed", "t": 10},
            "backend": "lattice",
            "dt": 1.0,
            "recipe": "random",
            "repetitions": 1
        }
    });
    let p = write(dir.path(), "s.json", &v);
    let out = degenlab(&["strichartz", "--config", p.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr_json(&out);
    assert_eq!(err["kind"], "unresolvable");
    assert_eq!(err["k"], -6);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "r.json", &resonance(10.0));
    let run = |sub: &str| {
        let o = dir.path().join(sub);
        let out = degenlab(&["resonance", "--config", p.to_str().unwrap(), "--out", o.to_str().unwrap(), "--jobs", "2"]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        (std::fs::read(o.join("resonance.csv")).unwrap(), std::fs::read(o.join("result.json")).unwrap())
    };
    assert_eq!(run("a"), run("b"));
}

#[test]
fn seed_override_changes_the_draws() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "r.json", &resonance(10.0));
    let run = |sub: &str, seed: &str| {
        let o = dir.path().join(sub);
        let out = degenlab(&["resonance", "--config", p.to_str().unwrap(), "--out", o.to_str().unwrap(), "--seed", seed]);
        assert_eq!(out.status.code(), Some(0));
        std::fs::read(o.join("resonance.csv")).unwrap()
    };
    assert_ne!(run("a", "3"), run("b", "4"));
}

#[test]
fn failing_band_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "r.json", &resonance(0.5));
    let out = degenlab(&["resonance", "--config", p.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["kind"], "acceptance");
}

#[test]
fn empty_suite_passes() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "suite.json", &json!({"schema_version": 1, "entries": []}));
    let out = degenlab(&["verify-all", "--suite", p.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let summary: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("o/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["pass"], true);
    assert_eq!(summary["entries"], json!([]));
}

#[test]
fn suite_marks_exactly_the_failing_criterion() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "good.json", &resonance(10.0));
    write(dir.path(), "bad.json", &resonance(0.5));
    let vp = repo().join("configs/vpnorm.json").canonicalize().unwrap();
    let suite = json!({
        "schema_version": 1,
        "entries": [
            {"criterion": "lemma", "config": "good.json"},
            {"criterion": "band", "config": "bad.json"},
            {"criterion": "vp", "config": vp}
        ]
    });
    let p = write(dir.path(), "suite.json", &suite);
    let out = degenlab(&["verify-all", "--config", p.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap(), "--jobs", "2"]);
    assert_eq!(out.status.code(), Some(2));
    let table = String::from_utf8_lossy(&out.stdout);
    assert!(table.lines().any(|l| l.starts_with("band") && l.ends_with("FAIL")), "{table}");
    let summary: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("o/summary.json")).unwrap()).unwrap();
    let status: Vec<(String, bool)> = summary["criteria"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| (c["criterion"].as_str().unwrap().to_string(), c["pass"].as_bool().unwrap()))
        .collect();
    assert_eq!(status, vec![("lemma".into(), true), ("band".into(), false), ("vp".into(), true)]);
}

#[test]
fn suite_with_invalid_entry_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let suite = json!({"schema_version": 1, "entries": [{"criterion": "x", "config": "missing.json"}]});
    let p = write(dir.path(), "suite.json", &suite);
    let out = degenlab(&["verify-all", "--config", p.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn schema_lists_every_command() {
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(repo().join("schema/experiment.schema.json")).unwrap()).unwrap();
    let listed: Vec<&str> = schema["properties"]["command"]["enum"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    let known: Vec<&str> = Command::ALL.iter().map(|c| c.name()).collect();
    assert_eq!(listed, known);
    for c in known {
        assert!(schema["$defs"].get(format!("sweep_{}", c.replace('-', "_"))).is_some(), "{c}");
    }
}

#[test]
fn shipped_configs_parse() {
    let mut n = 0;
    for entry in std::fs::read_dir(repo().join("configs")).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("json") || path.file_name().unwrap() == "ci_suite.json" {
            continue;
        }
        ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        n += 1;
    }
    assert!(n >= 11);
    degenlab_cli::suite::load_suite(&repo().join("configs/ci_suite.json")).unwrap();
}
