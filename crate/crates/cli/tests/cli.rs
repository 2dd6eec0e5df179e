use serde_json::Value;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scenarios() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}

fn jostlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jostlab")).args(args).output().expect("binary runs")
}

fn run(command: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![command, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    jostlab(&args)
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn audit_rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|x| x.unwrap().iter().map(String::from).collect()).collect()
}

#[test]
fn threshold_free_is_virtual_level_and_manifest_hashes_match() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run("threshold", &scenarios().join("threshold_free.json"), tmp.path(), &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = json(&tmp.path().join("threshold.json"));
    assert_eq!(report["classification"], "virtual_level");
    assert_eq!(report["psi_csv_path"], "psi.csv");
    let manifest = json(&tmp.path().join("manifest.json"));
    assert_eq!(manifest["status"], "ok");
    let files = manifest["files"].as_array().unwrap();
    assert_eq!(files.len(), 3);
    for f in files {
        let bytes = std::fs::read(tmp.path().join(f["path"].as_str().unwrap())).unwrap();
        let hex: String = Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
        assert_eq!(f["sha256"].as_str().unwrap(), hex);
        assert_eq!(f["bytes"].as_u64().unwrap() as usize, bytes.len());
    }
}

#[test]
fn bifurcate_kappa_flag_gives_eigenpair() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run("bifurcate", &scenarios().join("bifurcate.json"), tmp.path(), &["--kappa", "0.05"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&tmp.path().join("bifurcation.json"));
    assert_eq!(r["kappa"].as_f64().unwrap(), 0.05);
    assert!(r["eigen_residual"].as_f64().unwrap() <= 1e-8);
    assert_eq!(r["delta_dependent"], true);
    let v = jostlab::Potential::from_json_str(&std::fs::read_to_string(tmp.path().join("potential.json")).unwrap()).unwrap();
    assert!(!v.is_zero());
}

#[test]
fn missing_grid_exits_2_and_names_field() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "bad.json", "{\n  \"N\": 3,\n  \"potential\": \"free\"\n}\n");
    let o = run("threshold", &cfg, &tmp.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("`grid`"), "{err}");
    assert!(err.contains("line 4"), "{err}");
}

#[test]
fn bad_values_and_command_mismatch_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "h.json", r#"{"potential": "free", "grid": {"X": 6, "h": 0, "order": 10}}"#);
    let o = run("jost", &cfg, &tmp.path().join("a"), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("grid.h"));
    let o = run("lapnorm", &scenarios().join("threshold_free.json"), &tmp.path().join("b"), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`command`"));
}

#[test]
fn delta_dependence_exits_3_with_error_object() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "dep.json",
        r#"{"potential": "bifurcation(0.1)", "grid": {"X": 6, "h": 0.25, "order": 10}, "zeta_plan": {"radii": [0.5, 0.1]}}"#,
    );
    let out = tmp.path().join("out");
    let o = run("resolvent", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(3));
    let e = json(&out.join("error.json"));
    assert_eq!(e["error"], "numerical");
    assert_eq!(e["kind"], "delta_dependent");
    let m = json(&out.join("manifest.json"));
    assert_eq!(m["status"], "numerical_error");
    let sweep = std::fs::read_to_string(out.join("delta_sweep.csv")).unwrap();
    assert_eq!(sweep.lines().count(), 3);
}

#[test]
fn manifests_identical_across_runs_and_thread_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = scenarios().join("resolvent_step.json");
    let read = |d: &str, t: &str| {
        let out = tmp.path().join(d);
        let o = run("resolvent", &cfg, &out, &["--threads", t]);
        assert!(o.status.success());
        std::fs::read(out.join("manifest.json")).unwrap()
    };
    let a = read("a", "1");
    assert_eq!(a, read("b", "1"));
    assert_eq!(a, read("c", "4"));
}

#[test]
fn seed_changes_random_corpus_only_through_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "r.json",
        r#"{"command": "audit", "grid": {"X": 6, "h": 0.25, "order": 10}, "corpus": {"random": 3}}"#,
    );
    let hash = |d: &str, seed: &str| {
        let out = tmp.path().join(d);
        run("audit", &cfg, &out, &["--seed", seed]);
        json(&out.join("manifest.json"))["files"].clone()
    };
    assert_eq!(hash("a", "11"), hash("b", "11"));
    assert_ne!(hash("a", "11"), hash("c", "12"));
}

#[test]
fn audit_free_corpus() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "f.json", r#"{"grid": {"X": 6, "h": 0.25, "order": 10}, "corpus": {"free": true}}"#);
    let out = tmp.path().join("out");
    let o = run("audit", &cfg, &out, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = audit_rows(&out.join("audit.csv"));
    for check in ["liouville", "continuity", "jump", "resolvent_residual", "jost_estimates"] {
        let r = rows.iter().find(|r| r[1] == check).unwrap();
        assert_eq!(r[2], "true", "{check}: {r:?}");
    }
    let t = rows.iter().find(|r| r[1] == "threshold").unwrap();
    assert!(t[6].contains("classification = virtual_level"), "{t:?}");
}

#[test]
fn audit_twenty_random_potentials_pass_structural_checks() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "r.json",
        r#"{"grid": {"X": 6, "h": 0.25, "order": 10}, "seed": 3, "corpus": {"random": 20}}"#,
    );
    let out = tmp.path().join("out");
    assert!(run("audit", &cfg, &out, &[]).status.success());
    let rows = audit_rows(&out.join("audit.csv"));
    for check in ["liouville", "continuity", "jump"] {
        let passing = rows.iter().filter(|r| r[1] == check && r[2] == "true").count();
        assert_eq!(passing, 20, "{check}");
    }
}

#[test]
fn audit_bifurcation_family_has_eigen_rows_and_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "b.json",
        r#"{"grid": {"X": 6, "h": 0.25, "order": 10}, "corpus": {"bifurcation": [0.2, 0.1, 0.05]}}"#,
    );
    let out = tmp.path().join("out");
    assert!(run("audit", &cfg, &out, &[]).status.success());
    let rows = audit_rows(&out.join("audit.csv"));
    for k in ["0.2", "0.1", "0.05"] {
        let name = format!("bifurcation({k})");
        let eig = rows.iter().find(|r| r[0] == name && r[1] == "eigen_residual").unwrap();
        assert_eq!(eig[2], "true", "{eig:?}");
        let dep = rows.iter().find(|r| r[0] == name && r[1] == "delta_dependent").unwrap();
        assert_eq!(dep[2], "true", "{dep:?}");
    }
}

#[test]
fn broken_corpus_file_becomes_failing_row() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("corpus");
    std::fs::create_dir(&corpus).unwrap();
    std::fs::write(corpus.join("bad.json"), r#"{"L": 1.0, "pieces": [{"a": 0.5, "b": -0.5, "coeffs_re": [1.0]}]}"#).unwrap();
    std::fs::write(corpus.join("good.json"), r#"{"L": 1.0, "pieces": [{"a": -1.0, "b": 1.0, "coeffs_re": [0.5]}]}"#).unwrap();
    let cfg = write_config(tmp.path(), "c.json", r#"{"grid": {"X": 6, "h": 0.25, "order": 10}, "corpus": {"dir": "corpus"}}"#);
    let out = tmp.path().join("out");
    let o = run("audit", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(1));
    let rows = audit_rows(&out.join("audit.csv"));
    let bad = rows.iter().find(|r| r[0] == "file:bad.json").unwrap();
    assert_eq!((bad[1].as_str(), bad[2].as_str()), ("load", "false"));
    assert!(rows.iter().any(|r| r[0] == "file:good.json" && r[1] == "jump" && r[2] == "true"));
}

#[test]
fn every_shipped_scenario_runs() {
    let tmp = tempfile::tempdir().unwrap();
    for (cmd, file) in [
        ("jost", "jost_step.json"),
        ("resolvent", "resolvent_step.json"),
        ("lapnorm", "lapnorm_step.json"),
        ("audit", "audit_corpus.json"),
    ] {
        let out = tmp.path().join(cmd);
        let o = run(cmd, &scenarios().join(file), &out, &[]);
        assert!(o.status.success(), "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(out.join("manifest.json").exists());
    }
    assert_eq!(json(&tmp.path().join("lapnorm/lap.json"))["verdict"], "LAP");
}
