use std::path::Path;
use std::process::{Command, Output};

use linrep_cli::config::{MeshSpec, RunConfig, Subcommand};
use linrep_cli::output::OUTPUT_ROOT_ENV;
use serde_json::Value;

fn linrep(args: &[&str], root: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_linrep"))
        .args(args)
        .env(OUTPUT_ROOT_ENV, root)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, cfg: &RunConfig) -> String {
    let path = dir.join("run.toml");
    std::fs::write(&path, cfg.to_toml().unwrap()).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn template_round_trips_through_toml() {
    for sub in Subcommand::ALL {
        let cfg = RunConfig::template(sub);
        assert_eq!(RunConfig::from_toml(&cfg.to_toml().unwrap()).unwrap(), cfg);
        cfg.validate().unwrap();
    }
}

#[test]
fn runs_are_deterministic_and_hashed() {
    let root = tempfile::tempdir().unwrap();
    let a = linrep(&["ode-kvn", "--out", "a", "--seed", "3"], root.path());
    let b = linrep(&["ode-kvn", "--out", "b", "--seed", "3"], root.path());
    assert!(a.status.success() && b.status.success());
    let ra = std::fs::read(root.path().join("a/result.json")).unwrap();
    let rb = std::fs::read(root.path().join("b/result.json")).unwrap();
    assert_eq!(ra, rb);
    let json: Value = serde_json::from_slice(&ra).unwrap();
    assert_eq!(json["content_sha256"].as_str().unwrap().len(), 64);
    let trace_hash = json["artifact_sha256"]["trace.csv"].as_str().unwrap();
    let trace = std::fs::read(root.path().join("a/trace.csv")).unwrap();
    assert_eq!(trace_hash, linrep_cli::output::sha256_hex(&trace));
}

#[test]
fn schrodinger_writes_one_density_row_per_node() {
    let root = tempfile::tempdir().unwrap();
    let out = linrep(&["schrodinger", "--out", "wkb"], root.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let density = std::fs::read_to_string(root.path().join("wkb/density.csv")).unwrap();
    let mut lines = density.lines();
    assert_eq!(lines.next().unwrap(), "x,density,current,energy");
    assert_eq!(lines.count(), 16);
}

#[test]
fn resources_table_lists_every_entry() {
    let root = tempfile::tempdir().unwrap();
    let out = linrep(&["resources", "--out", "res"], root.path());
    assert!(out.status.success());
    let json: Value = serde_json::from_slice(&std::fs::read(root.path().join("res/result.json")).unwrap()).unwrap();
    let table = std::fs::read_to_string(root.path().join("res/table.md")).unwrap();
    let rows = json["table"].as_array().unwrap();
    assert!(!rows.is_empty());
    for entry in json["entries"].as_array().unwrap() {
        if entry["in_table"] != Value::Bool(true) {
            continue;
        }
        let id = entry["id"].as_str().unwrap();
        assert!(table.contains(id), "{id} missing from table.md");
    }
}

#[test]
fn unknown_problem_suggests_nearest_name() {
    let root = tempfile::tempdir().unwrap();
    let out = linrep(&["hje", "--problem", "burger-hje"], root.path());
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("burgers-hje"), "{stderr}");
}

#[test]
fn oversized_target_mesh_is_a_budget_error() {
    let root = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::template(Subcommand::OdeLiouville);
    cfg.mesh = Some(MeshSpec::Target {
        eps: 1e-3,
        horizon: 1.0,
        ell: None,
    });
    let path = write_config(root.path(), &cfg);
    let out = linrep(&["ode-liouville", "--config", &path], root.path());
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn mismatched_subcommand_is_rejected() {
    let root = tempfile::tempdir().unwrap();
    let path = write_config(root.path(), &RunConfig::template(Subcommand::Hje));
    let out = linrep(&["schrodinger", "--config", &path], root.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn default_output_lands_under_the_root() {
    let root = tempfile::tempdir().unwrap();
    let out = linrep(&["ode-liouville"], root.path());
    assert!(out.status.success());
    let dirs: Vec<_> = std::fs::read_dir(root.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(dirs.len(), 1);
    let name = dirs[0].to_string_lossy().into_owned();
    assert!(name.starts_with("ode-liouville-") && name.len() == "ode-liouville-".len() + 12, "{name}");
    assert!(root.path().join(&name).join("density.csv").exists());
}

#[test]
fn list_problems_names_the_registry() {
    let root = tempfile::tempdir().unwrap();
    let out = linrep(&["list-problems"], root.path());
    let text = String::from_utf8_lossy(&out.stdout);
    for name in ["linear-decay", "logistic", "rotation", "wkb-gaussian", "burgers-hje", "constant-gradient-hje"] {
        assert!(text.contains(name), "{name}");
    }
}
