use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_penaltyguard"))
        .args(args)
        .env_remove("PENALTYGUARD_WORKERS")
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&out.stdout))
    })
}

fn small_config(e_penalty: f64) -> Value {
    json!({
        "n_logical": 1,
        "code": "jfs4",
        "n_env": 4,
        "seed": 5,
        "lambda": 0.1,
        "e_penalty": e_penalty,
        "h_comp": {"kind": "constant", "endpoints": [[{"coeff": 1.0, "paulis": "X"}]], "total_time": 0.0},
        "initial_system_state": {"kind": "plus_L", "coeffs": []},
        "initial_env_state": "random"
    })
}

fn write(dir: &Path, name: &str, v: &Value) -> String {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p.to_string_lossy().into_owned()
}

fn small_plan() -> Value {
    json!({
        "name": "tiny",
        "base_config": small_config(0.0),
        "grid": [
            {"e_penalty": 0.0, "lambda": 0.1, "seed": 5},
            {"e_penalty": 32.0, "lambda": 0.1, "seed": 5}
        ],
        "time_grid": {"kind": "explicit", "values": [0.0, 1.0, 10.0]},
        "outputs": ["series"],
        "settings": {"method": "spectral", "dt_max": 10.0, "unitarity_tol": 1e-9,
                     "substep_expansion_order": 160, "refinement_tol": 1e-8},
        "protection": {"threshold": 0.9,
                       "scan": {"t_start": 1.0, "factor": 1.3, "t_max": 1e12, "window": 5, "rel_tol": 0.01}},
        "long_term_times": [1e5]
    })
}

#[test]
fn verify_code_prints_passing_report() {
    let out = bin(&["verify-code"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["passed"], json!(true));
    assert_eq!(v["strings_checked"], json!(12));
    assert!(v["max_residual"].as_f64().unwrap() < 1e-12);
}

#[test]
fn toy_model_reports_shift() {
    let out = bin(&["toy-model", "--omega", "1", "--lp", "0.1", "--lm", "0", "--ep", "100"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert!((v["e_plus"].as_f64().unwrap() - 0.9999).abs() < 1e-12);
    assert_eq!(v["transition_ceiling"].as_f64().unwrap(), 0.0);
}

#[test]
fn invalid_arguments_exit_with_validation_code() {
    assert_eq!(bin(&["run", "--plan", "no-such-plan"]).status.code(), Some(2));
    assert_eq!(bin(&["run", "--plan", "fig1", "--scale", "0"]).status.code(), Some(2));
    assert_eq!(bin(&["toy-model", "--omega", "1", "--lp", "0", "--lm", "0", "--ep", "0"]).status.code(), Some(2));
    assert_eq!(bin(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn config_errors_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(32.0);
    cfg["surprise"] = json!(1);
    let bad = write(dir.path(), "bad.json", &cfg);
    assert_eq!(bin(&["bounds", "--config", &bad, "--t", "1"]).status.code(), Some(2));
    let mut cfg = small_config(32.0);
    cfg.as_object_mut().unwrap().remove("seed");
    let missing = write(dir.path(), "missing.json", &cfg);
    assert_eq!(bin(&["bounds", "--config", &missing, "--t", "1"]).status.code(), Some(2));
    let absent = dir.path().join("absent.json");
    assert_eq!(
        bin(&["bounds", "--config", absent.to_str().unwrap(), "--t", "1"]).status.code(),
        Some(4)
    );
}

#[test]
fn bounds_dominate_measured_norm() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.json", &small_config(32.0));
    let out = bin(&["bounds", "--config", &cfg, "--t", "5"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    assert!(v["measured_norm"].as_f64().unwrap() <= v["bound"].as_f64().unwrap());
}

#[test]
fn theorem_limit_on_small_instance() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.json", &small_config(32.0));
    let out = bin(&["theorem-limit", "--t", "2", "--ep-list", "16,32,64", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    assert_eq!(v["points"].as_array().unwrap().len(), 3);
    let bad = bin(&["theorem-limit", "--t", "2", "--ep-list", "64,32", "--config", &cfg]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn run_writes_hashed_csv() {
    let dir = tempfile::tempdir().unwrap();
    let plan = write(dir.path(), "plan.json", &small_plan());
    let out_dir = dir.path().join("out");
    let out = Command::new(env!("CARGO_BIN_EXE_penaltyguard"))
        .args(["run", "--plan", &plan, "--out", out_dir.to_str().unwrap()])
        .env("PENALTYGUARD_WORKERS", "1")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    let hash = v["plan_hash"].as_str().unwrap();
    let files = v["files"].as_array().unwrap();
    assert_eq!(files.len(), 3);
    for f in files {
        let name = Path::new(f.as_str().unwrap()).file_name().unwrap().to_string_lossy().into_owned();
        assert!(name.contains(&hash[..12]), "{name}");
    }
    let series = files.iter().find(|f| f.as_str().unwrap().contains("ep32")).unwrap();
    let text = std::fs::read_to_string(series.as_str().unwrap()).unwrap();
    assert!(!text.contains('\r'));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    assert_eq!(lines[0], "t,f_total_sq,f_system_sq,p_codespace");
    let first: Vec<f64> = lines[1].split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(first[0], 0.0);
    assert!(first[1..].iter().all(|v| (v - 1.0).abs() < 1e-12), "{first:?}");
}

#[test]
fn unwritable_output_is_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let plan = write(dir.path(), "plan.json", &small_plan());
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let out = bin(&["run", "--plan", &plan, "--out", blocker.join("sub").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sub"));
}

#[test]
fn empty_grid_plan_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let mut p = small_plan();
    p["grid"] = json!([]);
    let plan = write(dir.path(), "plan.json", &p);
    assert_eq!(bin(&["run", "--plan", &plan]).status.code(), Some(2));
}
