use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn flipqh(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flipqh")).args(args).env_remove("FLIPQH_CONFIG").output().expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("json output")
}

fn scratch(name: &str) -> PathBuf {
    std::env::temp_dir().join(format!("flipqh-cli-{}-{name}", std::process::id()))
}

#[test]
fn connection_json_reports_have_the_documented_shape() {
    let out = flipqh(&["connection", "--r", "2", "--rp", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json_of(&out);
    assert_eq!(doc["status"], "pass");
    let reports = doc["reports"].as_array().unwrap();
    assert!(!reports.is_empty());
    for r in reports {
        for key in ["check", "anchor", "status", "detail"] {
            assert!(r.get(key).is_some(), "missing {key}");
        }
    }
    assert!(reports.iter().any(|r| r["check"].as_str().unwrap().contains("entry for entry")));
}

#[test]
fn connection_text_prints_grids() {
    let out = flipqh(&["connection", "--r", "1", "--rp", "0", "--format", "text"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("z∂₁ = C₁"));
    assert!(text.contains("[PASS] C₁, C₂ of (1,0) entry for entry"));
}

#[test]
fn invalid_geometry_is_a_usage_error() {
    let out = flipqh(&["connection", "--r", "1", "--rp", "2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("geometry"));
}

#[test]
fn bad_tolerance_is_a_usage_error() {
    assert_eq!(flipqh(&["verify", "--tol", "0"]).status.code(), Some(2));
}

#[test]
fn small_caps_report_insufficient_truncation() {
    let out = flipqh(&["blockdiag", "--xcap", "2", "--ycap", "1", "--zcap", "1"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("insufficient truncation"));
    let out = flipqh(&["bfgmt", "--xcap", "4"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("insufficient truncation"));
}

#[test]
fn blockdiag_prints_the_g_series() {
    let out = flipqh(&[
        "blockdiag",
        "--r",
        "2",
        "--rp",
        "1",
        "--xcap",
        "7",
        "--ycap",
        "2",
        "--zcap",
        "7",
        "--format",
        "text",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().any(|l| l.starts_with("g6 = ")));
    assert!(text.contains("[PASS] g₁…g₈ against the printed table"));
}

#[test]
fn generic_blockdiag_runs_for_other_geometries() {
    let out = flipqh(&["blockdiag", "--r", "3", "--rp", "1", "--xcap", "5"]);
    assert_eq!(out.status.code(), Some(0));
    // d = 2 with rational ω = ±1: the kernel block splits into scalars
    assert_eq!(json_of(&out)["result"]["blocks"], serde_json::json!([10, 1, 1]));
}

#[test]
fn bfgmt_reports_sigma() {
    let out = flipqh(&["bfgmt", "--r", "2", "--rp", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json_of(&out);
    assert_eq!(doc["result"]["sigma"]["x3"], "−13/27 ξ′³h′");
}

#[test]
fn extremal_output_is_deterministic() {
    let a = flipqh(&["extremal", "--dmax", "10"]);
    let b = flipqh(&["extremal", "--dmax", "10"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let table = json_of(&a)["result"]["cayley"].as_array().unwrap().clone();
    let a10 = table.iter().find(|e| e["d"] == 10).unwrap();
    assert_eq!(a10["a"], "100000000");
}

#[test]
fn flags_override_config_file_over_defaults() {
    let cfg = scratch("cfg.toml");
    std::fs::write(&cfg, "r = 3\nrp = 1\nxcap = 5\nformat = \"json\"\n").unwrap();
    let out = flipqh(&["blockdiag", "--config", cfg.to_str().unwrap(), "--xcap", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json_of(&out);
    assert_eq!(doc["config"]["r"], 3);
    assert_eq!(doc["config"]["xcap"], 4);
    assert_eq!(doc["config"]["ycap"], 2);
    std::fs::write(&cfg, "unknown = 1\n").unwrap();
    assert_eq!(flipqh(&["verify", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
    std::fs::remove_file(&cfg).ok();
}

#[test]
fn out_flag_writes_a_file() {
    let path = scratch("out.json");
    let out = flipqh(&["connection", "--r", "1", "--rp", "1", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(doc["command"], "connection");
    std::fs::remove_file(&path).ok();
}

#[test]
fn verify_passes_and_is_thread_count_independent() {
    let one = Command::new(env!("CARGO_BIN_EXE_flipqh")).arg("verify").env("FLIPQH_THREADS", "1").output().unwrap();
    let many = flipqh(&["verify"]);
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, many.stdout);
    let doc = json_of(&many);
    assert_eq!(doc["result"]["criteria"].as_array().unwrap().len(), 10);
}
