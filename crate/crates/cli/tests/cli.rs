use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn relaysim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_relaysim"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

const SMALL: &str = r#"{
  "grid": {"avenues": 4, "streets": 7, "ue_count": 40},
  "drops": 1,
  "slots": 10
}"#;

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("cfg.json");
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn validate_prints_resolved_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "{}");
    let out = relaysim(&["validate", "--config", &cfg]);
    assert!(out.status.success());
    let resolved: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(resolved["relay"]["smart_g_max_db"], 70.0);
}

#[test]
fn bad_config_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"relay": {"broad_loss_db": 3.0}}"#);
    let out = relaysim(&["validate", "--config", &cfg]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("broad_loss_db"), "{err}");
}

#[test]
fn unknown_case_is_an_error() {
    let out = relaysim(&["validate", "--cases", "warpDrive"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("warpDrive"));
}

#[test]
fn run_writes_summary_and_series() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out_dir = dir.path().join("res");
    let out = relaysim(&[
        "run",
        "--config",
        &cfg,
        "--cases",
        "noRepeaterRelay,smartRepeater",
        "--out",
        out_dir.to_str().unwrap(),
        "--threads",
        "1",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let summary = fs::read_to_string(out_dir.join("summary.csv")).unwrap();
    assert!(summary.starts_with("case,metric,count,p5,median,p95,mean,indirect_pct"));
    assert!(summary.contains("smartRepeater,sinr_indirect_db"));
    assert!(out_dir.join("noRepeaterRelay_sinr_direct_db.csv").exists());
    assert!(!out_dir
        .join("noRepeaterRelay_sinr_indirect_db.csv")
        .exists());
}

#[test]
fn sweep_writes_one_directory_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out_dir = dir.path().join("sweep");
    let out = relaysim(&[
        "sweep",
        "--config",
        &cfg,
        "--cases",
        "smartRepeater",
        "--param",
        "relay.smart_g_max_db",
        "--values",
        "60,80",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for v in ["60", "80"] {
        assert!(out_dir
            .join(format!("relay.smart_g_max_db={v}"))
            .join("summary.csv")
            .exists());
    }

    let bad = relaysim(&[
        "sweep",
        "--config",
        &cfg,
        "--param",
        "relay.nonexistent",
        "--values",
        "1",
    ]);
    assert!(!bad.status.success());
}

#[test]
fn export_scene_writes_scene_and_associations() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out_dir = dir.path().join("scene");
    let out = relaysim(&[
        "export-scene",
        "--config",
        &cfg,
        "--cases",
        "hdRelayReuse",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let scene: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("scene.json")).unwrap()).unwrap();
    assert_eq!(scene["ues"].as_array().unwrap().len(), 40);
    assert!(out_dir.join("association_hdRelayReuse.json").exists());
}
