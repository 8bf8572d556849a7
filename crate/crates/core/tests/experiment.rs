use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use relaysim::topology::GridSpec;
use relaysim::{emit_cdfs, load_config, run_experiment, Metric, RelayCase, ScenarioConfig};

fn small(drops: usize, slots: usize) -> ScenarioConfig {
    ScenarioConfig {
        grid: GridSpec {
            avenues: 6,
            streets: 13,
            ue_count: 210,
            ..Default::default()
        },
        drops,
        slots,
        ..Default::default()
    }
}

fn run_to(cfg: &ScenarioConfig, cases: &[RelayCase], dir: &Path) -> Vec<String> {
    let results = run_experiment(cfg, cases).unwrap();
    let named: Vec<_> = results.iter().map(|(c, s)| (c.name(), s)).collect();
    let mut files: Vec<String> = emit_cdfs(named, dir)
        .unwrap()
        .iter()
        .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    files.sort();
    files
}

#[test]
fn single_no_relay_drop_writes_direct_series_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ScenarioConfig {
        drops: 1,
        slots: 10,
        ..Default::default()
    };
    let files = run_to(&cfg, &[RelayCase::NoRepeaterRelay], dir.path());
    assert!(files.contains(&"noRepeaterRelay_sinr_direct_db.csv".to_string()));
    assert!(files.contains(&"summary.csv".to_string()));
    assert!(!files.iter().any(|f| f.contains("indirect")));
}

#[test]
fn repeated_runs_write_identical_files() {
    let cfg = small(2, 15);
    let cases = [RelayCase::SemiSmartRepeater, RelayCase::FdRelayReuse];
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let fa = run_to(&cfg, &cases, a.path());
    let fb = run_to(&cfg, &cases, b.path());
    assert_eq!(fa, fb);
    for f in &fa {
        assert_eq!(
            fs::read(a.path().join(f)).unwrap(),
            fs::read(b.path().join(f)).unwrap(),
            "{f} differs"
        );
    }
}

#[test]
fn all_cases_on_reduced_grid_finish_quickly() {
    let cfg = small(1, 200);
    let start = Instant::now();
    let results = run_experiment(&cfg, &RelayCase::ALL).unwrap();
    assert!(start.elapsed() < Duration::from_secs(120));
    assert_eq!(results.len(), 8);
    for (case, store) in &results {
        assert_eq!(store.drops, 1);
        assert_eq!(store.ue_count, 210);
        let has_relays = *case != RelayCase::NoRepeaterRelay;
        assert_eq!(!store.get(Metric::SinrIndirect).is_empty(), has_relays);
        assert!(store
            .get(Metric::SectorThroughput)
            .iter()
            .all(|v| v.is_finite() && *v >= 0.0));
    }
}

#[test]
fn invalid_configs_are_rejected() {
    let mut cfg = small(1, 1);
    cfg.slots = 0;
    assert!(run_experiment(&cfg, &[RelayCase::NoRepeaterRelay]).is_err());

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(&path, r#"{"relay": {"delta_nf_db": -2.0}}"#).unwrap();
    let err = load_config(&path).unwrap_err().to_string();
    assert!(err.contains("delta_nf_db"), "{err}");
    fs::write(&path, r#"{"drops": 3, "typo": 1}"#).unwrap();
    assert!(load_config(&path).is_err());
    assert!(load_config(&dir.path().join("missing.json")).is_err());
}
