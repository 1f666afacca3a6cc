use std::collections::BTreeMap;
use std::fs;

use duelbandit::harness::{self, ExperimentConfig};
use duelbandit::{InstanceName, PreferenceMatrix};

fn config(seeds: u64) -> ExperimentConfig {
    ExperimentConfig::from_toml_str(&format!(
        r#"
        horizon = 3000
        comparator = "condorcet"
        checkpoints = 30
        seeds = {{ base = 42, count = {seeds} }}

        [environment]
        kind = "stationary"
        instance = "hard"
        arms = 5
        rho = 0.1

        [[algorithms]]
        name = "vdb"

        [[algorithms]]
        name = "rucb"
        "#
    ))
    .unwrap()
}

fn parse_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn identical_configs_give_identical_bytes() {
    let cfg = config(3);
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    harness::write_outputs(&harness::run_experiment(&cfg, None).unwrap(), a.path()).unwrap();
    harness::write_outputs(&harness::run_experiment(&cfg, Some(2)).unwrap(), b.path()).unwrap();
    for name in ["regret.csv", "regret_mean.csv", "summary.json"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
}

#[test]
fn mean_file_is_recomputable_from_per_seed_file() {
    let result = harness::run_experiment(&config(20), None).unwrap();
    let per_seed = parse_rows(&harness::regret_csv(&result));
    let means = parse_rows(&harness::regret_mean_csv(&result));
    assert_eq!(per_seed.len(), result.checkpoints.len() * 2 * 20);
    assert_eq!(means.len(), result.checkpoints.len() * 2);

    let mut groups: BTreeMap<(String, u64), Vec<f64>> = BTreeMap::new();
    for row in &per_seed {
        let v: f64 = row[3].parse().unwrap();
        assert!(v.is_finite());
        groups.entry((row[0].clone(), row[2].parse().unwrap())).or_default().push(v);
    }
    for row in &means {
        let values = &groups[&(row[0].clone(), row[1].parse().unwrap())];
        assert_eq!(values.len(), 20);
        let mean = values.iter().sum::<f64>() / 20.0;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 19.0;
        let (m, s): (f64, f64) = (row[2].parse().unwrap(), row[3].parse().unwrap());
        assert!((m - mean).abs() <= 1e-9 * mean.abs().max(1.0), "{m} vs {mean}");
        assert!((s - var.sqrt()).abs() <= 1e-9 * s.abs().max(1.0));
    }
}

#[test]
fn summary_matches_last_checkpoint() {
    let result = harness::run_experiment(&config(4), None).unwrap();
    let summary: serde_json::Value = serde_json::from_str(&harness::summary_json(&result)).unwrap();
    assert_eq!(summary["config_digest"], config(4).digest());
    let means = parse_rows(&harness::regret_mean_csv(&result));
    for alg in summary["algorithms"].as_array().unwrap() {
        let name = alg["algorithm"].as_str().unwrap();
        let last = means.iter().rev().find(|r| r[0] == name).unwrap();
        assert_eq!(last[1], "3000");
        assert_eq!(alg["final_mean"].as_f64().unwrap(), last[2].parse::<f64>().unwrap());
        let flips: u64 = result.runs_for(name).map(|r| r.corruption).sum();
        assert_eq!(alg["corruption_total"].as_u64().unwrap(), flips);
        assert!(flips > 0);
    }
}

#[test]
fn seed_base_changes_traces() {
    let a = harness::run_experiment(&config(1), None).unwrap();
    let mut cfg = config(1);
    cfg.seeds.base += 1;
    let b = harness::run_experiment(&cfg, None).unwrap();
    assert_ne!(harness::regret_csv(&a), harness::regret_csv(&b));
    assert_ne!(a.config_digest, b.config_digest);
}

#[test]
fn generated_matrices() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trivial.csv");
    harness::gen_matrix("trivial", 3, &path).unwrap();
    let m = PreferenceMatrix::load_csv(&path).unwrap();
    assert!((m.get(0, 1) - 2.0 / 3.0).abs() < 1e-12);
    assert_eq!(m, InstanceName::Trivial.matrix(3).unwrap());

    let path = dir.path().join("hard.csv");
    harness::gen_matrix("Hard", 10, &path).unwrap();
    let text = fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 10);
    assert!(text.lines().all(|l| l.split(',').count() == 10));
    assert!(harness::gen_matrix("impossible", 10, &path).is_err());
}

#[test]
fn registry_lists_exactly_the_five_algorithms() {
    let names: Vec<&str> = harness::list_algorithms().iter().map(|a| a.name).collect();
    assert_eq!(names, ["vdb", "vdb-shared", "reduction:exp3", "rr-elim", "rucb"]);
    let json: serde_json::Value = serde_json::from_str(&harness::list_algorithms_json()).unwrap();
    let rucb = json.as_array().unwrap().iter().find(|a| a["name"] == "rucb").unwrap();
    assert_eq!(rucb["params"][0]["name"], "alpha");
    assert_eq!(rucb["params"][0]["default"], 0.6);
}

#[test]
fn csv_matrix_paths_resolve_against_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    harness::gen_matrix("hard", 4, dir.path().join("m.csv")).unwrap();
    let cfg_path = dir.path().join("exp.toml");
    fs::write(
        &cfg_path,
        r#"
        horizon = 200
        comparator = "condorcet"
        seeds = { base = 1, count = 1 }
        [environment]
        kind = "stationary"
        matrix_csv = "m.csv"
        [[algorithms]]
        name = "rr-elim"
        "#,
    )
    .unwrap();
    let cfg = ExperimentConfig::load(&cfg_path).unwrap();
    let result = harness::run_experiment(&cfg, None).unwrap();
    assert_eq!(result.runs[0].final_active.as_ref().unwrap().len(), 4);
}
