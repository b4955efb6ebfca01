use std::fs;
use std::path::Path;
use std::process::Command;

use emspec::theory::{delta_m1_exact, delta_m2_exact};
use emspec_cli::report::read_column;
use emspec_cli::{execute, run, CliError, ExperimentConfig};
use serde_json::Value;

fn config(json: &str) -> ExperimentConfig {
    ExperimentConfig::from_json(json).unwrap()
}

fn read_dir(dir: &Path) -> Vec<(String, String)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read_to_string(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn reruns_and_worker_counts_are_bit_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let base = r#"{"experiment": "cwoe-one-block", "n_series": 40, "horizon": 20,
                   "xi": {"kind": "one-block", "c": 0.5}, "realizations": 6, "master_seed": 11}"#;
    let mut outputs = Vec::new();
    for (i, workers) in [1usize, 1, 3].into_iter().enumerate() {
        let mut c = config(base);
        c.output_dir = Some(tmp.path().join(format!("run{i}")));
        run(&c, workers).unwrap();
        outputs.push(read_dir(c.output_dir.as_ref().unwrap()));
    }
    assert!(outputs[0].len() >= 6);
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);

    let mut other = config(base);
    other.master_seed = Some(12);
    let a = execute(&config(base)).unwrap();
    let b = execute(&other).unwrap();
    assert_ne!(a.files["moments.csv"], b.files["moments.csv"]);
}

#[test]
fn one_block_writes_every_density() {
    let a = execute(&config(
        r#"{"experiment": "cwoe-one-block", "n_series": 64, "horizon": 32,
            "xi": {"kind": "one-block", "c": 0.5}, "realizations": 4}"#,
    ))
    .unwrap();
    for name in [
        "density_bulk",
        "density_bulk_corrections",
        "density_emerging",
        "density_largest_eigenvalue",
        "density_largest_correction",
        "density_largest_emerging",
    ] {
        assert!(a.files.contains_key(&format!("{name}.csv")), "{name}");
    }
    assert!(a.summary["separated_position"].as_f64().unwrap() > 30.0);
    let theory = read_column(&a.files["density_bulk.csv"], "theory");
    assert!(theory.iter().all(|t| t.unwrap() >= 0.0));
}

#[test]
fn woe_moments_carry_closed_forms() {
    let a = execute(&config(
        r#"{"experiment": "woe-emerging", "n_series": 32, "horizon": 16, "q": 1.001, "realizations": 5}"#,
    ))
    .unwrap();
    let theory = read_column(&a.files["moments.csv"], "theory");
    let alpha = 1.001 - 1.0;
    assert_eq!(theory[0], Some(delta_m1_exact(16, alpha)));
    assert_eq!(theory[1], Some(delta_m2_exact(16, 32, alpha)));
    let emp = read_column(&a.files["moments.csv"], "empirical");
    // total = emerging + bulk in every realization, hence in the means
    let (t, e, b) = (emp[0].unwrap(), emp[2].unwrap(), emp[4].unwrap());
    assert!((t - e - b).abs() <= 1e-12 * t.abs().max(1e-12));
}

#[test]
fn blocks_and_banded_outputs() {
    let a = execute(&config(
        r#"{"experiment": "cwoe-blocks", "n_series": 48, "horizon": 24, "realizations": 3,
            "xi": {"kind": "block-diagonal", "blocks": [{"size": 24, "coeff": 0.9}, {"size": 24, "coeff": 0.3}]}}"#,
    ))
    .unwrap();
    let fractions = read_column(&a.files["overlap.csv"], "block_0");
    assert!(!fractions.is_empty());
    let b1 = read_column(&a.files["overlap.csv"], "block_1");
    for (x, y) in fractions.iter().zip(&b1) {
        assert!((x.unwrap() + y.unwrap() - 1.0).abs() < 1e-10);
    }

    let b = execute(&config(
        r#"{"experiment": "cwoe-banded", "n_series": 64, "horizon": 32, "realizations": 2,
            "xi": {"kind": "banded", "c": 0.5}, "histogram": {"bins": 10}}"#,
    ))
    .unwrap();
    let theory = read_column(&b.files["density_bulk.csv"], "theory");
    assert_eq!(theory.len(), 10);
    assert!(theory.iter().any(|t| t.unwrap() > 0.1));
}

#[test]
fn theory_table_matches_library() {
    let a = execute(&config(
        r#"{"experiment": "theory-table", "n_series": 512, "horizons": [2, 64, 1024], "q": 1.001,
            "xi": {"kind": "one-block", "c": 0.5}}"#,
    ))
    .unwrap();
    let csv = &a.files["theory_table.csv"];
    let mut r = csv::Reader::from_reader(csv.as_bytes());
    let mut seen = 0;
    for rec in r.records() {
        let rec = rec.unwrap();
        if &rec[0] == "delta_m1_exact" {
            let t: usize = rec[1].parse().unwrap();
            let v: f64 = rec[6].parse().unwrap();
            assert_eq!(v, delta_m1_exact(t, 1.001 - 1.0));
            seen += 1;
        }
    }
    assert_eq!(seen, 3);
    assert!(csv.contains("separated_position"));
}

#[test]
fn portfolio_sweep_small() {
    let a = execute(&config(
        r#"{"experiment": "portfolio", "horizons": [50, 150], "realizations": 4, "q_grid": [1.5, 2.0]}"#,
    ))
    .unwrap();
    let csv = &a.files["portfolio.csv"];
    assert!(csv.contains("best-power-map"));
    assert_eq!(a.summary["volatilities"].as_array().unwrap().len(), 100);
}

#[test]
fn invalid_config_is_rejected_with_diagnostics() {
    let err = execute(&config(r#"{"experiment": "woe-emerging", "q": 0.5, "realizations": 0}"#)).unwrap_err();
    let CliError::Invalid(diags) = &err else { panic!("{err}") };
    assert!(diags.len() >= 2);
    let v: Value = serde_json::from_str(&err.to_json()).unwrap();
    assert_eq!(v["error"], "invalid-config");
    assert!(v["message"].as_str().unwrap().contains("invalid"));
    assert!(ExperimentConfig::from_json(r#"{"experiment": "woe-emerging", "bogus": 1}"#).is_err());
}

fn emspec() -> Command {
    Command::new(env!("CARGO_BIN_EXE_emspec"))
}

#[test]
fn binary_run_validate_and_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.json");
    fs::write(&cfg, r#"{"experiment": "woe-emerging", "n_series": 24, "horizon": 12, "realizations": 50}"#).unwrap();
    let out = tmp.path().join("out");
    let status = emspec()
        .args(["run", "--config"])
        .arg(&cfg)
        .args(["--seed", "5", "--realizations", "3", "--out"])
        .arg(&out)
        .env("EMSPEC_WORKERS", "2")
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let record: Value = serde_json::from_str(&fs::read_to_string(out.join("run.json")).unwrap()).unwrap();
    assert_eq!(record["master_seed"], 5);
    assert_eq!(record["realizations"], 3);
    assert!(out.join("moments.csv").exists());

    let ok = emspec().args(["validate", "--config"]).arg(&cfg).output().unwrap();
    assert!(ok.status.success());
    let diags: Value = serde_json::from_slice(&ok.stdout).unwrap();
    assert!(diags.as_array().unwrap().iter().all(|d| d["severity"] != "error"));

    let bad = tmp.path().join("bad.json");
    fs::write(&bad, r#"{"experiment": "woe-emerging", "q": 0.9}"#).unwrap();
    let v = emspec().args(["validate", "--config"]).arg(&bad).output().unwrap();
    assert!(!v.status.success());
    assert!(String::from_utf8_lossy(&v.stdout).contains("exponent below 1"));
    let r = emspec().args(["run", "--config"]).arg(&bad).output().unwrap();
    assert!(!r.status.success());
    let e: Value = serde_json::from_slice(&r.stderr).unwrap();
    assert_eq!(e["error"], "invalid-config");

    let missing = emspec().args(["run", "--config", "/nonexistent/x.json"]).output().unwrap();
    let e: Value = serde_json::from_slice(&missing.stderr).unwrap();
    assert_eq!(e["error"], "io");

    let table = emspec().args(["theory-table", "--out"]).arg(tmp.path().join("tt")).output().unwrap();
    assert!(table.status.success());
    assert!(String::from_utf8_lossy(&table.stdout).starts_with("quantity,T,N,kappa,c,alpha,value"));
}
