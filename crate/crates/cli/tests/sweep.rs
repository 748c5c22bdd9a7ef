use std::path::Path;
use std::process::Command;

use tempfile::TempDir;
use tpgraph_cli::sweep::{cell_seed, run_sweep, ExperimentConfig, Row};
use tpgraph_core::graph::SUPPORT_TOL;
use tpgraph_core::synth::generate_chain;
use tpgraph_core::{learn_structure, sample_gaussian, Graph, LearnerConfig, MetricsReport};

fn config(json: &str) -> ExperimentConfig {
    serde_json::from_str(json).unwrap()
}

fn read_rows(path: &Path) -> Vec<Row> {
    csv::Reader::from_path(path)
        .unwrap()
        .deserialize()
        .map(Result::unwrap)
        .collect()
}

fn without_wall(rows: &[Row]) -> Vec<Row> {
    rows.iter()
        .map(|r| Row {
            wall_ms: None,
            ..r.clone()
        })
        .collect()
}

const SMALL: &str = r#"{"families":[{"family":"chain","p":6,"r":0.9},{"family":"grid","p":9}],
  "n_values":[300,3000],"gammas":["7/9",0.85],"trials":3,"base_seed":21}"#;

#[test]
fn one_cell_gives_data_and_summary() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("s.csv");
    let cfg =
        config(r#"{"families":[{"family":"chain","p":5}],"n_values":[1000],"gammas":[0.8],"trials":1,"base_seed":3}"#);
    let outcome = run_sweep(&cfg, &out).unwrap();
    let rows = read_rows(&out);
    assert_eq!(rows, outcome.rows);
    assert_eq!(
        rows.iter().map(|r| r.kind.as_str()).collect::<Vec<_>>(),
        ["data", "summary"]
    );
    assert_eq!(rows[0].mcc, rows[1].mcc);
    assert_eq!(rows[1].mcc_std, Some(0.0));
    let header = std::fs::read_to_string(&out)
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_string();
    assert_eq!(
        header,
        "kind,family,p,param,trial,seed,gamma,n,tp,tn,fp,fn,mcc,tpr,fpr,tests_run,singular_skips,wall_ms,mcc_std,tpr_std,fpr_std,error"
    );
}

#[test]
fn rerun_is_free_and_identical() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("s.csv");
    let cfg = config(SMALL);
    let first = run_sweep(&cfg, &out).unwrap();
    assert_eq!((first.computed, first.reused, first.failed), (24, 0, 0));
    let bytes = std::fs::read(&out).unwrap();
    let second = run_sweep(&cfg, &out).unwrap();
    assert_eq!((second.computed, second.reused), (0, 24));
    assert_eq!(std::fs::read(&out).unwrap(), bytes);
}

#[test]
fn interrupted_sweep_resumes() {
    let tmp = TempDir::new().unwrap();
    let full = tmp.path().join("full.csv");
    let cfg = config(SMALL);
    let reference = run_sweep(&cfg, &full).unwrap();

    // header, two completed rows and a torn append
    let text = std::fs::read_to_string(&full).unwrap();
    let mut partial: String = text.lines().take(3).map(|l| format!("{l}\n")).collect();
    partial.push_str("data,chain-p6-r0.9,6,0.9,2,123");
    let out = tmp.path().join("part.csv");
    std::fs::write(&out, partial).unwrap();

    let resumed = run_sweep(&cfg, &out).unwrap();
    assert_eq!((resumed.computed, resumed.reused), (22, 2));
    assert_eq!(without_wall(&resumed.rows), without_wall(&reference.rows));
    let rows = read_rows(&out);
    assert_eq!(rows[..2], reference.rows[..2]);
}

#[test]
fn stale_rows_are_recomputed() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("s.csv");
    run_sweep(&config(SMALL), &out).unwrap();
    let reseeded = config(&SMALL.replace("\"base_seed\":21", "\"base_seed\":22"));
    let outcome = run_sweep(&reseeded, &out).unwrap();
    assert_eq!(outcome.computed, 24);
}

#[test]
fn summary_rows_are_cell_means() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("s.csv");
    let rows = run_sweep(&config(SMALL), &out).unwrap().rows;
    let mut group: Vec<&Row> = Vec::new();
    let mut summaries = 0;
    for row in &rows {
        if row.kind == "data" {
            group.push(row);
            continue;
        }
        summaries += 1;
        assert_eq!(group.len(), 3);
        let mean = |f: fn(&Row) -> Option<f64>| group.iter().map(|r| f(r).unwrap()).sum::<f64>() / group.len() as f64;
        let close = |a: Option<f64>, b: f64| assert!((a.unwrap() - b).abs() <= 1e-12);
        close(row.tp, mean(|r| r.tp));
        close(row.tn, mean(|r| r.tn));
        close(row.fp, mean(|r| r.fp));
        close(row.fn_, mean(|r| r.fn_));
        close(row.mcc, mean(|r| r.mcc));
        close(row.tpr, mean(|r| r.tpr));
        close(row.fpr, mean(|r| r.fpr));
        close(row.tests_run, mean(|r| r.tests_run));
        let m = mean(|r| r.mcc);
        let var = group.iter().map(|r| (r.mcc.unwrap() - m).powi(2)).sum::<f64>() / 3.0;
        close(row.mcc_std, var.sqrt());
        assert!(group
            .iter()
            .all(|r| (r.family.as_str(), r.n, r.gamma) == (row.family.as_str(), row.n, row.gamma)));
        group.clear();
    }
    assert_eq!(summaries, 8);
}

#[test]
fn any_cell_reproduces_in_isolation() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("s.csv");
    let rows = run_sweep(&config(SMALL), &out).unwrap().rows;
    let row = rows
        .iter()
        .find(|r| {
            r.kind == "data" && r.family == "chain-p6-r0.9" && r.n == 3000 && r.gamma == 0.85 && r.trial == Some(2)
        })
        .unwrap();
    let seed = cell_seed(21, "chain-p6-r0.9", 3000, 0.85, 2);
    assert_eq!(row.seed, Some(seed));
    let model = generate_chain(6, 0.9).unwrap();
    let data = sample_gaussian(&model, 3000, seed).unwrap();
    let cfg = LearnerConfig {
        gamma: 0.85,
        ..LearnerConfig::with_seed(seed)
    };
    let (g, rec) = learn_structure(&data, &cfg).unwrap();
    let m = MetricsReport::compare(&g, &Graph::from_precision(&model, SUPPORT_TOL).unwrap()).unwrap();
    assert_eq!(row.tp, Some(m.counts.tp as f64));
    assert_eq!(row.fp, Some(m.counts.fp as f64));
    assert_eq!(row.mcc, m.mcc);
    assert_eq!(row.tests_run, Some(rec.tests_run as f64));
}

#[test]
fn failed_cells_become_error_rows() {
    let tmp = TempDir::new().unwrap();
    let cfg_path = tmp.path().join("c.json");
    // ⌊3^0.8⌋ = 2 rows: every n=3 cell fails with a batch error
    std::fs::write(
        &cfg_path,
        r#"{"families":[{"family":"chain","p":4}],"n_values":[3,400],"gammas":[0.8],"trials":2,"base_seed":1,"output_path":"s.csv"}"#,
    )
    .unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_tpgraph"))
        .current_dir(tmp.path())
        .args(["sweep", "--config", "c.json", "--parallelism", "2"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["failed"], 2);
    let rows = read_rows(&tmp.path().join("s.csv"));
    let kinds: Vec<&str> = rows.iter().map(|r| r.kind.as_str()).collect();
    assert_eq!(kinds, ["error", "error", "data", "data", "summary"]);
    assert!(rows[0].error.as_deref().unwrap().contains("too small"));
}

#[test]
fn bad_configs_exit_2() {
    let tmp = TempDir::new().unwrap();
    let cases = [
        r#"{"families":[{"family":"chain","p":4}],"n_values":[100],"gammas":[0.8],"trials":0,"base_seed":1}"#,
        r#"{"families":[{"family":"chain","p":4}],"n_values":[100],"gammas":[0.5],"trials":1,"base_seed":1}"#,
        r#"{"families":[{"family":"chain","p":4}],"n_values":[100],"gammas":["a/b"],"trials":1,"base_seed":1}"#,
        r#"{"families":[{"family":"grid","p":5}],"n_values":[100],"gammas":[0.8],"trials":1,"base_seed":1}"#,
        r#"{"families":[{"family":"chain","p":4}],"n_values":[100,100],"gammas":[0.8],"trials":1,"base_seed":1}"#,
        r#"{"families":[{"family":"chain","p":4}],"n_values":[100],"gammas":[0.8],"trials":1,"base_seed":1,"colour":1}"#,
        "not json",
    ];
    for (i, text) in cases.iter().enumerate() {
        std::fs::write(tmp.path().join("c.json"), text).unwrap();
        let out = Command::new(env!("CARGO_BIN_EXE_tpgraph"))
            .current_dir(tmp.path())
            .args(["sweep", "--config", "c.json", "--out", "s.csv"])
            .output()
            .unwrap();
        assert_eq!(
            out.status.code(),
            Some(2),
            "case {i}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}

#[test]
fn mcc_improves_with_n() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("s.csv");
    let cfg = config(
        r#"{"families":[{"family":"chain","p":10}],"n_values":[200,5000],"gammas":["7/9"],"trials":10,"base_seed":8}"#,
    );
    let rows = run_sweep(&cfg, &out).unwrap().rows;
    let means: Vec<f64> = rows
        .iter()
        .filter(|r| r.kind == "summary")
        .map(|r| r.mcc.unwrap())
        .collect();
    assert_eq!(means.len(), 2);
    assert!(means[1] > means[0], "{means:?}");
}
