//! Resumable experiment grids.
//!
//! Every `(family, n, gamma, trial)` cell is seeded by
//! `derive_seed("{base_seed}|{family label}|{n}|{gamma bits as hex}|{trial}")`.
//! That one seed drives the random-family generator, the Gaussian sample and
//! the learner's batches; they read separate stream domains. Rows are appended
//! to the output as cells finish, and the file is rewritten in grid order at
//! the end (each group's trial rows, then its summary row). A rerun keeps
//! every completed data row whose key and seed still match and computes only
//! the rest, so a rerun over finished output changes nothing.

use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tpgraph_core::graph::SUPPORT_TOL;
use tpgraph_core::learner::validate_gamma;
use tpgraph_core::rng::derive_seed;
use tpgraph_core::synth::{Family, DEFAULT_CHAIN_R, DEFAULT_DENSITY};
use tpgraph_core::{learn_structure, sample_gaussian, GeneratorSpec, Graph, LearnerConfig, MetricsReport};

use crate::error::{input, CliError, Result};
use crate::gamma::parse_gamma;

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum GammaValue {
    Number(f64),
    Text(String),
}

impl GammaValue {
    pub fn value(&self) -> Result<f64> {
        match self {
            GammaValue::Number(g) => Ok(*g),
            GammaValue::Text(t) => parse_gamma(t).map_err(CliError::Input),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyConfig {
    #[serde(deserialize_with = "family_from_str")]
    pub family: Family,
    pub p: usize,
    pub density: Option<f64>,
    pub r: Option<f64>,
}

fn family_from_str<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Family, D::Error> {
    let name = String::deserialize(d)?;
    name.parse().map_err(serde::de::Error::custom)
}

impl FamilyConfig {
    fn spec(&self) -> GeneratorSpec {
        GeneratorSpec {
            density: self.density.unwrap_or(DEFAULT_DENSITY),
            r: self.r.unwrap_or(DEFAULT_CHAIN_R),
            ..GeneratorSpec::new(self.family, self.p)
        }
    }

    /// Family-specific parameter written in the `param` column.
    fn param(&self) -> Option<f64> {
        let spec = self.spec();
        match self.family {
            Family::Grid => None,
            Family::Random => Some(spec.density),
            Family::Chain => Some(spec.r),
        }
    }

    /// `grid-p9`, `random-p50-d0.02`, `chain-p10-r0.9`.
    pub fn label(&self) -> String {
        let spec = self.spec();
        match self.family {
            Family::Grid => format!("grid-p{}", self.p),
            Family::Random => format!("random-p{}-d{}", self.p, spec.density),
            Family::Chain => format!("chain-p{}-r{}", self.p, spec.r),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub families: Vec<FamilyConfig>,
    pub n_values: Vec<usize>,
    pub gammas: Vec<GammaValue>,
    pub trials: usize,
    pub base_seed: u64,
    pub output_path: Option<PathBuf>,
    pub parallelism: Option<usize>,
    pub max_level: Option<usize>,
    #[serde(default)]
    pub unsafe_gamma: bool,
    #[serde(default)]
    pub centered: bool,
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| input(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| input(format!("{}: {e}", path.display())))
    }

    pub fn gamma_values(&self) -> Result<Vec<f64>> {
        self.gammas.iter().map(GammaValue::value).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(input("trials must be at least 1"));
        }
        if self.families.is_empty() || self.n_values.is_empty() || self.gammas.is_empty() {
            return Err(input("families, n_values and gammas must be nonempty"));
        }
        if self.parallelism == Some(0) {
            return Err(input("parallelism must be at least 1"));
        }
        for f in &self.families {
            f.spec().validate().map_err(|e| input(format!("{}: {e}", f.label())))?;
        }
        if let Some(&n) = self.n_values.iter().find(|&&n| n == 0) {
            return Err(input(format!("sample size {n} must be positive")));
        }
        let gammas = self.gamma_values()?;
        for &g in &gammas {
            validate_gamma(g, self.unsafe_gamma)?;
        }
        let distinct_labels: BTreeSet<String> = self.families.iter().map(FamilyConfig::label).collect();
        let distinct_n: BTreeSet<usize> = self.n_values.iter().copied().collect();
        let distinct_g: BTreeSet<u64> = gammas.iter().map(|g| g.to_bits()).collect();
        if distinct_labels.len() != self.families.len()
            || distinct_n.len() != self.n_values.len()
            || distinct_g.len() != gammas.len()
        {
            return Err(input("duplicate family, sample size or gamma in config"));
        }
        Ok(())
    }
}

pub fn cell_seed(base_seed: u64, label: &str, n: usize, gamma: f64, trial: usize) -> u64 {
    derive_seed(&format!("{base_seed}|{label}|{n}|{:016x}|{trial}", gamma.to_bits()))
}

/// One CSV row. `kind` is `data`, `error` or `summary`; summary rows hold
/// cell means in the count columns and population standard deviations in
/// the `*_std` columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub kind: String,
    pub family: String,
    pub p: usize,
    pub param: Option<f64>,
    pub trial: Option<usize>,
    pub seed: Option<u64>,
    pub gamma: f64,
    pub n: usize,
    pub tp: Option<f64>,
    pub tn: Option<f64>,
    pub fp: Option<f64>,
    #[serde(rename = "fn")]
    pub fn_: Option<f64>,
    pub mcc: Option<f64>,
    pub tpr: Option<f64>,
    pub fpr: Option<f64>,
    pub tests_run: Option<f64>,
    pub singular_skips: Option<f64>,
    pub wall_ms: Option<f64>,
    pub mcc_std: Option<f64>,
    pub tpr_std: Option<f64>,
    pub fpr_std: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
struct Cell {
    family: usize,
    label: String,
    p: usize,
    param: Option<f64>,
    spec: GeneratorSpec,
    n: usize,
    gamma: f64,
    trial: usize,
    seed: u64,
}

type Key = (String, usize, u64, usize);

impl Cell {
    fn key(&self) -> Key {
        (self.label.clone(), self.n, self.gamma.to_bits(), self.trial)
    }

    fn blank_row(&self, kind: &str) -> Row {
        Row {
            kind: kind.to_string(),
            family: self.label.clone(),
            p: self.p,
            param: self.param,
            trial: Some(self.trial),
            seed: Some(self.seed),
            gamma: self.gamma,
            n: self.n,
            tp: None,
            tn: None,
            fp: None,
            fn_: None,
            mcc: None,
            tpr: None,
            fpr: None,
            tests_run: None,
            singular_skips: None,
            wall_ms: None,
            mcc_std: None,
            tpr_std: None,
            fpr_std: None,
            error: None,
        }
    }

    fn run(&self, config: &ExperimentConfig) -> Row {
        match self.compute(config) {
            Ok(row) => row,
            Err(e) => Row {
                error: Some(e.to_string()),
                ..self.blank_row("error")
            },
        }
    }

    fn compute(&self, config: &ExperimentConfig) -> tpgraph_core::Result<Row> {
        let spec = GeneratorSpec {
            seed: self.seed,
            ..self.spec.clone()
        };
        let model = spec.generate()?;
        let truth = Graph::from_precision(&model, SUPPORT_TOL)?;
        let data = sample_gaussian(&model, self.n, self.seed)?;
        let learner = LearnerConfig {
            gamma: self.gamma,
            seed: self.seed,
            max_level: config.max_level,
            centered: config.centered,
            unsafe_gamma: config.unsafe_gamma,
            ..LearnerConfig::default()
        };
        let start = Instant::now();
        let (graph, record) = learn_structure(&data, &learner)?;
        let wall_ms = start.elapsed().as_millis() as f64;
        let m = MetricsReport::compare(&graph, &truth)?;
        Ok(Row {
            tp: Some(m.counts.tp as f64),
            tn: Some(m.counts.tn as f64),
            fp: Some(m.counts.fp as f64),
            fn_: Some(m.counts.fn_ as f64),
            mcc: m.mcc,
            tpr: m.tpr,
            fpr: m.fpr,
            tests_run: Some(record.tests_run as f64),
            singular_skips: Some(record.singular_skips as f64),
            wall_ms: Some(wall_ms),
            ..self.blank_row("data")
        })
    }
}

fn cells(config: &ExperimentConfig) -> Result<Vec<Cell>> {
    let gammas = config.gamma_values()?;
    let mut out = Vec::new();
    for (fi, family) in config.families.iter().enumerate() {
        let label = family.label();
        for &n in &config.n_values {
            for &gamma in &gammas {
                for trial in 0..config.trials {
                    out.push(Cell {
                        family: fi,
                        label: label.clone(),
                        p: family.p,
                        param: family.param(),
                        spec: family.spec(),
                        n,
                        gamma,
                        trial,
                        seed: cell_seed(config.base_seed, &label, n, gamma, trial),
                    });
                }
            }
        }
    }
    Ok(out)
}

/// Completed data rows from an earlier run, keyed by cell. Unreadable or
/// truncated lines (an interrupted append) are ignored.
fn load_completed(path: &Path) -> Result<HashMap<Key, Row>> {
    let mut out = HashMap::new();
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(out),
        Err(e) => return Err(input(format!("{}: {e}", path.display()))),
    };
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(file);
    for row in rdr.deserialize::<Row>().flatten() {
        if row.kind == "data" {
            if let Some(trial) = row.trial {
                out.insert((row.family.clone(), row.n, row.gamma.to_bits(), trial), row);
            }
        }
    }
    Ok(out)
}

fn mean_std(values: &[f64]) -> (Option<f64>, Option<f64>) {
    if values.is_empty() {
        return (None, None);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (Some(mean), Some(var.sqrt()))
}

/// Mean (and population std for the rates) over a group's data rows; rates
/// that are undefined in some rows average over the defined ones only.
fn summary(rows: &[&Row]) -> Option<Row> {
    let first = *rows.first()?;
    let col = |f: fn(&Row) -> Option<f64>| rows.iter().filter_map(|r| f(r)).collect::<Vec<f64>>();
    let mean = |f: fn(&Row) -> Option<f64>| mean_std(&col(f)).0;
    let (mcc, mcc_std) = mean_std(&col(|r| r.mcc));
    let (tpr, tpr_std) = mean_std(&col(|r| r.tpr));
    let (fpr, fpr_std) = mean_std(&col(|r| r.fpr));
    Some(Row {
        kind: "summary".into(),
        family: first.family.clone(),
        p: first.p,
        param: first.param,
        trial: None,
        seed: None,
        gamma: first.gamma,
        n: first.n,
        tp: mean(|r| r.tp),
        tn: mean(|r| r.tn),
        fp: mean(|r| r.fp),
        fn_: mean(|r| r.fn_),
        mcc,
        tpr,
        fpr,
        tests_run: mean(|r| r.tests_run),
        singular_skips: mean(|r| r.singular_skips),
        wall_ms: mean(|r| r.wall_ms),
        mcc_std,
        tpr_std,
        fpr_std,
        error: None,
    })
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(format!("{}: {e}", path.display()))
}

pub struct SweepOutcome {
    pub rows: Vec<Row>,
    pub computed: usize,
    pub reused: usize,
    pub failed: usize,
}

pub fn run_sweep(config: &ExperimentConfig, output: &Path) -> Result<SweepOutcome> {
    config.validate()?;
    let cells = cells(config)?;
    let previous = load_completed(output)?;
    let mut results: Vec<Option<Row>> = cells
        .iter()
        .map(|c| previous.get(&c.key()).filter(|r| r.seed == Some(c.seed)).cloned())
        .collect();
    let reused = results.iter().flatten().count();

    // Checkpoint: header plus reused rows, then appends as cells finish.
    let mut writer = csv::Writer::from_path(output).map_err(|e| io_err(output, e))?;
    for row in results.iter().flatten() {
        writer.serialize(row).map_err(|e| io_err(output, e))?;
    }
    writer.flush().map_err(|e| io_err(output, e))?;
    let writer = Mutex::new(writer);

    let pending: Vec<usize> = (0..cells.len()).filter(|&i| results[i].is_none()).collect();
    let threads = config.parallelism.unwrap_or_else(rayon::current_num_threads);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let fresh: Vec<(usize, Row)> = pool.install(|| {
        pending
            .par_iter()
            .map(|&i| {
                let row = cells[i].run(config);
                let mut w = writer.lock().expect("writer lock");
                // a failed checkpoint append only costs recomputation later
                let _ = w.serialize(&row).and_then(|_| w.flush().map_err(Into::into));
                (i, row)
            })
            .collect()
    });
    drop(writer);
    let computed = fresh.len();
    let mut failed = 0;
    for (i, row) in fresh {
        failed += usize::from(row.kind == "error");
        results[i] = Some(row);
    }

    let mut rows = Vec::new();
    let mut group: Vec<&Row> = Vec::new();
    for (i, cell) in cells.iter().enumerate() {
        let row = results[i].as_ref().expect("every cell has a row");
        rows.push(row.clone());
        if row.kind == "data" {
            group.push(row);
        }
        let last_in_group = cells.get(i + 1).is_none_or(|next| {
            (next.family, next.n, next.gamma.to_bits()) != (cell.family, cell.n, cell.gamma.to_bits())
        });
        if last_in_group {
            rows.extend(summary(&group));
            group.clear();
        }
    }

    let tmp = output.with_extension("csv.tmp");
    let mut w = csv::Writer::from_path(&tmp).map_err(|e| io_err(&tmp, e))?;
    for row in &rows {
        w.serialize(row).map_err(|e| io_err(&tmp, e))?;
    }
    w.flush().map_err(|e| io_err(&tmp, e))?;
    drop(w);
    std::fs::rename(&tmp, output).map_err(|e| io_err(output, e))?;
    Ok(SweepOutcome {
        rows,
        computed,
        reused,
        failed,
    })
}

pub fn sweep(args: &crate::args::SweepArgs) -> Result<Value> {
    let mut config = ExperimentConfig::from_path(&args.config)?;
    if let Some(p) = args.parallelism {
        config.parallelism = Some(p);
    }
    let output = args
        .out
        .clone()
        .or_else(|| config.output_path.clone())
        .ok_or_else(|| input("no output path: set output_path in the config or pass --out"))?;
    let outcome = run_sweep(&config, &output)?;
    let summary = json!({
        "cells": outcome.computed + outcome.reused,
        "computed": outcome.computed,
        "reused": outcome.reused,
        "failed": outcome.failed,
        "output": output,
    });
    if outcome.failed > 0 {
        println!("{summary}");
        return Err(CliError::Runtime(format!(
            "{} sweep cells failed; see error rows in {}",
            outcome.failed,
            output.display()
        )));
    }
    Ok(summary)
}
