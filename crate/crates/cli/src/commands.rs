use std::collections::HashMap;
use std::path::Path;
use std::time::Instant;

use chrono::NaiveDate;
use serde_json::{json, Value};
use tpgraph_core::graph::SUPPORT_TOL;
use tpgraph_core::io::{read_observations, write_observations, write_precision};
use tpgraph_core::learner::batch_size;
use tpgraph_core::metrics::modularity_report;
use tpgraph_core::{
    learn_structure, sample_gaussian, GeneratorSpec, Graph, LearnerConfig, MetricsReport, ObservationMatrix,
    SectorLabels,
};

use crate::args::{EvalArgs, GenArgs, LearnArgs, ModularityArgs, ReturnsArgs};
use crate::error::{input, Result};

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| input(format!("{}: {e}", dir.display())))
}

/// Writes `precision.csv`, `truth.tsv` and `data.csv` under `args.out`.
/// The model, the sample and (later) the learner draw from separate seeded
/// streams, so one `--seed` serves all three.
pub fn gen(args: &GenArgs) -> Result<Value> {
    let spec = GeneratorSpec {
        density: args.density,
        r: args.r,
        seed: args.seed,
        ..GeneratorSpec::new(args.family, args.p)
    };
    spec.validate()?;
    if args.n == 0 {
        return Err(input("n must be at least 1"));
    }
    let model = spec.generate()?;
    let truth = Graph::from_precision(&model, SUPPORT_TOL)?;
    let data = sample_gaussian(&model, args.n, args.seed)?;

    create_dir(&args.out)?;
    let precision = args.out.join("precision.csv");
    let truth_path = args.out.join("truth.tsv");
    let data_path = args.out.join("data.csv");
    write_precision(&model, args.family.name(), &precision)?;
    truth.write_edge_list(&truth_path)?;
    write_observations(&data, &data_path)?;
    Ok(json!({
        "family": args.family.name(),
        "p": args.p,
        "n": args.n,
        "edges": truth.n_edges(),
        "seed": args.seed,
        "precision": precision,
        "truth": truth_path,
        "data": data_path,
    }))
}

pub fn learn(args: &LearnArgs) -> Result<Value> {
    let config = LearnerConfig {
        gamma: args.gamma,
        seed: args.seed,
        max_level: args.max_level,
        centered: args.center.resolve(false),
        singular_policy: args.singular.into(),
        unsafe_gamma: args.unsafe_gamma,
    };
    config.validate()?;
    let data = read_observations(&args.data)?;
    let start = Instant::now();
    let (graph, record) = learn_structure(&data, &config)?;
    let wall_ms = start.elapsed().as_millis() as u64;
    graph.write_edge_list(&args.out)?;
    Ok(json!({
        "n": data.n_rows(),
        "p": data.n_cols(),
        "gamma": config.gamma,
        "batch_size": batch_size(data.n_rows(), config.gamma),
        "seed": config.seed,
        "centered": config.centered,
        "edges": graph.n_edges(),
        "tests_run": record.tests_run,
        "edges_deleted_per_level": record.edges_deleted_per_level,
        "singular_skips": record.singular_skips,
        "final_level": record.final_level,
        "wall_ms": wall_ms,
    }))
}

pub fn metrics_json(report: &MetricsReport) -> Value {
    json!({
        "tp": report.counts.tp,
        "tn": report.counts.tn,
        "fp": report.counts.fp,
        "fn": report.counts.fn_,
        "mcc": report.mcc,
        "tpr": report.tpr,
        "fpr": report.fpr,
    })
}

pub fn eval(args: &EvalArgs) -> Result<Value> {
    let estimated = Graph::read_edge_list(&args.estimated)?;
    let truth = Graph::read_edge_list(&args.truth)?;
    if estimated.p() != truth.p() {
        return Err(input(format!(
            "estimated graph has p={} but truth has p={}",
            estimated.p(),
            truth.p()
        )));
    }
    let value = metrics_json(&MetricsReport::compare(&estimated, &truth)?);
    if let Some(out) = &args.out {
        let text = format!("{}\n", serde_json::to_string_pretty(&value).expect("json"));
        std::fs::write(out, text).map_err(|e| input(format!("{}: {e}", out.display())))?;
    }
    Ok(value)
}

pub struct PriceTable {
    pub dates: Vec<NaiveDate>,
    pub tickers: Vec<String>,
    /// Row-major `dates.len() × tickers.len()`.
    pub prices: Vec<f64>,
}

/// Reads `date,T1,T2,…` with ISO dates in strictly increasing order and
/// strictly positive prices.
pub fn read_prices(path: &Path) -> Result<PriceTable> {
    let where_ = |line: u64| format!("{}:{line}", path.display());
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| input(format!("{}: {e}", path.display())))?;
    let header = rdr
        .headers()
        .map_err(|e| input(format!("{}: {e}", path.display())))?
        .clone();
    if header.get(0) != Some("date") || header.len() < 2 {
        return Err(input(format!(
            "{}: expected header 'date,<ticker>,...'",
            path.display()
        )));
    }
    let tickers: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let mut dates: Vec<NaiveDate> = Vec::new();
    let mut prices = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| input(format!("{}: {e}", path.display())))?;
        let line = record.position().map_or(0, |p| p.line());
        let date = NaiveDate::parse_from_str(&record[0], "%Y-%m-%d")
            .map_err(|_| input(format!("{}: bad date {:?}", where_(line), &record[0])))?;
        if let Some(prev) = dates.last() {
            if date <= *prev {
                return Err(input(format!("{}: date {date} does not follow {prev}", where_(line))));
            }
        }
        dates.push(date);
        for (field, ticker) in record.iter().skip(1).zip(&tickers) {
            if field.is_empty() {
                return Err(input(format!("{}: missing price for {ticker} on {date}", where_(line))));
            }
            let price: f64 = field
                .parse()
                .map_err(|_| input(format!("{}: bad price {field:?} for {ticker} on {date}", where_(line))))?;
            if !(price > 0.0 && price.is_finite()) {
                return Err(input(format!(
                    "{}: price {field} for {ticker} on {date} is not positive",
                    where_(line)
                )));
            }
            prices.push(price);
        }
    }
    Ok(PriceTable { dates, tickers, prices })
}

/// `log(S_t / S_{t-1})` per ticker, optionally centered per column.
pub fn log_returns(table: &PriceTable, centered: bool) -> Result<ObservationMatrix> {
    let p = table.tickers.len();
    let t = table.dates.len();
    if t < 2 {
        return Err(input("need at least two dates to form returns"));
    }
    let mut values = Vec::with_capacity((t - 1) * p);
    for row in 1..t {
        for c in 0..p {
            values.push((table.prices[row * p + c] / table.prices[(row - 1) * p + c]).ln());
        }
    }
    if centered {
        for c in 0..p {
            let mean = (0..t - 1).map(|r| values[r * p + c]).sum::<f64>() / (t - 1) as f64;
            for r in 0..t - 1 {
                values[r * p + c] -= mean;
            }
        }
    }
    Ok(ObservationMatrix::new(t - 1, p, values)?.with_column_names(table.tickers.clone())?)
}

pub fn returns(args: &ReturnsArgs) -> Result<Value> {
    let table = read_prices(&args.prices)?;
    let centered = args.center.resolve(true);
    let data = log_returns(&table, centered)?;
    write_observations(&data, &args.out)?;
    Ok(json!({
        "rows": data.n_rows(),
        "tickers": data.n_cols(),
        "centered": centered,
        "first_date": table.dates[0].to_string(),
        "last_date": table.dates[table.dates.len() - 1].to_string(),
        "data": args.out,
    }))
}

fn read_sectors(path: &Path) -> Result<HashMap<String, String>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| input(format!("{}: {e}", path.display())))?;
    let header = rdr
        .headers()
        .map_err(|e| input(format!("{}: {e}", path.display())))?
        .clone();
    if header.len() != 2 || &header[0] != "ticker" || &header[1] != "sector" {
        return Err(input(format!("{}: expected header 'ticker,sector'", path.display())));
    }
    let mut map = HashMap::new();
    for record in rdr.records() {
        let record = record.map_err(|e| input(format!("{}: {e}", path.display())))?;
        if map.insert(record[0].to_string(), record[1].to_string()).is_some() {
            return Err(input(format!(
                "{}: ticker {:?} listed twice",
                path.display(),
                &record[0]
            )));
        }
    }
    Ok(map)
}

fn node_names(data: Option<&Path>, p: usize) -> Result<Vec<String>> {
    let Some(path) = data else {
        return Ok((0..p).map(|i| i.to_string()).collect());
    };
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| input(format!("{}: {e}", path.display())))?;
    let names: Vec<String> = rdr
        .headers()
        .map_err(|e| input(format!("{}: {e}", path.display())))?
        .iter()
        .map(str::to_string)
        .collect();
    if names.len() != p {
        return Err(input(format!(
            "{}: {} columns but the graph has p={p}",
            path.display(),
            names.len()
        )));
    }
    Ok(names)
}

pub fn modularity(args: &ModularityArgs) -> Result<Value> {
    let graph = Graph::read_edge_list(&args.graph)?;
    let sectors = read_sectors(&args.sectors)?;
    let names = node_names(args.data.as_deref(), graph.p())?;
    let labels = names
        .iter()
        .enumerate()
        .map(|(i, name)| {
            sectors
                .get(name)
                .cloned()
                .ok_or_else(|| input(format!("node {i} ({name}) has no sector label")))
        })
        .collect::<Result<Vec<_>>>()?;
    let report = modularity_report(&graph, &SectorLabels::new(labels)?)?;
    let sectors: Vec<Value> = report
        .sectors
        .iter()
        .map(|s| {
            json!({
                "sector": s.sector,
                "nodes": s.nodes,
                "internal_edges": s.internal_edges,
                "degree_sum": s.degree_sum,
            })
        })
        .collect();
    Ok(json!({ "q": report.q, "n_edges": report.n_edges, "sectors": sectors }))
}
