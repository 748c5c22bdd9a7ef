//! Edge-recovery scores, γ sweeps and the modularity coefficient.
//!
//! Degenerate denominators produce `None` rather than NaN.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{confusion, ConfusionCounts, Graph};
use crate::learner::{learn_structure, validate_gamma, LearnerConfig};
use crate::rng::derive_seed;
use crate::stat::ObservationMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsReport {
    pub counts: ConfusionCounts,
    pub mcc: Option<f64>,
    pub tpr: Option<f64>,
    pub fpr: Option<f64>,
}

impl MetricsReport {
    pub fn from_counts(counts: ConfusionCounts) -> Self {
        let (tpr, fpr) = tpr_fpr(&counts);
        Self {
            counts,
            mcc: mcc(&counts),
            tpr,
            fpr,
        }
    }

    pub fn compare(estimated: &Graph, truth: &Graph) -> Result<Self> {
        Ok(Self::from_counts(confusion(estimated, truth)?))
    }
}

/// Matthews correlation coefficient
/// `(TP·TN − FP·FN) / √((TP+FP)(TP+FN)(TN+FP)(TN+FN))`.
pub fn mcc(c: &ConfusionCounts) -> Option<f64> {
    let factors = [c.tp + c.fp, c.tp + c.fn_, c.tn + c.fp, c.tn + c.fn_];
    if factors.contains(&0) {
        return None;
    }
    let num = c.tp as f64 * c.tn as f64 - c.fp as f64 * c.fn_ as f64;
    let den = factors.iter().map(|&f| f as f64).product::<f64>().sqrt();
    Some(num / den)
}

pub fn tpr_fpr(c: &ConfusionCounts) -> (Option<f64>, Option<f64>) {
    let ratio = |a: u64, b: u64| (a + b > 0).then(|| a as f64 / (a + b) as f64);
    (ratio(c.tp, c.fn_), ratio(c.fp, c.tn))
}

/// One category label per node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SectorLabels {
    labels: Vec<String>,
}

impl SectorLabels {
    pub fn new(labels: Vec<String>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::invalid("sector labels are empty"));
        }
        Ok(Self { labels })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SectorStats {
    pub sector: String,
    pub nodes: usize,
    /// Edges with both endpoints in the sector.
    pub internal_edges: usize,
    /// Sum of node degrees within the sector.
    pub degree_sum: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModularityReport {
    pub q: f64,
    pub n_edges: usize,
    pub sectors: Vec<SectorStats>,
}

/// Newman modularity `Q = (1/2|E|) Σ_{i,j} (A_ij − k_i k_j / 2|E|) δ(c_i, c_j)`,
/// with the sum over all ordered pairs including `i = j`.
pub fn modularity(graph: &Graph, sectors: &SectorLabels) -> Result<f64> {
    Ok(modularity_report(graph, sectors)?.q)
}

pub fn modularity_report(graph: &Graph, sectors: &SectorLabels) -> Result<ModularityReport> {
    let p = graph.p();
    if sectors.len() != p {
        return Err(Error::invalid(format!("{} sector labels for {p} nodes", sectors.len())));
    }
    let m = graph.n_edges();
    if m == 0 {
        return Err(Error::Numerical(
            "modularity undefined for a graph without edges".into(),
        ));
    }
    let mut stats: BTreeMap<&str, SectorStats> = BTreeMap::new();
    for (i, label) in sectors.labels().iter().enumerate() {
        let entry = stats.entry(label.as_str()).or_insert_with(|| SectorStats {
            sector: label.clone(),
            nodes: 0,
            internal_edges: 0,
            degree_sum: 0,
        });
        entry.nodes += 1;
        entry.degree_sum += graph.degree(i);
    }
    for (i, j) in graph.edges() {
        let (a, b) = (&sectors.labels()[i], &sectors.labels()[j]);
        if a == b {
            stats.get_mut(a.as_str()).expect("sector present").internal_edges += 1;
        }
    }
    let two_m = 2.0 * m as f64;
    let within: f64 = stats.values().map(|s| 2.0 * s.internal_edges as f64).sum();
    let expected: f64 = stats.values().map(|s| (s.degree_sum as f64).powi(2)).sum();
    let q = within / two_m - expected / (two_m * two_m);
    Ok(ModularityReport {
        q,
        n_edges: m,
        sectors: stats.into_values().collect(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub gamma: f64,
    pub seed: u64,
    pub n: usize,
    pub p: usize,
    pub graph: Graph,
    /// Present when a ground truth was supplied.
    pub metrics: Option<MetricsReport>,
    pub tests_run: u64,
    pub singular_skips: u64,
    pub wall_ms: u64,
}

/// Seed for one γ: derived from `SHA-256("{seed}|gamma|{γ bits as hex}")`,
/// so repeated γ values reuse the same seed.
pub fn gamma_seed(seed: u64, gamma: f64) -> u64 {
    derive_seed(&format!("{seed}|gamma|{:016x}", gamma.to_bits()))
}

/// Runs the learner once per γ (in parallel) and reports rows in input order.
/// `template` supplies every learner setting except γ and the seed.
pub fn gamma_sweep(
    data: &ObservationMatrix,
    gammas: &[f64],
    seed: u64,
    truth: Option<&Graph>,
    template: &LearnerConfig,
) -> Result<Vec<SweepRow>> {
    for &g in gammas {
        validate_gamma(g, template.unsafe_gamma).map_err(|e| e.context(format!("gamma {g}")))?;
    }
    gammas
        .par_iter()
        .map(|&gamma| {
            let config = LearnerConfig {
                gamma,
                seed: gamma_seed(seed, gamma),
                ..template.clone()
            };
            let start = Instant::now();
            let (graph, record) = learn_structure(data, &config).map_err(|e| e.context(format!("gamma {gamma}")))?;
            let wall_ms = start.elapsed().as_millis() as u64;
            let metrics = truth.map(|t| MetricsReport::compare(&graph, t)).transpose()?;
            Ok(SweepRow {
                gamma,
                seed: config.seed,
                n: data.n_rows(),
                p: data.n_cols(),
                graph,
                metrics,
                tests_run: record.tests_run,
                singular_skips: record.singular_skips,
                wall_ms,
            })
        })
        .collect()
}

/// `(FPR, TPR)` points sorted by FPR, skipping rows where either is undefined.
pub fn roc_points(rows: &[SweepRow]) -> Vec<(f64, f64)> {
    let mut pts: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| r.metrics.as_ref())
        .filter_map(|m| Some((m.fpr?, m.tpr?)))
        .collect();
    pts.sort_by(|a, b| a.partial_cmp(b).expect("finite rates"));
    pts
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn counts(tp: u64, tn: u64, fp: u64, fn_: u64) -> ConfusionCounts {
        ConfusionCounts { tp, tn, fp, fn_ }
    }

    fn labels(v: &[&str]) -> SectorLabels {
        SectorLabels::new(v.iter().map(|s| s.to_string()).collect()).unwrap()
    }

    #[test]
    fn mcc_examples() {
        assert_eq!(mcc(&counts(4, 7, 0, 0)), Some(1.0));
        assert!((mcc(&counts(2, 2, 1, 1)).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(mcc(&counts(0, 5, 0, 3)), None);
    }

    #[test]
    fn rate_examples() {
        assert_eq!(tpr_fpr(&counts(3, 4, 0, 0)), (Some(1.0), Some(0.0)));
        assert_eq!(tpr_fpr(&counts(2, 0, 4, 0)), (Some(1.0), Some(1.0)));
        let (tpr, fpr) = tpr_fpr(&counts(1, 2, 1, 1));
        assert_eq!(tpr, Some(0.5));
        assert!((fpr.unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(tpr_fpr(&counts(0, 3, 0, 0)), (None, Some(0.0)));
    }

    #[test]
    fn modularity_complete_single_sector() {
        let g = Graph::complete(5).unwrap();
        assert!(modularity(&g, &labels(&["a"; 5])).unwrap().abs() < 1e-12);
    }

    #[test]
    fn modularity_two_cliques() {
        for n in [2, 3, 5] {
            let mut g = Graph::empty(2 * n);
            for i in 0..n {
                for j in (i + 1)..n {
                    g.add_edge(i, j).unwrap();
                    g.add_edge(n + i, n + j).unwrap();
                }
            }
            let mut l = vec!["x"; n];
            l.extend(vec!["y"; n]);
            let rep = modularity_report(&g, &labels(&l)).unwrap();
            assert!((rep.q - 0.5).abs() < 1e-12);
            assert_eq!(rep.sectors.len(), 2);
            assert_eq!(rep.sectors[0].internal_edges, n * (n - 1) / 2);
        }
    }

    #[test]
    fn modularity_errors() {
        assert!(matches!(
            modularity(&Graph::empty(3), &labels(&["a", "b", "c"])),
            Err(Error::Numerical(_))
        ));
        assert!(modularity(&Graph::complete(3).unwrap(), &labels(&["a", "b"])).is_err());
        assert!(SectorLabels::new(vec![]).is_err());
    }

    #[test]
    fn singleton_sectors_are_negative() {
        let g = Graph::from_edges(4, [(0, 1), (1, 2), (2, 3)]).unwrap();
        let q = modularity(&g, &labels(&["a", "b", "c", "d"])).unwrap();
        // -Σ k² / (2|E|)² = -(1 + 4 + 4 + 1) / 36
        assert!((q + 10.0 / 36.0).abs() < 1e-15);
    }

    #[test]
    fn gamma_seed_repeats() {
        assert_eq!(gamma_seed(3, 0.8), gamma_seed(3, 0.8));
        assert_ne!(gamma_seed(3, 0.8), gamma_seed(3, 0.85));
    }

    #[test]
    fn roc_sorted() {
        let mk = |fpr: f64, tpr: f64| SweepRow {
            gamma: 0.8,
            seed: 0,
            n: 1,
            p: 2,
            graph: Graph::empty(2),
            metrics: Some(MetricsReport {
                counts: ConfusionCounts::default(),
                mcc: None,
                tpr: Some(tpr),
                fpr: Some(fpr),
            }),
            tests_run: 0,
            singular_skips: 0,
            wall_ms: 0,
        };
        let rows = vec![mk(0.3, 0.9), mk(0.1, 0.5), mk(0.2, 0.7)];
        assert_eq!(roc_points(&rows), vec![(0.1, 0.5), (0.2, 0.7), (0.3, 0.9)]);
    }

    proptest! {
        #[test]
        fn mcc_swap_symmetry(tp in 0u64..50, tn in 0u64..50, fp in 0u64..50, fn_ in 0u64..50) {
            let a = mcc(&counts(tp, tn, fp, fn_));
            let b = mcc(&counts(tn, tp, fn_, fp));
            match (a, b) {
                (Some(x), Some(y)) => {
                    prop_assert!((x - y).abs() < 1e-12);
                    prop_assert!((-1.0..=1.0).contains(&x));
                }
                (None, None) => {}
                _ => prop_assert!(false, "definedness differs"),
            }
        }

        #[test]
        fn modularity_relabel_invariant(mask in prop::collection::vec(any::<bool>(), 28), sec in prop::collection::vec(0usize..3, 8)) {
            let mut g = Graph::empty(8);
            let mut k = 0;
            for i in 0..8 {
                for j in (i + 1)..8 {
                    if mask[k] {
                        g.add_edge(i, j).unwrap();
                    }
                    k += 1;
                }
            }
            prop_assume!(g.n_edges() > 0);
            let names = ["alpha", "beta", "gamma"];
            let renamed = ["zeta", "eta", "theta"];
            let a = SectorLabels::new(sec.iter().map(|&s| names[s].to_string()).collect()).unwrap();
            let b = SectorLabels::new(sec.iter().map(|&s| renamed[(s + 1) % 3].to_string()).collect()).unwrap();
            let qa = modularity(&g, &a).unwrap();
            let qb = modularity(&g, &b).unwrap();
            prop_assert!((qa - qb).abs() < 1e-12);
        }
    }
}
