//! Brute-force validators that share no numerical path with the estimator:
//! partial correlations from regression residuals (normal equations solved by
//! full-pivot elimination), graph separation by breadth-first search, and
//! exhaustive checks of the MTP₂ sign and monotonicity properties.

use std::collections::VecDeque;

use nalgebra::DMatrix;
use rand::seq::index;

use crate::error::{Error, Result};
use crate::graph::{Graph, SUPPORT_TOL};
use crate::learner::batch_size;
use crate::rng::{stream, Domain};
use crate::stat::{partial_correlation, CovarianceMatrix, ObservationMatrix, PrecisionModel};

/// Solves `A x = b` by Gaussian elimination with full pivoting. Fails when a
/// pivot falls below `1e-13` times the largest entry of `A`.
pub fn solve_full_pivot(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let q = a.nrows();
    if a.ncols() != q || b.nrows() != q {
        return Err(Error::invalid("dimension mismatch in linear solve"));
    }
    let mut m = a.clone();
    let mut rhs = b.clone();
    let mut col_perm: Vec<usize> = (0..q).collect();
    let scale = a.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    for k in 0..q {
        let (mut pr, mut pc, mut best) = (k, k, -1.0);
        for r in k..q {
            for c in k..q {
                if m[(r, c)].abs() > best {
                    best = m[(r, c)].abs();
                    pr = r;
                    pc = c;
                }
            }
        }
        if best <= 1e-13 * scale || scale == 0.0 {
            return Err(Error::Numerical(format!("rank-deficient system at step {k}")));
        }
        m.swap_rows(k, pr);
        rhs.swap_rows(k, pr);
        m.swap_columns(k, pc);
        col_perm.swap(k, pc);
        for r in (k + 1)..q {
            let f = m[(r, k)] / m[(k, k)];
            if f == 0.0 {
                continue;
            }
            for c in k..q {
                m[(r, c)] -= f * m[(k, c)];
            }
            for c in 0..rhs.ncols() {
                rhs[(r, c)] -= f * rhs[(k, c)];
            }
        }
    }
    let mut y = DMatrix::<f64>::zeros(q, rhs.ncols());
    for c in 0..rhs.ncols() {
        for r in (0..q).rev() {
            let mut s = rhs[(r, c)];
            for t in (r + 1)..q {
                s -= m[(r, t)] * y[(t, c)];
            }
            y[(r, c)] = s / m[(r, r)];
        }
    }
    let mut x = DMatrix::<f64>::zeros(q, rhs.ncols());
    for (k, &orig) in col_perm.iter().enumerate() {
        x.set_row(orig, &y.row(k));
    }
    Ok(x)
}

/// `ρ_{ij|S}` as the correlation of the population residuals of `X_i` and
/// `X_j` after least-squares regression on `X_S`.
pub fn partial_correlation_oracle(cov: &CovarianceMatrix, i: usize, j: usize, s: &[usize]) -> Result<f64> {
    if i == j || s.contains(&i) || s.contains(&j) {
        return Err(Error::invalid("invalid partial correlation query"));
    }
    let sigma_ij = cov.submatrix(&[i, j])?;
    if s.is_empty() {
        return Ok(sigma_ij[(0, 1)] / (sigma_ij[(0, 0)] * sigma_ij[(1, 1)]).sqrt());
    }
    let sigma_ss = cov.submatrix(s)?;
    let mut all = s.to_vec();
    all.push(i);
    all.push(j);
    let full = cov.submatrix(&all)?;
    let q = s.len();
    let cross = full.view((0, q), (q, 2)).into_owned();
    let beta = solve_full_pivot(&sigma_ss, &cross)?;
    // residual covariance = Σ_{ij,ij} − Σ_{ij,S} β
    let resid = &sigma_ij - cross.transpose() * &beta;
    Ok(resid[(0, 1)] / (resid[(0, 0)] * resid[(1, 1)]).sqrt())
}

/// Sample version: regress columns `i` and `j` on the columns in `s` (with an
/// intercept when `centered`) over all rows and correlate the residuals. The
/// uncentered variant uses raw second moments, matching the uncentered
/// covariance estimator.
pub fn partial_correlation_from_data(
    data: &ObservationMatrix,
    i: usize,
    j: usize,
    s: &[usize],
    centered: bool,
) -> Result<f64> {
    let n = data.n_rows();
    let width = s.len() + usize::from(centered);
    let design = DMatrix::from_fn(n, width, |r, c| if c < s.len() { data.get(r, s[c]) } else { 1.0 });
    let targets = DMatrix::from_fn(n, 2, |r, c| data.get(r, if c == 0 { i } else { j }));
    let resid = if width == 0 {
        targets
    } else {
        let gram = design.transpose() * &design;
        let beta = solve_full_pivot(&gram, &(design.transpose() * &targets))?;
        &targets - &design * beta
    };
    let dot = |a: usize, b: usize| (0..n).map(|r| resid[(r, a)] * resid[(r, b)]).sum::<f64>();
    Ok(dot(0, 1) / (dot(0, 0) * dot(1, 1)).sqrt())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeparationQuery<'a> {
    pub graph: &'a Graph,
    pub i: usize,
    pub j: usize,
    pub s: Vec<usize>,
}

/// True iff every path from `i` to `j` passes through `s`.
pub fn is_separated(query: &SeparationQuery<'_>) -> bool {
    let g = query.graph;
    let mut blocked = vec![false; g.p()];
    for &v in &query.s {
        blocked[v] = true;
    }
    let mut seen = blocked.clone();
    seen[query.i] = true;
    let mut queue = VecDeque::from([query.i]);
    while let Some(v) = queue.pop_front() {
        for &w in g.neighbors(v) {
            if w == query.j {
                return false;
            }
            if !seen[w] {
                seen[w] = true;
                queue.push_back(w);
            }
        }
    }
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    /// Separated pair with `|ρ| > 1e-8`.
    NonzeroWhenSeparated,
    /// Connected pair with `ρ < −1e-10`.
    NegativeWhenConnected,
    /// `ρ_{ij|S} < ρ_{ij|rest} − 1e-10`.
    NotMonotone,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub i: usize,
    pub j: usize,
    pub s: Vec<usize>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FaithfulnessReport {
    pub violations: Vec<Violation>,
    pub checked: usize,
    /// Connected triples whose `ρ` is nonnegative but below `1e-12`.
    pub weak_connected: usize,
}

/// Every subset of `pool` with at most `max_size` elements, as sorted vectors.
fn subsets_up_to(pool: &[usize], max_size: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for &v in pool {
        let extended: Vec<Vec<usize>> = out
            .iter()
            .filter(|s| s.len() < max_size)
            .map(|s| {
                let mut t = s.clone();
                t.push(v);
                t
            })
            .collect();
        out.extend(extended);
    }
    out
}

/// For every pair and every `S` with `|S| ≤ max_set`: separated pairs must
/// have `|ρ_{ij|S}| ≤ 1e-8`, connected pairs `ρ_{ij|S} ≥ −1e-10`.
pub fn mtp2_faithfulness_check(model: &PrecisionModel, max_set: usize) -> Result<FaithfulnessReport> {
    let graph = Graph::from_precision(model, SUPPORT_TOL)?;
    let cov = model.covariance();
    let p = model.p();
    let mut report = FaithfulnessReport::default();
    for i in 0..p {
        for j in (i + 1)..p {
            let pool: Vec<usize> = (0..p).filter(|&v| v != i && v != j).collect();
            for s in subsets_up_to(&pool, max_set) {
                let rho = partial_correlation(&cov, i, j, &s)?;
                report.checked += 1;
                let separated = is_separated(&SeparationQuery {
                    graph: &graph,
                    i,
                    j,
                    s: s.clone(),
                });
                let kind = if separated {
                    (rho.abs() > 1e-8).then_some(ViolationKind::NonzeroWhenSeparated)
                } else {
                    if (0.0..1e-12).contains(&rho) {
                        report.weak_connected += 1;
                    }
                    (rho < -1e-10).then_some(ViolationKind::NegativeWhenConnected)
                };
                if let Some(kind) = kind {
                    report.violations.push(Violation {
                        kind,
                        i,
                        j,
                        s,
                        value: rho,
                    });
                }
            }
        }
    }
    Ok(report)
}

/// Checks `ρ_{ij|S} ≥ ρ_{ij|[p]∖{i,j}} − 1e-10` for every pair and every
/// `S ⊆ [p]∖{i,j}`. Limited to `p ≤ 10`.
pub fn monotonicity_lemma_check(model: &PrecisionModel) -> Result<Vec<Violation>> {
    let p = model.p();
    if p > 10 {
        return Err(Error::invalid(format!(
            "exhaustive monotonicity check needs p <= 10, got {p}"
        )));
    }
    let cov = model.covariance();
    let mut violations = Vec::new();
    for i in 0..p {
        for j in (i + 1)..p {
            let pool: Vec<usize> = (0..p).filter(|&v| v != i && v != j).collect();
            let floor = partial_correlation(&cov, i, j, &pool)?;
            for s in subsets_up_to(&pool, pool.len()) {
                let rho = partial_correlation(&cov, i, j, &s)?;
                if rho < floor - 1e-10 {
                    violations.push(Violation {
                        kind: ViolationKind::NotMonotone,
                        i,
                        j,
                        s,
                        value: rho,
                    });
                }
            }
        }
    }
    Ok(violations)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OverlapTail {
    pub m: usize,
    /// `M²/N + εN`.
    pub threshold: f64,
    pub exceedances: usize,
    pub trials: usize,
    pub empirical_rate: f64,
    /// `exp(−2ε²N + 2 log K)`.
    pub bound: f64,
}

impl OverlapTail {
    /// Bound plus three binomial standard deviations at the bound's rate.
    pub fn tolerance(&self) -> f64 {
        let p = self.bound.min(1.0);
        self.bound + 3.0 * (p * (1.0 - p) / self.trials as f64).sqrt()
    }
}

/// Monte Carlo check of the maximum pairwise batch overlap against its tail
/// bound: each trial draws `k` batches of `⌊n^γ⌋` rows without replacement
/// and records whether `max |B_a ∩ B_b| ≥ M²/N + εN`.
pub fn overlap_tail_check(
    n: usize,
    gamma: f64,
    k: usize,
    epsilon: f64,
    trials: usize,
    seed: u64,
) -> Result<OverlapTail> {
    let m = batch_size(n, gamma);
    if m < 1 || trials < 1 {
        return Err(Error::invalid("overlap check needs M >= 1 and at least one trial"));
    }
    let threshold = (m * m) as f64 / n as f64 + epsilon * n as f64;
    let mut exceedances = 0;
    let mut member = vec![0u32; n];
    for trial in 0..trials {
        let mut rng = stream(seed, Domain::Diagnostic, trial as u64);
        let batches: Vec<Vec<usize>> = (0..k).map(|_| index::sample(&mut rng, n, m).into_vec()).collect();
        let mut max_overlap = 0usize;
        for a in 0..k {
            for &x in &batches[a] {
                member[x] = a as u32 + 1;
            }
            for b in (a + 1)..k {
                let overlap = batches[b].iter().filter(|&&x| member[x] == a as u32 + 1).count();
                max_overlap = max_overlap.max(overlap);
            }
        }
        if k >= 2 && max_overlap as f64 >= threshold {
            exceedances += 1;
        }
    }
    let bound = (-2.0 * epsilon * epsilon * n as f64 + 2.0 * (k.max(1) as f64).ln()).exp();
    Ok(OverlapTail {
        m,
        threshold,
        exceedances,
        trials,
        empirical_rate: exceedances as f64 / trials as f64,
        bound,
    })
}
