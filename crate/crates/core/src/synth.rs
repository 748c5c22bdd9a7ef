//! Synthetic MTP₂ precision matrices (grid, random, chain) and diagnostics
//! for the eigenvalue, signal-strength and dimension conditions.

use nalgebra::DMatrix;
use rand::seq::index;
use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{Graph, SUPPORT_TOL};
use crate::linalg::{largest_eigenvalue, spd_inverse};
use crate::rng::{stream, Domain};
use crate::stat::PrecisionModel;

pub const DEFAULT_DENSITY: f64 = 0.01;
pub const DEFAULT_CHAIN_R: f64 = 0.9;

const EIGEN_TOL: f64 = 1e-10;
const EIGEN_MAX_ITER: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Grid,
    Random,
    Chain,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Grid => "grid",
            Family::Random => "random",
            Family::Chain => "chain",
        }
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "grid" => Ok(Family::Grid),
            "random" => Ok(Family::Random),
            "chain" => Ok(Family::Chain),
            other => Err(Error::invalid(format!(
                "unknown family {other:?} (expected grid, random or chain)"
            ))),
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    pub family: Family,
    pub p: usize,
    /// Edge probability for the random family.
    pub density: f64,
    /// Correlation decay for the chain family.
    pub r: f64,
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn new(family: Family, p: usize) -> Self {
        Self {
            family,
            p,
            density: DEFAULT_DENSITY,
            r: DEFAULT_CHAIN_R,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.family {
            Family::Grid => grid_side(self.p).map(|_| ()),
            Family::Random => check_density(self.density).and(check_p(self.p)),
            Family::Chain => check_r(self.r).and(check_p(self.p)),
        }
    }

    pub fn generate(&self) -> Result<PrecisionModel> {
        match self.family {
            Family::Grid => generate_grid(self.p),
            Family::Random => generate_random(self.p, self.density, self.seed),
            Family::Chain => generate_chain(self.p, self.r),
        }
    }
}

fn check_p(p: usize) -> Result<()> {
    if p < 2 {
        return Err(Error::invalid(format!("p must be at least 2, got {p}")));
    }
    Ok(())
}

fn check_density(density: f64) -> Result<()> {
    if !(density > 0.0 && density < 1.0) {
        return Err(Error::invalid(format!("density must lie in (0, 1), got {density}")));
    }
    Ok(())
}

fn check_r(r: f64) -> Result<()> {
    if !(r.abs() < 1.0) {
        return Err(Error::invalid(format!("chain parameter must satisfy |r| < 1, got {r}")));
    }
    Ok(())
}

fn grid_side(p: usize) -> Result<usize> {
    let side = (p as f64).sqrt().round() as usize;
    if side < 2 || side * side != p {
        return Err(Error::invalid(format!("p must be a perfect square >= 4, got {p}")));
    }
    Ok(side)
}

/// Adjacency matrix of the `side × side` lattice; node `r * side + c`.
pub fn grid_adjacency(p: usize) -> Result<DMatrix<f64>> {
    let side = grid_side(p)?;
    let mut b = DMatrix::<f64>::zeros(p, p);
    for row in 0..side {
        for col in 0..side {
            let v = row * side + col;
            if col + 1 < side {
                b[(v, v + 1)] = 1.0;
                b[(v + 1, v)] = 1.0;
            }
            if row + 1 < side {
                b[(v, v + side)] = 1.0;
                b[(v + side, v)] = 1.0;
            }
        }
    }
    Ok(b)
}

/// `Θ = D (δI − B) D` with `δ = 1.05 λ₁(B)` and `D` chosen so that `Θ⁻¹` has
/// unit diagonal. When `B = 0` there is no spectrum to scale by; `δ = 1` then
/// and the result is the identity.
pub fn precision_from_weights(b: &DMatrix<f64>) -> Result<PrecisionModel> {
    let p = b.nrows();
    let lambda = largest_eigenvalue(b, EIGEN_TOL, EIGEN_MAX_ITER)?;
    let delta = if lambda > 0.0 { 1.05 * lambda } else { 1.0 };
    let base = DMatrix::<f64>::identity(p, p) * delta - b;
    let base_inv = spd_inverse(&base)?;
    let d: Vec<f64> = (0..p).map(|i| base_inv[(i, i)].sqrt()).collect();
    let theta = DMatrix::from_fn(p, p, |i, j| d[i] * base[(i, j)] * d[j]);
    PrecisionModel::from_precision(theta)
}

pub fn generate_grid(p: usize) -> Result<PrecisionModel> {
    precision_from_weights(&grid_adjacency(p)?)
}

/// Symmetric weights: each upper-triangle pair (row-major order) is kept
/// with probability `density` and given a uniform `[0, 1)` weight, then
/// mirrored.
pub fn random_weights(p: usize, density: f64, seed: u64) -> Result<DMatrix<f64>> {
    check_p(p)?;
    check_density(density)?;
    let mut rng = stream(seed, Domain::Generator, 0);
    let mut b = DMatrix::<f64>::zeros(p, p);
    for i in 0..p {
        for j in (i + 1)..p {
            if rng.random::<f64>() < density {
                let w: f64 = rng.random();
                b[(i, j)] = w;
                b[(j, i)] = w;
            }
        }
    }
    Ok(b)
}

pub fn generate_random(p: usize, density: f64, seed: u64) -> Result<PrecisionModel> {
    precision_from_weights(&random_weights(p, density, seed)?)
}

/// AR(1) covariance `σ_jk = r^{|j−k|}`; the precision is its inverse.
pub fn generate_chain(p: usize, r: f64) -> Result<PrecisionModel> {
    check_p(p)?;
    check_r(r)?;
    let sigma = DMatrix::from_fn(p, p, |a, b| r.powi(a.abs_diff(b) as i32));
    PrecisionModel::from_covariance(sigma)
}

/// Measurable quantities behind the eigenvalue, signal and size conditions.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport {
    /// Subset size used for the eigenvalue scan, `min(d_hat + 4, p)`.
    pub subset_size: usize,
    pub subsets_examined: usize,
    pub exhaustive: bool,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    /// Smallest `ρ_{ij | rest}` over true edges; `None` without edges.
    pub min_edge_partial_correlation: Option<f64>,
    /// `min ρ · √(N^{3/4} / log p)`.
    pub implied_c_rho: Option<f64>,
    /// `N^{1/8} + d_hat + 2`.
    pub size_threshold: f64,
    pub size_condition_holds: bool,
    pub true_max_degree: usize,
}

/// Purely diagnostic; nothing here gates the learner. The eigenvalue scan
/// is exhaustive for `p ≤ 12` and otherwise samples `subset_samples` random
/// subsets, so it is an estimate.
pub fn condition_report(
    model: &PrecisionModel,
    d_hat: usize,
    n: usize,
    subset_samples: usize,
    seed: u64,
) -> Result<ConditionReport> {
    let p = model.p();
    let size = (d_hat + 4).min(p);
    let sigma = model.sigma();
    let mut min_eig = f64::INFINITY;
    let mut max_eig = f64::NEG_INFINITY;
    let mut examined = 0;
    let mut scan = |nodes: &[usize]| {
        let sub = DMatrix::from_fn(nodes.len(), nodes.len(), |a, b| sigma[(nodes[a], nodes[b])]);
        let eig = sub.symmetric_eigen().eigenvalues;
        min_eig = min_eig.min(eig.min());
        max_eig = max_eig.max(eig.max());
        examined += 1;
    };
    let exhaustive = p <= 12;
    if exhaustive {
        let mut nodes: Vec<usize> = (0..size).collect();
        loop {
            scan(&nodes);
            // next combination of `size` out of `p`
            let mut pos = size;
            let mut advanced = false;
            while pos > 0 {
                pos -= 1;
                if nodes[pos] < p - size + pos {
                    nodes[pos] += 1;
                    for q in (pos + 1)..size {
                        nodes[q] = nodes[q - 1] + 1;
                    }
                    advanced = true;
                    break;
                }
            }
            if !advanced {
                break;
            }
        }
    } else {
        let mut rng = stream(seed, Domain::Diagnostic, 0);
        for _ in 0..subset_samples.max(1) {
            let mut nodes = index::sample(&mut rng, p, size).into_vec();
            nodes.sort_unstable();
            scan(&nodes);
        }
    }

    let truth = Graph::from_precision(model, SUPPORT_TOL)?;
    let min_rho = truth
        .edges()
        .map(|(i, j)| model.full_partial_correlation(i, j))
        .fold(None, |acc: Option<f64>, r| Some(acc.map_or(r, |a| a.min(r))));
    let scale = ((n as f64).powf(0.75) / (p as f64).ln()).sqrt();
    let size_threshold = (n as f64).powf(0.125) + d_hat as f64 + 2.0;
    Ok(ConditionReport {
        subset_size: size,
        subsets_examined: examined,
        exhaustive,
        min_eigenvalue: min_eig,
        max_eigenvalue: max_eig,
        min_edge_partial_correlation: min_rho,
        implied_c_rho: min_rho.map(|r| r * scale),
        size_threshold,
        size_condition_holds: p as f64 >= size_threshold,
        true_max_degree: truth.max_degree(),
    })
}
