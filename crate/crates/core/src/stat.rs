//! Observation data, empirical covariance, partial correlations and the
//! seeded Gaussian sampler.

use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{cholesky, spd_inverse, SINGULAR_TOL};
use crate::rng::{stream, Domain};

/// Rounding slack allowed on `|ρ| ≤ 1` before a value is treated as a bug.
const CLAMP_SLACK: f64 = 1e-8;

/// Row-major `N × p` sample matrix; one observation per row.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationMatrix {
    data: Vec<f64>,
    n_rows: usize,
    n_cols: usize,
    column_names: Option<Vec<String>>,
}

impl ObservationMatrix {
    pub fn new(n_rows: usize, n_cols: usize, data: Vec<f64>) -> Result<Self> {
        if n_rows < 1 {
            return Err(Error::invalid("observation matrix needs at least one row"));
        }
        if n_cols < 2 {
            return Err(Error::invalid("observation matrix needs at least two columns"));
        }
        if data.len() != n_rows * n_cols {
            return Err(Error::invalid(format!(
                "expected {} values for a {n_rows}x{n_cols} matrix, got {}",
                n_rows * n_cols,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite value at row {}, column {}",
                pos / n_cols,
                pos % n_cols
            )));
        }
        Ok(Self {
            data,
            n_rows,
            n_cols,
            column_names: None,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != n_cols) {
            return Err(Error::invalid(format!("row {bad} has a different length")));
        }
        Self::new(rows.len(), n_cols, rows.concat())
    }

    pub fn with_column_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.n_cols {
            return Err(Error::invalid(format!(
                "{} column names for {} columns",
                names.len(),
                self.n_cols
            )));
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = names.iter().find(|n| !seen.insert(n.as_str())) {
            return Err(Error::invalid(format!("duplicate column name {dup:?}")));
        }
        self.column_names = Some(names);
        Ok(self)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn column_names(&self) -> Option<&[String]> {
        self.column_names.as_deref()
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.n_cols..(r + 1) * self.n_cols]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.n_cols + c]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.n_cols)
    }
}

/// Covariance over an ordered list of variables (node indices).
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    values: DMatrix<f64>,
    variables: Vec<usize>,
}

impl CovarianceMatrix {
    /// Wraps a symmetric matrix. Zero variances are accepted here and surface
    /// as [`Error::Singular`] when a partial correlation touches them.
    pub fn new(values: DMatrix<f64>, variables: Vec<usize>) -> Result<Self> {
        let q = variables.len();
        if values.nrows() != q || values.ncols() != q {
            return Err(Error::invalid(format!(
                "{}x{} matrix for {q} variables",
                values.nrows(),
                values.ncols()
            )));
        }
        check_unique(&variables, "variable")?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("covariance has non-finite entries"));
        }
        let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for a in 0..q {
            if values[(a, a)] < 0.0 {
                return Err(Error::invalid(format!(
                    "negative variance for variable {}",
                    variables[a]
                )));
            }
            for b in (a + 1)..q {
                if (values[(a, b)] - values[(b, a)]).abs() > 1e-12 * scale {
                    return Err(Error::invalid("covariance is not symmetric"));
                }
            }
        }
        Ok(Self { values, variables })
    }

    /// Covariance covering nodes `0..q` in order.
    pub fn full(values: DMatrix<f64>) -> Result<Self> {
        let q = values.nrows();
        Self::new(values, (0..q).collect())
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn variables(&self) -> &[usize] {
        &self.variables
    }

    fn position(&self, node: usize) -> Result<usize> {
        self.variables
            .iter()
            .position(|&v| v == node)
            .ok_or_else(|| Error::invalid(format!("node {node} is not covered by the covariance")))
    }

    /// Principal submatrix on `nodes`, in the given order.
    pub fn submatrix(&self, nodes: &[usize]) -> Result<DMatrix<f64>> {
        let pos = nodes.iter().map(|&n| self.position(n)).collect::<Result<Vec<_>>>()?;
        Ok(DMatrix::from_fn(pos.len(), pos.len(), |a, b| {
            self.values[(pos[a], pos[b])]
        }))
    }
}

fn check_unique(items: &[usize], what: &str) -> Result<()> {
    for (a, x) in items.iter().enumerate() {
        if items[..a].contains(x) {
            return Err(Error::invalid(format!("duplicate {what} index {x}")));
        }
    }
    Ok(())
}

/// Symmetric positive-definite precision matrix together with its inverse.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecisionModel {
    theta: DMatrix<f64>,
    sigma: DMatrix<f64>,
    is_m_matrix: bool,
}

impl PrecisionModel {
    /// Off-diagonal entries up to this value count as nonpositive.
    pub const M_MATRIX_TOL: f64 = 1e-12;

    pub fn from_precision(theta: DMatrix<f64>) -> Result<Self> {
        let sigma = spd_inverse(&theta)?;
        Self::from_parts(theta, sigma)
    }

    /// Builds the model from a covariance, keeping `sigma` as given.
    pub fn from_covariance(sigma: DMatrix<f64>) -> Result<Self> {
        let theta = spd_inverse(&sigma)?;
        Self::from_parts(theta, sigma)
    }

    fn from_parts(theta: DMatrix<f64>, sigma: DMatrix<f64>) -> Result<Self> {
        let p = theta.nrows();
        if p < 2 {
            return Err(Error::invalid("precision model needs at least two nodes"));
        }
        // Positive definiteness of theta is checked by factorizing it.
        cholesky(&theta, SINGULAR_TOL)?;
        let prod = &theta * &sigma;
        for i in 0..p {
            for j in 0..p {
                let target = if i == j { 1.0 } else { 0.0 };
                if (prod[(i, j)] - target).abs() > 1e-8 {
                    return Err(Error::Numerical(format!(
                        "theta * sigma deviates from identity at ({i}, {j}) by {:e}",
                        prod[(i, j)] - target
                    )));
                }
            }
        }
        let is_m_matrix = (0..p).all(|i| (0..p).all(|j| i == j || theta[(i, j)] <= Self::M_MATRIX_TOL));
        Ok(Self {
            theta,
            sigma,
            is_m_matrix,
        })
    }

    pub fn p(&self) -> usize {
        self.theta.nrows()
    }

    pub fn theta(&self) -> &DMatrix<f64> {
        &self.theta
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    pub fn is_m_matrix(&self) -> bool {
        self.is_m_matrix
    }

    pub fn covariance(&self) -> CovarianceMatrix {
        CovarianceMatrix {
            values: self.sigma.clone(),
            variables: (0..self.p()).collect(),
        }
    }

    /// `ρ_{ij | rest} = -Θ_ij / √(Θ_ii Θ_jj)`.
    pub fn full_partial_correlation(&self, i: usize, j: usize) -> f64 {
        -self.theta[(i, j)] / (self.theta[(i, i)] * self.theta[(j, j)]).sqrt()
    }
}

/// `(1/|rows|) Σ x xᵀ` over the selected rows and columns, optionally after
/// subtracting the column means of those rows. The divisor is `|rows|` in
/// both cases.
pub fn empirical_covariance(
    data: &ObservationMatrix,
    columns: &[usize],
    rows: &[usize],
    centered: bool,
) -> Result<CovarianceMatrix> {
    if rows.is_empty() {
        return Err(Error::invalid("empty row set"));
    }
    if centered && rows.len() < 2 {
        return Err(Error::invalid("centered covariance needs at least two rows"));
    }
    if columns.is_empty() {
        return Err(Error::invalid("empty column set"));
    }
    check_unique(columns, "column")?;
    let p = data.n_cols();
    if let Some(c) = columns.iter().find(|&&c| c >= p) {
        return Err(Error::invalid(format!("column {c} out of range for p = {p}")));
    }
    if let Some(r) = rows.iter().find(|&&r| r >= data.n_rows()) {
        return Err(Error::invalid(format!(
            "row {r} out of range for N = {}",
            data.n_rows()
        )));
    }

    let q = columns.len();
    let count = rows.len() as f64;
    let mut means = vec![0.0; q];
    if centered {
        for &r in rows {
            let row = data.row(r);
            for (m, &c) in means.iter_mut().zip(columns) {
                *m += row[c];
            }
        }
        for m in &mut means {
            *m /= count;
        }
    }

    let mut acc = vec![0.0; q * q];
    let mut buf = vec![0.0; q];
    for &r in rows {
        let row = data.row(r);
        for (a, &c) in columns.iter().enumerate() {
            buf[a] = row[c] - means[a];
        }
        for a in 0..q {
            let xa = buf[a];
            for b in a..q {
                acc[a * q + b] += xa * buf[b];
            }
        }
    }
    let mut values = DMatrix::<f64>::zeros(q, q);
    for a in 0..q {
        for b in a..q {
            let v = acc[a * q + b] / count;
            values[(a, b)] = v;
            values[(b, a)] = v;
        }
    }
    CovarianceMatrix::new(values, columns.to_vec())
}

/// Partial correlation of nodes `i` and `j` given `s`, from the inverse of the
/// covariance submatrix on `s ∪ {i, j}`:
/// `ρ = -P_ij / √(P_ii P_jj)` with `P = (Σ_{M,M})⁻¹`.
///
/// For empty `s` this is the plain correlation `Σ_ij / √(Σ_ii Σ_jj)`.
/// The submatrix is always assembled in canonical order (smaller of `i, j`
/// first, then `s` sorted), so the result is exactly symmetric in `i, j` and
/// independent of the order of `s`.
pub fn partial_correlation(cov: &CovarianceMatrix, i: usize, j: usize, s: &[usize]) -> Result<f64> {
    if i == j {
        return Err(Error::invalid(format!("partial correlation of node {i} with itself")));
    }
    if s.contains(&i) || s.contains(&j) {
        return Err(Error::invalid("conditioning set contains an endpoint"));
    }
    check_unique(s, "conditioning")?;
    let mut nodes = Vec::with_capacity(s.len() + 2);
    nodes.push(i.min(j));
    nodes.push(i.max(j));
    let mut rest = s.to_vec();
    rest.sort_unstable();
    nodes.extend(rest);

    let sub = cov.submatrix(&nodes)?;
    if s.is_empty() {
        // With no conditioning set the inverse formula reduces to the plain
        // correlation, which stays defined for perfectly collinear pairs.
        let max_diag = sub[(0, 0)].max(sub[(1, 1)]);
        for k in 0..2 {
            if !(sub[(k, k)] > SINGULAR_TOL * max_diag) || max_diag <= 0.0 {
                return Err(Error::Singular {
                    pivot: k,
                    value: sub[(k, k)],
                });
            }
        }
        return clamp_correlation(sub[(0, 1)] / (sub[(0, 0)] * sub[(1, 1)]).sqrt());
    }
    let inv = spd_inverse(&sub)?;
    let rho = -inv[(0, 1)] / (inv[(0, 0)] * inv[(1, 1)]).sqrt();
    clamp_correlation(rho)
}

pub(crate) fn clamp_correlation(rho: f64) -> Result<f64> {
    if !rho.is_finite() || rho.abs() > 1.0 + CLAMP_SLACK {
        return Err(Error::Numerical(format!("partial correlation {rho} outside [-1, 1]")));
    }
    Ok(rho.clamp(-1.0, 1.0))
}

/// Draws `n` i.i.d. rows from `N(0, Σ)` with `Σ = model.sigma()`.
///
/// Each row is `L z` where `L` is the lower Cholesky factor of `Σ` and `z`
/// holds `p` standard normal deviates taken in order from the ChaCha20
/// sampler stream of `seed` (see [`crate::rng`]).
pub fn sample_gaussian(model: &PrecisionModel, n: usize, seed: u64) -> Result<ObservationMatrix> {
    if n < 1 {
        return Err(Error::invalid("sample size must be at least 1"));
    }
    let p = model.p();
    let l = cholesky(model.sigma(), SINGULAR_TOL)?;
    let mut rng = stream(seed, Domain::Sampler, 0);
    let mut data = Vec::with_capacity(n * p);
    let mut z = vec![0.0; p];
    for _ in 0..n {
        for zk in z.iter_mut() {
            *zk = StandardNormal.sample(&mut rng);
        }
        for a in 0..p {
            let mut x = 0.0;
            for b in 0..=a {
                x += l[(a, b)] * z[b];
            }
            data.push(x);
        }
    }
    ObservationMatrix::new(n, p, data)
}
