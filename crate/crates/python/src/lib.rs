//! Python bindings: generators, sampling, the structure learner and the
//! evaluation metrics. Matrices cross the boundary as lists of rows.

use nalgebra::DMatrix;
use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use tpgraph_core as core;
use tpgraph_core::graph::SUPPORT_TOL;

create_exception!(
    tpgraph,
    NumericalError,
    PyRuntimeError,
    "Numerical failure while computing."
);

fn py_err(e: core::Error) -> PyErr {
    if e.is_input_error() {
        PyValueError::new_err(e.to_string())
    } else {
        NumericalError::new_err(e.to_string())
    }
}

fn to_matrix(rows: &[Vec<f64>]) -> PyResult<DMatrix<f64>> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err("expected a nonempty square list of rows"));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn from_matrix(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

#[pyclass(name = "PrecisionModel", frozen)]
pub struct PyPrecisionModel(core::PrecisionModel);

#[pymethods]
impl PyPrecisionModel {
    #[staticmethod]
    fn from_precision(theta: Vec<Vec<f64>>) -> PyResult<Self> {
        core::PrecisionModel::from_precision(to_matrix(&theta)?)
            .map(Self)
            .map_err(py_err)
    }

    #[staticmethod]
    fn from_covariance(sigma: Vec<Vec<f64>>) -> PyResult<Self> {
        core::PrecisionModel::from_covariance(to_matrix(&sigma)?)
            .map(Self)
            .map_err(py_err)
    }

    #[getter]
    fn p(&self) -> usize {
        self.0.p()
    }

    #[getter]
    fn theta(&self) -> Vec<Vec<f64>> {
        from_matrix(self.0.theta())
    }

    #[getter]
    fn sigma(&self) -> Vec<Vec<f64>> {
        from_matrix(self.0.sigma())
    }

    fn is_m_matrix(&self) -> bool {
        self.0.is_m_matrix()
    }

    /// Partial correlation of `i` and `j` given every other variable.
    fn full_partial_correlation(&self, i: usize, j: usize) -> PyResult<f64> {
        if i >= self.0.p() || j >= self.0.p() {
            return Err(PyValueError::new_err("node index out of range"));
        }
        Ok(self.0.full_partial_correlation(i, j))
    }

    /// Graph of the nonzero off-diagonal precision entries.
    #[pyo3(signature = (tol = SUPPORT_TOL))]
    fn graph(&self, tol: f64) -> PyResult<PyGraph> {
        core::Graph::from_precision(&self.0, tol).map(PyGraph).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!("PrecisionModel(p={}, m_matrix={})", self.0.p(), self.0.is_m_matrix())
    }
}

#[pyclass(name = "Graph", eq, frozen)]
#[derive(PartialEq)]
pub struct PyGraph(core::Graph);

#[pymethods]
impl PyGraph {
    #[new]
    #[pyo3(signature = (p, edges = Vec::new()))]
    fn new(p: usize, edges: Vec<(usize, usize)>) -> PyResult<Self> {
        core::Graph::from_edges(p, edges).map(Self).map_err(py_err)
    }

    #[staticmethod]
    fn complete(p: usize) -> PyResult<Self> {
        core::Graph::complete(p).map(Self).map_err(py_err)
    }

    #[staticmethod]
    fn parse_edge_list(text: &str) -> PyResult<Self> {
        core::Graph::parse_edge_list(text, std::path::Path::new("<string>"))
            .map(Self)
            .map_err(py_err)
    }

    #[getter]
    fn p(&self) -> usize {
        self.0.p()
    }

    #[getter]
    fn n_edges(&self) -> usize {
        self.0.n_edges()
    }

    /// Edges as `(i, j)` with `i < j`, sorted.
    fn edges(&self) -> Vec<(usize, usize)> {
        self.0.edges().collect()
    }

    fn has_edge(&self, i: usize, j: usize) -> bool {
        self.0.has_edge(i, j)
    }

    fn neighbors(&self, i: usize) -> PyResult<Vec<usize>> {
        if i >= self.0.p() {
            return Err(PyValueError::new_err("node index out of range"));
        }
        Ok(self.0.neighbors(i).iter().copied().collect())
    }

    fn max_degree(&self) -> usize {
        self.0.max_degree()
    }

    fn to_edge_list(&self) -> String {
        self.0.to_edge_list()
    }

    fn __repr__(&self) -> String {
        format!("Graph(p={}, n_edges={})", self.0.p(), self.0.n_edges())
    }
}

#[pyclass(name = "ObservationMatrix", frozen)]
pub struct PyObservations(core::ObservationMatrix);

#[pymethods]
impl PyObservations {
    #[new]
    #[pyo3(signature = (rows, names = None))]
    fn new(rows: Vec<Vec<f64>>, names: Option<Vec<String>>) -> PyResult<Self> {
        let m = core::ObservationMatrix::from_rows(&rows).map_err(py_err)?;
        match names {
            Some(names) => m.with_column_names(names).map(Self).map_err(py_err),
            None => Ok(Self(m)),
        }
    }

    #[staticmethod]
    fn read_csv(path: std::path::PathBuf) -> PyResult<Self> {
        core::io::read_observations(&path).map(Self).map_err(py_err)
    }

    fn write_csv(&self, path: std::path::PathBuf) -> PyResult<()> {
        core::io::write_observations(&self.0, &path).map_err(py_err)
    }

    #[getter]
    fn n_rows(&self) -> usize {
        self.0.n_rows()
    }

    #[getter]
    fn n_cols(&self) -> usize {
        self.0.n_cols()
    }

    #[getter]
    fn column_names(&self) -> Option<Vec<String>> {
        self.0.column_names().map(<[String]>::to_vec)
    }

    fn rows(&self) -> Vec<Vec<f64>> {
        self.0.rows().map(<[f64]>::to_vec).collect()
    }

    /// Empirical covariance over all rows (divisor N).
    #[pyo3(signature = (centered = false))]
    fn covariance(&self, centered: bool) -> PyResult<Vec<Vec<f64>>> {
        let cols: Vec<usize> = (0..self.0.n_cols()).collect();
        let rows: Vec<usize> = (0..self.0.n_rows()).collect();
        let cov = core::empirical_covariance(&self.0, &cols, &rows, centered).map_err(py_err)?;
        Ok(from_matrix(cov.values()))
    }

    fn __repr__(&self) -> String {
        format!(
            "ObservationMatrix(n_rows={}, n_cols={})",
            self.0.n_rows(),
            self.0.n_cols()
        )
    }
}

#[pyclass(name = "LearnRecord", frozen, get_all)]
pub struct PyLearnRecord {
    tests_run: u64,
    edges_deleted_per_level: Vec<usize>,
    singular_skips: u64,
    final_level: usize,
}

#[pymethods]
impl PyLearnRecord {
    fn __repr__(&self) -> String {
        format!(
            "LearnRecord(tests_run={}, edges_deleted_per_level={:?}, singular_skips={}, final_level={})",
            self.tests_run, self.edges_deleted_per_level, self.singular_skips, self.final_level
        )
    }
}

fn model_from(family: &str, p: usize, density: f64, r: f64, seed: u64) -> PyResult<core::PrecisionModel> {
    let family: core::Family = family.parse().map_err(py_err)?;
    let spec = core::GeneratorSpec {
        density,
        r,
        seed,
        ..core::GeneratorSpec::new(family, p)
    };
    spec.validate().map_err(py_err)?;
    spec.generate().map_err(py_err)
}

/// Synthetic precision model: `family` is `grid`, `random` or `chain`.
#[pyfunction]
#[pyo3(signature = (family, p, density = core::synth::DEFAULT_DENSITY, r = core::synth::DEFAULT_CHAIN_R, seed = 0))]
fn generate(family: &str, p: usize, density: f64, r: f64, seed: u64) -> PyResult<PyPrecisionModel> {
    model_from(family, p, density, r, seed).map(PyPrecisionModel)
}

#[pyfunction]
fn sample_gaussian(model: &PyPrecisionModel, n: usize, seed: u64) -> PyResult<PyObservations> {
    core::sample_gaussian(&model.0, n, seed)
        .map(PyObservations)
        .map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (data, gamma = core::DEFAULT_GAMMA, seed = 0, max_level = None, centered = false, singular_policy = "skip", unsafe_gamma = false))]
fn learn_structure(
    data: &PyObservations,
    gamma: f64,
    seed: u64,
    max_level: Option<usize>,
    centered: bool,
    singular_policy: &str,
    unsafe_gamma: bool,
) -> PyResult<(PyGraph, PyLearnRecord)> {
    let singular_policy = match singular_policy {
        "skip" => core::SingularPolicy::Skip,
        "error" => core::SingularPolicy::Error,
        other => {
            return Err(PyValueError::new_err(format!(
                "singular_policy must be 'skip' or 'error', got {other:?}"
            )))
        }
    };
    let config = core::LearnerConfig {
        gamma,
        seed,
        max_level,
        centered,
        singular_policy,
        unsafe_gamma,
    };
    let (g, rec) = core::learn_structure(&data.0, &config).map_err(py_err)?;
    Ok((
        PyGraph(g),
        PyLearnRecord {
            tests_run: rec.tests_run,
            edges_deleted_per_level: rec.edges_deleted_per_level,
            singular_skips: rec.singular_skips,
            final_level: rec.final_level,
        },
    ))
}

/// `ρ_{ij|S}` from a covariance matrix over variables `0..q`.
#[pyfunction]
#[pyo3(signature = (cov, i, j, s = Vec::new()))]
fn partial_correlation(cov: Vec<Vec<f64>>, i: usize, j: usize, s: Vec<usize>) -> PyResult<f64> {
    let cov = core::CovarianceMatrix::full(to_matrix(&cov)?).map_err(py_err)?;
    core::partial_correlation(&cov, i, j, &s).map_err(py_err)
}

#[pyfunction]
fn mcc(tp: u64, tn: u64, fp: u64, fn_: u64) -> Option<f64> {
    core::mcc(&core::ConfusionCounts { tp, tn, fp, fn_ })
}

/// Confusion counts and rates; undefined rates are `None`.
#[pyfunction]
fn compare<'py>(py: Python<'py>, estimated: &PyGraph, truth: &PyGraph) -> PyResult<Bound<'py, PyDict>> {
    let r = core::MetricsReport::compare(&estimated.0, &truth.0).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("tp", r.counts.tp)?;
    d.set_item("tn", r.counts.tn)?;
    d.set_item("fp", r.counts.fp)?;
    d.set_item("fn", r.counts.fn_)?;
    d.set_item("mcc", r.mcc)?;
    d.set_item("tpr", r.tpr)?;
    d.set_item("fpr", r.fpr)?;
    Ok(d)
}

#[pyfunction]
fn modularity(graph: &PyGraph, sectors: Vec<String>) -> PyResult<f64> {
    let labels = core::SectorLabels::new(sectors).map_err(py_err)?;
    core::modularity(&graph.0, &labels).map_err(py_err)
}

#[pymodule]
pub fn tpgraph(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("DEFAULT_GAMMA", core::DEFAULT_GAMMA)?;
    m.add("NumericalError", m.py().get_type::<NumericalError>())?;
    m.add_class::<PyPrecisionModel>()?;
    m.add_class::<PyGraph>()?;
    m.add_class::<PyObservations>()?;
    m.add_class::<PyLearnRecord>()?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(sample_gaussian, m)?)?;
    m.add_function(wrap_pyfunction!(learn_structure, m)?)?;
    m.add_function(wrap_pyfunction!(partial_correlation, m)?)?;
    m.add_function(wrap_pyfunction!(mcc, m)?)?;
    m.add_function(wrap_pyfunction!(compare, m)?)?;
    m.add_function(wrap_pyfunction!(modularity, m)?)?;
    Ok(())
}
