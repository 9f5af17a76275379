//! Python bindings: representations, demos, the check/decompose runs and
//! subspace classification. Reports come back as plain dicts and lists.

use num_complex::Complex64;
use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use serde_json::Value;

use wold_core::cli::{run, DemoName, RunConfig, Source, Task};
use wold_core::linalg::orthonormal_frame;
use wold_core::repn::{load_representation, parse_representation, Representation as CoreRep};
use wold_core::wold::classify_summand;
use wold_core::{ComplexMatrix, Error, ToleranceConfig};

fn to_py_err(e: Error) -> PyErr {
    match e {
        Error::Io(_) => PyOSError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn to_python(py: Python<'_>, v: &Value) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(v).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn tolerances(rank_tol: Option<f64>, eq_tol: Option<f64>) -> PyResult<ToleranceConfig> {
    let mut tol = ToleranceConfig::default();
    if let Some(x) = rank_tol {
        tol.rank_tol = x;
    }
    if let Some(x) = eq_tol {
        tol.eq_tol = x;
    }
    tol.validate().map_err(to_py_err)?;
    Ok(tol)
}

/// A single covariant representation or a product-system representation.
#[pyclass(name = "Representation", module = "wold", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyRepresentation {
    inner: CoreRep,
}

#[pymethods]
impl PyRepresentation {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        parse_representation(text).map(|inner| Self { inner }).map_err(to_py_err)
    }

    #[staticmethod]
    fn load(path: std::path::PathBuf) -> PyResult<Self> {
        load_representation(&path).map(|inner| Self { inner }).map_err(to_py_err)
    }

    #[staticmethod]
    fn demo(name: &str) -> PyResult<Self> {
        let demo = DemoName::from_label(name)
            .ok_or_else(|| PyValueError::new_err(format!("unknown demo {name:?}; see demo_names()")))?;
        demo.build(&ToleranceConfig::default()).map(|inner| Self { inner }).map_err(to_py_err)
    }

    #[getter]
    fn k_dim(&self) -> usize {
        match &self.inner {
            CoreRep::Single(r) => r.k_dim(),
            CoreRep::Product(p) => p.k_dim(),
        }
    }

    /// Number of directions (1 for a single representation).
    #[getter]
    fn directions(&self) -> usize {
        match &self.inner {
            CoreRep::Single(_) => 1,
            CoreRep::Product(p) => p.k(),
        }
    }

    #[getter]
    fn is_product(&self) -> bool {
        matches!(self.inner, CoreRep::Product(_))
    }

    /// `Ã` of direction `i` (0-based) as a list of rows.
    #[pyo3(signature = (i=0))]
    fn atilde(&self, i: usize) -> PyResult<Vec<Vec<Complex64>>> {
        let a = match &self.inner {
            CoreRep::Single(r) if i == 0 => r.atilde(),
            CoreRep::Product(p) if i < p.k() => p.atilde(i),
            _ => return Err(PyValueError::new_err(format!("no direction {i}"))),
        };
        Ok((0..a.nrows()).map(|r| a.row(r).iter().copied().collect()).collect())
    }

    fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.inner.to_json()).expect("values serialize")
    }

    fn __repr__(&self) -> String {
        let kind = if self.is_product() { "product" } else { "single" };
        format!("Representation({kind}, K_dim={}, directions={})", self.k_dim(), self.directions())
    }
}

fn run_task(
    py: Python<'_>,
    task: Task,
    rep: &PyRepresentation,
    cap: usize,
    rank_tol: Option<f64>,
    eq_tol: Option<f64>,
) -> PyResult<Py<PyAny>> {
    let cfg = RunConfig {
        task,
        source: Source::Given(rep.inner.clone()),
        level_cap: cap,
        tol: tolerances(rank_tol, eq_tol)?,
        output: None,
        json_only: true,
    };
    let outcome = py.detach(|| run(&cfg)).map_err(to_py_err)?;
    to_python(py, &outcome.document)
}

/// Hypothesis checks (and structure identities for product systems).
#[pyfunction]
#[pyo3(signature = (rep, cap=6, rank_tol=None, eq_tol=None))]
fn check(py: Python<'_>, rep: &PyRepresentation, cap: usize, rank_tol: Option<f64>, eq_tol: Option<f64>) -> PyResult<Py<PyAny>> {
    run_task(py, Task::Check, rep, cap, rank_tol, eq_tol)
}

/// Two-summand decomposition of a single representation.
#[pyfunction]
#[pyo3(signature = (rep, cap=6, rank_tol=None, eq_tol=None))]
fn decompose(py: Python<'_>, rep: &PyRepresentation, cap: usize, rank_tol: Option<f64>, eq_tol: Option<f64>) -> PyResult<Py<PyAny>> {
    run_task(py, Task::Decompose, rep, cap, rank_tol, eq_tol)
}

/// 2^k-summand decomposition of a product-system representation.
#[pyfunction]
#[pyo3(signature = (rep, cap=6, rank_tol=None, eq_tol=None))]
fn multi(py: Python<'_>, rep: &PyRepresentation, cap: usize, rank_tol: Option<f64>, eq_tol: Option<f64>) -> PyResult<Py<PyAny>> {
    run_task(py, Task::Multi, rep, cap, rank_tol, eq_tol)
}

/// Checks plus whichever decomposition fits the representation.
#[pyfunction]
#[pyo3(signature = (rep, cap=6, rank_tol=None, eq_tol=None))]
fn pipeline(py: Python<'_>, rep: &PyRepresentation, cap: usize, rank_tol: Option<f64>, eq_tol: Option<f64>) -> PyResult<Py<PyAny>> {
    run_task(py, Task::Pipeline, rep, cap, rank_tol, eq_tol)
}

/// Classify the span of `vectors` (each of length `K_dim`) as a summand.
#[pyfunction]
#[pyo3(signature = (rep, vectors, cap=6, rank_tol=None, eq_tol=None))]
fn classify(
    py: Python<'_>,
    rep: &PyRepresentation,
    vectors: Vec<Vec<Complex64>>,
    cap: usize,
    rank_tol: Option<f64>,
    eq_tol: Option<f64>,
) -> PyResult<Py<PyAny>> {
    let CoreRep::Single(single) = &rep.inner else {
        return Err(PyValueError::new_err("classify needs a single representation"));
    };
    let tol = tolerances(rank_tol, eq_tol)?;
    let n = single.k_dim();
    if let Some(bad) = vectors.iter().position(|v| v.len() != n) {
        return Err(PyValueError::new_err(format!("vector {bad} does not have length {n}")));
    }
    let m = ComplexMatrix::from_fn(n, vectors.len(), |r, c| vectors[c][r]);
    let frame = orthonormal_frame(&m, &tol).map_err(to_py_err)?;
    let class = py.detach(|| classify_summand(single, &frame, cap, &tol)).map_err(to_py_err)?;
    to_python(py, &serde_json::to_value(&class).expect("values serialize"))
}

#[pyfunction]
fn demo_names() -> Vec<&'static str> {
    DemoName::ALL.iter().map(|d| d.label()).collect()
}

/// Populate `m` with the module contents; also used to embed the module.
pub fn register(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyRepresentation>()?;
    m.add_function(wrap_pyfunction!(check, m)?)?;
    m.add_function(wrap_pyfunction!(decompose, m)?)?;
    m.add_function(wrap_pyfunction!(multi, m)?)?;
    m.add_function(wrap_pyfunction!(pipeline, m)?)?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(demo_names, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}

#[pymodule]
fn wold(m: &Bound<'_, PyModule>) -> PyResult<()> {
    register(m)
}
