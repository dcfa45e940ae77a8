//! Python bindings. Structured results come back as plain dicts and lists.

use iqc_chordal::chordal::{build_clique_tree, chordal_embed, extract_cliques, is_chordal as chordal_check, SparsityGraph};
use iqc_chordal::cli::{cmd_decompose, generate_network, run_experiment, ExperimentConfig, GridSpec};
use iqc_chordal::decomp::decompose as decompose_lmi;
use iqc_chordal::iqc::{assemble, Formulation, HermitianAffineLMI};
use iqc_chordal::model::{brute_force_stability, delta_grid, Frequency, Network as CoreNetwork, NetworkFile};
use iqc_chordal::solver::{
    analyze as analyze_core, analyze_pattern, solve_centralized, solve_distributed, verify as verify_core, Certificate,
    Mode, SolveOutcome, SolverOptions,
};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use serde::de::DeserializeOwned;
use serde::Serialize;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<T: Serialize>(py: Python<'_>, v: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(v).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

/// Reads an optional dict through its JSON form.
fn from_py<T: DeserializeOwned + Default>(py: Python<'_>, obj: Option<&Bound<'_, PyDict>>) -> PyResult<T> {
    match obj {
        None => Ok(T::default()),
        Some(d) => {
            let text: String = py.import("json")?.call_method1("dumps", (d,))?.extract()?;
            serde_json::from_str(&text).map_err(value_err)
        }
    }
}

fn parse_frequency(obj: &Bound<'_, PyAny>) -> PyResult<Frequency> {
    if let Ok(w) = obj.extract::<f64>() {
        if w.is_infinite() && w > 0.0 {
            return Ok(Frequency::Infinite);
        }
        return w.to_string().parse().map_err(value_err);
    }
    obj.extract::<String>()?.parse().map_err(value_err)
}

/// Interconnection of uncertain subsystems.
#[pyclass(module = "iqc_chordal", frozen)]
struct Network {
    inner: CoreNetwork,
    file: NetworkFile,
}

impl Network {
    fn wrap(file: NetworkFile) -> PyResult<Self> {
        Ok(Self { inner: file.to_network().map_err(value_err)?, file })
    }

    fn augmented(&self) -> PyResult<Option<iqc_chordal::model::AugmentedNetwork>> {
        self.file.to_augmented().map_err(value_err)
    }
}

#[pymethods]
impl Network {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Self::wrap(NetworkFile::from_json(text).map_err(value_err)?)
    }

    /// Random network from an experiment configuration dict.
    #[staticmethod]
    #[pyo3(signature = (config=None, seed=None))]
    fn generate(py: Python<'_>, config: Option<&Bound<'_, PyDict>>, seed: Option<u64>) -> PyResult<Self> {
        let mut cfg: ExperimentConfig = from_py(py, config)?;
        if let Some(s) = seed {
            cfg.seed = s;
        }
        let net = generate_network(&cfg).map_err(value_err)?;
        Self::wrap(NetworkFile::from_network(&net))
    }

    fn to_json(&self) -> String {
        self.file.to_json()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    /// Directed `(w owner, z owner)` pairs of the interconnection.
    fn coupling_edges(&self) -> Vec<(usize, usize)> {
        self.inner.coupling_edges()
    }

    fn __repr__(&self) -> String {
        format!("Network(subsystems={}, edges={})", self.inner.len(), self.inner.coupling_edges().len())
    }
}

/// Frequency-wise affine Hermitian LMI `Q(y) + W ⪯ −εI`.
#[pyclass(module = "iqc_chordal", frozen)]
struct Lmi {
    inner: HermitianAffineLMI,
}

#[pymethods]
impl Lmi {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self { inner: HermitianAffineLMI::from_json(text).map_err(value_err)? })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn num_vars(&self) -> usize {
        self.inner.num_vars()
    }

    /// `Q(y) + W` as nested lists of complex numbers.
    fn eval(&self, y: Vec<f64>) -> PyResult<Vec<Vec<num_complex::Complex64>>> {
        if y.len() != self.inner.num_vars() {
            return Err(PyValueError::new_err(format!("expected {} variables, got {}", self.inner.num_vars(), y.len())));
        }
        let m = self.inner.eval(&y);
        Ok((0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect())
    }

    fn __repr__(&self) -> String {
        format!("Lmi(dim={}, num_vars={})", self.inner.dim(), self.inner.num_vars())
    }
}

#[pyfunction]
#[pyo3(signature = (network, omega, formulation="sparse"))]
fn assemble_lmi(network: &Network, omega: &Bound<'_, PyAny>, formulation: &str) -> PyResult<Lmi> {
    let f: Formulation = formulation.parse().map_err(value_err)?;
    let aug = network.augmented()?;
    let inner = assemble(&network.inner, aug.as_ref(), f, parse_frequency(omega)?).map_err(value_err)?;
    Ok(Lmi { inner })
}

/// Clique statistics of the LMI's chordal decomposition.
#[pyfunction]
fn decompose(py: Python<'_>, lmi: &Lmi) -> PyResult<Py<PyAny>> {
    to_py(py, &cmd_decompose(&lmi.inner).map_err(value_err)?)
}

/// Solves one LMI; the result has `certified` and either `certificate` or `failure`.
#[pyfunction]
#[pyo3(signature = (lmi, mode="centralized", options=None))]
fn solve(py: Python<'_>, lmi: &Lmi, mode: &str, options: Option<&Bound<'_, PyDict>>) -> PyResult<Py<PyAny>> {
    let m: Mode = mode.parse().map_err(value_err)?;
    let opts: SolverOptions = from_py(py, options)?;
    let run = || -> Result<SolveOutcome, iqc_chordal::solver::SolverError> {
        match m {
            Mode::Centralized => solve_centralized(&lmi.inner, &opts),
            Mode::Distributed => {
                let tree = analyze_pattern(std::slice::from_ref(&lmi.inner))?;
                let dp = decompose_lmi(&lmi.inner, &tree)?;
                solve_distributed(&lmi.inner, &dp, &opts)
            }
        }
    };
    let outcome = py.detach(run).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    let out = match &outcome {
        SolveOutcome::Certified(c) => serde_json::json!({ "certified": true, "certificate": c }),
        SolveOutcome::NoCertificate(n) => serde_json::json!({ "certified": false, "failure": n }),
    };
    to_py(py, &out)
}

/// Checks a certificate dict against the LMI recomputed from scratch.
#[pyfunction]
#[pyo3(signature = (lmi, certificate, tol_feasibility=None))]
fn verify(py: Python<'_>, lmi: &Lmi, certificate: &Bound<'_, PyDict>, tol_feasibility: Option<f64>) -> PyResult<Py<PyAny>> {
    let tol_feasibility = tol_feasibility.unwrap_or(SolverOptions::default().tol_feasibility);
    let text: String = py.import("json")?.call_method1("dumps", (certificate,))?.extract()?;
    let cert: Certificate = serde_json::from_str(&text).map_err(value_err)?;
    to_py(py, &verify_core(&lmi.inner, &cert, tol_feasibility).map_err(value_err)?)
}

/// Frequency-sweep robust stability analysis.
#[pyfunction]
#[pyo3(signature = (network, formulation="sparse", mode="centralized", grid=None, options=None))]
fn analyze(
    py: Python<'_>,
    network: &Network,
    formulation: &str,
    mode: &str,
    grid: Option<&Bound<'_, PyDict>>,
    options: Option<&Bound<'_, PyDict>>,
) -> PyResult<Py<PyAny>> {
    let f: Formulation = formulation.parse().map_err(value_err)?;
    let m: Mode = mode.parse().map_err(value_err)?;
    let grid = from_py::<GridSpec>(py, grid)?.build().map_err(value_err)?;
    let opts: SolverOptions = from_py(py, options)?;
    let aug = network.augmented()?;
    let report = py
        .detach(|| analyze_core(&network.inner, aug.as_ref(), &grid, f, m, &opts))
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    to_py(py, &report)
}

/// Generates (or takes) a network and runs the configured analysis; returns the summary.
#[pyfunction]
#[pyo3(signature = (config=None, network=None))]
fn run(py: Python<'_>, config: Option<&Bound<'_, PyDict>>, network: Option<&Network>) -> PyResult<Py<PyAny>> {
    let cfg: ExperimentConfig = from_py(py, config)?;
    let (net, aug) = match network {
        Some(n) => (Some(n.inner.clone()), n.augmented()?),
        None => (None, None),
    };
    let out = py.detach(|| run_experiment(&cfg, net, aug.as_ref())).map_err(value_err)?;
    to_py(py, &out.summary)
}

/// Grid search over scalar gains in `[−1, 1]`.
#[pyfunction]
#[pyo3(signature = (network, points=21, cap=1_000_000, seed=0))]
fn brute_force(py: Python<'_>, network: &Network, points: usize, cap: usize, seed: u64) -> PyResult<Py<PyAny>> {
    let grid = delta_grid(network.inner.len(), points, cap, seed);
    to_py(py, &brute_force_stability(&network.inner, &grid).map_err(value_err)?)
}

fn graph(n: usize, edges: Vec<(usize, usize)>) -> PyResult<SparsityGraph> {
    if let Some(&(i, j)) = edges.iter().find(|&&(i, j)| i >= n || j >= n || i == j) {
        return Err(PyValueError::new_err(format!("invalid edge ({i}, {j}) for {n} vertices")));
    }
    Ok(SparsityGraph::new(n, edges))
}

#[pyfunction]
fn is_chordal(n: usize, edges: Vec<(usize, usize)>) -> PyResult<bool> {
    Ok(chordal_check(&graph(n, edges)?))
}

/// Chordal embedding and clique tree of an undirected graph.
#[pyfunction]
fn clique_tree(py: Python<'_>, n: usize, edges: Vec<(usize, usize)>) -> PyResult<Py<PyAny>> {
    let emb = chordal_embed(&graph(n, edges)?);
    let tree = build_clique_tree(&extract_cliques(&emb), n).map_err(value_err)?;
    let out = serde_json::json!({
        "fill": emb.fill,
        "order": emb.order,
        "cliques": tree.cliques,
        "parent": tree.parent,
        "separators": tree.separators,
        "residuals": tree.residuals,
        "coupling_count": tree.coupling_count(),
    });
    to_py(py, &out)
}

#[pymodule]
#[pyo3(name = "iqc_chordal")]
fn iqc_chordal_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Network>()?;
    m.add_class::<Lmi>()?;
    m.add_function(wrap_pyfunction!(assemble_lmi, m)?)?;
    m.add_function(wrap_pyfunction!(decompose, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(brute_force, m)?)?;
    m.add_function(wrap_pyfunction!(is_chordal, m)?)?;
    m.add_function(wrap_pyfunction!(clique_tree, m)?)?;
    Ok(())
}
