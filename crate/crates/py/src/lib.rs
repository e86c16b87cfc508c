//! Python bindings: substrate generation, request generation, single
//! embeddings against a live network, and whole simulations driven by a JSON
//! config.

use bavne_core::baselines;
use bavne_core::embedding::EmbedOptions;
use bavne_core::simulation::SimulationError;
use bavne_core::topology::TopologyError;
use bavne_core::{
    generate_substrate, generate_vnr, run, Algorithm, EmbeddingResult, GeneratorConfig, SimulationConfig,
    SubstrateNetwork, VirtualNetworkRequest, VnrConfig,
};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn topology_error(e: TopologyError) -> PyErr {
    match e {
        TopologyError::InvalidConfig(_) | TopologyError::InvalidRequest { .. } | TopologyError::InvalidNetwork(_) => {
            value_error(e)
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn parse_json<T: serde::de::DeserializeOwned + Default>(json: Option<&str>) -> PyResult<T> {
    json.map_or_else(|| Ok(T::default()), |s| serde_json::from_str(s).map_err(value_error))
}

fn to_json<T: serde::Serialize>(value: &T) -> PyResult<String> {
    serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

#[pyclass(name = "SubstrateNetwork", module = "bavne_py")]
pub struct PySubstrateNetwork {
    inner: SubstrateNetwork,
}

#[pymethods]
impl PySubstrateNetwork {
    /// Generates a substrate; `config_json` mirrors the generator config and
    /// missing fields take defaults.
    #[staticmethod]
    #[pyo3(signature = (seed, config_json=None))]
    fn generate(seed: u64, config_json: Option<&str>) -> PyResult<Self> {
        let config: GeneratorConfig = parse_json(config_json)?;
        Ok(Self { inner: generate_substrate(&config, seed).map_err(topology_error)? })
    }

    #[staticmethod]
    fn from_json(json: &str) -> PyResult<Self> {
        Ok(Self { inner: serde_json::from_str(json).map_err(value_error)? })
    }

    fn to_json(&self) -> PyResult<String> {
        to_json(&self.inner)
    }

    fn summary<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let s = self.inner.summary();
        let d = PyDict::new(py);
        d.set_item("domains", s.domains)?;
        d.set_item("nodes", s.nodes)?;
        d.set_item("boundary_nodes", s.boundary_nodes)?;
        d.set_item("links", s.links)?;
        d.set_item("inter_domain_links", s.inter_domain_links)?;
        d.set_item("mean_bandwidth", s.mean_bandwidth)?;
        Ok(d)
    }

    #[getter]
    fn domains(&self) -> usize {
        self.inner.domains()
    }

    fn ledger_digest(&self) -> u64 {
        self.inner.ledger_digest()
    }

    /// Embeds one request and, if accepted, reserves its resources.
    #[pyo3(signature = (vnr, algorithm="ba-vne", seed=0))]
    fn embed(&mut self, vnr: PyRef<'_, PyVirtualNetworkRequest>, algorithm: &str, seed: u64) -> PyResult<PyEmbeddingResult> {
        let algorithm: Algorithm = algorithm.parse().map_err(PyValueError::new_err)?;
        let mut opts = EmbedOptions::default();
        opts.pso.seed = seed;
        let result = baselines::embed(&mut self.inner, &vnr.inner, algorithm, &opts);
        Ok(PyEmbeddingResult { inner: result })
    }

    /// Returns the resources held by an accepted request.
    fn release(&mut self, vnr_id: u64) -> PyResult<()> {
        self.inner.release_id(vnr_id).map(|_| ()).map_err(value_error)
    }
}

#[pyclass(name = "VirtualNetworkRequest", module = "bavne_py")]
pub struct PyVirtualNetworkRequest {
    inner: VirtualNetworkRequest,
}

#[pymethods]
impl PyVirtualNetworkRequest {
    /// Generates request `id` of the stream for `seed`; `config_json` mirrors
    /// the request config.
    #[staticmethod]
    #[pyo3(signature = (substrate_domains, seed, id, config_json=None))]
    fn generate(substrate_domains: usize, seed: u64, id: u64, config_json: Option<&str>) -> PyResult<Self> {
        let config: VnrConfig = parse_json(config_json)?;
        Ok(Self { inner: generate_vnr(&config, substrate_domains, seed, id, 0.0).map_err(topology_error)? })
    }

    #[staticmethod]
    fn from_json(json: &str) -> PyResult<Self> {
        Ok(Self { inner: serde_json::from_str(json).map_err(value_error)? })
    }

    fn to_json(&self) -> PyResult<String> {
        to_json(&self.inner)
    }

    #[getter]
    fn id(&self) -> u64 {
        self.inner.id
    }

    #[getter]
    fn num_nodes(&self) -> usize {
        self.inner.nodes.len()
    }

    #[getter]
    fn num_links(&self) -> usize {
        self.inner.links.len()
    }
}

#[pyclass(name = "EmbeddingResult", module = "bavne_py")]
pub struct PyEmbeddingResult {
    inner: EmbeddingResult,
}

#[pymethods]
impl PyEmbeddingResult {
    #[getter]
    fn accepted(&self) -> bool {
        self.inner.accepted
    }

    #[getter]
    fn cost(&self) -> f64 {
        self.inner.cost
    }

    #[getter]
    fn total_delay(&self) -> f64 {
        self.inner.total_delay
    }

    #[getter]
    fn node_assignment(&self) -> Vec<u32> {
        self.inner.node_assignment.iter().map(|n| n.0).collect()
    }

    /// Substrate node sequence of each virtual link's path.
    #[getter]
    fn link_paths(&self) -> Vec<Vec<u32>> {
        self.inner.link_paths.iter().map(|p| p.nodes.iter().map(|n| n.0).collect()).collect()
    }

    #[getter]
    fn cause(&self) -> Option<String> {
        self.inner.cause.as_ref().map(|c| c.to_string())
    }

    fn to_json(&self) -> PyResult<String> {
        to_json(&self.inner)
    }

    fn __repr__(&self) -> String {
        match &self.inner.cause {
            None => format!("EmbeddingResult(vnr {}, accepted, cost {})", self.inner.vnr_id, self.inner.cost),
            Some(c) => format!("EmbeddingResult(vnr {}, rejected: {c})", self.inner.vnr_id),
        }
    }
}

/// Runs one simulation; takes and returns JSON.
#[pyfunction]
#[pyo3(signature = (config_json=None))]
fn run_simulation(py: Python<'_>, config_json: Option<&str>) -> PyResult<String> {
    let config: SimulationConfig = parse_json(config_json)?;
    let report = py.detach(|| run(&config)).map_err(|e| match e {
        SimulationError::Topology(t) => topology_error(t),
        other => value_error(other),
    })?;
    to_json(&report)
}

/// Mean of the given link bandwidths, optionally over `count + 1`.
#[pyfunction]
#[pyo3(signature = (bandwidths, plus_one=false))]
fn domain_average_bandwidth(bandwidths: Vec<f64>, plus_one: bool) -> f64 {
    bavne_core::abstraction::domain_average_bandwidth(&bandwidths, plus_one)
}

#[pyfunction]
fn algorithms() -> Vec<&'static str> {
    Algorithm::ALL.iter().map(|a| a.name()).collect()
}

#[pymodule]
fn bavne_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySubstrateNetwork>()?;
    m.add_class::<PyVirtualNetworkRequest>()?;
    m.add_class::<PyEmbeddingResult>()?;
    m.add_function(wrap_pyfunction!(run_simulation, m)?)?;
    m.add_function(wrap_pyfunction!(domain_average_bandwidth, m)?)?;
    m.add_function(wrap_pyfunction!(algorithms, m)?)?;
    Ok(())
}
