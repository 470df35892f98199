//! Python bindings for the overlay library.

use std::collections::BTreeMap;

use overlay_core::expander::{create_expander, EvolveOptions};
use overlay_core::experiment::{parse_metrics, run_experiment as run_core, ExperimentConfig};
use overlay_core::graph::{make_benign, undirected_view};
use overlay_core::hybrid::{self, HybridConfig};
use overlay_core::profile::{Profile, ProfileKind};
use overlay_core::topology::{self, Topology};
use overlay_core::{metrics, NodeId};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn profile(name: &str) -> PyResult<Profile> {
    let kind: ProfileKind = name.parse().map_err(err)?;
    Ok(Profile::of_kind(kind))
}

fn hybrid_config(name: &str) -> PyResult<HybridConfig> {
    Ok(profile(name)?.hybrid())
}

/// Directed knowledge graph on nodes `0..n`.
#[pyclass(name = "KnowledgeGraph", module = "overlay")]
struct PyKnowledgeGraph {
    inner: overlay_core::KnowledgeGraph,
}

#[pymethods]
impl PyKnowledgeGraph {
    #[new]
    #[pyo3(signature = (n, edges=Vec::new()))]
    fn new(n: usize, edges: Vec<(NodeId, NodeId)>) -> PyResult<Self> {
        let inner = overlay_core::KnowledgeGraph::from_edges(n, &edges).map_err(err)?;
        Ok(PyKnowledgeGraph { inner })
    }

    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        let inner = overlay_core::KnowledgeGraph::from_text(text).map_err(err)?;
        Ok(PyKnowledgeGraph { inner })
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    fn edges(&self) -> Vec<(NodeId, NodeId)> {
        self.inner.edges().collect()
    }

    fn max_degree(&self) -> usize {
        self.inner.max_degree()
    }

    fn __repr__(&self) -> String {
        format!("KnowledgeGraph(n={}, edges={})", self.inner.n(), self.inner.edge_count())
    }
}

/// Generates a topology such as `"path"` or `"random-regular(3)"`.
#[pyfunction]
#[pyo3(signature = (spec, n, seed=0))]
fn generate(spec: &str, n: usize, seed: u64) -> PyResult<PyKnowledgeGraph> {
    let t: Topology = spec.parse().map_err(err)?;
    let inner = topology::generate(&t, n, seed).map_err(err)?;
    Ok(PyKnowledgeGraph { inner })
}

/// Final graph of an expander run and its per-iteration report rows.
#[pyclass(name = "ExpanderResult", module = "overlay", get_all)]
struct PyExpanderResult {
    /// Non-loop edges `(u, v, multiplicity)` with `u < v`.
    edges: Vec<(NodeId, NodeId, usize)>,
    delta: usize,
    evolutions: usize,
    diameter: Option<usize>,
    reports: Vec<String>,
    dropped: usize,
}

/// Runs the expander construction on `graph`.
#[pyfunction]
#[pyo3(signature = (graph, seed=0, profile_name="desk", metrics="none"))]
fn create_expander_run(graph: &PyKnowledgeGraph, seed: u64, profile_name: &str, metrics: &str) -> PyResult<PyExpanderResult> {
    let p = profile(profile_name)?;
    let params = p.params(graph.inner.n(), undirected_view(&graph.inner).max_nonloop_degree());
    let opts = EvolveOptions {
        metrics: parse_metrics(metrics).map_err(err)?,
        ..EvolveOptions::default()
    };
    let run = create_expander(&graph.inner, &params, seed, &opts).map_err(err)?;
    Ok(PyExpanderResult {
        edges: run.graph.edges().collect(),
        delta: params.delta,
        evolutions: params.evolutions,
        diameter: metrics::diameter(&run.graph),
        reports: run.reports.iter().map(|r| r.csv_row()).collect(),
        dropped: run.log.total_dropped(),
    })
}

/// Runs an experiment from `key=value` text and returns its output files.
#[pyfunction]
fn run_experiment(config: &str) -> PyResult<(BTreeMap<String, String>, Vec<String>)> {
    let cfg = ExperimentConfig::from_kv(config).map_err(err)?;
    let out = run_core(&cfg).map_err(err)?;
    Ok((out.files.into_iter().collect(), out.failures))
}

/// Component label (smallest member id) of every node.
#[pyfunction]
#[pyo3(signature = (graph, seed=0, profile_name="desk"))]
fn components(graph: &PyKnowledgeGraph, seed: u64, profile_name: &str) -> PyResult<Vec<NodeId>> {
    let cc = hybrid::connected_components(&graph.inner, &hybrid_config(profile_name)?, seed).map_err(err)?;
    Ok(cc.component)
}

/// Edges of a spanning tree of a connected graph.
#[pyfunction]
#[pyo3(signature = (graph, seed=0, profile_name="desk"))]
fn spanning_tree(graph: &PyKnowledgeGraph, seed: u64, profile_name: &str) -> PyResult<Vec<(NodeId, NodeId)>> {
    let st = hybrid::spanning_tree(&graph.inner, &hybrid_config(profile_name)?, seed).map_err(err)?;
    Ok(st.edges)
}

/// Biconnected components as `(edges, edge_component, cut_vertices, bridges)`.
#[pyfunction]
#[pyo3(signature = (graph, seed=0, profile_name="desk"))]
#[allow(clippy::type_complexity)]
fn bicc(
    graph: &PyKnowledgeGraph,
    seed: u64,
    profile_name: &str,
) -> PyResult<(Vec<(NodeId, NodeId)>, Vec<usize>, Vec<NodeId>, Vec<(NodeId, NodeId)>)> {
    let b = hybrid::biconnected_components(&graph.inner, &hybrid_config(profile_name)?, seed).map_err(err)?;
    Ok((b.edges, b.edge_component, b.cut_vertices, b.bridges))
}

/// Membership flags of a maximal independent set.
#[pyfunction]
#[pyo3(signature = (graph, seed=0, profile_name="desk"))]
fn mis(graph: &PyKnowledgeGraph, seed: u64, profile_name: &str) -> PyResult<Vec<bool>> {
    let d = graph.inner.max_degree();
    let m = hybrid::mis(&graph.inner, d, &hybrid_config(profile_name)?, seed).map_err(err)?;
    Ok(m.in_set)
}

/// Metrics of the benign version of `graph`: spectral lower bound,
/// diameter and min cut.
#[pyfunction]
#[pyo3(signature = (graph, profile_name="desk"))]
fn benign_metrics(graph: &PyKnowledgeGraph, profile_name: &str) -> PyResult<(f64, Option<usize>, usize)> {
    let p = profile(profile_name)?;
    let params = p.params(graph.inner.n(), undirected_view(&graph.inner).max_nonloop_degree());
    let b = make_benign(&graph.inner, &params).map_err(err)?;
    let spectral = metrics::spectral_bounds(&b).map_err(err)?.lower;
    let cut = metrics::min_cut(&b).map(|c| c.value).unwrap_or(0);
    Ok((spectral, metrics::diameter(&b), cut))
}

#[pymodule]
fn overlay(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyKnowledgeGraph>()?;
    m.add_class::<PyExpanderResult>()?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(create_expander_run, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(components, m)?)?;
    m.add_function(wrap_pyfunction!(spanning_tree, m)?)?;
    m.add_function(wrap_pyfunction!(bicc, m)?)?;
    m.add_function(wrap_pyfunction!(mis, m)?)?;
    m.add_function(wrap_pyfunction!(benign_metrics, m)?)?;
    Ok(())
}
