//! Python bindings: attributed graphs, representative selectors, the
//! evaluation harness, and the Fit-or-Not lab, with the same determinism
//! guarantees as the Rust API.

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use rsgnn::baselines::{run_selector, SelectorConfig, SelectorName};
use rsgnn::eval::{evaluate_selection, nmi, welch_one_sided_greater, welch_t_test, ClassifierMode, EvalConfig};
use rsgnn::fon::{gap_experiment, gen_fon, planted_two_clique, PointSource};
use rsgnn::graph::{knn_edges, load_dataset_graph_free, save_dataset, AttributedGraph};
use rsgnn::linalg::DenseMatrix;
use rsgnn::model::{
    select_rsgnn_with_clusters, JointMode, NormMode, Precision, RsgnnConfig,
};
use rsgnn::reps::RepresentativeSet;
use rsgnn::synthetic::{sbm_gaussian, SbmConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn py_err(e: rsgnn::Error) -> PyErr {
    match &e {
        rsgnn::Error::MissingFile(_) | rsgnn::Error::Io { .. } => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn parse_selector(name: &str) -> PyResult<SelectorName> {
    let all = [
        SelectorName::Random,
        SelectorName::Popular,
        SelectorName::Kmeans,
        SelectorName::Kmedoid,
        SelectorName::Ffs,
        SelectorName::MaxcoverRbf,
        SelectorName::MaxcoverCos,
    ];
    all.into_iter()
        .find(|s| s.as_str() == name)
        .ok_or_else(|| PyValueError::new_err(format!("unknown selector {name:?}")))
}

fn parse_mode(mode: &str) -> PyResult<ClassifierMode> {
    match mode {
        "graph" => Ok(ClassifierMode::Graph),
        "knn_graph" => Ok(ClassifierMode::KnnGraph),
        "mlp" => Ok(ClassifierMode::Mlp),
        other => Err(PyValueError::new_err(format!("unknown mode {other:?}"))),
    }
}

fn dense_from_rows(rows: Vec<Vec<f64>>) -> PyResult<DenseMatrix<f64>> {
    let cols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != cols) {
        return Err(PyValueError::new_err("feature rows have unequal lengths"));
    }
    Ok(DenseMatrix::from_rows(rows))
}

/// Attributed graph: adjacency structure plus per-node feature vectors and
/// optional labels.
#[pyclass(frozen)]
struct Graph {
    inner: AttributedGraph<f64>,
}

#[pymethods]
impl Graph {
    #[new]
    #[pyo3(signature = (features, edges, labels = None, num_classes = 0))]
    fn new(
        features: Vec<Vec<f64>>,
        edges: Vec<(usize, usize)>,
        labels: Option<Vec<usize>>,
        num_classes: usize,
    ) -> PyResult<Self> {
        let features = dense_from_rows(features)?;
        let inner = AttributedGraph::new(&edges, features, labels, num_classes).map_err(py_err)?;
        Ok(Graph { inner })
    }

    /// Loads a dataset directory; a missing edges.tsv yields an edgeless graph.
    #[staticmethod]
    fn load(dir: PathBuf) -> PyResult<Self> {
        let (inner, _) = load_dataset_graph_free::<f64>(&dir).map_err(py_err)?;
        Ok(Graph { inner })
    }

    fn save(&self, dir: PathBuf) -> PyResult<()> {
        save_dataset(&dir, &self.inner).map_err(py_err)
    }

    #[getter]
    fn num_nodes(&self) -> usize {
        self.inner.num_nodes()
    }

    #[getter]
    fn num_features(&self) -> usize {
        self.inner.num_features()
    }

    #[getter]
    fn num_classes(&self) -> usize {
        self.inner.num_classes()
    }

    #[getter]
    fn num_edges(&self) -> usize {
        self.inner.num_edges()
    }

    fn labels(&self) -> Option<Vec<usize>> {
        self.inner.labels().map(|l| l.to_vec())
    }

    fn features(&self) -> Vec<Vec<f64>> {
        (0..self.inner.num_nodes())
            .map(|i| self.inner.features().row(i).to_vec())
            .collect()
    }

    fn edges(&self) -> Vec<(usize, usize)> {
        self.inner.edges()
    }

    fn degree(&self, node: usize) -> PyResult<usize> {
        if node >= self.inner.num_nodes() {
            return Err(PyValueError::new_err(format!(
                "node {node} out of range for {} nodes",
                self.inner.num_nodes()
            )));
        }
        Ok(self.inner.degree(node))
    }

    /// Same nodes and attributes with the structure replaced by a kNN graph
    /// over the features.
    fn rewire_knn(&self, k: usize) -> PyResult<Graph> {
        let edges = knn_edges(self.inner.features(), k).map_err(py_err)?;
        let inner = self.inner.rewire(&edges).map_err(py_err)?;
        Ok(Graph { inner })
    }

    fn __repr__(&self) -> String {
        format!(
            "Graph(nodes={}, edges={}, features={}, classes={})",
            self.inner.num_nodes(),
            self.inner.num_edges(),
            self.inner.num_features(),
            self.inner.num_classes()
        )
    }
}

/// Joint embedding/selection training; returns (representatives, clusters).
#[pyfunction]
#[pyo3(signature = (
    g, k, seed = 0, embed_dim = None, lambda_ = None, epochs = None,
    learning_rate = None, precision = None, norm = None, joint = None
))]
#[allow(clippy::too_many_arguments)]
fn rsgnn_select(
    g: &Graph,
    k: usize,
    seed: u64,
    embed_dim: Option<usize>,
    lambda_: Option<f64>,
    epochs: Option<usize>,
    learning_rate: Option<f64>,
    precision: Option<&str>,
    norm: Option<&str>,
    joint: Option<&str>,
) -> PyResult<(Vec<usize>, Vec<usize>)> {
    let mut cfg = RsgnnConfig::new(k);
    if let Some(v) = embed_dim {
        cfg.embed_dim = v;
    }
    if let Some(v) = lambda_ {
        cfg.lambda = v;
    }
    if let Some(v) = epochs {
        cfg.epochs = v;
    }
    if let Some(v) = learning_rate {
        cfg.learning_rate = v;
    }
    if let Some(v) = precision {
        cfg.precision = match v {
            "f32" => Precision::F32,
            "f64" => Precision::F64,
            other => return Err(PyValueError::new_err(format!("unknown precision {other:?}"))),
        };
    }
    if let Some(v) = norm {
        cfg.norm = match v {
            "center_norm" => NormMode::CenterNorm,
            "const_norm" => NormMode::ConstNorm,
            "no_norm" => NormMode::NoNorm,
            other => return Err(PyValueError::new_err(format!("unknown norm {other:?}"))),
        };
    }
    if let Some(v) = joint {
        cfg.joint = match v {
            "joint" => JointMode::Joint,
            "two_stage" => JointMode::TwoStage,
            other => return Err(PyValueError::new_err(format!("unknown joint mode {other:?}"))),
        };
    }
    let (reps, clusters) = select_rsgnn_with_clusters(&g.inner, &cfg, seed).map_err(py_err)?;
    Ok((reps.nodes, clusters))
}

/// Classical selector over the graph's feature matrix.
#[pyfunction]
#[pyo3(signature = (g, name, k, seed = 0, rbf_gamma = None, candidate_knn = None, max_iters = None))]
fn baseline_select(
    g: &Graph,
    name: &str,
    k: usize,
    seed: u64,
    rbf_gamma: Option<f64>,
    candidate_knn: Option<usize>,
    max_iters: Option<usize>,
) -> PyResult<Vec<usize>> {
    let mut cfg = SelectorConfig::new(parse_selector(name)?, k, seed);
    if let Some(v) = rbf_gamma {
        cfg.rbf_gamma = Some(v);
    }
    if let Some(v) = candidate_knn {
        cfg.candidate_knn = v;
    }
    if let Some(v) = max_iters {
        cfg.max_iters = v;
    }
    let reps = run_selector(g.inner.features(), Some(&g.inner), &cfg).map_err(py_err)?;
    Ok(reps.nodes)
}

/// Trains the two-layer classifier on the selected nodes' labels and returns
/// {"accuracy", "coverage", "seed"}.
#[pyfunction]
#[pyo3(signature = (
    g, nodes, mode = "graph", seed = 0, hidden_dim = None, dropout = None,
    weight_decay = None, val_size = None, max_epochs = None, patience = None
))]
#[allow(clippy::too_many_arguments)]
fn evaluate<'py>(
    py: Python<'py>,
    g: &Graph,
    nodes: Vec<usize>,
    mode: &str,
    seed: u64,
    hidden_dim: Option<usize>,
    dropout: Option<f64>,
    weight_decay: Option<f64>,
    val_size: Option<usize>,
    max_epochs: Option<usize>,
    patience: Option<usize>,
) -> PyResult<Bound<'py, PyDict>> {
    let mut cfg = EvalConfig::new(parse_mode(mode)?);
    cfg.seed = seed;
    if let Some(v) = hidden_dim {
        cfg.hidden_dim = v;
    }
    if let Some(v) = dropout {
        cfg.dropout = v;
    }
    if let Some(v) = weight_decay {
        cfg.weight_decay = v;
    }
    if let Some(v) = val_size {
        cfg.val_size = v;
    }
    if let Some(v) = max_epochs {
        cfg.max_epochs = v;
    }
    if let Some(v) = patience {
        cfg.patience = v;
    }
    let reps = RepresentativeSet::new("python", seed, nodes);
    reps.validate(g.inner.num_nodes()).map_err(py_err)?;
    let rec = evaluate_selection(&g.inner, &reps, &cfg).map_err(py_err)?;
    let out = PyDict::new(py);
    out.set_item("accuracy", rec.accuracy)?;
    out.set_item("coverage", rec.coverage)?;
    out.set_item("seed", rec.seed)?;
    Ok(out)
}

/// Block-model graph with Gaussian per-block feature centers.
#[pyfunction]
#[pyo3(signature = (
    blocks, per_block, p_in, p_out, feature_dim, center_scale = 1.0,
    noise = 1.0, seed = 0
))]
#[allow(clippy::too_many_arguments)]
fn sbm_graph(
    blocks: usize,
    per_block: usize,
    p_in: f64,
    p_out: f64,
    feature_dim: usize,
    center_scale: f64,
    noise: f64,
    seed: u64,
) -> PyResult<Graph> {
    let cfg = SbmConfig {
        blocks,
        nodes_per_block: per_block,
        p_in,
        p_out,
        feature_dim,
        center_scale,
        noise,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inner = sbm_gaussian::<f64, _>(&cfg, &mut rng).map_err(py_err)?;
    Ok(Graph { inner })
}

/// Normalized mutual information between a clustering and labels, in [0, 1].
#[pyfunction]
fn nmi_score(assign: Vec<usize>, labels: Vec<usize>) -> PyResult<f64> {
    if assign.is_empty() || assign.len() != labels.len() {
        return Err(PyValueError::new_err(format!(
            "{} assignments vs {} labels",
            assign.len(),
            labels.len()
        )));
    }
    Ok(nmi(&assign, &labels))
}

/// Welch's unequal-variance t-test p-value.
#[pyfunction]
#[pyo3(signature = (a, b, one_sided_greater = false))]
fn welch_p(a: Vec<f64>, b: Vec<f64>, one_sided_greater: bool) -> PyResult<f64> {
    let r = if one_sided_greater {
        welch_one_sided_greater(&a, &b)
    } else {
        welch_t_test(&a, &b)
    };
    r.map_err(py_err)
}

/// Utility gap between the optimal budget-k query set and each selector on a
/// Fit-or-Not instance. Returns {"u_star", "entries": [...]}.
#[pyfunction]
#[pyo3(signature = (k, seed = 0, n = None, m = None, planted = false, selectors = None))]
fn fon_gap<'py>(
    py: Python<'py>,
    k: usize,
    seed: u64,
    n: Option<usize>,
    m: Option<usize>,
    planted: bool,
    selectors: Option<Vec<String>>,
) -> PyResult<Bound<'py, PyDict>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inst = if planted {
        planted_two_clique(&mut rng)
    } else {
        let (Some(n), Some(m)) = (n, m) else {
            return Err(PyValueError::new_err("pass planted=True or both n and m"));
        };
        gen_fon(n, PointSource::RandomPairs { m }, &mut rng).map_err(py_err)?
    };
    let names = match selectors {
        Some(names) => names
            .iter()
            .map(|s| parse_selector(s))
            .collect::<PyResult<Vec<_>>>()?,
        None => vec![SelectorName::MaxcoverCos],
    };
    let cfgs: Vec<SelectorConfig> = names
        .into_iter()
        .map(|name| SelectorConfig::new(name, k, seed))
        .collect();
    let report = gap_experiment(&inst, k, &cfgs).map_err(py_err)?;
    let out = PyDict::new(py);
    out.set_item("u_star", report.u_star)?;
    out.set_item("k", report.k)?;
    let entries = PyList::empty(py);
    for e in &report.entries {
        let d = PyDict::new(py);
        d.set_item("selector", &e.selector)?;
        d.set_item("utility", e.utility)?;
        d.set_item("ratio", e.ratio)?;
        entries.append(d)?;
    }
    out.set_item("entries", entries)?;
    Ok(out)
}

#[pymodule]
fn rsgnn_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Graph>()?;
    m.add_function(wrap_pyfunction!(rsgnn_select, m)?)?;
    m.add_function(wrap_pyfunction!(baseline_select, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(sbm_graph, m)?)?;
    m.add_function(wrap_pyfunction!(nmi_score, m)?)?;
    m.add_function(wrap_pyfunction!(welch_p, m)?)?;
    m.add_function(wrap_pyfunction!(fon_gap, m)?)?;
    Ok(())
}
