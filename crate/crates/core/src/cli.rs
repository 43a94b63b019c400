//! Command-line front end. Every subcommand is reproducible: the same flags
//! and seed produce byte-identical output files in f64 mode.
//!
//! Exit codes: 0 success, 2 validation error, 3 capacity guard,
//! 4 gradient-check failure, 1 anything else.

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};

use crate::baselines::{run_selector, SelectorConfig, SelectorName};
use crate::error::{Error, Result};
use crate::eval::{evaluate_selection, nmi, welch_t_test, ClassifierMode, EvalConfig, RunRecord};
use crate::fon::{
    encode_instance, fon_from_graph, gen_fon, gap_experiment, planted_two_clique, PointSource,
};
use crate::graph::{
    knn_edges, load_dataset, load_dataset_graph_free, normalize_adjacency, random_permutation,
    save_dataset, AttributedGraph,
};
use crate::linalg::{dist_sq, grad_check, CsrMatrix, DenseMatrix};
use crate::model::{
    backward, forward, select_rsgnn_with_clusters, train, JointMode, NormMode, Precision,
    RsgnnConfig, RsgnnParams,
};
use crate::reps::RepresentativeSet;
use crate::synthetic::{sbm_gaussian, SbmConfig};

/// Neighbor count when a kNN graph stands in for missing structure.
const STRUCTURE_KNN: usize = 15;
const SIGNIFICANCE_LEVEL: f64 = 0.05;
const CSV_HEADER: &str = "selector,seed,k,accuracy,coverage,nmi";

#[derive(Parser, Debug)]
#[command(
    name = "rsgnn",
    version,
    about = "Representative selection on attributed graphs: selectors, evaluation, hardness lab"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Run a selector on a dataset and write the representative set as JSON.
    Select(SelectArgs),
    /// Train the downstream classifier on a representative set, append CSV rows.
    Eval(EvalCmdArgs),
    /// Compare selectors end to end with mean/sd and significance flags.
    Bench(BenchArgs),
    /// Fit-or-Not hardness lab: generate instances and measure utility gaps.
    Fon(FonArgs),
    /// Finite-difference check of the joint-loss gradients.
    Gradcheck(GradcheckArgs),
    /// Generate a block-model graph with Gaussian features as a dataset dir.
    Synth(SynthArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
enum CliSelector {
    Rsgnn,
    Random,
    Popular,
    Kmeans,
    Kmedoid,
    Ffs,
    MaxcoverRbf,
    MaxcoverCos,
}

impl CliSelector {
    fn to_baseline(self) -> Option<SelectorName> {
        match self {
            CliSelector::Rsgnn => None,
            CliSelector::Random => Some(SelectorName::Random),
            CliSelector::Popular => Some(SelectorName::Popular),
            CliSelector::Kmeans => Some(SelectorName::Kmeans),
            CliSelector::Kmedoid => Some(SelectorName::Kmedoid),
            CliSelector::Ffs => Some(SelectorName::Ffs),
            CliSelector::MaxcoverRbf => Some(SelectorName::MaxcoverRbf),
            CliSelector::MaxcoverCos => Some(SelectorName::MaxcoverCos),
        }
    }

    fn as_str(self) -> &'static str {
        match self.to_baseline() {
            Some(name) => name.as_str(),
            None => "rsgnn",
        }
    }
}

/// Context matrix the feature-space selectors run on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
enum ContextKind {
    /// Raw node features.
    Features,
    /// Unsupervised embeddings: selection-loss weight zeroed, no norm.
    Dgi,
}

#[derive(Args, Clone, Debug)]
struct RsgnnFlags {
    /// Embedding width.
    #[arg(long)]
    embed_dim: Option<usize>,
    /// Selection-loss weight.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long, value_enum)]
    precision: Option<Precision>,
    #[arg(long, value_enum)]
    norm: Option<NormMode>,
    #[arg(long, value_enum)]
    joint: Option<JointMode>,
}

#[derive(Args, Clone, Debug)]
struct SelectorFlags {
    /// RBF kernel width for maxcover_rbf; defaults to 1/num_features.
    #[arg(long)]
    rbf_gamma: Option<f64>,
    /// Neighbor list length per node for the coverage objective.
    #[arg(long)]
    candidate_knn: Option<usize>,
    /// Iteration cap for the clustering selectors.
    #[arg(long)]
    max_iters: Option<usize>,
}

#[derive(Args, Clone, Debug)]
struct EvalFlags {
    #[arg(long)]
    hidden_dim: Option<usize>,
    #[arg(long)]
    dropout: Option<f64>,
    #[arg(long)]
    weight_decay: Option<f64>,
    /// Validation pool size; halved remainder when fewer nodes are left.
    #[arg(long)]
    val_size: Option<usize>,
    #[arg(long)]
    max_epochs: Option<usize>,
    #[arg(long)]
    patience: Option<usize>,
}

#[derive(Args, Debug)]
struct SelectArgs {
    /// Dataset directory (meta.json, features.csv, optional edges.tsv/labels.csv).
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, value_enum)]
    selector: CliSelector,
    /// Budget: a count ("14") or a multiple of the class count ("2c").
    #[arg(long)]
    k: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path for the representative-set JSON.
    #[arg(long)]
    out: PathBuf,
    /// Also write per-node cluster assignments (rsgnn only).
    #[arg(long)]
    clusters_out: Option<PathBuf>,
    /// Replace structure with a kNN graph built from features (k=15).
    #[arg(long)]
    knn_mode: bool,
    #[arg(long, value_enum, default_value_t = ContextKind::Features)]
    context: ContextKind,
    /// JSON config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    rsgnn: RsgnnFlags,
    #[command(flatten)]
    selector_flags: SelectorFlags,
}

#[derive(Args, Debug)]
struct EvalCmdArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// Representative-set JSON produced by `select`.
    #[arg(long)]
    reps: PathBuf,
    #[arg(long, default_value_t = 1)]
    runs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = ClassifierMode::Graph)]
    mode: ClassifierMode,
    /// CSV file to append result rows to.
    #[arg(long)]
    out: PathBuf,
    /// JSON array of per-node cluster ids; fills the nmi column.
    #[arg(long)]
    clusters: Option<PathBuf>,
    /// Fill the nmi column from feature-space cells around the representatives.
    #[arg(long)]
    nmi_proxy: bool,
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    eval_flags: EvalFlags,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// Comma-separated selector names; at least two.
    #[arg(long, value_delimiter = ',', required = true)]
    selectors: Vec<CliSelector>,
    #[arg(long)]
    k: String,
    #[arg(long, default_value_t = 20)]
    runs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = ClassifierMode::Graph)]
    mode: ClassifierMode,
    /// CSV file to append per-run rows to.
    #[arg(long)]
    out: PathBuf,
    /// Significance summary JSON; printed to stdout when omitted.
    #[arg(long)]
    summary: Option<PathBuf>,
    #[arg(long)]
    knn_mode: bool,
    #[arg(long, value_enum, default_value_t = ContextKind::Features)]
    context: ContextKind,
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    rsgnn: RsgnnFlags,
    #[command(flatten)]
    selector_flags: SelectorFlags,
    #[command(flatten)]
    eval_flags: EvalFlags,
}

#[derive(Args, Debug)]
struct FonArgs {
    /// Load the instance from an encoded dataset directory.
    #[arg(long, conflicts_with_all = ["planted", "n", "m"])]
    fixture: Option<PathBuf>,
    /// Generate the planted two-clique instance.
    #[arg(long, conflicts_with_all = ["n", "m"])]
    planted: bool,
    /// Random instance: number of hidden features.
    #[arg(long)]
    n: Option<usize>,
    /// Random instance: number of points.
    #[arg(long)]
    m: Option<usize>,
    /// Budget; runs the gap experiment when set.
    #[arg(long)]
    k: Option<usize>,
    /// Selectors for the gap experiment; defaults to every baseline.
    #[arg(long, value_delimiter = ',')]
    selectors: Vec<CliSelector>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Gap report path; printed to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Save the instance as an encoded dataset directory.
    #[arg(long)]
    dump: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GradcheckArgs {
    #[arg(long, default_value_t = 20)]
    nodes: usize,
    #[arg(long, default_value_t = 8)]
    features: usize,
    #[arg(long, default_value_t = 6)]
    embed_dim: usize,
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long, default_value_t = 0.7)]
    lambda: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = NormMode::CenterNorm)]
    norm: NormMode,
    /// Test hook: perturb one analytic entry so the check must fail.
    #[arg(long, hide = true)]
    corrupt_gradient: bool,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long, default_value_t = 4)]
    blocks: usize,
    #[arg(long, default_value_t = 100)]
    per_block: usize,
    #[arg(long, default_value_t = 0.1)]
    p_in: f64,
    #[arg(long, default_value_t = 0.01)]
    p_out: f64,
    #[arg(long, default_value_t = 16)]
    feature_dim: usize,
    #[arg(long, default_value_t = 1.0)]
    center_scale: f64,
    #[arg(long, default_value_t = 1.0)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Dataset directory to create.
    #[arg(long)]
    out: PathBuf,
}

/// Optional overrides loaded from `--config`. Precedence: flag > file > default.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    #[serde(default)]
    rsgnn: RsgnnOverrides,
    #[serde(default)]
    selector: SelectorOverrides,
    #[serde(default)]
    eval: EvalOverrides,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RsgnnOverrides {
    embed_dim: Option<usize>,
    lambda: Option<f64>,
    epochs: Option<usize>,
    learning_rate: Option<f64>,
    precision: Option<Precision>,
    norm: Option<NormMode>,
    joint: Option<JointMode>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SelectorOverrides {
    rbf_gamma: Option<f64>,
    candidate_knn: Option<usize>,
    max_iters: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct EvalOverrides {
    hidden_dim: Option<usize>,
    dropout: Option<f64>,
    weight_decay: Option<f64>,
    val_size: Option<usize>,
    max_epochs: Option<usize>,
    patience: Option<usize>,
}

/// Parses argv, dispatches, and maps errors to process exit codes.
pub fn run() -> i32 {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.cmd {
        Cmd::Select(a) => cmd_select(a),
        Cmd::Eval(a) => cmd_eval(a),
        Cmd::Bench(a) => cmd_bench(a),
        Cmd::Fon(a) => cmd_fon(a),
        Cmd::Gradcheck(a) => Ok(cmd_gradcheck(&a)),
        Cmd::Synth(a) => cmd_synth(a),
    }
}

/// "14" is absolute; "2c" multiplies the dataset's class count; "c" alone is 1c.
fn resolve_k(spec: &str, num_classes: usize) -> Result<usize> {
    let t = spec.trim();
    let (digits, is_multiple) = match t.strip_suffix('c') {
        Some(rest) => (rest, true),
        None => (t, false),
    };
    let base: usize = if is_multiple && digits.is_empty() {
        1
    } else {
        digits.parse().map_err(|_| {
            Error::Invalid(format!("budget {t:?} is neither a count nor a multiple of c"))
        })?
    };
    let k = if is_multiple {
        base.checked_mul(num_classes)
            .ok_or_else(|| Error::Invalid(format!("budget {t:?} overflows")))?
    } else {
        base
    };
    if k == 0 {
        return Err(Error::Invalid(format!("budget {t:?} resolves to 0 nodes")));
    }
    Ok(k)
}

fn load_config(path: Option<&Path>) -> Result<ConfigFile> {
    let Some(p) = path else {
        return Ok(ConfigFile::default());
    };
    let text = fs::read_to_string(p).map_err(|e| Error::Io {
        path: p.to_path_buf(),
        source: e,
    })?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: p.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })
}

fn build_rsgnn_config(k: usize, file: &RsgnnOverrides, flags: &RsgnnFlags) -> RsgnnConfig {
    let mut cfg = RsgnnConfig::new(k);
    if let Some(v) = file.embed_dim {
        cfg.embed_dim = v;
    }
    if let Some(v) = file.lambda {
        cfg.lambda = v;
    }
    if let Some(v) = file.epochs {
        cfg.epochs = v;
    }
    if let Some(v) = file.learning_rate {
        cfg.learning_rate = v;
    }
    if let Some(v) = file.precision {
        cfg.precision = v;
    }
    if let Some(v) = file.norm {
        cfg.norm = v;
    }
    if let Some(v) = file.joint {
        cfg.joint = v;
    }
    if let Some(v) = flags.embed_dim {
        cfg.embed_dim = v;
    }
    if let Some(v) = flags.lambda {
        cfg.lambda = v;
    }
    if let Some(v) = flags.epochs {
        cfg.epochs = v;
    }
    if let Some(v) = flags.learning_rate {
        cfg.learning_rate = v;
    }
    if let Some(v) = flags.precision {
        cfg.precision = v;
    }
    if let Some(v) = flags.norm {
        cfg.norm = v;
    }
    if let Some(v) = flags.joint {
        cfg.joint = v;
    }
    cfg
}

fn build_selector_config(
    name: SelectorName,
    k: usize,
    seed: u64,
    file: &SelectorOverrides,
    flags: &SelectorFlags,
) -> SelectorConfig {
    let mut cfg = SelectorConfig::new(name, k, seed);
    if let Some(v) = file.rbf_gamma {
        cfg.rbf_gamma = Some(v);
    }
    if let Some(v) = file.candidate_knn {
        cfg.candidate_knn = v;
    }
    if let Some(v) = file.max_iters {
        cfg.max_iters = v;
    }
    if let Some(v) = flags.rbf_gamma {
        cfg.rbf_gamma = Some(v);
    }
    if let Some(v) = flags.candidate_knn {
        cfg.candidate_knn = v;
    }
    if let Some(v) = flags.max_iters {
        cfg.max_iters = v;
    }
    cfg
}

fn build_eval_config(
    mode: ClassifierMode,
    seed: u64,
    file: &EvalOverrides,
    flags: &EvalFlags,
) -> EvalConfig {
    let mut cfg = EvalConfig::new(mode);
    cfg.seed = seed;
    if let Some(v) = file.hidden_dim {
        cfg.hidden_dim = v;
    }
    if let Some(v) = file.dropout {
        cfg.dropout = v;
    }
    if let Some(v) = file.weight_decay {
        cfg.weight_decay = v;
    }
    if let Some(v) = file.val_size {
        cfg.val_size = v;
    }
    if let Some(v) = file.max_epochs {
        cfg.max_epochs = v;
    }
    if let Some(v) = file.patience {
        cfg.patience = v;
    }
    if let Some(v) = flags.hidden_dim {
        cfg.hidden_dim = v;
    }
    if let Some(v) = flags.dropout {
        cfg.dropout = v;
    }
    if let Some(v) = flags.weight_decay {
        cfg.weight_decay = v;
    }
    if let Some(v) = flags.val_size {
        cfg.val_size = v;
    }
    if let Some(v) = flags.max_epochs {
        cfg.max_epochs = v;
    }
    if let Some(v) = flags.patience {
        cfg.patience = v;
    }
    cfg
}

/// Loads the dataset; with `knn_mode` the structure is rebuilt as a kNN graph
/// over features regardless of whether edges were shipped.
fn load_structured(dir: &Path, knn_mode: bool) -> Result<(AttributedGraph<f64>, bool)> {
    let (g, had_edges) = load_dataset_graph_free::<f64>(dir)?;
    if !knn_mode {
        return Ok((g, had_edges));
    }
    let m = g.num_nodes();
    let k = STRUCTURE_KNN.min(m.saturating_sub(1));
    let edges = if k == 0 {
        Vec::new()
    } else {
        knn_edges(g.features(), k)?
    };
    Ok((g.rewire(&edges)?, true))
}

fn build_context(
    g: &AttributedGraph<f64>,
    has_structure: bool,
    kind: ContextKind,
    rsgnn_cfg: &RsgnnConfig,
    seed: u64,
) -> Result<DenseMatrix<f64>> {
    match kind {
        ContextKind::Features => Ok(g.features().clone()),
        ContextKind::Dgi => {
            if !has_structure {
                return Err(Error::Invalid("dgi context requires graph".into()));
            }
            let mut cfg = *rsgnn_cfg;
            cfg.lambda = 0.0;
            cfg.norm = NormMode::NoNorm;
            cfg.joint = JointMode::Joint;
            cfg.precision = Precision::F64;
            cfg.k = 1;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let state = train::<f64, _>(g, &cfg, &mut rng)?;
            Ok(state.best_norm_embed)
        }
    }
}

/// Shared by `select` and `bench`. Returns cluster assignments for rsgnn.
#[allow(clippy::too_many_arguments)]
fn run_selection(
    g: &AttributedGraph<f64>,
    has_structure: bool,
    selector: CliSelector,
    k: usize,
    seed: u64,
    context: ContextKind,
    file: &ConfigFile,
    rsgnn_flags: &RsgnnFlags,
    selector_flags: &SelectorFlags,
) -> Result<(RepresentativeSet, Option<Vec<usize>>)> {
    match selector.to_baseline() {
        None => {
            if !has_structure {
                return Err(Error::Invalid("selector requires graph".into()));
            }
            let cfg = build_rsgnn_config(k, &file.rsgnn, rsgnn_flags);
            let (reps, clusters) = select_rsgnn_with_clusters(g, &cfg, seed)?;
            Ok((reps, Some(clusters)))
        }
        Some(name) => {
            let rsgnn_cfg = build_rsgnn_config(k, &file.rsgnn, rsgnn_flags);
            let ctx = build_context(g, has_structure, context, &rsgnn_cfg, seed)?;
            let cfg = build_selector_config(name, k, seed, &file.selector, selector_flags);
            let structure = if has_structure { Some(g) } else { None };
            let reps = run_selector(&ctx, structure, &cfg)?;
            Ok((reps, None))
        }
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Invalid(format!("serialize: {e}")))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn cmd_select(a: SelectArgs) -> Result<i32> {
    let file = load_config(a.config.as_deref())?;
    let (g, has_structure) = load_structured(&a.dataset, a.knn_mode)?;
    let k = resolve_k(&a.k, g.num_classes())?;
    if a.clusters_out.is_some() && a.selector != CliSelector::Rsgnn {
        return Err(Error::Invalid(
            "cluster assignments are only produced by the rsgnn selector".into(),
        ));
    }
    let (reps, clusters) = run_selection(
        &g,
        has_structure,
        a.selector,
        k,
        a.seed,
        a.context,
        &file,
        &a.rsgnn,
        &a.selector_flags,
    )?;
    if let Some(path) = &a.clusters_out {
        let clusters = clusters.expect("rsgnn returns clusters");
        write_json(path.as_path(), &clusters)?;
    }
    reps.save(&a.out)?;
    println!(
        "selected {} nodes with {} -> {}",
        reps.k,
        a.selector.as_str(),
        a.out.display()
    );
    Ok(0)
}

struct CsvRow {
    selector: String,
    seed: u64,
    k: usize,
    accuracy: f64,
    coverage: f64,
    nmi: Option<f64>,
}

impl CsvRow {
    fn from_record(reps: &RepresentativeSet, rec: &RunRecord) -> Self {
        CsvRow {
            selector: reps.selector.clone(),
            seed: rec.seed,
            k: reps.k,
            accuracy: rec.accuracy,
            coverage: rec.coverage,
            nmi: rec.nmi,
        }
    }
}

fn append_csv(path: &Path, rows: &[CsvRow]) -> Result<()> {
    fn inner(path: &Path, rows: &[CsvRow]) -> std::io::Result<()> {
        use std::io::Write;
        let need_header = match fs::metadata(path) {
            Ok(md) => md.len() == 0,
            Err(_) => true,
        };
        let mut f = fs::OpenOptions::new().create(true).append(true).open(path)?;
        if need_header {
            writeln!(f, "{CSV_HEADER}")?;
        }
        for r in rows {
            let nmi = r.nmi.map(|v| v.to_string()).unwrap_or_default();
            writeln!(
                f,
                "{},{},{},{},{},{}",
                r.selector, r.seed, r.k, r.accuracy, r.coverage, nmi
            )?;
        }
        Ok(())
    }
    inner(path, rows).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

/// Nearest-representative cell index per node, ties to the lowest cell.
fn voronoi_assignments(features: &DenseMatrix<f64>, reps: &[usize]) -> Vec<usize> {
    (0..features.rows())
        .map(|i| {
            let mut best = 0usize;
            let mut best_d = f64::INFINITY;
            for (c, &r) in reps.iter().enumerate() {
                let d = dist_sq(features.row(i), features.row(r));
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            best
        })
        .collect()
}

fn cmd_eval(a: EvalCmdArgs) -> Result<i32> {
    if a.runs == 0 {
        return Err(Error::Invalid("runs must be at least 1".into()));
    }
    let file = load_config(a.config.as_deref())?;
    let (g, had_edges) = load_dataset_graph_free::<f64>(&a.dataset)?;
    if a.mode == ClassifierMode::Graph && !had_edges {
        return Err(Error::Invalid(
            "graph mode needs edges.tsv; use knn_graph or mlp".into(),
        ));
    }
    let reps = RepresentativeSet::load(&a.reps)?;
    reps.validate(g.num_nodes())?;

    let nmi_value = if let Some(path) = &a.clusters {
        let text = fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.clone(),
            source: e,
        })?;
        let assign: Vec<usize> = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.clone(),
            line: e.line(),
            message: e.to_string(),
        })?;
        if assign.len() != g.num_nodes() {
            return Err(Error::Invalid(format!(
                "{} cluster ids for {} nodes",
                assign.len(),
                g.num_nodes()
            )));
        }
        let labels = g
            .labels()
            .ok_or_else(|| Error::Invalid("nmi needs labels".into()))?;
        Some(nmi(&assign, labels))
    } else if a.nmi_proxy {
        let labels = g
            .labels()
            .ok_or_else(|| Error::Invalid("nmi needs labels".into()))?;
        let assign = voronoi_assignments(g.features(), &reps.nodes);
        Some(nmi(&assign, labels))
    } else {
        None
    };

    let mut rows = Vec::with_capacity(a.runs);
    for r in 0..a.runs {
        let mut cfg = build_eval_config(a.mode, a.seed + r as u64, &file.eval, &a.eval_flags);
        cfg.seed = a.seed + r as u64;
        let mut rec = evaluate_selection(&g, &reps, &cfg)?;
        rec.nmi = nmi_value;
        rows.push(CsvRow::from_record(&reps, &rec));
    }
    append_csv(&a.out, &rows)?;
    println!("appended {} rows to {}", rows.len(), a.out.display());
    Ok(0)
}

#[derive(Debug, Serialize)]
struct BenchSelectorRow {
    selector: String,
    mean: f64,
    sd: f64,
    winner: bool,
}

#[derive(Debug, Serialize)]
struct BenchSummary {
    k: usize,
    runs: usize,
    mode: ClassifierMode,
    selectors: Vec<BenchSelectorRow>,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sample_sd(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0);
    var.sqrt()
}

/// Two-sided Welch p, with the degenerate both-constant case mapped to
/// certainty: 1 when the means agree, 0 when they differ.
fn pairwise_p(a: &[f64], b: &[f64]) -> f64 {
    match welch_t_test(a, b) {
        Ok(p) => p,
        Err(_) => {
            if mean(a) == mean(b) {
                1.0
            } else {
                0.0
            }
        }
    }
}

/// The best-mean selector is flagged winner only when it beats every other
/// selector at the significance level.
fn winner_flags(accuracies: &[Vec<f64>]) -> Vec<bool> {
    let mut flags = vec![false; accuracies.len()];
    let means: Vec<f64> = accuracies.iter().map(|a| mean(a)).collect();
    let mut best = 0usize;
    for (i, &m) in means.iter().enumerate() {
        if m > means[best] {
            best = i;
        }
    }
    let decisive = accuracies
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != best)
        .all(|(_, other)| pairwise_p(&accuracies[best], other) < SIGNIFICANCE_LEVEL);
    if decisive {
        flags[best] = true;
    }
    flags
}

fn cmd_bench(a: BenchArgs) -> Result<i32> {
    if a.selectors.len() < 2 {
        return Err(Error::Invalid("bench needs at least 2 selectors".into()));
    }
    if a.runs < 2 {
        return Err(Error::Invalid("bench needs at least 2 runs".into()));
    }
    let file = load_config(a.config.as_deref())?;
    let (g, has_structure) = load_structured(&a.dataset, a.knn_mode)?;
    if a.mode == ClassifierMode::Graph && !has_structure {
        return Err(Error::Invalid(
            "graph mode needs edges.tsv; use knn_graph, mlp, or --knn-mode".into(),
        ));
    }
    let k = resolve_k(&a.k, g.num_classes())?;

    let jobs: Vec<(usize, usize)> = (0..a.selectors.len())
        .flat_map(|s| (0..a.runs).map(move |r| (s, r)))
        .collect();
    let mut results: Vec<(usize, usize, CsvRow)> = jobs
        .into_par_iter()
        .map(|(s, r)| {
            let run_seed = a.seed + r as u64;
            let (reps, _) = run_selection(
                &g,
                has_structure,
                a.selectors[s],
                k,
                run_seed,
                a.context,
                &file,
                &a.rsgnn,
                &a.selector_flags,
            )?;
            let mut cfg = build_eval_config(a.mode, run_seed, &file.eval, &a.eval_flags);
            cfg.seed = run_seed;
            let rec = evaluate_selection(&g, &reps, &cfg)?;
            Ok((s, r, CsvRow::from_record(&reps, &rec)))
        })
        .collect::<Result<Vec<_>>>()?;
    results.sort_by_key(|&(s, r, _)| (s, r));

    let mut accuracies: Vec<Vec<f64>> = vec![Vec::with_capacity(a.runs); a.selectors.len()];
    let mut rows = Vec::with_capacity(results.len());
    for (s, _, row) in results {
        accuracies[s].push(row.accuracy);
        rows.push(row);
    }
    append_csv(&a.out, &rows)?;

    let flags = winner_flags(&accuracies);
    let summary = BenchSummary {
        k,
        runs: a.runs,
        mode: a.mode,
        selectors: a
            .selectors
            .iter()
            .zip(&accuracies)
            .zip(&flags)
            .map(|((sel, accs), &winner)| BenchSelectorRow {
                selector: sel.as_str().to_string(),
                mean: mean(accs),
                sd: sample_sd(accs),
                winner,
            })
            .collect(),
    };
    match &a.summary {
        Some(path) => {
            write_json(path.as_path(), &summary)?;
            println!(
                "appended {} rows to {}; summary -> {}",
                rows.len(),
                a.out.display(),
                path.display()
            );
        }
        None => {
            let mut text = serde_json::to_string_pretty(&summary)
                .map_err(|e| Error::Invalid(format!("serialize: {e}")))?;
            text.push('\n');
            print!("{text}");
        }
    }
    Ok(0)
}

fn cmd_fon(a: FonArgs) -> Result<i32> {
    if a.out.is_some() && a.k.is_none() {
        return Err(Error::Invalid("--out requires --k (gap experiment)".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let inst = if let Some(dir) = &a.fixture {
        let g = load_dataset::<f64>(dir)?;
        fon_from_graph(&g)?
    } else if a.planted {
        planted_two_clique(&mut rng)
    } else {
        let n = a
            .n
            .ok_or_else(|| Error::Invalid("need --fixture, --planted, or both --n and --m".into()))?;
        let m = a
            .m
            .ok_or_else(|| Error::Invalid("need --fixture, --planted, or both --n and --m".into()))?;
        gen_fon(n, PointSource::RandomPairs { m }, &mut rng)?
    };
    println!(
        "fon instance: {} features, {} points",
        inst.num_features(),
        inst.num_points()
    );
    if let Some(dir) = &a.dump {
        save_dataset(dir, &encode_instance(&inst)?)?;
        println!("dumped dataset to {}", dir.display());
    }
    let Some(k) = a.k else {
        return Ok(0);
    };
    let names: Vec<SelectorName> = if a.selectors.is_empty() {
        vec![
            SelectorName::Random,
            SelectorName::Popular,
            SelectorName::Kmeans,
            SelectorName::Kmedoid,
            SelectorName::Ffs,
            SelectorName::MaxcoverRbf,
            SelectorName::MaxcoverCos,
        ]
    } else {
        a.selectors
            .iter()
            .map(|s| {
                s.to_baseline().ok_or_else(|| {
                    Error::Invalid("fon gap supports baseline selectors only".into())
                })
            })
            .collect::<Result<Vec<_>>>()?
    };
    let cfgs: Vec<SelectorConfig> = names
        .into_iter()
        .map(|name| SelectorConfig::new(name, k, a.seed))
        .collect();
    let report = gap_experiment(&inst, k, &cfgs)?;
    match &a.out {
        Some(path) => {
            write_json(path.as_path(), &report)?;
            println!("gap report -> {}", path.display());
        }
        None => {
            let mut text = serde_json::to_string_pretty(&report)
                .map_err(|e| Error::Invalid(format!("serialize: {e}")))?;
            text.push('\n');
            print!("{text}");
        }
    }
    Ok(0)
}

/// Exit 0 on pass, 4 on failure. Infallible by construction: the instance is
/// generated, never loaded.
fn cmd_gradcheck(a: &GradcheckArgs) -> i32 {
    const TOL: f64 = 1e-4;
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    // Draw order: edges, features, params, corruption permutation.
    let mut edges = Vec::new();
    for i in 0..a.nodes {
        for j in (i + 1)..a.nodes {
            if rng.random::<f64>() < 0.2 {
                edges.push((i, j));
            }
        }
    }
    let feats = DenseMatrix::from_fn(a.nodes, a.features, |_, _| rng.random::<f64>() * 2.0 - 1.0);
    let g = AttributedGraph::new(&edges, feats, None, 0).expect("generated graph is valid");
    let adj = normalize_adjacency(&g);
    let x = CsrMatrix::from_dense(g.features());
    let params = RsgnnParams::<f64>::init(a.features, a.embed_dim, a.k, &mut rng);
    let perm = random_permutation(a.nodes, &mut rng);

    let cache = forward(&x, &adj, &params, &perm, a.lambda, a.norm);
    let mut grads = backward(&x, &adj, &params, &cache);
    if a.corrupt_gradient {
        let v = grads.gcn_weight.get(0, 0);
        grads.gcn_weight.set(0, 0, v + 1e-2);
    }

    let loss_fn = |ps: &[DenseMatrix<f64>]| {
        let p = RsgnnParams {
            gcn_weight: ps[0].clone(),
            disc_weight: ps[1].clone(),
            rep_embed: ps[2].clone(),
        };
        forward(&x, &adj, &p, &perm, a.lambda, a.norm).loss
    };
    let report = grad_check(
        loss_fn,
        &[grads.gcn_weight, grads.disc_weight, grads.rep_embed],
        &[
            params.gcn_weight.clone(),
            params.disc_weight.clone(),
            params.rep_embed.clone(),
        ],
        &["gcn_weight", "disc_weight", "rep_embed"],
        1e-5,
    );
    for b in &report.blocks {
        println!(
            "{:<12} max_rel_err {:.6e}  worst ({}, {}) analytic {:.6e} numeric {:.6e}",
            b.name, b.max_rel_err, b.worst_entry.0, b.worst_entry.1, b.analytic, b.numeric
        );
    }
    if report.passes(TOL) {
        println!("PASS max_rel_err {:.6e} < {TOL:e}", report.max_rel_err());
        0
    } else {
        println!("FAIL max_rel_err {:.6e} >= {TOL:e}", report.max_rel_err());
        4
    }
}

fn cmd_synth(a: SynthArgs) -> Result<i32> {
    let cfg = SbmConfig {
        blocks: a.blocks,
        nodes_per_block: a.per_block,
        p_in: a.p_in,
        p_out: a.p_out,
        feature_dim: a.feature_dim,
        center_scale: a.center_scale,
        noise: a.noise,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let g = sbm_gaussian::<f64, _>(&cfg, &mut rng)?;
    save_dataset(&a.out, &g)?;
    println!(
        "wrote {} nodes, {} edges to {}",
        g.num_nodes(),
        g.num_edges(),
        a.out.display()
    );
    Ok(0)
}
