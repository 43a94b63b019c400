//! Joint representative-selection training: a single-layer GCN encoder
//! trained against a contrastive embedding loss plus a weighted
//! distance-to-nearest-representative loss, with representative extraction
//! and nearest-representative clustering on the best-epoch embeddings.

mod loss;

pub use loss::{center_norm, dgi_loss, gcn_forward, selection_loss, LOG_CLAMP, NORM_EPS};
pub(crate) use loss::{backward, forward, forward_norm, glorot_init, selection_terms};

use crate::error::{Error, Result};
use crate::graph::{normalize_adjacency, random_permutation, AttributedGraph};
use crate::linalg::{dist_sq, Adam, AdamConfig, CsrMatrix, DenseMatrix, Scalar};
use crate::reps::RepresentativeSet;
use clap::ValueEnum;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Precision {
    F32,
    F64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum NormMode {
    CenterNorm,
    ConstNorm,
    NoNorm,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum JointMode {
    Joint,
    TwoStage,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct RsgnnConfig {
    pub embed_dim: usize,
    pub lambda: f64,
    pub epochs: usize,
    pub k: usize,
    pub learning_rate: f64,
    pub precision: Precision,
    pub norm: NormMode,
    pub joint: JointMode,
}

impl RsgnnConfig {
    /// Defaults for training on a native graph; kNN-built graphs typically
    /// shrink embed_dim to 128.
    pub fn new(k: usize) -> Self {
        RsgnnConfig {
            embed_dim: 512,
            lambda: 1e-3,
            epochs: 2000,
            k,
            learning_rate: 1e-3,
            precision: Precision::F64,
            norm: NormMode::CenterNorm,
            joint: JointMode::Joint,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Invalid("budget k must be at least 1".into()));
        }
        if self.epochs == 0 {
            return Err(Error::Invalid("epochs must be at least 1".into()));
        }
        if self.embed_dim == 0 {
            return Err(Error::Invalid("embed_dim must be at least 1".into()));
        }
        if self.lambda < 0.0 || !self.lambda.is_finite() {
            return Err(Error::Invalid(format!(
                "lambda = {} must be finite and nonnegative",
                self.lambda
            )));
        }
        if self.learning_rate <= 0.0 || !self.learning_rate.is_finite() {
            return Err(Error::Invalid(format!(
                "learning_rate = {} must be finite and positive",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct RsgnnParams<S> {
    /// GCN layer weights, n x d.
    pub gcn_weight: DenseMatrix<S>,
    /// Bilinear discriminator, d x d.
    pub disc_weight: DenseMatrix<S>,
    /// Representative embeddings, k x d.
    pub rep_embed: DenseMatrix<S>,
}

impl<S: Scalar> RsgnnParams<S> {
    /// Draw order is fixed (gcn, disc, rep) and all draws happen in f64, so
    /// seeds produce the same parameter stream in every precision.
    pub fn init<R: Rng>(n: usize, d: usize, k: usize, rng: &mut R) -> Self {
        RsgnnParams {
            gcn_weight: loss::glorot_init(n, d, rng),
            disc_weight: loss::glorot_init(d, d, rng),
            rep_embed: loss::rep_init(k, d, rng),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TraceRow {
    pub epoch: usize,
    pub l_emb: f64,
    pub l_sel: f64,
    pub loss: f64,
}

#[derive(Clone, Debug)]
pub struct TrainedState<S> {
    /// Representative embeddings at the minimum-loss epoch.
    pub best_rep_embed: DenseMatrix<S>,
    /// Normalized node embeddings at the minimum-loss epoch.
    pub best_norm_embed: DenseMatrix<S>,
    pub best_loss: f64,
    pub loss_trace: Vec<TraceRow>,
    /// Final-epoch parameters, kept for diagnostics.
    pub params: RsgnnParams<S>,
}

fn check_finite(epoch: usize, l_emb: f64, l_sel: f64, lambda: f64) -> Result<()> {
    let loss = l_emb + lambda * l_sel;
    if loss.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite(format!(
            "loss at epoch {epoch}: l_emb = {l_emb}, l_sel = {l_sel}"
        )))
    }
}

fn with_epoch(e: Result<()>, epoch: usize, l_emb: f64, l_sel: f64) -> Result<()> {
    e.map_err(|err| match err {
        Error::NonFinite(msg) => Error::NonFinite(format!(
            "epoch {epoch}: {msg}; l_emb = {l_emb}, l_sel = {l_sel}"
        )),
        other => other,
    })
}

/// Trains the joint objective. Each epoch evaluates the loss before the
/// optimizer step; the reported best state is the pre-step capture at the
/// minimum-loss epoch. In two-stage mode the embedding loss is trained alone
/// first, then representatives train against the selection loss on frozen
/// normalized embeddings; the best state is tracked over the second stage,
/// where both matrices are meaningful.
#[allow(clippy::assign_op_pattern)]
pub fn train<S: Scalar, R: Rng>(
    g: &AttributedGraph<S>,
    cfg: &RsgnnConfig,
    rng: &mut R,
) -> Result<TrainedState<S>> {
    cfg.validate()?;
    let m = g.num_nodes();
    if cfg.k > m {
        return Err(Error::Budget {
            required: cfg.k,
            available: m,
        });
    }
    let adj = normalize_adjacency(g);
    let x = CsrMatrix::from_dense(g.features());
    let mut params = RsgnnParams::init(g.num_features(), cfg.embed_dim, cfg.k, rng);
    let mut trace: Vec<TraceRow> = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, DenseMatrix<S>, DenseMatrix<S>)> = None;
    let capture = |loss: f64, rep: &DenseMatrix<S>, emb: &DenseMatrix<S>,
                       best: &mut Option<(f64, DenseMatrix<S>, DenseMatrix<S>)>| {
        if best.as_ref().is_none_or(|(b, _, _)| loss < *b) {
            *best = Some((loss, rep.clone(), emb.clone()));
        }
    };

    match cfg.joint {
        JointMode::Joint => {
            let mut adam = Adam::new(AdamConfig::with_lr(cfg.learning_rate));
            for epoch in 0..cfg.epochs {
                let perm = random_permutation(m, rng);
                let cache = forward(&x, &adj, &params, &perm, cfg.lambda, cfg.norm);
                check_finite(epoch, cache.l_emb, cache.l_sel, cfg.lambda)?;
                trace.push(TraceRow {
                    epoch,
                    l_emb: cache.l_emb,
                    l_sel: cache.l_sel,
                    loss: cache.loss,
                });
                capture(cache.loss, &params.rep_embed, &cache.h_norm, &mut best);
                let grads = backward(&x, &adj, &params, &cache);
                let step = adam.step(&mut [
                    ("gcn_weight", &mut params.gcn_weight, &grads.gcn_weight),
                    ("disc_weight", &mut params.disc_weight, &grads.disc_weight),
                    ("rep_embed", &mut params.rep_embed, &grads.rep_embed),
                ]);
                with_epoch(step, epoch, cache.l_emb, cache.l_sel)?;
            }
        }
        JointMode::TwoStage => {
            // stage 1: embedding loss alone; representatives stay at init
            let mut adam = Adam::new(AdamConfig::with_lr(cfg.learning_rate));
            let mut last_l_emb = 0.0;
            for epoch in 0..cfg.epochs {
                let perm = random_permutation(m, rng);
                let cache = forward(&x, &adj, &params, &perm, 0.0, cfg.norm);
                check_finite(epoch, cache.l_emb, cache.l_sel, cfg.lambda)?;
                last_l_emb = cache.l_emb;
                trace.push(TraceRow {
                    epoch,
                    l_emb: cache.l_emb,
                    l_sel: cache.l_sel,
                    loss: cache.l_emb + cfg.lambda * cache.l_sel,
                });
                let grads = backward(&x, &adj, &params, &cache);
                let step = adam.step(&mut [
                    ("gcn_weight", &mut params.gcn_weight, &grads.gcn_weight),
                    ("disc_weight", &mut params.disc_weight, &grads.disc_weight),
                ]);
                with_epoch(step, epoch, cache.l_emb, cache.l_sel)?;
            }
            // stage 2: freeze the encoder, train representatives on the
            // frozen normalized embeddings (no corruption involved)
            let h = gcn_forward(&adj, g.features(), &params.gcn_weight);
            let (h_norm, _) = forward_norm(&h, cfg.norm);
            let mut adam = Adam::new(AdamConfig::with_lr(cfg.learning_rate));
            let d = cfg.embed_dim;
            for stage_epoch in 0..cfg.epochs {
                let epoch = cfg.epochs + stage_epoch;
                let sel = selection_terms(&h_norm, &params.rep_embed);
                check_finite(epoch, last_l_emb, sel.loss, cfg.lambda)?;
                let loss = last_l_emb + cfg.lambda * sel.loss;
                trace.push(TraceRow {
                    epoch,
                    l_emb: last_l_emb,
                    l_sel: sel.loss,
                    loss,
                });
                capture(loss, &params.rep_embed, &h_norm, &mut best);
                let mut d_rep = DenseMatrix::zeros(cfg.k, d);
                for i in 0..m {
                    let di = sel.dist[i];
                    if di.to_f64() == 0.0 {
                        continue;
                    }
                    let j = sel.assignment[i];
                    let hi = h_norm.row(i);
                    let rj = params.rep_embed.row(j);
                    let out = d_rep.row_mut(j);
                    for c in 0..d {
                        out[c] = out[c] + (rj[c] - hi[c]) / di;
                    }
                }
                let step = adam.step(&mut [("rep_embed", &mut params.rep_embed, &d_rep)]);
                with_epoch(step, epoch, last_l_emb, sel.loss)?;
            }
        }
    }

    let (best_loss, best_rep_embed, best_norm_embed) =
        best.expect("at least one epoch ran");
    Ok(TrainedState {
        best_rep_embed,
        best_norm_embed,
        best_loss,
        loss_trace: trace,
        params,
    })
}

/// Representative j maps to its nearest node in the best-epoch embeddings;
/// a node already taken by an earlier representative falls through to the
/// next-nearest unselected node, so the k indices are always distinct.
#[allow(clippy::needless_range_loop)]
pub fn extract_representatives<S: Scalar>(state: &TrainedState<S>, k: usize) -> Vec<usize> {
    let h = &state.best_norm_embed;
    let r = &state.best_rep_embed;
    let m = h.rows();
    assert!(k <= m, "budget {k} exceeds {m} nodes");
    assert!(k <= r.rows(), "budget {k} exceeds {} representatives", r.rows());
    let mut used = vec![false; m];
    let mut selected = Vec::with_capacity(k);
    for j in 0..k {
        let rj = r.row(j);
        let mut best: Option<(S, usize)> = None;
        for i in 0..m {
            if used[i] {
                continue;
            }
            let d2 = dist_sq(h.row(i), rj);
            if best.as_ref().is_none_or(|&(b, _)| d2 < b) {
                best = Some((d2, i));
            }
        }
        let (_, i) = best.expect("k <= m leaves an unselected node");
        used[i] = true;
        selected.push(i);
    }
    selected
}

/// Cluster id of each node: the index (into `reps.nodes`) of the
/// representative whose best-epoch embedding is nearest; ties to the lowest
/// representative index.
pub fn assign_clusters<S: Scalar>(state: &TrainedState<S>, reps: &RepresentativeSet) -> Vec<usize> {
    assert!(!reps.nodes.is_empty(), "clustering needs at least one representative");
    let h = &state.best_norm_embed;
    (0..h.rows())
        .map(|i| {
            let hi = h.row(i);
            let mut best = (0usize, dist_sq(hi, h.row(reps.nodes[0])));
            for (j, &node) in reps.nodes.iter().enumerate().skip(1) {
                let d2 = dist_sq(hi, h.row(node));
                if d2 < best.1 {
                    best = (j, d2);
                }
            }
            best.0
        })
        .collect()
}

/// Trains and extracts in the configured precision. All randomness comes
/// from the seed.
pub fn select_rsgnn(
    g: &AttributedGraph<f64>,
    cfg: &RsgnnConfig,
    seed: u64,
) -> Result<RepresentativeSet> {
    select_rsgnn_with_clusters(g, cfg, seed).map(|(reps, _)| reps)
}

/// Like [`select_rsgnn`] but also returns the per-node cluster assignment
/// induced by the selected representatives' embeddings.
pub fn select_rsgnn_with_clusters(
    g: &AttributedGraph<f64>,
    cfg: &RsgnnConfig,
    seed: u64,
) -> Result<(RepresentativeSet, Vec<usize>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match cfg.precision {
        Precision::F64 => {
            let state = train(g, cfg, &mut rng)?;
            let nodes = extract_representatives(&state, cfg.k);
            let reps = RepresentativeSet::new("rsgnn", seed, nodes);
            let clusters = assign_clusters(&state, &reps);
            Ok((reps, clusters))
        }
        Precision::F32 => {
            let g32 = g.convert::<f32>();
            let state = train(&g32, cfg, &mut rng)?;
            let nodes = extract_representatives(&state, cfg.k);
            let reps = RepresentativeSet::new("rsgnn", seed, nodes);
            let clusters = assign_clusters(&state, &reps);
            Ok((reps, clusters))
        }
    }
}
