//! Downstream node classifier: a two-layer GCN with per-channel prelu,
//! dropout after the first layer, cross-entropy on the selected nodes only,
//! and early stopping on validation accuracy. Holds its own weights; nothing
//! is shared with the selection model's encoder.

use super::{ClassifierMode, EvalConfig};
use crate::error::{Error, Result};
use crate::graph::{build_knn_graph, normalize_adjacency, AttributedGraph};
use crate::linalg::{
    prelu_grad_slope, prelu_grad_x, prelu_matrix, Adam, AdamConfig, CsrMatrix, DenseMatrix,
};
use crate::model::glorot_init;
use rand::Rng;

pub(crate) const CLASSIFIER_LR: f64 = 1e-2;
const EVAL_KNN: usize = 15;

#[derive(Clone, Debug)]
pub struct ClassifierParams {
    pub w1: DenseMatrix<f64>,
    pub w2: DenseMatrix<f64>,
    /// One prelu slope per hidden channel, stored 1 x hidden.
    pub slopes: DenseMatrix<f64>,
}

pub struct TrainedClassifier {
    pub params: ClassifierParams,
    /// Argmax predictions for every node under the best-validation weights.
    pub predictions: Vec<usize>,
    pub best_val_accuracy: f64,
    pub best_epoch: usize,
    pub epochs_run: usize,
}

/// The diffusion operator for each classifier mode: the native edges, a
/// feature-similarity graph, or self-loops only.
pub(crate) fn eval_adjacency(
    g: &AttributedGraph<f64>,
    mode: ClassifierMode,
) -> Result<CsrMatrix<f64>> {
    match mode {
        ClassifierMode::Graph => Ok(normalize_adjacency(g)),
        ClassifierMode::KnnGraph => {
            let k = EVAL_KNN.min(g.num_nodes() - 1).max(1);
            let knn: AttributedGraph<f64> = build_knn_graph(g.features(), k)?;
            Ok(normalize_adjacency(&knn))
        }
        ClassifierMode::Mlp => Ok(normalize_adjacency(&g.rewire(&[])?)),
    }
}

fn forward_logits(
    adj: &CsrMatrix<f64>,
    x: &CsrMatrix<f64>,
    params: &ClassifierParams,
    mask: Option<&DenseMatrix<f64>>,
) -> (DenseMatrix<f64>, DenseMatrix<f64>, DenseMatrix<f64>) {
    let z1 = adj.matmul_dense(&x.matmul_dense(&params.w1));
    let mut h1 = prelu_matrix(&z1, params.slopes.row(0));
    if let Some(mask) = mask {
        for (h, &m) in h1.as_mut_slice().iter_mut().zip(mask.as_slice()) {
            *h *= m;
        }
    }
    let logits = adj.matmul_dense(&h1.matmul(&params.w2));
    (z1, h1, logits)
}

fn argmax_rows(logits: &DenseMatrix<f64>) -> Vec<usize> {
    (0..logits.rows())
        .map(|i| {
            let row = logits.row(i);
            let mut best = 0usize;
            for (j, &v) in row.iter().enumerate().skip(1) {
                if v > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}

pub(crate) struct ClassifierGrads {
    pub w1: DenseMatrix<f64>,
    pub w2: DenseMatrix<f64>,
    pub slopes: DenseMatrix<f64>,
}

/// Cross-entropy over the selected rows plus an L2 penalty on both weight
/// matrices (slopes exempt), with gradients for all three blocks. The
/// dropout mask entries are 0 or 1/(1-rate), applied after prelu.
pub(crate) fn epoch_grads(
    adj: &CsrMatrix<f64>,
    x: &CsrMatrix<f64>,
    params: &ClassifierParams,
    reps: &[usize],
    labels: &[usize],
    mask: Option<&DenseMatrix<f64>>,
    weight_decay: f64,
) -> (f64, ClassifierGrads) {
    let (z1, h1, logits) = forward_logits(adj, x, params, mask);
    let (m, c) = (logits.rows(), logits.cols());
    let r = reps.len() as f64;

    let mut data_loss = 0.0;
    let mut dz2 = DenseMatrix::<f64>::zeros(m, c);
    for &i in reps {
        let row = logits.row(i);
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = row.iter().map(|&v| (v - max).exp()).sum();
        data_loss += max + sum.ln() - row[labels[i]];
        let out = dz2.row_mut(i);
        for j in 0..c {
            out[j] = (row[j] - max).exp() / sum / r;
        }
        out[labels[i]] -= 1.0 / r;
    }
    data_loss /= r;

    let sq = |w: &DenseMatrix<f64>| w.as_slice().iter().map(|&v| v * v).sum::<f64>();
    let loss = data_loss + 0.5 * weight_decay * (sq(&params.w1) + sq(&params.w2));

    let g2 = adj.matmul_dense(&dz2);
    let mut dw2 = h1.transpose_matmul(&g2);
    dw2.add_scaled_inplace(&params.w2, weight_decay);

    let mut dh1 = g2.matmul(&params.w2.transpose());
    if let Some(mask) = mask {
        for (d, &mm) in dh1.as_mut_slice().iter_mut().zip(mask.as_slice()) {
            *d *= mm;
        }
    }
    let h = params.slopes.cols();
    let mut dslopes = DenseMatrix::<f64>::zeros(1, h);
    let mut dz1 = DenseMatrix::<f64>::zeros(m, h);
    for i in 0..m {
        for j in 0..h {
            let z = z1.get(i, j);
            let d = dh1.get(i, j);
            dz1.set(i, j, d * prelu_grad_x(z, params.slopes.get(0, j)));
            dslopes.set(0, j, dslopes.get(0, j) + d * prelu_grad_slope(z));
        }
    }
    let g1 = adj.matmul_dense(&dz1);
    let mut dw1 = x.transpose_matmul_dense(&g1);
    dw1.add_scaled_inplace(&params.w1, weight_decay);

    (loss, ClassifierGrads { w1: dw1, w2: dw2, slopes: dslopes })
}

/// Trains on the labels of `reps`, early-stops on `val` accuracy, and
/// reports predictions under the best-validation parameters.
pub fn train_classifier<R: Rng>(
    g: &AttributedGraph<f64>,
    reps: &[usize],
    val: &[usize],
    cfg: &EvalConfig,
    rng: &mut R,
) -> Result<TrainedClassifier> {
    cfg.validate()?;
    let labels = g
        .labels()
        .ok_or_else(|| Error::Invalid("classifier needs labels".into()))?
        .to_vec();
    if reps.is_empty() || val.is_empty() {
        return Err(Error::Invalid(
            "classifier needs nonempty training and validation sets".into(),
        ));
    }
    let (m, n, c) = (g.num_nodes(), g.num_features(), g.num_classes());
    if c < 2 {
        return Err(Error::Invalid("classification needs at least 2 classes".into()));
    }
    let adj = eval_adjacency(g, cfg.mode)?;
    let x = CsrMatrix::from_dense(g.features());
    let h = cfg.hidden_dim;

    let mut params = ClassifierParams {
        w1: glorot_init(n, h, rng),
        w2: glorot_init(h, c, rng),
        slopes: DenseMatrix::filled(1, h, 0.25),
    };
    let mut adam = Adam::new(AdamConfig::with_lr(CLASSIFIER_LR));

    let val_accuracy = |p: &ClassifierParams| {
        let (_, _, logits) = forward_logits(&adj, &x, p, None);
        let pred = argmax_rows(&logits);
        val.iter().filter(|&&i| pred[i] == labels[i]).count() as f64 / val.len() as f64
    };

    let keep = 1.0 - cfg.dropout;
    let mut best = (f64::NEG_INFINITY, params.clone(), 0usize);
    let mut since_improved = 0usize;
    let mut epochs_run = 0usize;
    for epoch in 0..cfg.max_epochs {
        epochs_run = epoch + 1;
        let mask = if cfg.dropout > 0.0 {
            Some(DenseMatrix::from_fn(m, h, |_, _| {
                if rng.random::<f64>() < cfg.dropout {
                    0.0
                } else {
                    1.0 / keep
                }
            }))
        } else {
            None
        };
        let (loss, grads) =
            epoch_grads(&adj, &x, &params, reps, &labels, mask.as_ref(), cfg.weight_decay);
        if !loss.is_finite() {
            return Err(Error::NonFinite(format!("classifier loss at epoch {epoch}")));
        }
        adam.step(&mut [
            ("w1", &mut params.w1, &grads.w1),
            ("w2", &mut params.w2, &grads.w2),
            ("slopes", &mut params.slopes, &grads.slopes),
        ])?;

        let acc = val_accuracy(&params);
        if acc > best.0 {
            best = (acc, params.clone(), epoch);
            since_improved = 0;
        } else {
            since_improved += 1;
            if since_improved >= cfg.patience {
                break;
            }
        }
    }

    let (_, _, logits) = forward_logits(&adj, &x, &best.1, None);
    Ok(TrainedClassifier {
        predictions: argmax_rows(&logits),
        params: best.1,
        best_val_accuracy: best.0,
        best_epoch: best.2,
        epochs_run,
    })
}
