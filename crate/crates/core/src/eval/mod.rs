//! Selection quality harness: validation/test splitting, the downstream
//! classifier, quality metrics, and significance testing.

mod classifier;
mod metrics;
mod stats;

pub use classifier::{train_classifier, ClassifierParams, TrainedClassifier};
pub use metrics::{accuracy, label_coverage, nmi, normalized_accuracy};
pub use stats::{
    beta_inc_reg, ln_gamma, welch_one_sided_greater, welch_stats, welch_t_test, WelchStats,
};

use crate::error::{Error, Result};
use crate::graph::AttributedGraph;
use crate::reps::RepresentativeSet;
use clap::ValueEnum;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum ClassifierMode {
    /// Diffuse over the dataset's own edges.
    Graph,
    /// Diffuse over a feature-similarity graph (15 nearest neighbors).
    KnnGraph,
    /// Self-loops only; the classifier degenerates to an MLP.
    Mlp,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct EvalConfig {
    pub mode: ClassifierMode,
    pub hidden_dim: usize,
    pub dropout: f64,
    pub weight_decay: f64,
    pub val_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
}

impl EvalConfig {
    pub fn new(mode: ClassifierMode) -> Self {
        EvalConfig {
            mode,
            hidden_dim: 32,
            dropout: 0.5,
            weight_decay: 5e-4,
            val_size: 500,
            max_epochs: 500,
            patience: 50,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden_dim == 0 {
            return Err(Error::Invalid("hidden_dim must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Invalid(format!(
                "dropout = {} must lie in [0, 1)",
                self.dropout
            )));
        }
        if self.weight_decay < 0.0 || !self.weight_decay.is_finite() {
            return Err(Error::Invalid(format!(
                "weight_decay = {} must be finite and nonnegative",
                self.weight_decay
            )));
        }
        if self.val_size == 0 {
            return Err(Error::Invalid("val_size must be at least 1".into()));
        }
        if self.max_epochs == 0 || self.patience == 0 {
            return Err(Error::Invalid(
                "max_epochs and patience must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// One evaluation run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunRecord {
    pub seed: u64,
    pub accuracy: f64,
    pub coverage: f64,
    pub nmi: Option<f64>,
}

/// Aggregate over runs of one selector at one budget.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EvalReport {
    pub selector: String,
    pub k: usize,
    pub accuracy: f64,
    pub normalized_accuracy: f64,
    pub label_coverage: f64,
    pub nmi: Option<f64>,
    pub runs: Vec<RunRecord>,
}

/// Splits the non-selected nodes into validation and test. The validation
/// share is `cfg.val_size` when enough nodes remain, otherwise half of the
/// remainder so tiny fixtures still evaluate.
pub fn split_eval<R: Rng>(
    m: usize,
    reps: &RepresentativeSet,
    cfg: &EvalConfig,
    rng: &mut R,
) -> Result<(Vec<usize>, Vec<usize>)> {
    reps.validate(m)?;
    let rest = m - reps.k;
    let val_size = if rest > cfg.val_size {
        cfg.val_size
    } else {
        rest / 2
    };
    if val_size == 0 {
        return Err(Error::Invalid(format!(
            "cannot split {rest} non-selected nodes into validation and test"
        )));
    }
    let selected: Vec<bool> = {
        let mut s = vec![false; m];
        for &r in &reps.nodes {
            s[r] = true;
        }
        s
    };
    let mut pool: Vec<usize> = (0..m).filter(|&i| !selected[i]).collect();
    pool.shuffle(rng);
    let mut val = pool[..val_size].to_vec();
    let mut test = pool[val_size..].to_vec();
    val.sort_unstable();
    test.sort_unstable();
    Ok((val, test))
}

/// One full evaluation: split, train the classifier on the selection, score
/// test accuracy and class coverage. NMI is attached by callers that carry a
/// clustering.
pub fn evaluate_selection(
    g: &AttributedGraph<f64>,
    reps: &RepresentativeSet,
    cfg: &EvalConfig,
) -> Result<RunRecord> {
    cfg.validate()?;
    let labels = g
        .labels()
        .ok_or_else(|| Error::Invalid("evaluation needs labels".into()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (val, test) = split_eval(g.num_nodes(), reps, cfg, &mut rng)?;
    let trained = train_classifier(g, &reps.nodes, &val, cfg, &mut rng)?;
    let acc = accuracy(&trained.predictions, labels, &test)?;
    let coverage = label_coverage(&reps.nodes, labels, g.num_classes());
    Ok(RunRecord {
        seed: cfg.seed,
        accuracy: acc,
        coverage,
        nmi: None,
    })
}

/// Collapses per-run records into the aggregate report (plain means; the
/// normalized accuracy is recomputed from the mean accuracy).
pub fn aggregate_runs(selector: &str, k: usize, runs: Vec<RunRecord>) -> Result<EvalReport> {
    if runs.is_empty() {
        return Err(Error::Invalid("no runs to aggregate".into()));
    }
    let n = runs.len() as f64;
    let acc = runs.iter().map(|r| r.accuracy).sum::<f64>() / n;
    let cov = runs.iter().map(|r| r.coverage).sum::<f64>() / n;
    let nmis: Vec<f64> = runs.iter().filter_map(|r| r.nmi).collect();
    let nmi = if nmis.is_empty() {
        None
    } else {
        Some(nmis.iter().sum::<f64>() / nmis.len() as f64)
    };
    Ok(EvalReport {
        selector: selector.to_string(),
        k,
        accuracy: acc,
        normalized_accuracy: normalized_accuracy(acc),
        label_coverage: cov,
        nmi,
        runs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseMatrix;

    fn labeled_ring(m: usize) -> AttributedGraph<f64> {
        let edges: Vec<(usize, usize)> = (0..m).map(|i| (i, (i + 1) % m)).collect();
        let feats = DenseMatrix::from_fn(m, 3, |i, j| {
            let side = if i < m / 2 { -1.0 } else { 1.0 };
            side * (j as f64 + 1.0) + (i as f64 * 0.7).sin() * 0.1
        });
        let labels: Vec<usize> = (0..m).map(|i| usize::from(i >= m / 2)).collect();
        AttributedGraph::new(&edges, feats, Some(labels), 2).unwrap()
    }

    #[test]
    fn split_sizes_match_the_budget_arithmetic() {
        let reps = RepresentativeSet::new("random", 0, (0..10).collect());
        let mut cfg = EvalConfig::new(ClassifierMode::Graph);
        cfg.val_size = 500;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (val, test) = split_eval(600, &reps, &cfg, &mut rng).unwrap();
        assert_eq!(val.len(), 500);
        assert_eq!(test.len(), 90);
    }

    #[test]
    fn split_excludes_reps_and_is_disjoint_and_deterministic() {
        let reps = RepresentativeSet::new("random", 0, vec![3, 7, 11]);
        let cfg = EvalConfig::new(ClassifierMode::Graph);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (val, test) = split_eval(40, &reps, &cfg, &mut rng).unwrap();
        // 37 remaining, below val_size: half go to validation
        assert_eq!(val.len(), 18);
        assert_eq!(test.len(), 19);
        for r in &reps.nodes {
            assert!(!val.contains(r) && !test.contains(r));
        }
        for v in &val {
            assert!(!test.contains(v));
        }
        let mut rng2 = ChaCha8Rng::seed_from_u64(9);
        let again = split_eval(40, &reps, &cfg, &mut rng2).unwrap();
        assert_eq!((val, test), again);
    }

    #[test]
    fn split_rejects_too_few_leftovers() {
        let reps = RepresentativeSet::new("random", 0, vec![0, 1, 2]);
        let cfg = EvalConfig::new(ClassifierMode::Graph);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(split_eval(4, &reps, &cfg, &mut rng).is_err());
        assert!(split_eval(5, &reps, &cfg, &mut rng).is_ok());
    }

    #[test]
    fn evaluate_selection_produces_finite_record() {
        let g = labeled_ring(24);
        let reps = RepresentativeSet::new("random", 0, vec![0, 5, 12, 18]);
        let mut cfg = EvalConfig::new(ClassifierMode::Graph);
        cfg.hidden_dim = 8;
        cfg.max_epochs = 150;
        cfg.seed = 4;
        let rec = evaluate_selection(&g, &reps, &cfg).unwrap();
        assert!((0.0..=1.0).contains(&rec.accuracy));
        assert_eq!(rec.coverage, 1.0);
        assert!(rec.nmi.is_none());
        // informative features on a 2-class toy: better than chance
        assert!(rec.accuracy > 0.5, "accuracy = {}", rec.accuracy);
        let again = evaluate_selection(&g, &reps, &cfg).unwrap();
        assert_eq!(rec.accuracy, again.accuracy);
    }

    #[test]
    fn aggregate_means_and_normalization() {
        let runs = vec![
            RunRecord { seed: 0, accuracy: 0.7, coverage: 1.0, nmi: Some(0.5) },
            RunRecord { seed: 1, accuracy: 0.8, coverage: 0.5, nmi: None },
        ];
        let rep = aggregate_runs("kmeans", 4, runs).unwrap();
        assert!((rep.accuracy - 0.75).abs() < 1e-15);
        assert!((rep.normalized_accuracy - 0.5).abs() < 1e-15);
        assert!((rep.label_coverage - 0.75).abs() < 1e-15);
        assert_eq!(rep.nmi, Some(0.5));
        assert!(aggregate_runs("kmeans", 4, vec![]).is_err());
    }

    #[test]
    fn eval_classifier_shares_nothing_with_the_selection_model() {
        let g = labeled_ring(16);
        let mut cfg = EvalConfig::new(ClassifierMode::Graph);
        cfg.hidden_dim = 8;
        cfg.max_epochs = 5;
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let reps: Vec<usize> = vec![0, 4, 8, 12];
        let val: Vec<usize> = vec![1, 5, 9, 13];
        let trained = train_classifier(&g, &reps, &val, &cfg, &mut rng).unwrap();

        let mut model_cfg = crate::model::RsgnnConfig::new(4);
        model_cfg.embed_dim = 8;
        model_cfg.epochs = 5;
        let mut rng2 = ChaCha8Rng::seed_from_u64(2);
        let state = crate::model::train(&g, &model_cfg, &mut rng2).unwrap();
        // separate parameter buffers, not views into one model
        assert_ne!(
            trained.params.w1.as_slice().as_ptr(),
            state.params.gcn_weight.as_slice().as_ptr()
        );
        // the classifier carries blocks the selection model does not have
        assert_eq!(trained.params.slopes.rows(), 1);
        assert_eq!(trained.params.w2.cols(), g.num_classes());
    }
}
