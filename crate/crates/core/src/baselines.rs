//! Classical selectors over a context matrix (raw features or externally
//! trained embeddings): uniform random, degree-popularity, kmeans and
//! kmedoid cluster exemplars, farthest-first traversal, and greedy
//! facility-location coverage under RBF or cosine similarity. All selection
//! math runs in f64 regardless of the context precision, so the chosen
//! indices do not depend on training precision.

use crate::error::{Error, Result};
use crate::graph::AttributedGraph;
use crate::linalg::{DenseMatrix, Scalar};
use crate::reps::RepresentativeSet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Pairwise-distance selectors refuse above this many rows (the distance
/// matrix is materialized).
pub const KMEDOID_MAX_NODES: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum SelectorName {
    Random,
    Popular,
    Kmeans,
    Kmedoid,
    Ffs,
    MaxcoverRbf,
    MaxcoverCos,
}

impl SelectorName {
    pub fn as_str(&self) -> &'static str {
        match self {
            SelectorName::Random => "random",
            SelectorName::Popular => "popular",
            SelectorName::Kmeans => "kmeans",
            SelectorName::Kmedoid => "kmedoid",
            SelectorName::Ffs => "ffs",
            SelectorName::MaxcoverRbf => "maxcover_rbf",
            SelectorName::MaxcoverCos => "maxcover_cos",
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SelectorConfig {
    pub name: SelectorName,
    pub k: usize,
    pub seed: u64,
    /// RBF kernel width; defaults to 1/n when unset.
    pub rbf_gamma: Option<f64>,
    /// Coverage similarities are evaluated over each node's this-many
    /// most-similar pairs; everything else counts as similarity 0.
    pub candidate_knn: usize,
    pub max_iters: usize,
}

impl SelectorConfig {
    pub fn new(name: SelectorName, k: usize, seed: u64) -> Self {
        SelectorConfig {
            name,
            k,
            seed,
            rbf_gamma: None,
            candidate_knn: 50,
            max_iters: 300,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Invalid("budget k must be at least 1".into()));
        }
        if let Some(g) = self.rbf_gamma {
            if g <= 0.0 || !g.is_finite() {
                return Err(Error::Invalid(format!("rbf_gamma = {g} must be positive")));
            }
        }
        if self.candidate_knn == 0 {
            return Err(Error::Invalid("candidate_knn must be at least 1".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::Invalid("max_iters must be at least 1".into()));
        }
        Ok(())
    }

    fn check_budget(&self, m: usize) -> Result<()> {
        self.validate()?;
        if self.k > m {
            return Err(Error::Budget {
                required: self.k,
                available: m,
            });
        }
        Ok(())
    }
}

/// Dispatches on `cfg.name`. The graph is only needed by the popularity
/// selector; everything else reads the context matrix.
pub fn run_selector<S: Scalar>(
    ctx: &DenseMatrix<S>,
    g: Option<&AttributedGraph<S>>,
    cfg: &SelectorConfig,
) -> Result<RepresentativeSet> {
    match cfg.name {
        SelectorName::Random => select_random(ctx.rows(), cfg),
        SelectorName::Popular => match g {
            Some(g) => select_popular(g, cfg),
            None => Err(Error::Invalid("selector requires graph".into())),
        },
        SelectorName::Kmeans => select_kmeans(ctx, cfg),
        SelectorName::Kmedoid => select_kmedoid(ctx, cfg),
        SelectorName::Ffs => select_ffs(ctx, cfg),
        SelectorName::MaxcoverRbf | SelectorName::MaxcoverCos => select_maxcover(ctx, cfg),
    }
}

/// k distinct indices drawn uniformly.
pub fn select_random(m: usize, cfg: &SelectorConfig) -> Result<RepresentativeSet> {
    cfg.check_budget(m)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let nodes = rand::seq::index::sample(&mut rng, m, cfg.k).into_vec();
    Ok(RepresentativeSet::new("random", cfg.seed, nodes))
}

/// Top-k nodes by degree (self-loops never counted), ties to lower index.
pub fn select_popular<S: Scalar>(
    g: &AttributedGraph<S>,
    cfg: &SelectorConfig,
) -> Result<RepresentativeSet> {
    let m = g.num_nodes();
    cfg.check_budget(m)?;
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by_key(|&i| (std::cmp::Reverse(g.degree(i)), i));
    Ok(RepresentativeSet::new(
        "popular",
        cfg.seed,
        order[..cfg.k].to_vec(),
    ))
}

fn row_dist_sq(a: &[f64], b: &[f64]) -> f64 {
    crate::linalg::dist_sq(a, b)
}

/// Nearest context row to each target in order, ties to lower index; a row
/// already taken falls through to the next-nearest unselected row.
#[allow(clippy::needless_range_loop)]
fn nearest_rows_dedup(ctx: &DenseMatrix<f64>, targets: &[Vec<f64>]) -> Vec<usize> {
    let m = ctx.rows();
    assert!(targets.len() <= m);
    let mut used = vec![false; m];
    let mut out = Vec::with_capacity(targets.len());
    for t in targets {
        let mut best: Option<(f64, usize)> = None;
        for i in 0..m {
            if used[i] {
                continue;
            }
            let d = row_dist_sq(ctx.row(i), t);
            if best.is_none_or(|(b, _)| d < b) {
                best = Some((d, i));
            }
        }
        let (_, i) = best.expect("targets fit in unselected rows");
        used[i] = true;
        out.push(i);
    }
    out
}

/// Distance-weighted probabilistic seeding: the first pick is uniform, each
/// later pick is drawn with probability proportional to squared distance to
/// the nearest chosen point. All-zero weights fall back to the lowest-index
/// unchosen point.
#[allow(clippy::needless_range_loop)]
fn dsq_seeding<R: Rng>(
    m: usize,
    k: usize,
    dist_sq_to: impl Fn(usize, usize) -> f64,
    rng: &mut R,
) -> Vec<usize> {
    let mut chosen: Vec<usize> = vec![rng.random_range(0..m)];
    let mut weight: Vec<f64> = (0..m).map(|i| dist_sq_to(i, chosen[0])).collect();
    while chosen.len() < k {
        let total: f64 = weight.iter().sum();
        let next = if total > 0.0 {
            let u = rng.random::<f64>() * total;
            let mut cum = 0.0;
            let mut pick = None;
            for (i, &w) in weight.iter().enumerate() {
                cum += w;
                if cum > u {
                    pick = Some(i);
                    break;
                }
            }
            // u can squeak past the last positive increment in float math
            pick.unwrap_or_else(|| {
                weight
                    .iter()
                    .rposition(|&w| w > 0.0)
                    .expect("total > 0 implies a positive weight")
            })
        } else {
            (0..m)
                .find(|i| !chosen.contains(i))
                .expect("k <= m leaves an unchosen index")
        };
        chosen.push(next);
        for i in 0..m {
            weight[i] = weight[i].min(dist_sq_to(i, next));
        }
    }
    chosen
}

#[allow(clippy::needless_range_loop)]
pub(crate) fn kmeans_core(
    ctx: &DenseMatrix<f64>,
    cfg: &SelectorConfig,
) -> (Vec<usize>, Vec<f64>) {
    let (m, n) = (ctx.rows(), ctx.cols());
    let k = cfg.k;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let seeds = dsq_seeding(m, k, |i, j| row_dist_sq(ctx.row(i), ctx.row(j)), &mut rng);
    let mut centers: Vec<Vec<f64>> = seeds.iter().map(|&i| ctx.row(i).to_vec()).collect();
    let mut assignment = vec![usize::MAX; m];
    let mut sse_trace = Vec::new();
    for _ in 0..cfg.max_iters {
        let mut next = vec![0usize; m];
        let mut sse = 0.0;
        for i in 0..m {
            let mut best = (0usize, row_dist_sq(ctx.row(i), &centers[0]));
            for (c, center) in centers.iter().enumerate().skip(1) {
                let d = row_dist_sq(ctx.row(i), center);
                if d < best.1 {
                    best = (c, d);
                }
            }
            next[i] = best.0;
            sse += best.1;
        }
        sse_trace.push(sse);
        if next == assignment {
            break;
        }
        assignment = next;
        let mut sums = vec![vec![0.0f64; n]; k];
        let mut counts = vec![0usize; k];
        for i in 0..m {
            counts[assignment[i]] += 1;
            for j in 0..n {
                sums[assignment[i]][j] += ctx.get(i, j);
            }
        }
        for c in 0..k {
            if counts[c] == 0 {
                continue;
            }
            for j in 0..n {
                centers[c][j] = sums[c][j] / counts[c] as f64;
            }
        }
    }
    (nearest_rows_dedup(ctx, &centers), sse_trace)
}

/// Lloyd iterations to an assignment fixpoint, then the nearest row to each
/// center (deduplicated).
pub fn select_kmeans<S: Scalar>(
    ctx: &DenseMatrix<S>,
    cfg: &SelectorConfig,
) -> Result<RepresentativeSet> {
    cfg.check_budget(ctx.rows())?;
    let (nodes, _) = kmeans_core(&ctx.to_f64_matrix(), cfg);
    Ok(RepresentativeSet::new("kmeans", cfg.seed, nodes))
}

/// Alternating Voronoi/medoid iterations over a materialized pairwise
/// distance matrix; medoid indices are the representatives.
#[allow(clippy::needless_range_loop)]
pub fn select_kmedoid<S: Scalar>(
    ctx: &DenseMatrix<S>,
    cfg: &SelectorConfig,
) -> Result<RepresentativeSet> {
    let m = ctx.rows();
    cfg.check_budget(m)?;
    if m > KMEDOID_MAX_NODES {
        return Err(Error::Capacity {
            what: "kmedoid pairwise distances".into(),
            required: m as u128,
            limit: KMEDOID_MAX_NODES as u128,
            unit: "rows",
        });
    }
    let ctx = ctx.to_f64_matrix();
    let k = cfg.k;
    let mut dist = vec![0.0f64; m * m];
    for i in 0..m {
        for j in (i + 1)..m {
            let d = row_dist_sq(ctx.row(i), ctx.row(j)).sqrt();
            dist[i * m + j] = d;
            dist[j * m + i] = d;
        }
    }
    let d = |i: usize, j: usize| dist[i * m + j];

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut medoids = dsq_seeding(m, k, |i, j| d(i, j) * d(i, j), &mut rng);
    for _ in 0..cfg.max_iters {
        let mut assignment = vec![0usize; m];
        for i in 0..m {
            let mut best = (0usize, d(i, medoids[0]));
            for (c, &med) in medoids.iter().enumerate().skip(1) {
                let dd = d(i, med);
                if dd < best.1 {
                    best = (c, dd);
                }
            }
            assignment[i] = best.0;
        }
        let mut next = medoids.clone();
        for c in 0..k {
            let members: Vec<usize> = (0..m).filter(|&i| assignment[i] == c).collect();
            if members.is_empty() {
                continue;
            }
            let mut best: Option<(f64, usize)> = None;
            for &cand in &members {
                let total: f64 = members.iter().map(|&i| d(cand, i)).sum();
                if best.is_none_or(|(b, _)| total < b) {
                    best = Some((total, cand));
                }
            }
            next[c] = best.expect("nonempty cluster").1;
        }
        if next == medoids {
            break;
        }
        medoids = next;
    }
    // duplicate rows can leave two clusters on the same medoid
    let targets: Vec<Vec<f64>> = medoids.iter().map(|&i| ctx.row(i).to_vec()).collect();
    let nodes = nearest_rows_dedup(&ctx, &targets);
    Ok(RepresentativeSet::new("kmedoid", cfg.seed, nodes))
}

#[allow(clippy::needless_range_loop)]
pub(crate) fn ffs_core(ctx: &DenseMatrix<f64>, k: usize, first: usize) -> Vec<usize> {
    let m = ctx.rows();
    let mut selected = vec![first];
    let mut mind: Vec<f64> = (0..m)
        .map(|i| row_dist_sq(ctx.row(i), ctx.row(first)).sqrt())
        .collect();
    while selected.len() < k {
        let mut best = (0usize, f64::NEG_INFINITY);
        for (i, &di) in mind.iter().enumerate() {
            if selected.contains(&i) {
                continue;
            }
            if di > best.1 {
                best = (i, di);
            }
        }
        let next = best.0;
        selected.push(next);
        for i in 0..m {
            mind[i] = mind[i].min(row_dist_sq(ctx.row(i), ctx.row(next)).sqrt());
        }
    }
    selected
}

/// Farthest-first traversal: a uniformly seeded first pick, then repeatedly
/// the point farthest from its nearest selected point (ties to lower index).
pub fn select_ffs<S: Scalar>(
    ctx: &DenseMatrix<S>,
    cfg: &SelectorConfig,
) -> Result<RepresentativeSet> {
    let m = ctx.rows();
    cfg.check_budget(m)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let first = rng.random_range(0..m);
    let nodes = ffs_core(&ctx.to_f64_matrix(), cfg.k, first);
    Ok(RepresentativeSet::new("ffs", cfg.seed, nodes))
}

/// Per-node candidate similarity lists: each node's `candidate_knn` most
/// similar other nodes (ties to lower index), symmetrized by union. Entries
/// are (neighbor, similarity), neighbor ascending.
#[allow(clippy::needless_range_loop)]
fn similarity_lists(
    ctx: &DenseMatrix<f64>,
    cfg: &SelectorConfig,
) -> Vec<Vec<(usize, f64)>> {
    let m = ctx.rows();
    let n = ctx.cols();
    if m < 2 {
        return vec![Vec::new(); m];
    }
    let sim_fn: Box<dyn Fn(usize, usize) -> f64> = match cfg.name {
        SelectorName::MaxcoverRbf => {
            let gamma = cfg.rbf_gamma.unwrap_or(1.0 / n as f64);
            Box::new(move |i, j| (-gamma * row_dist_sq(ctx.row(i), ctx.row(j))).exp())
        }
        SelectorName::MaxcoverCos => {
            let norms: Vec<f64> = (0..m)
                .map(|i| crate::linalg::norm2(ctx.row(i)))
                .collect();
            Box::new(move |i, j| {
                if norms[i] == 0.0 || norms[j] == 0.0 {
                    0.0
                } else {
                    (crate::linalg::dot(ctx.row(i), ctx.row(j)) / (norms[i] * norms[j])).max(0.0)
                }
            })
        }
        other => panic!("similarity_lists called for {other:?}"),
    };
    let knn = cfg.candidate_knn.min(m - 1);
    let mut pairs: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];
    let mut sims = vec![0.0f64; m];
    for i in 0..m {
        for j in 0..m {
            sims[j] = sim_fn(i, j);
        }
        let mut order: Vec<usize> = (0..m).filter(|&j| j != i).collect();
        order.select_nth_unstable_by(knn - 1, |&a, &b| {
            sims[b].partial_cmp(&sims[a]).expect("finite similarity").then(a.cmp(&b))
        });
        for &j in &order[..knn] {
            pairs[i].push((j, sims[j]));
            pairs[j].push((i, sims[j]));
        }
    }
    for list in pairs.iter_mut() {
        list.sort_unstable_by_key(|e| e.0);
        list.dedup_by_key(|e| e.0);
    }
    pairs
}

fn coverage_objective(lists: &[Vec<(usize, f64)>], nodes: &[usize]) -> f64 {
    let m = lists.len();
    let mut cov = vec![0.0f64; m];
    for &v in nodes {
        for &(i, s) in &lists[v] {
            if s > cov[i] {
                cov[i] = s;
            }
        }
    }
    cov.iter().sum()
}

/// Facility-location objective of a selection: sum over nodes of the best
/// similarity to any selected node, restricted to candidate pairs.
pub fn maxcover_objective<S: Scalar>(
    ctx: &DenseMatrix<S>,
    cfg: &SelectorConfig,
    nodes: &[usize],
) -> f64 {
    let lists = similarity_lists(&ctx.to_f64_matrix(), cfg);
    coverage_objective(&lists, nodes)
}

pub(crate) fn maxcover_core(
    ctx: &DenseMatrix<f64>,
    cfg: &SelectorConfig,
) -> (Vec<usize>, Vec<f64>) {
    let m = ctx.rows();
    let lists = similarity_lists(ctx, cfg);
    let mut cov = vec![0.0f64; m];
    let mut selected = Vec::with_capacity(cfg.k);
    let mut taken = vec![false; m];
    let mut gains = Vec::with_capacity(cfg.k);
    for _ in 0..cfg.k {
        let mut best = (usize::MAX, f64::NEG_INFINITY);
        for v in 0..m {
            if taken[v] {
                continue;
            }
            let gain: f64 = lists[v]
                .iter()
                .map(|&(i, s)| (s - cov[i]).max(0.0))
                .sum();
            if gain > best.1 {
                best = (v, gain);
            }
        }
        let (v, gain) = best;
        taken[v] = true;
        selected.push(v);
        gains.push(gain);
        for &(i, s) in &lists[v] {
            if s > cov[i] {
                cov[i] = s;
            }
        }
    }
    (selected, gains)
}

/// Greedy facility-location coverage under the configured similarity;
/// marginal gains are evaluated over candidate pairs only.
pub fn select_maxcover<S: Scalar>(
    ctx: &DenseMatrix<S>,
    cfg: &SelectorConfig,
) -> Result<RepresentativeSet> {
    cfg.check_budget(ctx.rows())?;
    let (nodes, _) = maxcover_core(&ctx.to_f64_matrix(), cfg);
    Ok(RepresentativeSet::new(
        cfg.name.as_str(),
        cfg.seed,
        nodes,
    ))
}
