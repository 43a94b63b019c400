//! Forward and backward passes for the joint objective: a single-layer GCN
//! encoder, a contrastive discriminator that separates clean from
//! feature-shuffled embeddings, embedding normalization, and the
//! distance-to-nearest-representative selection loss.

use super::{NormMode, RsgnnParams};
use crate::graph::{random_permutation, AttributedGraph};
use crate::linalg::{
    dist_sq, dot, selu_grad, selu_matrix, sigmoid, CsrMatrix, DenseMatrix, Scalar,
};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Discriminator log arguments are clamped here; the clamped branch is
/// treated as constant (zero gradient).
pub const LOG_CLAMP: f64 = 1e-12;
/// Rows whose centered norm falls below this are emitted as zero rows.
pub const NORM_EPS: f64 = 1e-12;

/// Single GCN layer: selu(A (X W)) with A the normalized adjacency.
pub fn gcn_forward<S: Scalar>(
    adj: &CsrMatrix<S>,
    x: &DenseMatrix<S>,
    w: &DenseMatrix<S>,
) -> DenseMatrix<S> {
    assert_eq!(adj.cols(), x.rows(), "adjacency and features disagree on m");
    assert_eq!(x.cols(), w.rows(), "features and weights disagree on n");
    selu_matrix(&adj.matmul_dense(&x.matmul(w)))
}

pub(crate) struct NormCache<S> {
    pub centered: DenseMatrix<S>,
    pub zeta: Vec<S>,
    pub guarded: Vec<bool>,
    pub gbar: S,
    pub gbar_guarded: bool,
}

#[allow(clippy::assign_op_pattern)]
pub(crate) fn forward_norm<S: Scalar>(
    h: &DenseMatrix<S>,
    mode: NormMode,
) -> (DenseMatrix<S>, NormCache<S>) {
    let (m, d) = (h.rows(), h.cols());
    assert!(m >= 1, "normalization needs at least one row");
    let mu = h.mean_row();
    let mut centered = DenseMatrix::zeros(m, d);
    let mut zeta = Vec::with_capacity(m);
    let mut guarded = Vec::with_capacity(m);
    for i in 0..m {
        let row = h.row(i);
        let out = centered.row_mut(i);
        let mut sq = S::ZERO;
        for j in 0..d {
            let c = row[j] - mu[j];
            out[j] = c;
            sq = sq + c * c;
        }
        let z = sq.sqrt();
        zeta.push(z);
        guarded.push(z.to_f64() < NORM_EPS);
    }
    let gbar = zeta.iter().copied().sum::<S>() / S::from_f64(m as f64);
    let gbar_guarded = gbar.to_f64() < NORM_EPS;
    let h_norm = match mode {
        NormMode::CenterNorm => DenseMatrix::from_fn(m, d, |i, j| {
            if guarded[i] {
                S::ZERO
            } else {
                centered.get(i, j) / zeta[i]
            }
        }),
        NormMode::ConstNorm => {
            if gbar_guarded {
                DenseMatrix::zeros(m, d)
            } else {
                h.map(|v| v / gbar)
            }
        }
        NormMode::NoNorm => h.clone(),
    };
    (
        h_norm,
        NormCache {
            centered,
            zeta,
            guarded,
            gbar,
            gbar_guarded,
        },
    )
}

/// Maps a gradient w.r.t. the normalized embeddings back to the raw
/// embeddings. Guarded rows (and a guarded divisor) contribute zero.
pub(crate) fn backward_norm<S: Scalar>(
    mode: NormMode,
    t: &DenseMatrix<S>,
    h: &DenseMatrix<S>,
    h_norm: &DenseMatrix<S>,
    cache: &NormCache<S>,
) -> DenseMatrix<S> {
    let (m, d) = (h.rows(), h.cols());
    let inv_m = S::ONE / S::from_f64(m as f64);
    match mode {
        NormMode::NoNorm => t.clone(),
        NormMode::CenterNorm => {
            let mut dc = DenseMatrix::zeros(m, d);
            for i in 0..m {
                if cache.guarded[i] {
                    continue;
                }
                let ti = t.row(i);
                let hi = h_norm.row(i);
                let proj = dot(ti, hi);
                let out = dc.row_mut(i);
                for j in 0..d {
                    out[j] = (ti[j] - proj * hi[j]) / cache.zeta[i];
                }
            }
            let mean_dc = dc.mean_row();
            DenseMatrix::from_fn(m, d, |i, j| dc.get(i, j) - mean_dc[j])
        }
        NormMode::ConstNorm => {
            if cache.gbar_guarded {
                return DenseMatrix::zeros(m, d);
            }
            let gbar = cache.gbar;
            let beta = (0..m).map(|i| dot(t.row(i), h.row(i))).sum::<S>();
            let unit = DenseMatrix::from_fn(m, d, |i, j| {
                if cache.guarded[i] {
                    S::ZERO
                } else {
                    cache.centered.get(i, j) / cache.zeta[i]
                }
            });
            let unit_mean = unit.mean_row();
            let coef = beta / (gbar * gbar) * inv_m;
            DenseMatrix::from_fn(m, d, |i, j| {
                t.get(i, j) / gbar - coef * (unit.get(i, j) - unit_mean[j])
            })
        }
    }
}

pub(crate) struct SelectionTerms<S> {
    pub assignment: Vec<usize>,
    pub dist: Vec<S>,
    pub loss: f64,
}

/// Nearest representative per node under Euclidean distance; ties go to the
/// lowest representative index.
pub(crate) fn selection_terms<S: Scalar>(
    h_norm: &DenseMatrix<S>,
    r: &DenseMatrix<S>,
) -> SelectionTerms<S> {
    assert_eq!(
        h_norm.cols(),
        r.cols(),
        "embedding and representative dims disagree"
    );
    let m = h_norm.rows();
    let mut assignment = Vec::with_capacity(m);
    let mut dist = Vec::with_capacity(m);
    let mut loss = 0.0f64;
    for i in 0..m {
        let hi = h_norm.row(i);
        let mut best = (0usize, dist_sq(hi, r.row(0)));
        for j in 1..r.rows() {
            let d2 = dist_sq(hi, r.row(j));
            if d2 < best.1 {
                best = (j, d2);
            }
        }
        let d = best.1.sqrt();
        assignment.push(best.0);
        dist.push(d);
        loss += d.to_f64();
    }
    SelectionTerms {
        assignment,
        dist,
        loss,
    }
}

/// Sum over nodes of distance to the nearest representative row.
pub fn selection_loss<S: Scalar>(h_norm: &DenseMatrix<S>, r: &DenseMatrix<S>) -> f64 {
    selection_terms(h_norm, r).loss
}

fn clamped_ln(v: f64) -> f64 {
    // comparison (not max) so NaN propagates to the loss guard
    if v < LOG_CLAMP {
        LOG_CLAMP.ln()
    } else {
        v.ln()
    }
}

pub(crate) struct ForwardCache<S> {
    pub perm: Vec<usize>,
    pub z: DenseMatrix<S>,
    pub z_prime: DenseMatrix<S>,
    pub h: DenseMatrix<S>,
    pub h_prime: DenseMatrix<S>,
    pub s: Vec<S>,
    pub a: Vec<S>,
    pub p: Vec<S>,
    pub p_prime: Vec<S>,
    pub h_norm: DenseMatrix<S>,
    pub norm: NormCache<S>,
    pub sel: SelectionTerms<S>,
    pub lambda: f64,
    pub mode: NormMode,
    pub l_emb: f64,
    pub l_sel: f64,
    pub loss: f64,
}

/// Full forward pass with an explicit corruption permutation. Shuffling the
/// rows of XW equals computing (PX)W row for row, so the corrupted branch
/// reuses the clean product.
pub(crate) fn forward<S: Scalar>(
    x: &CsrMatrix<S>,
    adj: &CsrMatrix<S>,
    params: &RsgnnParams<S>,
    perm: &[usize],
    lambda: f64,
    mode: NormMode,
) -> ForwardCache<S> {
    let m = adj.rows();
    let d = params.gcn_weight.cols();
    let f = x.matmul_dense(&params.gcn_weight);
    let f_prime = f.permuted_rows(perm);
    let z = adj.matmul_dense(&f);
    let z_prime = adj.matmul_dense(&f_prime);
    let h = selu_matrix(&z);
    let h_prime = selu_matrix(&z_prime);

    let s: Vec<S> = h.mean_row().into_iter().map(sigmoid).collect();
    let a: Vec<S> = (0..d)
        .map(|r| dot(params.disc_weight.row(r), &s))
        .collect();
    let p: Vec<S> = (0..m).map(|i| sigmoid(dot(h.row(i), &a))).collect();
    let p_prime: Vec<S> = (0..m).map(|i| sigmoid(dot(h_prime.row(i), &a))).collect();
    let mut l_emb = 0.0f64;
    for i in 0..m {
        l_emb -= clamped_ln(p[i].to_f64()) + clamped_ln(1.0 - p_prime[i].to_f64());
    }

    let (h_norm, norm) = forward_norm(&h, mode);
    let sel = selection_terms(&h_norm, &params.rep_embed);
    let l_sel = sel.loss;
    let loss = l_emb + lambda * l_sel;
    ForwardCache {
        perm: perm.to_vec(),
        z,
        z_prime,
        h,
        h_prime,
        s,
        a,
        p,
        p_prime,
        h_norm,
        norm,
        sel,
        lambda,
        mode,
        l_emb,
        l_sel,
        loss,
    }
}

pub(crate) struct RsgnnGrads<S> {
    pub gcn_weight: DenseMatrix<S>,
    pub disc_weight: DenseMatrix<S>,
    pub rep_embed: DenseMatrix<S>,
}

#[allow(clippy::needless_range_loop, clippy::assign_op_pattern)]
pub(crate) fn backward<S: Scalar>(
    x: &CsrMatrix<S>,
    adj: &CsrMatrix<S>,
    params: &RsgnnParams<S>,
    cache: &ForwardCache<S>,
) -> RsgnnGrads<S> {
    let m = cache.h.rows();
    let d = cache.h.cols();
    let k = params.rep_embed.rows();
    let inv_m = S::ONE / S::from_f64(m as f64);
    let lambda = S::from_f64(cache.lambda);

    // discriminator branch; clamped log terms are constants
    let g: Vec<S> = cache
        .p
        .iter()
        .map(|&p| {
            if p.to_f64() < LOG_CLAMP {
                S::ZERO
            } else {
                p - S::ONE
            }
        })
        .collect();
    let g_prime: Vec<S> = cache
        .p_prime
        .iter()
        .map(|&p| {
            if 1.0 - p.to_f64() < LOG_CLAMP {
                S::ZERO
            } else {
                p
            }
        })
        .collect();
    let mut qq = vec![S::ZERO; d];
    for i in 0..m {
        let hi = cache.h.row(i);
        let hpi = cache.h_prime.row(i);
        for c in 0..d {
            qq[c] = qq[c] + g[i] * hi[c] + g_prime[i] * hpi[c];
        }
    }
    let d_disc = DenseMatrix::from_fn(d, d, |r, c| qq[r] * cache.s[c]);
    let ds: Vec<S> = (0..d)
        .map(|c| (0..d).map(|r| params.disc_weight.get(r, c) * qq[r]).sum())
        .collect();
    let ds0: Vec<S> = (0..d)
        .map(|c| ds[c] * cache.s[c] * (S::ONE - cache.s[c]))
        .collect();

    let mut dh = DenseMatrix::zeros(m, d);
    let mut dh_prime = DenseMatrix::zeros(m, d);
    for i in 0..m {
        let out = dh.row_mut(i);
        for c in 0..d {
            out[c] = g[i] * cache.a[c] + inv_m * ds0[c];
        }
        let out_p = dh_prime.row_mut(i);
        for c in 0..d {
            out_p[c] = g_prime[i] * cache.a[c];
        }
    }

    // selection branch through the normalization
    let mut t = DenseMatrix::zeros(m, d);
    let mut d_rep = DenseMatrix::zeros(k, d);
    if cache.lambda != 0.0 {
        for i in 0..m {
            let di = cache.sel.dist[i];
            if di.to_f64() == 0.0 {
                continue;
            }
            let j = cache.sel.assignment[i];
            let hi = cache.h_norm.row(i);
            let rj = params.rep_embed.row(j);
            let ti = t.row_mut(i);
            for c in 0..d {
                ti[c] = lambda * (hi[c] - rj[c]) / di;
            }
            let dr = d_rep.row_mut(j);
            for c in 0..d {
                dr[c] = dr[c] - ti[c];
            }
        }
        let dh_sel = backward_norm(cache.mode, &t, &cache.h, &cache.h_norm, &cache.norm);
        dh.add_scaled_inplace(&dh_sel, S::ONE);
    }

    let dz = DenseMatrix::from_fn(m, d, |i, j| dh.get(i, j) * selu_grad(cache.z.get(i, j)));
    let dz_prime = DenseMatrix::from_fn(m, d, |i, j| {
        dh_prime.get(i, j) * selu_grad(cache.z_prime.get(i, j))
    });
    // adjacency is symmetric, so A^T dZ = A dZ
    let mut df = adj.matmul_dense(&dz);
    let df_prime = adj.matmul_dense(&dz_prime);
    for i in 0..m {
        let src = df_prime.row(i).to_vec();
        let dst = df.row_mut(cache.perm[i]);
        for c in 0..d {
            dst[c] = dst[c] + src[c];
        }
    }
    let d_gcn = x.transpose_matmul_dense(&df);

    RsgnnGrads {
        gcn_weight: d_gcn,
        disc_weight: d_disc,
        rep_embed: d_rep,
    }
}

/// Contrastive embedding loss of the current parameters on one corruption
/// draw. Returns the clean embeddings and the loss value.
pub fn dgi_loss<S: Scalar, R: Rng>(
    g: &AttributedGraph<S>,
    adj: &CsrMatrix<S>,
    params: &RsgnnParams<S>,
    rng: &mut R,
) -> (DenseMatrix<S>, f64) {
    let x = CsrMatrix::from_dense(g.features());
    let perm = random_permutation(g.num_nodes(), rng);
    let cache = forward(&x, adj, params, &perm, 0.0, NormMode::NoNorm);
    (cache.h, cache.l_emb)
}

/// Per-node l2 normalization against the embedding center; rows closer than
/// 1e-12 to the center come back as zero rows.
pub fn center_norm<S: Scalar>(h: &DenseMatrix<S>) -> DenseMatrix<S> {
    forward_norm(h, NormMode::CenterNorm).0
}

/// Uniform(-limit, limit) with limit = sqrt(6 / (fan_in + fan_out)); draws
/// are made in f64 so parameter streams match across precisions.
pub(crate) fn glorot_init<S: Scalar, R: Rng>(
    rows: usize,
    cols: usize,
    rng: &mut R,
) -> DenseMatrix<S> {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    DenseMatrix::from_fn(rows, cols, |_, _| {
        S::from_f64(rng.random_range(-limit..limit))
    })
}

/// Gaussian rows with expected unit norm, matching the scale of normalized
/// embeddings.
pub(crate) fn rep_init<S: Scalar, R: Rng>(k: usize, d: usize, rng: &mut R) -> DenseMatrix<S> {
    let scale = 1.0 / (d as f64).sqrt();
    DenseMatrix::from_fn(k, d, |_, _| {
        let v: f64 = StandardNormal.sample(rng);
        S::from_f64(scale * v)
    })
}
