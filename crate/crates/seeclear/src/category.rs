//! Channel-wise texture aggregation memory: a persistent bank of
//! (channel-semantic, texture) group pairs, updated once per clip from
//! multi-scale decoder features and queried by clip-wise semantic tokens.
//!
//! The bank starts at zero and all projections are bias-free, so zero
//! features leave a zero bank unchanged and querying zero textures is the
//! exact identity on the feature map — both are pinned by tests.

use crate::error::{Result, SeeClearError};
use crate::rng::CounterRng;
use crate::tensor::{avg_pool, cross_attention, matmul, self_attention, softmax_rows, AttentionParams, Tensor};
use crate::Scalar;

/// Default group count.
pub const DEFAULT_GROUPS: usize = 4;
/// Default memory-channel count per group (rows/cols of each `C_j`).
pub const DEFAULT_CHANNELS: usize = 32;
/// Default texture rows per group.
pub const DEFAULT_TEXTURE_ROWS: usize = 16;

/// One semantic-texture group: a square channel-semantic matrix `C` and a
/// texture matrix `T` whose product forms the update query.
#[derive(Debug, Clone)]
pub struct MemoryGroup<S> {
    /// `(n_c, n_c)` channel-semantic matrix.
    pub c: Tensor<S>,
    /// `(n_c, d_t)` texture matrix.
    pub t: Tensor<S>,
}

/// The cross-clip memory bank.
#[derive(Debug, Clone)]
pub struct MemoryBank<S> {
    pub groups: Vec<MemoryGroup<S>>,
    /// Memory-channel count `n_c`.
    pub n_c: usize,
    /// Texture feature dimension `d_t`.
    pub d_t: usize,
}

/// Axis the query softmax normalizes over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueryAxis {
    /// Normalize over memory channels (columns of `C_j`); the aggregated
    /// texture is then a convex mixture of texture rows.
    MemoryChannels,
    /// Normalize over the clip-token axis instead (ablation switch).
    ClipTokens,
}

impl<S: Scalar> MemoryBank<S> {
    /// Zero-initialized bank of `j` groups.
    pub fn zeros(j: usize, n_c: usize, d_t: usize) -> Result<Self> {
        if j < 1 || n_c < 1 || d_t < 1 {
            return Err(SeeClearError::arg("bank dims must be positive"));
        }
        Ok(MemoryBank {
            groups: (0..j)
                .map(|_| MemoryGroup {
                    c: Tensor::zeros(&[n_c, n_c]),
                    t: Tensor::zeros(&[n_c, d_t]),
                })
                .collect(),
            n_c,
            d_t,
        })
    }

    pub fn is_zero(&self) -> bool {
        self.groups
            .iter()
            .all(|g| g.c.data().iter().all(|&v| v == S::zero()) && g.t.data().iter().all(|&v| v == S::zero()))
    }
}

/// Projection weights for bank updates and queries.
#[derive(Debug, Clone)]
pub struct BankNet<S> {
    /// Maps raw multi-scale feature channels to `d_t` token features.
    pub w_feat: Tensor<S>,
    /// Cross-attention: queries `T_hat = C T`, keys/values pooled features.
    pub update_ca: AttentionParams<S>,
    /// Self-attention refining the cross-attended textures.
    pub update_sa: AttentionParams<S>,
    /// Query-side refresh of `C` from the cross-attention output.
    pub w_refresh: Tensor<S>,
    /// Maps clip tokens into the memory-channel space for querying.
    pub w_clip: Tensor<S>,
    /// Feature-enhancement cross-attention (queries: feature pixels,
    /// keys/values: aggregated textures).
    pub query_ca: AttentionParams<S>,
    /// Common token-grid extent features are pooled to before concatenation.
    pub pool: usize,
}

impl<S: Scalar> BankNet<S> {
    pub fn seeded(
        feat_channels: usize,
        n_c: usize,
        d_t: usize,
        clip_d: usize,
        pool: usize,
        rng: &mut CounterRng,
    ) -> Self {
        let bf = S::from_f64c(1.0 / (feat_channels as f64).sqrt());
        let bt = S::from_f64c(1.0 / (d_t as f64).sqrt());
        let bc = S::from_f64c(1.0 / (clip_d as f64).sqrt());
        BankNet {
            w_feat: Tensor::seeded_uniform(&[feat_channels, d_t], -bf, bf, rng),
            update_ca: AttentionParams::seeded(d_t, d_t, d_t, 1, rng),
            update_sa: AttentionParams::seeded(d_t, d_t, d_t, 1, rng),
            w_refresh: Tensor::seeded_uniform(&[d_t, n_c], -bt, bt, rng),
            w_clip: Tensor::seeded_uniform(&[clip_d, n_c], -bc, bc, rng),
            query_ca: AttentionParams::seeded(feat_channels, d_t, feat_channels, 1, rng),
            pool,
        }
    }
}

/// Pool every scale to the common token grid, concatenate along the token
/// axis, and project channels to `d_t`.
fn pooled_tokens<S: Scalar>(feats: &[Tensor<S>], net: &BankNet<S>) -> Result<Tensor<S>> {
    let c = feats[0].shape()[0];
    let mut rows = Vec::new();
    for f in feats {
        if f.shape().len() != 3 || f.shape()[0] != c {
            return Err(SeeClearError::dim("bank update scales must share channel count"));
        }
        let p = avg_pool(f, net.pool, net.pool)?;
        for i in 0..net.pool {
            for j in 0..net.pool {
                let mut row = Vec::with_capacity(c);
                for ch in 0..c {
                    row.push(p.at3(ch, i, j));
                }
                rows.push(row);
            }
        }
    }
    let n = rows.len();
    let flat: Vec<S> = rows.into_iter().flatten().collect();
    let raw = Tensor::from_vec(&[n, c], flat)?;
    matmul(&raw, &net.w_feat)
}

/// Integrate one clip's multi-scale decoder features into the bank.
///
/// For each group: `T_hat = C T` queries a cross-attention over the pooled
/// feature tokens; the texture matrix accumulates the self-attended result
/// and `C` is refreshed from the same cross-attention output. Returns a new
/// bank; the input features are never mutated.
pub fn build_or_update<S: Scalar>(
    bank: &MemoryBank<S>,
    multiscale_feats: &[Tensor<S>],
    net: &BankNet<S>,
) -> Result<MemoryBank<S>> {
    if multiscale_feats.len() != 4 {
        return Err(SeeClearError::dim(format!(
            "bank update needs 4 feature scales, got {}",
            multiscale_feats.len()
        )));
    }
    let tokens = pooled_tokens(multiscale_feats, net)?;
    let mut out = bank.clone();
    for g in &mut out.groups {
        let t_hat = matmul(&g.c, &g.t)?;
        let ca = cross_attention(&t_hat, &tokens, &net.update_ca)?;
        let refined = self_attention(&ca, &net.update_sa)?;
        g.t = g.t.add(&refined)?;
        // Query-side residual refresh of the channel-semantic matrix.
        g.c = g.c.add(&matmul(&ca, &net.w_refresh)?)?;
    }
    Ok(out)
}

/// Enhance a `(C, H, W)` feature map from the bank, queried by clip tokens.
///
/// `A_j = SoftMax(project(O_c) C_j)` normalized over the requested axis;
/// the aggregated textures `A_j T_j` of all groups are concatenated as
/// keys/values of a residual cross-attention over the feature pixels.
pub fn query<S: Scalar>(
    o_c: &Tensor<S>,
    bank: &MemoryBank<S>,
    f_bar: &Tensor<S>,
    net: &BankNet<S>,
    axis: QueryAxis,
) -> Result<Tensor<S>> {
    if f_bar.shape().len() != 3 {
        return Err(SeeClearError::dim("query expects (C, H, W) features"));
    }
    let (c, h, w) = (f_bar.shape()[0], f_bar.shape()[1], f_bar.shape()[2]);
    if c != net.query_ca.w_q.shape()[0] {
        return Err(SeeClearError::dim(format!(
            "feature channels {} vs query projection {}",
            c,
            net.query_ca.w_q.shape()[0]
        )));
    }
    let probe = matmul(o_c, &net.w_clip)?;
    let mut aggregated = Vec::new();
    for g in &bank.groups {
        let scores = matmul(&probe, &g.c)?;
        let a = match axis {
            QueryAxis::MemoryChannels => softmax_rows(&scores),
            QueryAxis::ClipTokens => softmax_rows(&scores.transpose2()).transpose2(),
        };
        aggregated.push(matmul(&a, &g.t)?);
    }
    let kv = Tensor::stack(&aggregated)?;
    let k_total = kv.shape()[0] * kv.shape()[1];
    let kv = kv.reshape(&[k_total, bank.d_t])?;
    let mut pixels = Tensor::zeros(&[h * w, c]);
    for i in 0..h {
        for j in 0..w {
            for ch in 0..c {
                pixels.set2(i * w + j, ch, f_bar.at3(ch, i, j));
            }
        }
    }
    let enhanced = cross_attention(&pixels, &kv, &net.query_ca)?;
    let mut out = f_bar.clone();
    for i in 0..h {
        for j in 0..w {
            for ch in 0..c.min(enhanced.shape()[1]) {
                let v = out.at3(ch, i, j) + enhanced.at2(i * w + j, ch);
                out.set3(ch, i, j, v);
            }
        }
    }
    Ok(out)
}

impl<S: Scalar> MemoryBank<S> {
    /// Pack the bank into one `(J, n_c, n_c + d_t)` tensor: each group's rows
    /// carry `C_j` columns followed by `T_j` columns.
    pub fn to_tensor(&self) -> Tensor<S> {
        let j = self.groups.len();
        let cols = self.n_c + self.d_t;
        Tensor::from_fn(&[j, self.n_c, cols], |idx| {
            let g = &self.groups[idx[0]];
            if idx[2] < self.n_c {
                g.c.at2(idx[1], idx[2])
            } else {
                g.t.at2(idx[1], idx[2] - self.n_c)
            }
        })
    }

    /// Inverse of [`MemoryBank::to_tensor`].
    pub fn from_tensor(packed: &Tensor<S>, n_c: usize, d_t: usize) -> Result<Self> {
        if packed.shape().len() != 3
            || packed.shape()[1] != n_c
            || packed.shape()[2] != n_c + d_t
        {
            return Err(SeeClearError::dim(format!(
                "packed bank shape {:?} does not match n_c {} d_t {}",
                packed.shape(),
                n_c,
                d_t
            )));
        }
        let j = packed.shape()[0];
        let mut bank = MemoryBank::zeros(j, n_c, d_t)?;
        for (gi, g) in bank.groups.iter_mut().enumerate() {
            for r in 0..n_c {
                for col in 0..n_c {
                    g.c.set2(r, col, packed.at3(gi, r, col));
                }
                for col in 0..d_t {
                    g.t.set2(r, col, packed.at3(gi, r, n_c + col));
                }
            }
        }
        Ok(bank)
    }
}

/// Per-group query attention maps, exposed for normalization tests.
pub fn query_attention<S: Scalar>(
    o_c: &Tensor<S>,
    bank: &MemoryBank<S>,
    net: &BankNet<S>,
    axis: QueryAxis,
) -> Result<Vec<Tensor<S>>> {
    let probe = matmul(o_c, &net.w_clip)?;
    bank.groups
        .iter()
        .map(|g| {
            let scores = matmul(&probe, &g.c)?;
            Ok(match axis {
                QueryAxis::MemoryChannels => softmax_rows(&scores),
                QueryAxis::ClipTokens => softmax_rows(&scores.transpose2()).transpose2(),
            })
        })
        .collect()
}
