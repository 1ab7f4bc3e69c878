//! Instance-centric alignment: spatial modulation from segmentation features,
//! semantic embedding via cross-attention, clip-wise token fusion, and gated
//! multi-frame self-attention.
//!
//! All projections are bias-free, so every block has an exact zero-input /
//! zero-weight behaviour the tests can pin down: modulation with zero
//! (gamma, beta) is the identity, and the alignment gate of orthogonal
//! semantics is the zero map fed through a well-defined softmax.

use crate::error::{Result, SeeClearError};
use crate::rng::CounterRng;
use crate::tensor::{
    conv2d, cross_attention, multi_frame_self_attention, nearest_resize, self_attention,
    AttentionParams, Tensor,
};
use crate::Scalar;

/// Spatial scale/bias pair for feature modulation.
#[derive(Debug, Clone)]
pub struct ModulationPair<S> {
    pub gamma: Tensor<S>,
    pub beta: Tensor<S>,
}

/// Bias-free conv -> ReLU -> conv weights producing `2 * channels` maps that
/// split into (gamma, beta).
#[derive(Debug, Clone)]
pub struct ModulationNet<S> {
    w1: Tensor<S>,
    w2: Tensor<S>,
}

impl<S: Scalar> ModulationNet<S> {
    /// Seeded weights mapping `d_seg` input channels to `2 * channels`.
    pub fn seeded(d_seg: usize, channels: usize, hidden: usize, rng: &mut CounterRng) -> Self {
        let b1 = S::from_f64c(1.0 / (d_seg as f64 * 9.0).sqrt());
        let b2 = S::from_f64c(1.0 / (hidden as f64 * 9.0).sqrt());
        ModulationNet {
            w1: Tensor::seeded_uniform(&[hidden, d_seg, 3, 3], -b1, b1, rng),
            w2: Tensor::seeded_uniform(&[2 * channels, hidden, 3, 3], -b2, b2, rng),
        }
    }

    /// All-zero weights; produces the identity modulation.
    pub fn zeros(d_seg: usize, channels: usize, hidden: usize) -> Self {
        ModulationNet {
            w1: Tensor::zeros(&[hidden, d_seg, 3, 3]),
            w2: Tensor::zeros(&[2 * channels, hidden, 3, 3]),
        }
    }
}

/// conv -> ReLU -> conv over segmentation features (nearest-resized to the
/// target spatial dims), split evenly along channels into (gamma, beta).
pub fn modulation_pairs<S: Scalar>(
    seg: &Tensor<S>,
    net: &ModulationNet<S>,
    h: usize,
    w: usize,
) -> Result<ModulationPair<S>> {
    if seg.shape().len() != 3 {
        return Err(SeeClearError::dim("modulation_pairs expects (d_p, h, w) features"));
    }
    let resized = nearest_resize(seg, h, w);
    let hidden = conv2d(&resized, &net.w1, None)?.map(|v| v.max(S::zero()));
    let both = conv2d(&hidden, &net.w2, None)?;
    let c2 = both.shape()[0];
    let c = c2 / 2;
    let mut gamma = Tensor::zeros(&[c, h, w]);
    let mut beta = Tensor::zeros(&[c, h, w]);
    for ch in 0..c {
        for i in 0..h {
            for j in 0..w {
                gamma.set3(ch, i, j, both.at3(ch, i, j));
                beta.set3(ch, i, j, both.at3(c + ch, i, j));
            }
        }
    }
    Ok(ModulationPair { gamma, beta })
}

/// Residual spatial modulation `F = (f ⊙ gamma + beta) + f`.
pub fn modulate<S: Scalar>(f: &Tensor<S>, pair: &ModulationPair<S>) -> Result<Tensor<S>> {
    if f.shape() != pair.gamma.shape() || f.shape() != pair.beta.shape() {
        return Err(SeeClearError::dim(format!(
            "modulate shapes differ: {:?} vs {:?}",
            f.shape(),
            pair.gamma.shape()
        )));
    }
    let scaled = f.zip_map(&pair.gamma, |x, g| x * g)?;
    scaled.add(&pair.beta)?.add(f)
}

/// Embed per-frame semantic tokens into a `(C, H, W)` feature map: queries
/// are pixels (feature dim = channels), keys/values are the tokens. Output
/// channel count is `params.out_dim()`.
pub fn embed_semantics<S: Scalar>(
    feat: &Tensor<S>,
    o_tokens: &Tensor<S>,
    params: &AttentionParams<S>,
) -> Result<Tensor<S>> {
    if feat.shape().len() != 3 {
        return Err(SeeClearError::dim("embed_semantics expects (C, H, W)"));
    }
    let (c, h, w) = (feat.shape()[0], feat.shape()[1], feat.shape()[2]);
    let mut pixels = Tensor::zeros(&[h * w, c]);
    for i in 0..h {
        for j in 0..w {
            for ch in 0..c {
                pixels.set2(i * w + j, ch, feat.at3(ch, i, j));
            }
        }
    }
    let att = cross_attention(&pixels, o_tokens, params)?;
    let dh = params.out_dim();
    let mut out = Tensor::zeros(&[dh, h, w]);
    for i in 0..h {
        for j in 0..w {
            for ch in 0..dh {
                out.set3(ch, i, j, att.at2(i * w + j, ch));
            }
        }
    }
    Ok(out)
}

/// Weights of the one-layer token encoder/decoder that fuses per-frame
/// tokens into clip-wise tokens.
#[derive(Debug, Clone)]
pub struct ClipTokenNet<S> {
    pub encoder: AttentionParams<S>,
    pub decoder: AttentionParams<S>,
}

impl<S: Scalar> ClipTokenNet<S> {
    pub fn seeded(d: usize, heads: usize, rng: &mut CounterRng) -> Self {
        let dh = d / heads;
        ClipTokenNet {
            encoder: AttentionParams::seeded(d, d, dh, heads, rng),
            decoder: AttentionParams::seeded(d, dh * heads, dh, heads, rng),
        }
    }

    /// Identity projections, single head; `m = 1` becomes a pure function of
    /// that frame's tokens.
    pub fn identity(d: usize) -> Self {
        ClipTokenNet {
            encoder: AttentionParams::identity(d),
            decoder: AttentionParams::identity(d),
        }
    }
}

/// Fuse `(m, k, d)` per-frame tokens into clip-wise tokens `(k, d_out)`:
/// one self-attention encoder layer over the concatenated tokens, one
/// cross-attention decoder layer with `init` as queries. No positional
/// encoding, so the result is invariant to frame order.
pub fn clip_tokens<S: Scalar>(
    per_frame: &Tensor<S>,
    init: &Tensor<S>,
    net: &ClipTokenNet<S>,
) -> Result<Tensor<S>> {
    if per_frame.shape().len() != 3 {
        return Err(SeeClearError::dim("clip_tokens expects (m, k, d)"));
    }
    let (m, k, d) = (
        per_frame.shape()[0],
        per_frame.shape()[1],
        per_frame.shape()[2],
    );
    if m < 1 {
        return Err(SeeClearError::arg("clip needs at least one frame"));
    }
    let flat = per_frame.clone().reshape(&[m * k, d])?;
    let encoded = self_attention(&flat, &net.encoder)?;
    cross_attention(init, &encoded, &net.decoder)
}

/// How the per-pixel alignment activation is pooled over clip tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateMode {
    /// Class-activation style: strongest token similarity per pixel.
    RowMax,
    /// Mean similarity over tokens.
    Mean,
}

/// Gate `(m, tokens, d)` features by their similarity to clip tokens, then
/// run multi-frame self-attention over the gated features.
///
/// The activation `A = F O_c^T` scores every pixel against every clip token;
/// pooling it per pixel (max or mean over tokens) yields one scalar gate that
/// multiplies the feature row before the joint attention.
pub fn align<S: Scalar>(
    o_c: &Tensor<S>,
    f_hat: &Tensor<S>,
    mode: GateMode,
    params: &AttentionParams<S>,
) -> Result<Tensor<S>> {
    if f_hat.shape().len() != 3 {
        return Err(SeeClearError::dim("align expects (m, tokens, d)"));
    }
    let (m, tokens, d) = (f_hat.shape()[0], f_hat.shape()[1], f_hat.shape()[2]);
    if o_c.shape()[1] != d {
        return Err(SeeClearError::dim(format!(
            "clip-token dim {} vs feature dim {}",
            o_c.shape()[1],
            d
        )));
    }
    let k = o_c.shape()[0];
    let mut gated = Tensor::zeros(&[m, tokens, d]);
    for fr in 0..m {
        for px in 0..tokens {
            let row = &f_hat.data()[(fr * tokens + px) * d..(fr * tokens + px + 1) * d];
            let mut gate = match mode {
                GateMode::RowMax => S::neg_infinity(),
                GateMode::Mean => S::zero(),
            };
            for ti in 0..k {
                let mut dot = S::zero();
                for j in 0..d {
                    dot += row[j] * o_c.at2(ti, j);
                }
                match mode {
                    GateMode::RowMax => gate = gate.max(dot),
                    GateMode::Mean => gate += dot / S::from_f64c(k as f64),
                }
            }
            for j in 0..d {
                gated.data_mut()[(fr * tokens + px) * d + j] = row[j] * gate;
            }
        }
    }
    multi_frame_self_attention(&gated, params)
}
