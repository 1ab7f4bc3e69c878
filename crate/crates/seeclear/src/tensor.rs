//! Minimal dense-tensor arithmetic and the attention primitives the rest of
//! the crate builds on. Everything here is pure: same inputs, bit-identical
//! outputs, no shared mutable state.

use crate::error::{Result, SeeClearError};
use crate::rng::CounterRng;
use crate::Scalar;

/// Row-major dense tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<S> {
    shape: Vec<usize>,
    data: Vec<S>,
}

impl<S: Scalar> Tensor<S> {
    pub fn zeros(shape: &[usize]) -> Self {
        let n = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            data: vec![S::zero(); n],
        }
    }

    pub fn filled(shape: &[usize], v: S) -> Self {
        let n = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            data: vec![v; n],
        }
    }

    pub fn from_vec(shape: &[usize], data: Vec<S>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(SeeClearError::dim(format!(
                "shape {:?} wants {} elements, got {}",
                shape,
                n,
                data.len()
            )));
        }
        Ok(Tensor {
            shape: shape.to_vec(),
            data,
        })
    }

    pub fn from_fn(shape: &[usize], mut f: impl FnMut(&[usize]) -> S) -> Self {
        let n: usize = shape.iter().product();
        let mut data = Vec::with_capacity(n);
        let mut idx = vec![0usize; shape.len()];
        for _ in 0..n {
            data.push(f(&idx));
            for ax in (0..shape.len()).rev() {
                idx[ax] += 1;
                if idx[ax] < shape[ax] {
                    break;
                }
                idx[ax] = 0;
            }
        }
        Tensor {
            shape: shape.to_vec(),
            data,
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[S] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [S] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<S> {
        self.data
    }

    pub fn reshape(mut self, shape: &[usize]) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != self.data.len() {
            return Err(SeeClearError::dim(format!(
                "cannot reshape {} elements into {:?}",
                self.data.len(),
                shape
            )));
        }
        self.shape = shape.to_vec();
        Ok(self)
    }

    #[inline]
    pub fn at2(&self, i: usize, j: usize) -> S {
        debug_assert_eq!(self.shape.len(), 2);
        self.data[i * self.shape[1] + j]
    }

    #[inline]
    pub fn set2(&mut self, i: usize, j: usize, v: S) {
        debug_assert_eq!(self.shape.len(), 2);
        self.data[i * self.shape[1] + j] = v;
    }

    #[inline]
    pub fn at3(&self, c: usize, i: usize, j: usize) -> S {
        debug_assert_eq!(self.shape.len(), 3);
        self.data[(c * self.shape[1] + i) * self.shape[2] + j]
    }

    #[inline]
    pub fn set3(&mut self, c: usize, i: usize, j: usize, v: S) {
        debug_assert_eq!(self.shape.len(), 3);
        self.data[(c * self.shape[1] + i) * self.shape[2] + j] = v;
    }

    #[inline]
    pub fn at4(&self, f: usize, c: usize, i: usize, j: usize) -> S {
        debug_assert_eq!(self.shape.len(), 4);
        self.data[((f * self.shape[1] + c) * self.shape[2] + i) * self.shape[3] + j]
    }

    #[inline]
    pub fn set4(&mut self, f: usize, c: usize, i: usize, j: usize, v: S) {
        debug_assert_eq!(self.shape.len(), 4);
        self.data[((f * self.shape[1] + c) * self.shape[2] + i) * self.shape[3] + j] = v;
    }

    pub fn map(&self, f: impl Fn(S) -> S) -> Self {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(S, S) -> S) -> Result<Self> {
        if self.shape != other.shape {
            return Err(SeeClearError::dim(format!(
                "zip_map shapes {:?} vs {:?}",
                self.shape, other.shape
            )));
        }
        Ok(Tensor {
            shape: self.shape.clone(),
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn scale(&self, k: S) -> Self {
        self.map(|v| v * k)
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn max_abs_diff(&self, other: &Self) -> S {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| (a - b).abs())
            .fold(S::zero(), |m, d| if d > m { d } else { m })
    }

    /// 2D transpose.
    pub fn transpose2(&self) -> Self {
        assert_eq!(self.shape.len(), 2);
        let (r, c) = (self.shape[0], self.shape[1]);
        let mut out = Tensor::zeros(&[c, r]);
        for i in 0..r {
            for j in 0..c {
                out.set2(j, i, self.at2(i, j));
            }
        }
        out
    }

    /// Identity matrix.
    pub fn eye(n: usize) -> Self {
        let mut t = Tensor::zeros(&[n, n]);
        for i in 0..n {
            t.set2(i, i, S::one());
        }
        t
    }

    /// Seeded uniform values in `[lo, hi]`.
    pub fn seeded_uniform(shape: &[usize], lo: S, hi: S, rng: &mut CounterRng) -> Self {
        let n: usize = shape.iter().product();
        let data = (0..n)
            .map(|_| lo + (hi - lo) * S::from_f64c(rng.next_f64()))
            .collect();
        Tensor {
            shape: shape.to_vec(),
            data,
        }
    }

    /// Copy a contiguous leading-axis slab, e.g. one frame of an `(m, ...)` tensor.
    pub fn slab(&self, index: usize) -> Result<Self> {
        if self.shape.is_empty() || index >= self.shape[0] {
            return Err(SeeClearError::dim("slab index out of range".to_string()));
        }
        let inner: usize = self.shape[1..].iter().product();
        let data = self.data[index * inner..(index + 1) * inner].to_vec();
        Tensor::from_vec(&self.shape[1..], data)
    }

    /// Stack tensors of identical shape along a new leading axis.
    pub fn stack(parts: &[Tensor<S>]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| SeeClearError::dim("stack of zero tensors".to_string()))?;
        let mut shape = vec![parts.len()];
        shape.extend_from_slice(first.shape());
        let mut data = Vec::with_capacity(first.len() * parts.len());
        for p in parts {
            if p.shape() != first.shape() {
                return Err(SeeClearError::dim("stack shape mismatch".to_string()));
            }
            data.extend_from_slice(p.data());
        }
        Tensor::from_vec(&shape, data)
    }
}

/// Standard matrix product of two 2D tensors.
pub fn matmul<S: Scalar>(a: &Tensor<S>, b: &Tensor<S>) -> Result<Tensor<S>> {
    if a.shape().len() != 2 || b.shape().len() != 2 {
        return Err(SeeClearError::dim("matmul expects 2D tensors".to_string()));
    }
    let (n, k) = (a.shape()[0], a.shape()[1]);
    let (k2, m) = (b.shape()[0], b.shape()[1]);
    if k != k2 {
        return Err(SeeClearError::dim(format!(
            "matmul inner dims {} vs {}",
            k, k2
        )));
    }
    let mut out = Tensor::zeros(&[n, m]);
    for i in 0..n {
        for p in 0..k {
            let aip = a.at2(i, p);
            if aip == S::zero() {
                continue;
            }
            for j in 0..m {
                let v = out.at2(i, j) + aip * b.at2(p, j);
                out.set2(i, j, v);
            }
        }
    }
    Ok(out)
}

/// Row-wise softmax with the max-shift trick, so any finite input is safe.
pub fn softmax_rows<S: Scalar>(m: &Tensor<S>) -> Tensor<S> {
    assert_eq!(m.shape().len(), 2);
    let (r, c) = (m.shape()[0], m.shape()[1]);
    let mut out = Tensor::zeros(&[r, c]);
    for i in 0..r {
        let mut mx = m.at2(i, 0);
        for j in 1..c {
            if m.at2(i, j) > mx {
                mx = m.at2(i, j);
            }
        }
        let mut sum = S::zero();
        for j in 0..c {
            let e = (m.at2(i, j) - mx).exp();
            out.set2(i, j, e);
            sum += e;
        }
        for j in 0..c {
            let v = out.at2(i, j) / sum;
            out.set2(i, j, v);
        }
    }
    out
}

/// Projection weights for one attention block. All three projections share
/// the output dimension `d * heads`.
#[derive(Debug, Clone)]
pub struct AttentionParams<S> {
    pub w_q: Tensor<S>,
    pub w_k: Tensor<S>,
    pub w_v: Tensor<S>,
    pub d: usize,
    pub heads: usize,
}

impl<S: Scalar> AttentionParams<S> {
    /// Seeded init, uniform in `[-1/sqrt(d_in), 1/sqrt(d_in)]`. The crate
    /// never trains, so init only needs determinism.
    pub fn seeded(d_in_q: usize, d_in_kv: usize, d: usize, heads: usize, rng: &mut CounterRng) -> Self {
        assert!(d > 0 && heads > 0);
        let dh = d * heads;
        let bq = S::one() / S::from_f64c((d_in_q as f64).sqrt());
        let bk = S::one() / S::from_f64c((d_in_kv as f64).sqrt());
        AttentionParams {
            w_q: Tensor::seeded_uniform(&[d_in_q, dh], -bq, bq, rng),
            w_k: Tensor::seeded_uniform(&[d_in_kv, dh], -bk, bk, rng),
            w_v: Tensor::seeded_uniform(&[d_in_kv, dh], -bk, bk, rng),
            d,
            heads,
        }
    }

    /// Identity projections for oracle-friendly tests. `d_in` must equal `d`,
    /// single head.
    pub fn identity(d: usize) -> Self {
        AttentionParams {
            w_q: Tensor::eye(d),
            w_k: Tensor::eye(d),
            w_v: Tensor::eye(d),
            d,
            heads: 1,
        }
    }

    /// All-zero projections; attention output collapses to zero.
    pub fn zeros(d_in_q: usize, d_in_kv: usize, d: usize, heads: usize) -> Self {
        AttentionParams {
            w_q: Tensor::zeros(&[d_in_q, d * heads]),
            w_k: Tensor::zeros(&[d_in_kv, d * heads]),
            w_v: Tensor::zeros(&[d_in_kv, d * heads]),
            d,
            heads,
        }
    }

    pub fn out_dim(&self) -> usize {
        self.d * self.heads
    }
}

fn head_slice<S: Scalar>(m: &Tensor<S>, head: usize, d: usize) -> Tensor<S> {
    let (r, _) = (m.shape()[0], m.shape()[1]);
    let mut out = Tensor::zeros(&[r, d]);
    for i in 0..r {
        for j in 0..d {
            out.set2(i, j, m.at2(i, head * d + j));
        }
    }
    out
}

/// `SoftMax(Q K^T / sqrt(d)) V` with Q projected from `queries` and K, V from
/// `keys_values`. Multi-head output is the concatenation of independent heads.
pub fn cross_attention<S: Scalar>(
    queries: &Tensor<S>,
    keys_values: &Tensor<S>,
    params: &AttentionParams<S>,
) -> Result<Tensor<S>> {
    let q = matmul(queries, &params.w_q)?;
    let k = matmul(keys_values, &params.w_k)?;
    let v = matmul(keys_values, &params.w_v)?;
    let n = q.shape()[0];
    let dh = params.out_dim();
    let scale = S::one() / S::from_f64c((params.d as f64).sqrt());
    let mut out = Tensor::zeros(&[n, dh]);
    for h in 0..params.heads {
        let qh = head_slice(&q, h, params.d);
        let kh = head_slice(&k, h, params.d);
        let vh = head_slice(&v, h, params.d);
        let scores = matmul(&qh, &kh.transpose2())?.scale(scale);
        let attn = softmax_rows(&scores);
        let oh = matmul(&attn, &vh)?;
        for i in 0..n {
            for j in 0..params.d {
                out.set2(i, h * params.d + j, oh.at2(i, j));
            }
        }
    }
    Ok(out)
}

pub fn self_attention<S: Scalar>(x: &Tensor<S>, params: &AttentionParams<S>) -> Result<Tensor<S>> {
    cross_attention(x, x, params)
}

/// Self-attention over the joint token sequence of all `m` frames, split back
/// per frame. No temporal positional encoding, so the op is frame-permutation
/// equivariant.
pub fn multi_frame_self_attention<S: Scalar>(
    frames: &Tensor<S>,
    params: &AttentionParams<S>,
) -> Result<Tensor<S>> {
    if frames.shape().len() != 3 {
        return Err(SeeClearError::dim(
            "multi_frame_self_attention expects (m, tokens, d)".to_string(),
        ));
    }
    let (m, tokens, d_in) = (frames.shape()[0], frames.shape()[1], frames.shape()[2]);
    let flat = frames.clone().reshape(&[m * tokens, d_in])?;
    let out = self_attention(&flat, params)?;
    out.reshape(&[m, tokens, params.out_dim()])
}

fn reflect_index(i: isize, n: usize) -> usize {
    // Reflection without edge repetition: ... 2 1 0 1 2 ... n-2 n-1 n-2 ...
    let n = n as isize;
    let mut i = i;
    if n == 1 {
        return 0;
    }
    loop {
        if i < 0 {
            i = -i;
        } else if i >= n {
            i = 2 * (n - 1) - i;
        } else {
            return i as usize;
        }
    }
}

/// Reflect-pad a `(C, H, W)` feature map to dimensions divisible by `window`.
pub fn reflect_pad_to<S: Scalar>(feat: &Tensor<S>, multiple: usize) -> Tensor<S> {
    let (c, h, w) = (feat.shape()[0], feat.shape()[1], feat.shape()[2]);
    let hp = h.div_ceil(multiple) * multiple;
    let wp = w.div_ceil(multiple) * multiple;
    if hp == h && wp == w {
        return feat.clone();
    }
    let mut out = Tensor::zeros(&[c, hp, wp]);
    for ch in 0..c {
        for i in 0..hp {
            for j in 0..wp {
                let si = reflect_index(i as isize, h);
                let sj = reflect_index(j as isize, w);
                out.set3(ch, i, j, feat.at3(ch, si, sj));
            }
        }
    }
    out
}

/// Self-attention within non-overlapping `window x window` spatial tiles of a
/// `(C, H, W)` map. Tokens are window pixels, features are channels; output
/// channel count is `params.out_dim()`. Non-divisible extents are
/// reflect-padded and cropped back.
pub fn window_self_attention<S: Scalar>(
    feat: &Tensor<S>,
    window: usize,
    params: &AttentionParams<S>,
) -> Result<Tensor<S>> {
    if feat.shape().len() != 3 {
        return Err(SeeClearError::dim("window attention expects (C, H, W)".to_string()));
    }
    if window == 0 {
        return Err(SeeClearError::arg("window must be positive".to_string()));
    }
    let (h, w) = (feat.shape()[1], feat.shape()[2]);
    let padded = reflect_pad_to(feat, window);
    let (c, hp, wp) = (padded.shape()[0], padded.shape()[1], padded.shape()[2]);
    let dh = params.out_dim();
    let mut out = Tensor::zeros(&[dh, hp, wp]);
    let tokens = window * window;
    for wy in (0..hp).step_by(window) {
        for wx in (0..wp).step_by(window) {
            let mut block = Tensor::zeros(&[tokens, c]);
            for ti in 0..window {
                for tj in 0..window {
                    for ch in 0..c {
                        block.set2(ti * window + tj, ch, padded.at3(ch, wy + ti, wx + tj));
                    }
                }
            }
            let att = self_attention(&block, params)?;
            for ti in 0..window {
                for tj in 0..window {
                    for ch in 0..dh {
                        out.set3(ch, wy + ti, wx + tj, att.at2(ti * window + tj, ch));
                    }
                }
            }
        }
    }
    if hp != h || wp != w {
        let mut cropped = Tensor::zeros(&[dh, h, w]);
        for ch in 0..dh {
            for i in 0..h {
                for j in 0..w {
                    cropped.set3(ch, i, j, out.at3(ch, i, j));
                }
            }
        }
        return Ok(cropped);
    }
    Ok(out)
}

/// Self-attention treating channels as tokens and spatial positions as the
/// feature dimension. Similarity goes through `w_q`/`w_k` (input dim `H*W`);
/// values are the raw channel maps so the output keeps the `(C, H, W)` shape
/// as a convex mixture of channels.
pub fn channel_self_attention<S: Scalar>(
    feat: &Tensor<S>,
    params: &AttentionParams<S>,
) -> Result<Tensor<S>> {
    if feat.shape().len() != 3 {
        return Err(SeeClearError::dim("channel attention expects (C, H, W)".to_string()));
    }
    let (c, h, w) = (feat.shape()[0], feat.shape()[1], feat.shape()[2]);
    let tokens = feat.clone().reshape(&[c, h * w])?;
    let q = matmul(&tokens, &params.w_q)?;
    let k = matmul(&tokens, &params.w_k)?;
    let scale = S::one() / S::from_f64c((params.d as f64).sqrt());
    let scores = matmul(&q, &k.transpose2())?.scale(scale);
    let attn = softmax_rows(&scores);
    let mixed = matmul(&attn, &tokens)?;
    mixed.reshape(&[c, h, w])
}

/// 2D convolution with zero padding (same spatial size), `(C_out, C_in, kh, kw)`
/// weights, optional per-channel bias.
pub fn conv2d<S: Scalar>(
    input: &Tensor<S>,
    weight: &Tensor<S>,
    bias: Option<&[S]>,
) -> Result<Tensor<S>> {
    if input.shape().len() != 3 || weight.shape().len() != 4 {
        return Err(SeeClearError::dim("conv2d expects (C,H,W) and (Co,Ci,kh,kw)".to_string()));
    }
    let (ci, h, w) = (input.shape()[0], input.shape()[1], input.shape()[2]);
    let (co, ci2, kh, kw) = (
        weight.shape()[0],
        weight.shape()[1],
        weight.shape()[2],
        weight.shape()[3],
    );
    if ci != ci2 {
        return Err(SeeClearError::dim(format!(
            "conv2d channels {} vs {}",
            ci, ci2
        )));
    }
    let (ph, pw) = (kh / 2, kw / 2);
    let mut out = Tensor::zeros(&[co, h, w]);
    for oc in 0..co {
        let b = bias.map_or(S::zero(), |bs| bs[oc]);
        for i in 0..h {
            for j in 0..w {
                let mut acc = b;
                for ic in 0..ci {
                    for ki in 0..kh {
                        let si = i as isize + ki as isize - ph as isize;
                        if si < 0 || si >= h as isize {
                            continue;
                        }
                        for kj in 0..kw {
                            let sj = j as isize + kj as isize - pw as isize;
                            if sj < 0 || sj >= w as isize {
                                continue;
                            }
                            acc += input.at3(ic, si as usize, sj as usize)
                                * weight.at4(oc, ic, ki, kj);
                        }
                    }
                }
                out.set3(oc, i, j, acc);
            }
        }
    }
    Ok(out)
}

/// Nearest-neighbor resize of a `(C, H, W)` map.
pub fn nearest_resize<S: Scalar>(feat: &Tensor<S>, h: usize, w: usize) -> Tensor<S> {
    let (c, sh, sw) = (feat.shape()[0], feat.shape()[1], feat.shape()[2]);
    let mut out = Tensor::zeros(&[c, h, w]);
    for ch in 0..c {
        for i in 0..h {
            let si = (i * sh) / h;
            for j in 0..w {
                let sj = (j * sw) / w;
                out.set3(ch, i, j, feat.at3(ch, si, sj));
            }
        }
    }
    out
}

/// Average-pool a `(C, H, W)` map down to `(C, h, w)`; extents must divide.
pub fn avg_pool<S: Scalar>(feat: &Tensor<S>, h: usize, w: usize) -> Result<Tensor<S>> {
    let (c, sh, sw) = (feat.shape()[0], feat.shape()[1], feat.shape()[2]);
    if sh % h != 0 || sw % w != 0 {
        return Err(SeeClearError::dim("avg_pool extents must divide".to_string()));
    }
    let (fy, fx) = (sh / h, sw / w);
    let norm = S::from_f64c((fy * fx) as f64);
    let mut out = Tensor::zeros(&[c, h, w]);
    for ch in 0..c {
        for i in 0..h {
            for j in 0..w {
                let mut acc = S::zero();
                for di in 0..fy {
                    for dj in 0..fx {
                        acc += feat.at3(ch, i * fy + di, j * fx + dj);
                    }
                }
                out.set3(ch, i, j, acc / norm);
            }
        }
    }
    Ok(out)
}
