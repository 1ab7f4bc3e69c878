//! The pixel condenser: a toy attention U-Net over wavelet-packet bands plus
//! the full clip generation loop.
//!
//! The probabilistic chain runs on per-patch DCT coefficients, where the
//! blur/shift math is defined; the network sees wavelet-packet channels at LR
//! resolution and predicts residual bands on top of a bicubic anchor. With
//! all-zero weights the predicted residual is zero, so the generated clip is
//! exactly the bicubic upsampling — the residual form keeps the untrained
//! network harmless. An oracle-injection mode replaces the network with the
//! ground-truth residual to verify the loop's domain conversions are lossless.

use crate::category::{self, BankNet, MemoryBank, QueryAxis};
use crate::diffusion::{init_terminal_state, reverse_step};
use crate::error::{Result, SeeClearError};
use crate::incam::{
    self, clip_tokens, embed_semantics, modulate, modulation_pairs, ClipTokenNet, GateMode,
    ModulationNet,
};
use crate::resample::bicubic_up;
use crate::rng::{CounterRng, KeyedRng};
use crate::schedule::DiffusionSchedule;
use crate::semantics::{distill, select_topk, SemanticSet, Vocabulary};
use crate::spectral::{dct2_patches, dwt_pack, haar_down, haar_up, idct2_patches, idwt_pack};
use crate::tensor::{
    channel_self_attention, conv2d, matmul, window_self_attention, AttentionParams, Tensor,
};
use crate::Scalar;

/// Structural hyperparameters of the condenser.
#[derive(Debug, Clone)]
pub struct CondenserConfig {
    pub base_channels: usize,
    pub encoder_depth: usize,
    pub middle_blocks: usize,
    pub decoder_depth: usize,
    pub window: usize,
    /// Clip length `m`.
    pub clip_len: usize,
    /// Upscale factor `s`.
    pub upscale: usize,
    /// Wavelet-packet depth `k`; network I/O lives at `1/2^k` of HR scale.
    pub dwt_levels: usize,
    /// Retained semantic tokens per frame.
    pub sem_tokens: usize,
    /// Semantic token dimension.
    pub sem_dim: usize,
    pub gate: GateMode,
    pub query_axis: QueryAxis,
    pub bank_groups: usize,
    pub bank_channels: usize,
    pub bank_pool: usize,
}

impl Default for CondenserConfig {
    fn default() -> Self {
        CondenserConfig {
            base_channels: 16,
            encoder_depth: 4,
            middle_blocks: 3,
            decoder_depth: 4,
            window: 4,
            clip_len: 5,
            upscale: 4,
            dwt_levels: 2,
            sem_tokens: 8,
            sem_dim: 32,
            gate: GateMode::RowMax,
            query_axis: QueryAxis::MemoryChannels,
            bank_groups: 4,
            bank_channels: 8,
            bank_pool: 2,
        }
    }
}

impl CondenserConfig {
    pub fn validate(&self) -> Result<()> {
        if self.encoder_depth < 2 || self.decoder_depth != self.encoder_depth {
            return Err(SeeClearError::arg(
                "decoder depth must equal encoder depth (>= 2)",
            ));
        }
        if self.middle_blocks < 1 {
            return Err(SeeClearError::arg("need at least one middle block"));
        }
        if self.upscale != 1 << self.dwt_levels {
            return Err(SeeClearError::arg(format!(
                "upscale {} must equal 2^dwt_levels = {}",
                self.upscale,
                1 << self.dwt_levels
            )));
        }
        if self.window == 0 || self.base_channels == 0 || self.clip_len == 0 {
            return Err(SeeClearError::arg("window/channels/clip length must be positive"));
        }
        Ok(())
    }

    /// Wavelet-packet channel count of network I/O: `3 * 4^k`.
    pub fn band_channels(&self) -> usize {
        3 * 4usize.pow(self.dwt_levels as u32)
    }
}

/// Per-encoder-level high-frequency bands, one `[LH, HL, HH]` set per frame,
/// consumed in reverse order by the decoder.
#[derive(Debug, Clone)]
pub struct SkipStack<S> {
    pub levels: Vec<Vec<[Tensor<S>; 3]>>,
}

#[derive(Debug, Clone)]
struct EncoderLevel<S> {
    lr_inject: Tensor<S>,
    win: AttentionParams<S>,
    chan: AttentionParams<S>,
    conv: Tensor<S>,
}

/// Conditioning weights shared by the middle and decoder stages.
#[derive(Debug, Clone)]
struct IncamBlock<S> {
    modnet: ModulationNet<S>,
    embed: AttentionParams<S>,
    align: AttentionParams<S>,
    w_clip_proj: Tensor<S>,
}

#[derive(Debug, Clone)]
struct DecoderLevel<S> {
    conv: Tensor<S>,
    incam: IncamBlock<S>,
}

/// All network weights. Never trained; either seeded for exercising the
/// architecture or zeroed for the exact-bicubic residual baseline.
#[derive(Debug, Clone)]
pub struct CondenserWeights<S> {
    conv_in: Tensor<S>,
    enc: Vec<EncoderLevel<S>>,
    mid: Vec<IncamBlock<S>>,
    dec: Vec<DecoderLevel<S>>,
    conv_out: Tensor<S>,
    pub clip_net: ClipTokenNet<S>,
    pub init_tokens: Tensor<S>,
    pub bank_net: BankNet<S>,
}

fn conv_seeded<S: Scalar>(co: usize, ci: usize, rng: &mut CounterRng) -> Tensor<S> {
    let b = S::from_f64c(1.0 / (ci as f64 * 9.0).sqrt());
    Tensor::seeded_uniform(&[co, ci, 3, 3], -b, b, rng)
}

impl<S: Scalar> CondenserWeights<S> {
    /// Seeded weights for a network whose level extents are derived from the
    /// LR frame size `(lr_h, lr_w)`.
    pub fn seeded(cfg: &CondenserConfig, lr_h: usize, lr_w: usize, rng: &mut CounterRng) -> Result<Self> {
        cfg.validate()?;
        let base = cfg.base_channels;
        let heads = 2;
        let dh = base / heads;
        let conv_in = conv_seeded(base, 3 + cfg.band_channels(), rng);
        let mut enc = Vec::new();
        let (mut h, mut w) = (lr_h, lr_w);
        for _ in 0..cfg.encoder_depth {
            enc.push(EncoderLevel {
                lr_inject: conv_seeded(base, 3, rng),
                win: AttentionParams::seeded(base, base, dh, heads, rng),
                chan: AttentionParams::seeded(h * w, h * w, base, 1, rng),
                conv: conv_seeded(base, base, rng),
            });
            h /= 2;
            w /= 2;
        }
        let mk_incam = |rng: &mut CounterRng| IncamBlock {
            modnet: ModulationNet::seeded(cfg.sem_dim, base, base, rng),
            embed: AttentionParams::seeded(base, cfg.sem_dim, base, 1, rng),
            align: AttentionParams::seeded(base, base, base, 1, rng),
            w_clip_proj: {
                let b = S::from_f64c(1.0 / (cfg.sem_dim as f64).sqrt());
                Tensor::seeded_uniform(&[cfg.sem_dim, base], -b, b, rng)
            },
        };
        let mid = (0..cfg.middle_blocks).map(|_| mk_incam(rng)).collect();
        let dec = (0..cfg.decoder_depth)
            .map(|_| DecoderLevel {
                conv: conv_seeded(base, base, rng),
                incam: mk_incam(rng),
            })
            .collect();
        let conv_out = conv_seeded(cfg.band_channels(), base, rng);
        let clip_net = ClipTokenNet::seeded(cfg.sem_dim, 2, rng);
        let init_tokens = Tensor::seeded_uniform(
            &[cfg.sem_tokens, cfg.sem_dim],
            S::from_f64c(-1.0),
            S::one(),
            rng,
        );
        let bank_net = BankNet::seeded(base, cfg.bank_channels, base, cfg.sem_dim, cfg.bank_pool, rng);
        Ok(CondenserWeights {
            conv_in,
            enc,
            mid,
            dec,
            conv_out,
            clip_net,
            init_tokens,
            bank_net,
        })
    }

    /// All-zero weights: the predicted residual is identically zero.
    pub fn zeros(cfg: &CondenserConfig, lr_h: usize, lr_w: usize) -> Result<Self> {
        let mut rng = KeyedRng::new(0).stream(&[0]);
        let mut w = Self::seeded(cfg, lr_h, lr_w, &mut rng)?;
        let base = cfg.base_channels;
        w.conv_in = Tensor::zeros(w.conv_in.shape());
        for lvl in &mut w.enc {
            lvl.lr_inject = Tensor::zeros(lvl.lr_inject.shape());
            lvl.win = AttentionParams::zeros(base, base, base / 2, 2);
            lvl.conv = Tensor::zeros(lvl.conv.shape());
        }
        for blk in w.mid.iter_mut().chain(w.dec.iter_mut().map(|d| &mut d.incam)) {
            blk.modnet = ModulationNet::zeros(cfg.sem_dim, base, base);
            blk.embed = AttentionParams::zeros(base, cfg.sem_dim, base, 1);
            blk.align = AttentionParams::zeros(base, base, base, 1);
            blk.w_clip_proj = Tensor::zeros(blk.w_clip_proj.shape());
        }
        for lvl in &mut w.dec {
            lvl.conv = Tensor::zeros(lvl.conv.shape());
        }
        w.conv_out = Tensor::zeros(w.conv_out.shape());
        Ok(w)
    }
}

fn concat_channels<S: Scalar>(a: &Tensor<S>, b: &Tensor<S>) -> Result<Tensor<S>> {
    if a.shape()[1..] != b.shape()[1..] {
        return Err(SeeClearError::dim("concat spatial dims differ"));
    }
    let mut data = Vec::with_capacity(a.len() + b.len());
    data.extend_from_slice(a.data());
    data.extend_from_slice(b.data());
    Tensor::from_vec(
        &[a.shape()[0] + b.shape()[0], a.shape()[1], a.shape()[2]],
        data,
    )
}

fn relu<S: Scalar>(x: &Tensor<S>) -> Tensor<S> {
    x.map(|v| v.max(S::zero()))
}

// Shrink-only RMS rescale: untrained residual stacks amplify magnitudes
// multiplicatively across blocks and diffusion steps, so each block's output
// is rescaled to unit RMS when it exceeds it. Never amplifies, so zero maps
// stay zero and small signals pass through linearly.
fn bound_scale<S: Scalar>(x: &Tensor<S>) -> Tensor<S> {
    let ms = x.data().iter().map(|&v| v * v).sum::<S>() / S::from_f64c(x.len() as f64);
    let rms = ms.sqrt();
    if rms > S::one() {
        x.scale(S::one() / rms)
    } else {
        x.clone()
    }
}

fn mean_frames<S: Scalar>(frames: &[Tensor<S>]) -> Result<Tensor<S>> {
    let mut acc = frames[0].clone();
    for f in &frames[1..] {
        acc = acc.add(f)?;
    }
    Ok(acc.scale(S::one() / S::from_f64c(frames.len() as f64)))
}

/// Gated multi-frame self-attention over non-overlapping spatial tiles: each
/// tile's pixels across all frames form one joint token set, which bounds the
/// attention cost at fine scales.
fn align_windowed<S: Scalar>(
    o_c_proj: &Tensor<S>,
    feats: &[Tensor<S>],
    window: usize,
    gate: GateMode,
    params: &AttentionParams<S>,
) -> Result<Vec<Tensor<S>>> {
    let m = feats.len();
    let (c, h, w) = (
        feats[0].shape()[0],
        feats[0].shape()[1],
        feats[0].shape()[2],
    );
    let win = window.min(h).min(w);
    if h % win != 0 || w % win != 0 {
        return Err(SeeClearError::dim(format!(
            "extent {h}x{w} not divisible by window {win}"
        )));
    }
    let tokens = win * win;
    let mut out: Vec<Tensor<S>> = (0..m).map(|_| Tensor::zeros(&[c, h, w])).collect();
    for wy in (0..h).step_by(win) {
        for wx in (0..w).step_by(win) {
            let mut tile = Tensor::zeros(&[m, tokens, c]);
            for (f, feat) in feats.iter().enumerate() {
                for ti in 0..win {
                    for tj in 0..win {
                        for ch in 0..c {
                            tile.set3(f, ti * win + tj, ch, feat.at3(ch, wy + ti, wx + tj));
                        }
                    }
                }
            }
            let aligned = incam::align(o_c_proj, &tile, gate, params)?;
            for (f, o) in out.iter_mut().enumerate() {
                for ti in 0..win {
                    for tj in 0..win {
                        for ch in 0..c {
                            o.set3(ch, wy + ti, wx + tj, aligned.at3(f, ti * win + tj, ch));
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

fn incam_stage<S: Scalar>(
    feats: &mut [Tensor<S>],
    blk: &IncamBlock<S>,
    sem: &SemanticSet<S>,
    cfg: &CondenserConfig,
) -> Result<()> {
    let (h, w) = (feats[0].shape()[1], feats[0].shape()[2]);
    let m = feats.len();
    for (f, feat) in feats.iter_mut().enumerate() {
        let seg = sem.seg_features.slab(f)?;
        let pair = modulation_pairs(&seg, &blk.modnet, h, w)?;
        *feat = modulate(feat, &pair)?;
        let o_i = sem.o_tokens.slab(f)?;
        let emb = embed_semantics(feat, &o_i, &blk.embed)?;
        *feat = feat.add(&emb)?;
    }
    let o_c_proj = matmul(&sem.clip_tokens, &blk.w_clip_proj)?;
    let aligned = align_windowed(&o_c_proj, feats, cfg.window, cfg.gate, &blk.align)?;
    for f in 0..m {
        feats[f] = bound_scale(&feats[f].add(&aligned[f])?);
    }
    Ok(())
}

/// Encoder: level 1 consumes the LR frame concatenated with the current
/// noisy bands; each level applies window attention, channel attention, and a
/// residual convolution, then splits off high-frequency bands to the skip
/// stack while the low-pass band continues down.
pub fn encode<S: Scalar>(
    lr: &[Tensor<S>],
    ut_bands: &[Tensor<S>],
    cfg: &CondenserConfig,
    w: &CondenserWeights<S>,
) -> Result<(Vec<Tensor<S>>, SkipStack<S>)> {
    if lr.len() != ut_bands.len() || lr.is_empty() {
        return Err(SeeClearError::dim("encoder frame counts differ"));
    }
    let m = lr.len();
    // LR low-pass pyramid feeding each level.
    let mut lr_pyr: Vec<Vec<Tensor<S>>> = vec![lr.to_vec()];
    for _ in 1..cfg.encoder_depth {
        let prev = lr_pyr.last().unwrap();
        let mut next = Vec::with_capacity(m);
        for f in prev {
            next.push(haar_down(f)?[0].clone());
        }
        lr_pyr.push(next);
    }
    let mut feats: Vec<Tensor<S>> = Vec::with_capacity(m);
    for f in 0..m {
        let stacked = concat_channels(&lr[f], &ut_bands[f])?;
        feats.push(conv2d(&stacked, &w.conv_in, None)?);
    }
    let mut skips: Vec<Vec<[Tensor<S>; 3]>> = Vec::new();
    for (li, level) in w.enc.iter().enumerate() {
        for (f, feat) in feats.iter_mut().enumerate() {
            let mut x = feat.add(&conv2d(&lr_pyr[li][f], &level.lr_inject, None)?)?;
            x = x.add(&window_self_attention(&x, cfg.window, &level.win)?)?;
            x = x.add(&channel_self_attention(&x, &level.chan)?)?;
            x = x.add(&conv2d(&relu(&x), &level.conv, None)?)?;
            *feat = bound_scale(&x);
        }
        if li + 1 < cfg.encoder_depth {
            let mut level_skips = Vec::with_capacity(m);
            for feat in feats.iter_mut() {
                let [ll, lh, hl, hh] = haar_down(feat)?;
                *feat = ll;
                level_skips.push([lh, hl, hh]);
            }
            skips.push(level_skips);
        }
    }
    Ok((feats, SkipStack { levels: skips }))
}

/// Middle stage: repeated instance-centric conditioning blocks at the
/// bottleneck scale.
pub fn middle<S: Scalar>(
    mut feats: Vec<Tensor<S>>,
    sem: &SemanticSet<S>,
    cfg: &CondenserConfig,
    w: &CondenserWeights<S>,
) -> Result<Vec<Tensor<S>>> {
    for blk in &w.mid {
        incam_stage(&mut feats, blk, sem, cfg)?;
    }
    Ok(feats)
}

/// Decoder: wavelet upsampling with skip bands, conditioning, and memory
/// queries per level; the final convolution emits residual wavelet-packet
/// bands that reconstruct to a pixel residual on top of the bicubic anchor.
///
/// Returns the per-frame HR pixel residual plus the per-level frame-mean
/// features used for the memory-bank update.
pub fn decode<S: Scalar>(
    mut feats: Vec<Tensor<S>>,
    skips: SkipStack<S>,
    bank: &MemoryBank<S>,
    sem: &SemanticSet<S>,
    cfg: &CondenserConfig,
    w: &CondenserWeights<S>,
) -> Result<(Vec<Tensor<S>>, Vec<Tensor<S>>)> {
    let m = feats.len();
    if skips.levels.len() != cfg.decoder_depth - 1 {
        return Err(SeeClearError::dim(format!(
            "skip stack holds {} levels, expected {}",
            skips.levels.len(),
            cfg.decoder_depth - 1
        )));
    }
    let mut remaining = skips.levels;
    let mut collected = Vec::with_capacity(cfg.decoder_depth);
    for (li, level) in w.dec.iter().enumerate() {
        if li > 0 {
            let level_skips = remaining.pop().ok_or_else(|| {
                SeeClearError::dim("skip stack underflow")
            })?;
            for (f, feat) in feats.iter_mut().enumerate() {
                let [lh, hl, hh] = level_skips[f].clone();
                *feat = haar_up(&[feat.clone(), lh, hl, hh])?;
            }
        }
        for feat in feats.iter_mut() {
            *feat = bound_scale(&feat.add(&conv2d(&relu(feat), &level.conv, None)?)?);
        }
        incam_stage(&mut feats, &level.incam, sem, cfg)?;
        for feat in feats.iter_mut() {
            *feat = bound_scale(&category::query(
                &sem.clip_tokens,
                bank,
                feat,
                &w.bank_net,
                cfg.query_axis,
            )?);
        }
        collected.push(mean_frames(&feats)?);
    }
    // Final projection to residual bands, reconstructed to HR pixels.
    let mut residuals = Vec::with_capacity(m);
    for feat in &feats {
        let bands = conv2d(feat, &w.conv_out, None)?;
        let (c, h, ww) = (bands.shape()[0], bands.shape()[1], bands.shape()[2]);
        let packed = bands.reshape(&[1, c, h, ww])?;
        let pixels = idwt_pack(&packed, cfg.dwt_levels)?;
        residuals.push(pixels.slab(0)?);
    }
    Ok((residuals, collected))
}

/// Distill per-frame semantics from the LR clip and fuse clip tokens.
pub fn build_semantics<S: Scalar>(
    lr: &[Tensor<S>],
    vocab: &Vocabulary,
    cfg: &CondenserConfig,
    w: &CondenserWeights<S>,
    seed: u64,
) -> Result<SemanticSet<S>> {
    let m = lr.len();
    let mut o_frames = Vec::with_capacity(m);
    let mut seg_frames = Vec::with_capacity(m);
    for frame in lr {
        let (f_img, f_txt, seg) = distill(frame, vocab, cfg.sem_dim, seed)?;
        let (o_i, _) = select_topk(&f_img, &f_txt, cfg.sem_tokens)?;
        o_frames.push(o_i);
        seg_frames.push(seg);
    }
    let o_tokens = Tensor::stack(&o_frames)?;
    let seg_features = Tensor::stack(&seg_frames)?;
    let fused = clip_tokens(&o_tokens, &w.init_tokens, &w.clip_net)?;
    Ok(SemanticSet {
        o_tokens,
        seg_features,
        clip_tokens: fused,
        init_tokens: w.init_tokens.clone(),
    })
}

/// Result of one clip generation.
#[derive(Debug, Clone)]
pub struct GenerateOutput<S> {
    /// SR frames, `(3, s*H, s*W)` each.
    pub frames: Vec<Tensor<S>>,
    /// Bank after the per-clip update (unchanged in oracle mode).
    pub bank: MemoryBank<S>,
    /// Number of bank updates performed; exactly one per clip in network
    /// mode, zero in oracle mode.
    pub bank_updates: usize,
}

fn stack_frames<S: Scalar>(frames: &[Tensor<S>]) -> Result<Tensor<S>> {
    Tensor::stack(frames)
}

/// Run the full reverse generation loop over one clip.
///
/// `oracle_hr`, when set, replaces the network's residual prediction with the
/// ground-truth residual routed through the same wavelet packing, so the
/// loop's pixel/DCT/DWT conversions are exercised and must be lossless.
pub fn generate_clip<S: Scalar>(
    lr: &[Tensor<S>],
    sched: &DiffusionSchedule<S>,
    cfg: &CondenserConfig,
    w: &CondenserWeights<S>,
    bank: &MemoryBank<S>,
    vocab: &Vocabulary,
    rng: &KeyedRng,
    oracle_hr: Option<&[Tensor<S>]>,
) -> Result<GenerateOutput<S>> {
    cfg.validate()?;
    if lr.is_empty() {
        return Err(SeeClearError::arg("clip must contain at least one frame"));
    }
    for f in lr {
        if f.shape().len() != 3 || f.shape()[0] != 3 {
            return Err(SeeClearError::dim("LR frames must be (3, H, W)"));
        }
    }
    let m = lr.len();
    let anchors: Vec<Tensor<S>> = lr
        .iter()
        .map(|f| bicubic_up(f, cfg.upscale))
        .collect::<Result<_>>()?;
    let anchor_stack = stack_frames(&anchors)?;
    let ul_spec = dct2_patches(&anchor_stack, sched.patch)?;
    let sem = build_semantics(lr, vocab, cfg, w, rng.split(&[11]).seed())?;

    // Oracle residual bands, computed once: ground truth routed through the
    // packet transform round trip.
    let oracle_estimate = match oracle_hr {
        Some(hr) => {
            if hr.len() != m {
                return Err(SeeClearError::dim("oracle HR clip length mismatch"));
            }
            let hr_stack = stack_frames(hr)?;
            let bands = dwt_pack(&hr_stack.sub(&anchor_stack)?, cfg.dwt_levels)?;
            Some(idwt_pack(&bands, cfg.dwt_levels)?.add(&anchor_stack)?)
        }
        None => None,
    };

    let mut state = init_terminal_state(&ul_spec, sched, rng);
    let mut out_bank = bank.clone();
    let mut bank_updates = 0usize;
    while state.t > 0 {
        let u0_hat_stack = match &oracle_estimate {
            Some(est) => est.clone(),
            None => {
                let u_pix = idct2_patches(&state.spec)?;
                let mut ut_bands = Vec::with_capacity(m);
                for f in 0..m {
                    let frame = u_pix.slab(f)?;
                    let (c, h, ww) = (frame.shape()[0], frame.shape()[1], frame.shape()[2]);
                    let packed = dwt_pack(&frame.reshape(&[1, c, h, ww])?, cfg.dwt_levels)?;
                    ut_bands.push(packed.slab(0)?);
                }
                let (feats, skips) = encode(lr, &ut_bands, cfg, w)?;
                let feats = middle(feats, &sem, cfg, w)?;
                let (residuals, multiscale) = decode(feats, skips, &out_bank, &sem, cfg, w)?;
                if state.t == 1 {
                    // Last denoising step: fold this clip into the memory.
                    out_bank = category::build_or_update(&out_bank, &multiscale, &w.bank_net)?;
                    bank_updates += 1;
                }
                let mut estimates = Vec::with_capacity(m);
                for (f, r) in residuals.iter().enumerate() {
                    estimates.push(anchors[f].add(r)?);
                }
                stack_frames(&estimates)?
            }
        };
        let u0_hat = dct2_patches(&u0_hat_stack, sched.patch)?;
        state = reverse_step(&state, &u0_hat, &ul_spec, sched, rng)?;
    }
    let pixels = idct2_patches(&state.spec)?;
    let frames: Vec<Tensor<S>> = (0..m).map(|f| pixels.slab(f)).collect::<Result<_>>()?;
    Ok(GenerateOutput {
        frames,
        bank: out_bank,
        bank_updates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::build_schedule;

    fn small_cfg() -> CondenserConfig {
        CondenserConfig {
            base_channels: 8,
            clip_len: 2,
            sem_tokens: 4,
            sem_dim: 16,
            bank_groups: 2,
            bank_channels: 4,
            ..CondenserConfig::default()
        }
    }

    fn lr_clip(seed: u64, m: usize, px: usize) -> Vec<Tensor<f64>> {
        (0..m)
            .map(|f| {
                let mut r = KeyedRng::new(seed).stream(&[1100, f as u64]);
                Tensor::seeded_uniform(&[3, px, px], 0.0, 1.0, &mut r)
            })
            .collect()
    }

    fn seeded_weights(cfg: &CondenserConfig, px: usize) -> CondenserWeights<f64> {
        let mut r = KeyedRng::new(3).stream(&[1101]);
        CondenserWeights::seeded(cfg, px, px, &mut r).unwrap()
    }

    fn sem_for(
        lr: &[Tensor<f64>],
        cfg: &CondenserConfig,
        w: &CondenserWeights<f64>,
    ) -> SemanticSet<f64> {
        build_semantics(lr, &Vocabulary::default_classes(), cfg, w, 5).unwrap()
    }

    fn ut_bands_for(lr: &[Tensor<f64>], cfg: &CondenserConfig) -> Vec<Tensor<f64>> {
        lr.iter()
            .map(|f| {
                let up = bicubic_up(f, cfg.upscale).unwrap();
                let (c, h, w) = (up.shape()[0], up.shape()[1], up.shape()[2]);
                dwt_pack(&up.reshape(&[1, c, h, w]).unwrap(), cfg.dwt_levels)
                    .unwrap()
                    .slab(0)
                    .unwrap()
            })
            .collect()
    }

    #[test]
    fn encoder_shape_trace_and_skip_count() {
        let cfg = small_cfg();
        let lr = lr_clip(1, 2, 64);
        let w = seeded_weights(&cfg, 64);
        let bands = ut_bands_for(&lr, &cfg);
        let (feats, skips) = encode(&lr, &bands, &cfg, &w).unwrap();
        assert_eq!(feats[0].shape(), &[8, 8, 8]);
        assert_eq!(skips.levels.len(), 3);
        assert_eq!(skips.levels[0][0][0].shape(), &[8, 32, 32]);
        assert_eq!(skips.levels[2][0][0].shape(), &[8, 8, 8]);
    }

    #[test]
    fn encoder_zero_input_zero_features() {
        let cfg = small_cfg();
        let w = seeded_weights(&cfg, 64);
        let lr = vec![Tensor::<f64>::zeros(&[3, 64, 64]); 2];
        let bands = vec![Tensor::<f64>::zeros(&[48, 64, 64]); 2];
        let (feats, skips) = encode(&lr, &bands, &cfg, &w).unwrap();
        for f in &feats {
            assert!(f.data().iter().all(|&v| v.abs() < 1e-14));
        }
        for level in &skips.levels {
            for frame in level {
                for band in frame {
                    assert!(band.data().iter().all(|&v| v.abs() < 1e-14));
                }
            }
        }
    }

    #[test]
    fn middle_preserves_shape_and_is_deterministic() {
        let cfg = small_cfg();
        let lr = lr_clip(2, 2, 64);
        let w = seeded_weights(&cfg, 64);
        let sem = sem_for(&lr, &cfg, &w);
        let bands = ut_bands_for(&lr, &cfg);
        let (feats, _) = encode(&lr, &bands, &cfg, &w).unwrap();
        let a = middle(feats.clone(), &sem, &cfg, &w).unwrap();
        let b = middle(feats.clone(), &sem, &cfg, &w).unwrap();
        assert_eq!(a[0].shape(), feats[0].shape());
        assert_eq!(a[0], b[0]);
        assert!(a.iter().all(|t| t.all_finite()));
    }

    #[test]
    fn decode_output_is_hr_scale_with_four_feature_levels() {
        let cfg = small_cfg();
        let lr = lr_clip(3, 2, 64);
        let w = seeded_weights(&cfg, 64);
        let sem = sem_for(&lr, &cfg, &w);
        let bank = MemoryBank::zeros(cfg.bank_groups, cfg.bank_channels, cfg.base_channels)
            .unwrap();
        let bands = ut_bands_for(&lr, &cfg);
        let (feats, skips) = encode(&lr, &bands, &cfg, &w).unwrap();
        let feats = middle(feats, &sem, &cfg, &w).unwrap();
        let (residuals, multiscale) = decode(feats, skips, &bank, &sem, &cfg, &w).unwrap();
        assert_eq!(residuals[0].shape(), &[3, 256, 256]);
        assert_eq!(multiscale.len(), 4);
        assert_eq!(multiscale[0].shape(), &[8, 8, 8]);
        assert_eq!(multiscale[3].shape(), &[8, 64, 64]);
    }

    #[test]
    fn skip_underflow_rejected() {
        let cfg = small_cfg();
        let lr = lr_clip(4, 1, 64);
        let w = seeded_weights(&cfg, 64);
        let sem = sem_for(&lr, &cfg, &w);
        let bank = MemoryBank::zeros(cfg.bank_groups, cfg.bank_channels, cfg.base_channels)
            .unwrap();
        let bands = ut_bands_for(&lr, &cfg);
        let (feats, mut skips) = encode(&lr, &bands, &cfg, &w).unwrap();
        skips.levels.pop();
        assert!(decode(feats, skips, &bank, &sem, &cfg, &w).is_err());
    }

    #[test]
    fn zero_weights_reproduce_bicubic_anchor() {
        let cfg = small_cfg();
        let lr = lr_clip(5, 2, 32);
        let w = CondenserWeights::zeros(&cfg, 32, 32).unwrap();
        let bank = MemoryBank::zeros(cfg.bank_groups, cfg.bank_channels, cfg.base_channels)
            .unwrap();
        let sched = build_schedule(15, 1.0, 2.0, 0.001, 0.999, 8).unwrap();
        let out = generate_clip(
            &lr,
            &sched,
            &cfg,
            &w,
            &bank,
            &Vocabulary::default_classes(),
            &KeyedRng::new(9),
            None,
        )
        .unwrap();
        for (f, frame) in out.frames.iter().enumerate() {
            let anchor = bicubic_up(&lr[f], cfg.upscale).unwrap();
            assert!(frame.max_abs_diff(&anchor) < 1e-9);
        }
        assert_eq!(out.bank_updates, 1);
    }

    #[test]
    fn generation_is_seed_deterministic() {
        let cfg = small_cfg();
        let lr = lr_clip(6, 2, 32);
        let w = seeded_weights(&cfg, 32);
        let bank = MemoryBank::zeros(cfg.bank_groups, cfg.bank_channels, cfg.base_channels)
            .unwrap();
        let sched = build_schedule(4, 1.0, 2.0, 0.001, 0.999, 8).unwrap();
        let run = || {
            generate_clip(
                &lr,
                &sched,
                &cfg,
                &w,
                &bank,
                &Vocabulary::default_classes(),
                &KeyedRng::new(10),
                None,
            )
            .unwrap()
        };
        let a = run();
        let b = run();
        assert!(a.frames.iter().all(|f| f.all_finite()), "non-finite output");
        for (x, y) in a.frames.iter().zip(&b.frames) {
            assert_eq!(x, y);
        }
    }

    #[test]
    fn oracle_injection_recovers_hr() {
        let cfg = small_cfg();
        let lr = lr_clip(7, 2, 16);
        // Smooth HR whose bicubic downsample is the LR is unnecessary; the
        // oracle bypasses the network entirely, so any HR works.
        let hr: Vec<Tensor<f64>> = (0..2)
            .map(|f| {
                Tensor::<f64>::from_fn(&[3, 64, 64], |idx| {
                    0.5 + 0.3
                        * (std::f64::consts::TAU
                            * (idx[1] as f64 + 2.0 * idx[2] as f64 + f as f64)
                            / 64.0)
                            .sin()
                })
            })
            .collect();
        let w = CondenserWeights::zeros(&cfg, 16, 16).unwrap();
        let bank = MemoryBank::zeros(cfg.bank_groups, cfg.bank_channels, cfg.base_channels)
            .unwrap();
        let sched = build_schedule(15, 0.0, 2.0, 0.001, 0.999, 8).unwrap();
        let out = generate_clip(
            &lr,
            &sched,
            &cfg,
            &w,
            &bank,
            &Vocabulary::default_classes(),
            &KeyedRng::new(11),
            Some(&hr),
        )
        .unwrap();
        for (f, frame) in out.frames.iter().enumerate() {
            assert!(
                frame.max_abs_diff(&hr[f]) < 1e-6,
                "frame {f}: {}",
                frame.max_abs_diff(&hr[f])
            );
        }
        assert_eq!(out.bank_updates, 0);
    }

    #[test]
    fn bank_updated_exactly_once_per_clip() {
        let cfg = small_cfg();
        let lr = lr_clip(8, 1, 32);
        let w = seeded_weights(&cfg, 32);
        let bank = MemoryBank::zeros(cfg.bank_groups, cfg.bank_channels, cfg.base_channels)
            .unwrap();
        let sched = build_schedule(3, 0.5, 2.0, 0.001, 0.999, 8).unwrap();
        let out = generate_clip(
            &lr,
            &sched,
            &cfg,
            &w,
            &bank,
            &Vocabulary::default_classes(),
            &KeyedRng::new(12),
            None,
        )
        .unwrap();
        assert_eq!(out.bank_updates, 1);
        assert!(!out.bank.is_zero());
    }

    #[test]
    fn config_invariants_enforced() {
        let mut cfg = CondenserConfig::default();
        cfg.upscale = 3;
        assert!(cfg.validate().is_err());
        let mut cfg = CondenserConfig::default();
        cfg.decoder_depth = 3;
        assert!(cfg.validate().is_err());
        assert!(CondenserConfig::default().validate().is_ok());
    }
}
