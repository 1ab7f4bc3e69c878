//! Deterministic stand-in for a pretrained open-vocabulary semantic
//! distiller: per-frame image/text features, segmentation features, and top-k
//! token selection.
//!
//! The projections are seeded hashes and linear maps of pooled patches; no
//! real segmentation happens here. The interface — tokens, segmentation
//! features, similarity ranking — is what the rest of the pipeline consumes,
//! so it can be exercised end to end and a real model swapped in through the
//! tensor-file import path.

use crate::error::{Result, SeeClearError};
use crate::rng::KeyedRng;
use crate::tensor::{avg_pool, matmul, Tensor};
use crate::Scalar;

/// Pooling stride of the stub distiller: one image token per `STRIDE x
/// STRIDE` patch.
pub const STRIDE: usize = 8;

/// Default retained token count.
pub const DEFAULT_K: usize = 8;

/// Default token dimension.
pub const DEFAULT_D: usize = 32;

/// Class-name list the text branch embeds.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    entries: Vec<String>,
}

impl Vocabulary {
    pub fn new(entries: Vec<String>) -> Result<Self> {
        if entries.is_empty() {
            return Err(SeeClearError::arg("vocabulary must be non-empty"));
        }
        let mut seen = std::collections::HashSet::new();
        for e in &entries {
            if !seen.insert(e.clone()) {
                return Err(SeeClearError::arg(format!("duplicate vocabulary entry {e:?}")));
            }
        }
        Ok(Vocabulary { entries })
    }

    /// A small default vocabulary for demos and tests.
    pub fn default_classes() -> Self {
        Vocabulary::new(
            ["sky", "building", "person", "car", "tree", "road", "water", "texture"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
        )
        .expect("static vocabulary is valid")
    }

    pub fn entries(&self) -> &[String] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Per-clip semantic conditioning set.
#[derive(Debug, Clone)]
pub struct SemanticSet<S> {
    /// Per-frame selected tokens `O_i`, `(m, k, d)`.
    pub o_tokens: Tensor<S>,
    /// Per-frame segmentation features `P_i`, `(m, d_p, h, w)`.
    pub seg_features: Tensor<S>,
    /// Clip-wise fused tokens `O_c`, `(k, d)`.
    pub clip_tokens: Tensor<S>,
    /// Seeded initial query tokens, `(k, d)`.
    pub init_tokens: Tensor<S>,
}

fn fnv1a(s: &str) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for b in s.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x1000_0000_01b3);
    }
    h
}

/// Stub distillation of one `(C, H, W)` frame against a vocabulary.
///
/// Text features hash each class name into a seeded stream; image tokens and
/// segmentation features are seeded linear projections of `STRIDE`-pooled
/// patches. Everything is a pure function of `(frame, vocab, seed)`.
pub fn distill<S: Scalar>(
    frame: &Tensor<S>,
    vocab: &Vocabulary,
    d: usize,
    seed: u64,
) -> Result<(Tensor<S>, Tensor<S>, Tensor<S>)> {
    if vocab.is_empty() {
        return Err(SeeClearError::arg("vocabulary must be non-empty"));
    }
    if frame.shape().len() != 3 {
        return Err(SeeClearError::dim("distill expects a (C, H, W) frame"));
    }
    let (c, h, w) = (frame.shape()[0], frame.shape()[1], frame.shape()[2]);
    if h % STRIDE != 0 || w % STRIDE != 0 {
        return Err(SeeClearError::dim(format!(
            "frame {h}x{w} not divisible by distiller stride {STRIDE}"
        )));
    }
    let (gh, gw) = (h / STRIDE, w / STRIDE);
    let pooled = avg_pool(frame, gh, gw)?;
    let root = KeyedRng::new(seed);

    // Text branch: one seeded unit-scaled row per class, keyed by its hash.
    let nv = vocab.len();
    let mut f_txt = Tensor::zeros(&[nv, d]);
    for (vi, name) in vocab.entries().iter().enumerate() {
        let mut s = root.stream(&[1, fnv1a(name)]);
        for j in 0..d {
            f_txt.set2(vi, j, S::from_f64c(s.uniform(-1.0, 1.0)));
        }
    }

    // Image branch: pooled patches -> seeded linear projection to d dims.
    let mut img_in = Tensor::zeros(&[gh * gw, c]);
    for i in 0..gh {
        for j in 0..gw {
            for ch in 0..c {
                img_in.set2(i * gw + j, ch, pooled.at3(ch, i, j));
            }
        }
    }
    let mut s = root.stream(&[2]);
    let w_img = Tensor::<S>::seeded_uniform(&[c, d], S::from_f64c(-1.0), S::one(), &mut s);
    let f_img = matmul(&img_in, &w_img)?;

    // Segmentation branch: a second projection, laid out spatially.
    let mut s = root.stream(&[3]);
    let w_seg = Tensor::<S>::seeded_uniform(&[c, d], S::from_f64c(-1.0), S::one(), &mut s);
    let seg_flat = matmul(&img_in, &w_seg)?;
    let mut seg = Tensor::zeros(&[d, gh, gw]);
    for i in 0..gh {
        for j in 0..gw {
            for ch in 0..d {
                seg.set3(ch, i, j, seg_flat.at2(i * gw + j, ch));
            }
        }
    }
    Ok((f_img, f_txt, seg))
}

/// Cosine similarity with the zero-vector case defined as 0.
pub fn cosine<S: Scalar>(a: &[S], b: &[S]) -> S {
    let mut dot = S::zero();
    let mut na = S::zero();
    let mut nb = S::zero();
    for (&x, &y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == S::zero() || nb == S::zero() {
        return S::zero();
    }
    dot / (na.sqrt() * nb.sqrt())
}

/// Score each image token by its best cosine match over the text embeddings
/// and retain the `k` highest. Ties break towards the lower row index, so the
/// ordering is stable.
pub fn select_topk<S: Scalar>(
    f_img: &Tensor<S>,
    f_txt: &Tensor<S>,
    k: usize,
) -> Result<(Tensor<S>, Vec<usize>)> {
    let m = f_img.shape()[0];
    let d = f_img.shape()[1];
    if f_txt.shape()[1] != d {
        return Err(SeeClearError::dim("image/text token dims differ"));
    }
    if k < 1 || k > m {
        return Err(SeeClearError::arg(format!("k = {k} outside 1..={m}")));
    }
    let nv = f_txt.shape()[0];
    let mut scored: Vec<(S, usize)> = (0..m)
        .map(|i| {
            let row = &f_img.data()[i * d..(i + 1) * d];
            let best = (0..nv)
                .map(|v| cosine(row, &f_txt.data()[v * d..(v + 1) * d]))
                .fold(S::from_f64c(-2.0), S::max);
            (best, i)
        })
        .collect();
    scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    let indices: Vec<usize> = scored[..k].iter().map(|&(_, i)| i).collect();
    let mut o_i = Tensor::zeros(&[k, d]);
    for (r, &i) in indices.iter().enumerate() {
        for j in 0..d {
            o_i.set2(r, j, f_img.at2(i, j));
        }
    }
    Ok((o_i, indices))
}
