//! Orthonormal 2D DCT-II applied per non-overlapping patch.
//!
//! The orthonormal normalization keeps Parseval exact and isotropic noise
//! isotropic across the pixel/spectrum boundary. The implied Neumann
//! boundary semantics per patch match the heat-dissipation solution the blur
//! operator diagonalizes.

use crate::error::{Result, SeeClearError};
use crate::tensor::Tensor;
use crate::Scalar;

/// Per-patch DCT coefficients of a frame set, tiled in place.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchSpectrum<S> {
    pub patch: usize,
    /// Original spatial dims before reflect padding.
    pub orig_h: usize,
    pub orig_w: usize,
    /// `(frames, channels, Hp, Wp)` coefficient grid, Hp/Wp padded multiples
    /// of `patch`.
    pub coeffs: Tensor<S>,
}

impl<S: Scalar> PatchSpectrum<S> {
    pub fn zeros_like(other: &PatchSpectrum<S>) -> Self {
        PatchSpectrum {
            patch: other.patch,
            orig_h: other.orig_h,
            orig_w: other.orig_w,
            coeffs: Tensor::zeros(other.coeffs.shape()),
        }
    }

    pub fn same_layout(&self, other: &PatchSpectrum<S>) -> bool {
        self.patch == other.patch
            && self.orig_h == other.orig_h
            && self.orig_w == other.orig_w
            && self.coeffs.shape() == other.coeffs.shape()
    }
}

/// Orthonormal DCT-II basis matrix, `basis[k][n] = c_k cos(pi (2n+1) k / 2p)`.
pub fn dct_basis<S: Scalar>(p: usize) -> Tensor<S> {
    assert!(p > 0);
    let mut b = Tensor::zeros(&[p, p]);
    let pf = p as f64;
    for k in 0..p {
        let ck = if k == 0 {
            (1.0 / pf).sqrt()
        } else {
            (2.0 / pf).sqrt()
        };
        for n in 0..p {
            let v = ck * (std::f64::consts::PI * (2.0 * n as f64 + 1.0) * k as f64 / (2.0 * pf)).cos();
            b.set2(k, n, S::from_f64c(v));
        }
    }
    b
}

fn reflect_index(i: isize, n: usize) -> usize {
    let n = n as isize;
    if n == 1 {
        return 0;
    }
    let mut i = i;
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

/// Forward per-patch DCT. Non-divisible extents are reflect-padded.
pub fn dct2_patches<S: Scalar>(frame: &Tensor<S>, p: usize) -> Result<PatchSpectrum<S>> {
    if p == 0 {
        return Err(SeeClearError::arg("patch size must be positive".to_string()));
    }
    if frame.shape().len() != 4 {
        return Err(SeeClearError::dim("expected (frames, channels, H, W)".to_string()));
    }
    let (nf, nc, h, w) = (
        frame.shape()[0],
        frame.shape()[1],
        frame.shape()[2],
        frame.shape()[3],
    );
    let hp = h.div_ceil(p) * p;
    let wp = w.div_ceil(p) * p;
    let basis = dct_basis::<S>(p);
    let mut coeffs = Tensor::zeros(&[nf, nc, hp, wp]);
    let mut patch = vec![S::zero(); p * p];
    let mut tmp = vec![S::zero(); p * p];
    for f in 0..nf {
        for c in 0..nc {
            for py in (0..hp).step_by(p) {
                for px in (0..wp).step_by(p) {
                    for i in 0..p {
                        for j in 0..p {
                            let si = reflect_index((py + i) as isize, h);
                            let sj = reflect_index((px + j) as isize, w);
                            patch[i * p + j] = frame.at4(f, c, si, sj);
                        }
                    }
                    // U = B X B^T, row pass then column pass.
                    for i in 0..p {
                        for j in 0..p {
                            let mut acc = S::zero();
                            for n in 0..p {
                                acc += patch[i * p + n] * basis.at2(j, n);
                            }
                            tmp[i * p + j] = acc;
                        }
                    }
                    for j in 0..p {
                        for i in 0..p {
                            let mut acc = S::zero();
                            for n in 0..p {
                                acc += basis.at2(i, n) * tmp[n * p + j];
                            }
                            coeffs.set4(f, c, py + i, px + j, acc);
                        }
                    }
                }
            }
        }
    }
    Ok(PatchSpectrum {
        patch: p,
        orig_h: h,
        orig_w: w,
        coeffs,
    })
}

/// Inverse per-patch DCT, cropping away any reflect padding.
pub fn idct2_patches<S: Scalar>(spec: &PatchSpectrum<S>) -> Result<Tensor<S>> {
    let p = spec.patch;
    let (nf, nc, hp, wp) = (
        spec.coeffs.shape()[0],
        spec.coeffs.shape()[1],
        spec.coeffs.shape()[2],
        spec.coeffs.shape()[3],
    );
    let basis = dct_basis::<S>(p);
    let mut out = Tensor::zeros(&[nf, nc, spec.orig_h, spec.orig_w]);
    let mut tmp = vec![S::zero(); p * p];
    let mut pix = vec![S::zero(); p * p];
    for f in 0..nf {
        for c in 0..nc {
            for py in (0..hp).step_by(p) {
                for px in (0..wp).step_by(p) {
                    // X = B^T U B.
                    for i in 0..p {
                        for j in 0..p {
                            let mut acc = S::zero();
                            for n in 0..p {
                                acc += basis.at2(n, i) * spec.coeffs.at4(f, c, py + n, px + j);
                            }
                            tmp[i * p + j] = acc;
                        }
                    }
                    for i in 0..p {
                        for j in 0..p {
                            let mut acc = S::zero();
                            for n in 0..p {
                                acc += tmp[i * p + n] * basis.at2(n, j);
                            }
                            pix[i * p + j] = acc;
                        }
                    }
                    for i in 0..p {
                        if py + i >= spec.orig_h {
                            break;
                        }
                        for j in 0..p {
                            if px + j >= spec.orig_w {
                                break;
                            }
                            out.set4(f, c, py + i, px + j, pix[i * p + j]);
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}
