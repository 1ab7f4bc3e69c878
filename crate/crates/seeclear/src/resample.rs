//! Separable bicubic resampling (Keys kernel, a = -0.5) with kernel-width
//! antialiasing on downscale, matching the convention of common image
//! toolboxes so baseline numbers are comparable.

use crate::error::{Result, SeeClearError};
use crate::tensor::Tensor;
use crate::Scalar;

/// Keys cubic convolution kernel with a = -0.5.
pub fn cubic_kernel(x: f64) -> f64 {
    let a = -0.5;
    let x = x.abs();
    if x <= 1.0 {
        (a + 2.0) * x * x * x - (a + 3.0) * x * x + 1.0
    } else if x < 2.0 {
        a * x * x * x - 5.0 * a * x * x + 8.0 * a * x - 4.0 * a
    } else {
        0.0
    }
}

// Per-output-coordinate taps along one axis: (first source index, weights).
// When shrinking, the kernel is stretched by 1/scale so it low-passes before
// decimation (antialiasing).
fn axis_weights(n_in: usize, n_out: usize) -> Vec<(isize, Vec<f64>)> {
    let scale = n_out as f64 / n_in as f64;
    let (kscale, support) = if scale < 1.0 {
        (scale, 2.0 / scale)
    } else {
        (1.0, 2.0)
    };
    let mut rows = Vec::with_capacity(n_out);
    for i in 0..n_out {
        // Center of output pixel i in input coordinates.
        let u = (i as f64 + 0.5) / scale - 0.5;
        let lo = (u - support).floor() as isize;
        let hi = (u + support).ceil() as isize;
        let mut weights = Vec::with_capacity((hi - lo + 1) as usize);
        let mut sum = 0.0;
        for s in lo..=hi {
            let w = cubic_kernel((u - s as f64) * kscale) * kscale;
            weights.push(w);
            sum += w;
        }
        for w in &mut weights {
            *w /= sum;
        }
        rows.push((lo, weights));
    }
    rows
}

#[inline]
fn clamp_index(i: isize, n: usize) -> usize {
    i.clamp(0, n as isize - 1) as usize
}

/// Resize a `(C, H, W)` frame to `(C, out_h, out_w)`.
pub fn bicubic_resize<S: Scalar>(
    frame: &Tensor<S>,
    out_h: usize,
    out_w: usize,
) -> Result<Tensor<S>> {
    if frame.shape().len() != 3 {
        return Err(SeeClearError::dim("bicubic_resize expects (C, H, W)"));
    }
    if out_h == 0 || out_w == 0 {
        return Err(SeeClearError::arg("output extents must be positive"));
    }
    let (c, h, w) = (frame.shape()[0], frame.shape()[1], frame.shape()[2]);
    let row_taps = axis_weights(w, out_w);
    let col_taps = axis_weights(h, out_h);
    // Horizontal pass.
    let mut mid = Tensor::<S>::zeros(&[c, h, out_w]);
    for ch in 0..c {
        for i in 0..h {
            for (j, (lo, weights)) in row_taps.iter().enumerate() {
                let mut acc = 0.0;
                for (k, &wt) in weights.iter().enumerate() {
                    acc += wt * frame.at3(ch, i, clamp_index(lo + k as isize, w)).to_f64c();
                }
                mid.set3(ch, i, j, S::from_f64c(acc));
            }
        }
    }
    // Vertical pass.
    let mut out = Tensor::<S>::zeros(&[c, out_h, out_w]);
    for ch in 0..c {
        for (i, (lo, weights)) in col_taps.iter().enumerate() {
            for j in 0..out_w {
                let mut acc = 0.0;
                for (k, &wt) in weights.iter().enumerate() {
                    acc += wt * mid.at3(ch, clamp_index(lo + k as isize, h), j).to_f64c();
                }
                out.set3(ch, i, j, S::from_f64c(acc));
            }
        }
    }
    Ok(out)
}

/// Upscale by an integer factor.
pub fn bicubic_up<S: Scalar>(frame: &Tensor<S>, s: usize) -> Result<Tensor<S>> {
    let (h, w) = (frame.shape()[1], frame.shape()[2]);
    bicubic_resize(frame, h * s, w * s)
}

/// Downscale by an integer factor with antialiasing; extents must divide.
pub fn bicubic_down<S: Scalar>(frame: &Tensor<S>, s: usize) -> Result<Tensor<S>> {
    let (h, w) = (frame.shape()[1], frame.shape()[2]);
    if h % s != 0 || w % s != 0 {
        return Err(SeeClearError::dim(format!(
            "extents {h}x{w} not divisible by factor {s}"
        )));
    }
    bicubic_resize(frame, h / s, w / s)
}
