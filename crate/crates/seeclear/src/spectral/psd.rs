//! Radially averaged power spectral density of a single-channel frame.

use crate::error::{Result, SeeClearError};
use crate::tensor::Tensor;
use crate::Scalar;

/// Mean squared spectral magnitude per annular frequency bin.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdProfile {
    pub bins: Vec<f64>,
}

/// BT.601 luma of a `(3, H, W)` map.
pub fn luma<S: Scalar>(rgb: &Tensor<S>) -> Result<Tensor<S>> {
    if rgb.shape().len() != 3 || rgb.shape()[0] != 3 {
        return Err(SeeClearError::dim("luma expects (3, H, W)".to_string()));
    }
    let (h, w) = (rgb.shape()[1], rgb.shape()[2]);
    let (kr, kg, kb) = (
        S::from_f64c(0.299),
        S::from_f64c(0.587),
        S::from_f64c(0.114),
    );
    let mut out = Tensor::zeros(&[1, h, w]);
    for i in 0..h {
        for j in 0..w {
            let y = kr * rgb.at3(0, i, j) + kg * rgb.at3(1, i, j) + kb * rgb.at3(2, i, j);
            out.set3(0, i, j, y);
        }
    }
    Ok(out)
}

// Separable 2D DFT via direct 1D transforms; O(N^3), fine at analysis sizes.
fn dft2(frame: &Tensor<f64>) -> (Vec<f64>, usize, usize) {
    let (h, w) = (frame.shape()[0], frame.shape()[1]);
    let mut re = vec![0.0; h * w];
    let mut im = vec![0.0; h * w];
    // Row transforms.
    for i in 0..h {
        for fj in 0..w {
            let mut ar = 0.0;
            let mut ai = 0.0;
            for j in 0..w {
                let ang = -std::f64::consts::TAU * (fj * j) as f64 / w as f64;
                let v = frame.at2(i, j);
                ar += v * ang.cos();
                ai += v * ang.sin();
            }
            re[i * w + fj] = ar;
            im[i * w + fj] = ai;
        }
    }
    // Column transforms.
    let mut re2 = vec![0.0; h * w];
    let mut im2 = vec![0.0; h * w];
    for fj in 0..w {
        for fi in 0..h {
            let mut ar = 0.0;
            let mut ai = 0.0;
            for i in 0..h {
                let ang = -std::f64::consts::TAU * (fi * i) as f64 / h as f64;
                let (c, s) = (ang.cos(), ang.sin());
                let (r, m) = (re[i * w + fj], im[i * w + fj]);
                ar += r * c - m * s;
                ai += r * s + m * c;
            }
            re2[fi * w + fj] = ar;
            im2[fi * w + fj] = ai;
        }
    }
    let psd = re2
        .iter()
        .zip(&im2)
        .map(|(&r, &m)| (r * r + m * m) / (h * w) as f64)
        .collect();
    (psd, h, w)
}

/// Squared 2D Fourier magnitude averaged over annular radial bins;
/// `floor(min(H, W) / 2)` bins, integer frequency radii.
pub fn psd_radial<S: Scalar>(frame: &Tensor<S>) -> Result<PsdProfile> {
    let frame2 = match frame.shape().len() {
        2 => frame.clone(),
        3 if frame.shape()[0] == 1 => frame
            .clone()
            .reshape(&[frame.shape()[1], frame.shape()[2]])?,
        _ => {
            return Err(SeeClearError::dim(
                "psd_radial expects a single-channel frame".to_string(),
            ))
        }
    };
    let f64frame = Tensor::from_vec(
        frame2.shape(),
        frame2.data().iter().map(|v| v.to_f64c()).collect(),
    )?;
    let (psd, h, w) = dft2(&f64frame);
    let bin_count = h.min(w) / 2;
    let mut sums = vec![0.0; bin_count];
    let mut counts = vec![0usize; bin_count];
    for fi in 0..h {
        for fj in 0..w {
            let fx = fi.min(h - fi) as f64;
            let fy = fj.min(w - fj) as f64;
            let r = (fx * fx + fy * fy).sqrt();
            let bin = (r + 0.5).floor() as usize;
            if bin < bin_count {
                sums[bin] += psd[fi * w + fj];
                counts[bin] += 1;
            }
        }
    }
    let bins = sums
        .iter()
        .zip(&counts)
        .map(|(&s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
        .collect();
    Ok(PsdProfile { bins })
}
