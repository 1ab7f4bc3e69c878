//! Reference quality metrics: PSNR, SSIM, Charbonnier, and PSD-profile
//! distances, plus a per-frame CSV report.

use crate::error::{Result, SeeClearError};
use crate::spectral::{luma, PsdProfile};
use crate::tensor::Tensor;
use crate::Scalar;

/// PSNR ceiling reported for identical inputs.
pub const PSNR_CAP: f64 = 99.0;

/// Channel convention for PSNR.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsnrMode {
    /// BT.601 luma channel.
    Y,
    /// Mean squared error over all RGB values.
    Rgb,
}

/// Frequency band for PSD-profile comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsdBand {
    /// Bottom quartile of frequency bins.
    Low,
    /// Everything above the bottom quartile.
    High,
}

/// Per-frame scores plus clip means.
#[derive(Debug, Clone)]
pub struct MetricReport {
    pub psnr: f64,
    pub ssim: f64,
    pub charbonnier: f64,
    /// One `(psnr, ssim, charbonnier)` row per frame.
    pub per_frame: Vec<(f64, f64, f64)>,
}

fn check_same_shape<S: Scalar>(a: &Tensor<S>, b: &Tensor<S>) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(SeeClearError::dim(format!(
            "metric inputs differ: {:?} vs {:?}",
            a.shape(),
            b.shape()
        )));
    }
    Ok(())
}

fn to_luma_or_gray<S: Scalar>(frame: &Tensor<S>) -> Result<Tensor<S>> {
    match frame.shape().len() {
        3 if frame.shape()[0] == 3 => luma(frame),
        3 if frame.shape()[0] == 1 => Ok(frame.clone()),
        2 => Ok(frame
            .clone()
            .reshape(&[1, frame.shape()[0], frame.shape()[1]])?),
        _ => Err(SeeClearError::dim("expected a (3|1, H, W) or (H, W) frame")),
    }
}

/// Peak signal-to-noise ratio in dB for `[0, 1]` frames; capped at
/// [`PSNR_CAP`] when the inputs are identical.
pub fn psnr<S: Scalar>(a: &Tensor<S>, b: &Tensor<S>, mode: PsnrMode) -> Result<f64> {
    check_same_shape(a, b)?;
    let (x, y) = match mode {
        PsnrMode::Y => (to_luma_or_gray(a)?, to_luma_or_gray(b)?),
        PsnrMode::Rgb => (a.clone(), b.clone()),
    };
    let mse: f64 = x
        .data()
        .iter()
        .zip(y.data())
        .map(|(&p, &q)| {
            let d = p.to_f64c() - q.to_f64c();
            d * d
        })
        .sum::<f64>()
        / x.len() as f64;
    if mse == 0.0 {
        return Ok(PSNR_CAP);
    }
    Ok((10.0 * (1.0 / mse).log10()).min(PSNR_CAP))
}

/// Structural similarity on the luma channel: 11x11 Gaussian window with
/// sigma 1.5, stability constants K1 = 0.01, K2 = 0.03, dynamic range 1.
pub fn ssim<S: Scalar>(a: &Tensor<S>, b: &Tensor<S>) -> Result<f64> {
    check_same_shape(a, b)?;
    let x = to_luma_or_gray(a)?;
    let y = to_luma_or_gray(b)?;
    let (h, w) = (x.shape()[1], x.shape()[2]);
    let half = 5isize;
    // Gaussian window, normalized.
    let mut win = [[0.0f64; 11]; 11];
    let mut wsum = 0.0;
    for (i, row) in win.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            let dy = i as f64 - 5.0;
            let dx = j as f64 - 5.0;
            *v = (-(dy * dy + dx * dx) / (2.0 * 1.5 * 1.5)).exp();
            wsum += *v;
        }
    }
    for row in &mut win {
        for v in row {
            *v /= wsum;
        }
    }
    let c1 = (0.01f64).powi(2);
    let c2 = (0.03f64).powi(2);
    let clampi = |v: isize, n: usize| v.clamp(0, n as isize - 1) as usize;
    let mut total = 0.0;
    for ci in 0..h {
        for cj in 0..w {
            let (mut mx, mut my) = (0.0, 0.0);
            let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
            for di in -half..=half {
                for dj in -half..=half {
                    let wgt = win[(di + half) as usize][(dj + half) as usize];
                    let px = x
                        .at3(0, clampi(ci as isize + di, h), clampi(cj as isize + dj, w))
                        .to_f64c();
                    let py = y
                        .at3(0, clampi(ci as isize + di, h), clampi(cj as isize + dj, w))
                        .to_f64c();
                    mx += wgt * px;
                    my += wgt * py;
                    sxx += wgt * px * px;
                    syy += wgt * py * py;
                    sxy += wgt * px * py;
                }
            }
            let vx = sxx - mx * mx;
            let vy = syy - my * my;
            let cxy = sxy - mx * my;
            total += ((2.0 * mx * my + c1) * (2.0 * cxy + c2))
                / ((mx * mx + my * my + c1) * (vx + vy + c2));
        }
    }
    Ok(total / (h * w) as f64)
}

/// Charbonnier loss: per-element `sqrt(d^2 + eps^2)`, averaged.
pub fn charbonnier<S: Scalar>(a: &Tensor<S>, b: &Tensor<S>, eps: f64) -> Result<f64> {
    check_same_shape(a, b)?;
    if eps <= 0.0 {
        return Err(SeeClearError::arg("charbonnier eps must be positive"));
    }
    Ok(a.data()
        .iter()
        .zip(b.data())
        .map(|(&p, &q)| {
            let d = p.to_f64c() - q.to_f64c();
            (d * d + eps * eps).sqrt()
        })
        .sum::<f64>()
        / a.len() as f64)
}

/// Mean absolute log-profile gap over the requested band; `Low` is the bottom
/// quartile of bins.
pub fn psd_distance(a: &PsdProfile, b: &PsdProfile, band: PsdBand) -> Result<f64> {
    if a.bins.len() != b.bins.len() {
        return Err(SeeClearError::dim(format!(
            "profile bin counts differ: {} vs {}",
            a.bins.len(),
            b.bins.len()
        )));
    }
    let n = a.bins.len();
    let cut = (n / 4).max(1);
    let range = match band {
        PsdBand::Low => 0..cut,
        PsdBand::High => cut..n,
    };
    let delta = 1e-12;
    let count = range.len().max(1);
    Ok(range
        .map(|i| ((a.bins[i] + delta).ln() - (b.bins[i] + delta).ln()).abs())
        .sum::<f64>()
        / count as f64)
}

/// Score a clip of `(C, H, W)` frames against a reference clip.
pub fn report_clip<S: Scalar>(
    sr: &[Tensor<S>],
    hr: &[Tensor<S>],
    mode: PsnrMode,
    eps: f64,
) -> Result<MetricReport> {
    if sr.len() != hr.len() || sr.is_empty() {
        return Err(SeeClearError::dim(format!(
            "clip lengths differ or empty: {} vs {}",
            sr.len(),
            hr.len()
        )));
    }
    let mut per_frame = Vec::with_capacity(sr.len());
    for (a, b) in sr.iter().zip(hr) {
        per_frame.push((psnr(a, b, mode)?, ssim(a, b)?, charbonnier(a, b, eps)?));
    }
    let n = per_frame.len() as f64;
    Ok(MetricReport {
        psnr: per_frame.iter().map(|r| r.0).sum::<f64>() / n,
        ssim: per_frame.iter().map(|r| r.1).sum::<f64>() / n,
        charbonnier: per_frame.iter().map(|r| r.2).sum::<f64>() / n,
        per_frame,
    })
}

/// CSV serialization: `frame,psnr,ssim,charbonnier` with a trailing mean row.
pub fn report_csv(report: &MetricReport) -> String {
    let mut out = String::from("frame,psnr,ssim,charbonnier\n");
    for (i, (p, s, c)) in report.per_frame.iter().enumerate() {
        out.push_str(&format!("{i},{p:.6},{s:.6},{c:.6}\n"));
    }
    out.push_str(&format!(
        "mean,{:.6},{:.6},{:.6}\n",
        report.psnr, report.ssim, report.charbonnier
    ));
    out
}
