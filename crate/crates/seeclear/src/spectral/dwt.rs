//! Orthonormal Haar wavelet transforms.
//!
//! Two layouts are provided: the recursive pyramid (analysis repeated on LL)
//! and the full packet packing used as the network I/O representation, where
//! every sub-band is decomposed again and the result is concatenated along
//! the channel axis (`C * 4^k` channels at `H/2^k x W/2^k`).

use crate::error::{Result, SeeClearError};
use crate::tensor::Tensor;
use crate::Scalar;

/// Recursive Haar pyramid of a `(frames, channels, H, W)` tensor.
#[derive(Debug, Clone)]
pub struct WaveletPyramid<S> {
    pub levels: usize,
    /// Deepest low-pass band, `(frames, channels, H/2^k, W/2^k)`.
    pub ll: Tensor<S>,
    /// Per level (finest first): `[LH, HL, HH]` at `H/2^level x W/2^level`.
    pub bands: Vec<[Tensor<S>; 3]>,
}

fn sqrt2_inv<S: Scalar>() -> S {
    S::one() / S::from_f64c(std::f64::consts::SQRT_2)
}

/// One analysis level on a `(C, H, W)` map: returns `(LL, LH, HL, HH)`, each
/// `(C, H/2, W/2)`.
pub fn haar_down<S: Scalar>(feat: &Tensor<S>) -> Result<[Tensor<S>; 4]> {
    if feat.shape().len() != 3 {
        return Err(SeeClearError::dim("haar_down expects (C, H, W)".to_string()));
    }
    let (c, h, w) = (feat.shape()[0], feat.shape()[1], feat.shape()[2]);
    if h % 2 != 0 || w % 2 != 0 {
        return Err(SeeClearError::dim(format!("haar_down dims {}x{} not even", h, w)));
    }
    let s = sqrt2_inv::<S>();
    let (hh2, wh2) = (h / 2, w / 2);
    let mut out: [Tensor<S>; 4] = [
        Tensor::zeros(&[c, hh2, wh2]),
        Tensor::zeros(&[c, hh2, wh2]),
        Tensor::zeros(&[c, hh2, wh2]),
        Tensor::zeros(&[c, hh2, wh2]),
    ];
    for ch in 0..c {
        for i in 0..hh2 {
            for j in 0..wh2 {
                let a = feat.at3(ch, 2 * i, 2 * j);
                let b = feat.at3(ch, 2 * i, 2 * j + 1);
                let d = feat.at3(ch, 2 * i + 1, 2 * j);
                let e = feat.at3(ch, 2 * i + 1, 2 * j + 1);
                // Rows then columns with orthonormal (1/sqrt2, +-1/sqrt2).
                let (rl0, rh0) = ((a + b) * s, (a - b) * s);
                let (rl1, rh1) = ((d + e) * s, (d - e) * s);
                out[0].set3(ch, i, j, (rl0 + rl1) * s); // LL
                out[1].set3(ch, i, j, (rh0 + rh1) * s); // LH (horizontal detail)
                out[2].set3(ch, i, j, (rl0 - rl1) * s); // HL (vertical detail)
                out[3].set3(ch, i, j, (rh0 - rh1) * s); // HH
            }
        }
    }
    Ok(out)
}

/// Inverse of [`haar_down`].
pub fn haar_up<S: Scalar>(bands: &[Tensor<S>; 4]) -> Result<Tensor<S>> {
    let (c, hh2, wh2) = (
        bands[0].shape()[0],
        bands[0].shape()[1],
        bands[0].shape()[2],
    );
    for b in bands.iter() {
        if b.shape() != bands[0].shape() {
            return Err(SeeClearError::dim("haar_up band shape mismatch".to_string()));
        }
    }
    let s = sqrt2_inv::<S>();
    let mut out = Tensor::zeros(&[c, hh2 * 2, wh2 * 2]);
    for ch in 0..c {
        for i in 0..hh2 {
            for j in 0..wh2 {
                let ll = bands[0].at3(ch, i, j);
                let lh = bands[1].at3(ch, i, j);
                let hl = bands[2].at3(ch, i, j);
                let hh = bands[3].at3(ch, i, j);
                let rl0 = (ll + hl) * s;
                let rh0 = (lh + hh) * s;
                let rl1 = (ll - hl) * s;
                let rh1 = (lh - hh) * s;
                out.set3(ch, 2 * i, 2 * j, (rl0 + rh0) * s);
                out.set3(ch, 2 * i, 2 * j + 1, (rl0 - rh0) * s);
                out.set3(ch, 2 * i + 1, 2 * j, (rl1 + rh1) * s);
                out.set3(ch, 2 * i + 1, 2 * j + 1, (rl1 - rh1) * s);
            }
        }
    }
    Ok(out)
}

fn check_divisible(h: usize, w: usize, k: usize) -> Result<()> {
    let div = 1usize << k;
    if h % div != 0 || w % div != 0 {
        return Err(SeeClearError::dim(format!(
            "dims {}x{} not divisible by 2^{}",
            h, w, k
        )));
    }
    Ok(())
}

/// Recursive Haar analysis applied to LL, `k` levels deep.
pub fn dwt2<S: Scalar>(frame: &Tensor<S>, k: usize) -> Result<WaveletPyramid<S>> {
    if frame.shape().len() != 4 {
        return Err(SeeClearError::dim("dwt2 expects (frames, channels, H, W)".to_string()));
    }
    if k == 0 {
        return Err(SeeClearError::arg("dwt2 needs at least one level".to_string()));
    }
    let (nf, _, h, w) = (
        frame.shape()[0],
        frame.shape()[1],
        frame.shape()[2],
        frame.shape()[3],
    );
    check_divisible(h, w, k)?;
    let mut bands = Vec::with_capacity(k);
    let mut ll_frames: Vec<Tensor<S>> = (0..nf).map(|f| frame.slab(f).unwrap()).collect();
    for _ in 0..k {
        let mut next_ll = Vec::with_capacity(nf);
        let mut lh = Vec::with_capacity(nf);
        let mut hl = Vec::with_capacity(nf);
        let mut hh = Vec::with_capacity(nf);
        for feat in &ll_frames {
            let [a, b, c2, d] = haar_down(feat)?;
            next_ll.push(a);
            lh.push(b);
            hl.push(c2);
            hh.push(d);
        }
        bands.push([
            Tensor::stack(&lh)?,
            Tensor::stack(&hl)?,
            Tensor::stack(&hh)?,
        ]);
        ll_frames = next_ll;
    }
    Ok(WaveletPyramid {
        levels: k,
        ll: Tensor::stack(&ll_frames)?,
        bands,
    })
}

/// Perfect reconstruction from a Haar pyramid.
pub fn idwt2<S: Scalar>(pyr: &WaveletPyramid<S>) -> Result<Tensor<S>> {
    let nf = pyr.ll.shape()[0];
    let mut ll_frames: Vec<Tensor<S>> = (0..nf).map(|f| pyr.ll.slab(f).unwrap()).collect();
    for level in (0..pyr.levels).rev() {
        let [lh, hl, hh] = &pyr.bands[level];
        let mut next = Vec::with_capacity(nf);
        for (f, ll) in ll_frames.iter().enumerate() {
            let bands = [ll.clone(), lh.slab(f)?, hl.slab(f)?, hh.slab(f)?];
            next.push(haar_up(&bands)?);
        }
        ll_frames = next;
    }
    Tensor::stack(&ll_frames)
}

fn pack_level<S: Scalar>(feat: &Tensor<S>) -> Result<Tensor<S>> {
    let [ll, lh, hl, hh] = haar_down(feat)?;
    let (c, h, w) = (ll.shape()[0], ll.shape()[1], ll.shape()[2]);
    let mut data = Vec::with_capacity(4 * c * h * w);
    for b in [&ll, &lh, &hl, &hh] {
        data.extend_from_slice(b.data());
    }
    Tensor::from_vec(&[4 * c, h, w], data)
}

fn unpack_level<S: Scalar>(packed: &Tensor<S>) -> Result<Tensor<S>> {
    let (c4, h, w) = (packed.shape()[0], packed.shape()[1], packed.shape()[2]);
    if c4 % 4 != 0 {
        return Err(SeeClearError::dim("packed channels not a multiple of 4".to_string()));
    }
    let c = c4 / 4;
    let n = c * h * w;
    let mk = |off: usize| Tensor::from_vec(&[c, h, w], packed.data()[off * n..(off + 1) * n].to_vec());
    let bands = [mk(0)?, mk(1)?, mk(2)?, mk(3)?];
    haar_up(&bands)
}

/// Full wavelet-packet packing of `(frames, C, H, W)`: every sub-band is
/// decomposed at every level, giving `(frames, C * 4^k, H/2^k, W/2^k)`.
pub fn dwt_pack<S: Scalar>(frame: &Tensor<S>, k: usize) -> Result<Tensor<S>> {
    if frame.shape().len() != 4 {
        return Err(SeeClearError::dim("dwt_pack expects (frames, channels, H, W)".to_string()));
    }
    check_divisible(frame.shape()[2], frame.shape()[3], k)?;
    let nf = frame.shape()[0];
    let mut frames: Vec<Tensor<S>> = (0..nf).map(|f| frame.slab(f).unwrap()).collect();
    for _ in 0..k {
        for feat in frames.iter_mut() {
            *feat = pack_level(feat)?;
        }
    }
    Tensor::stack(&frames)
}

/// Inverse of [`dwt_pack`].
pub fn idwt_pack<S: Scalar>(packed: &Tensor<S>, k: usize) -> Result<Tensor<S>> {
    if packed.shape().len() != 4 {
        return Err(SeeClearError::dim("idwt_pack expects (frames, channels, H, W)".to_string()));
    }
    let nf = packed.shape()[0];
    let mut frames: Vec<Tensor<S>> = (0..nf).map(|f| packed.slab(f).unwrap()).collect();
    for _ in 0..k {
        for feat in frames.iter_mut() {
            *feat = unpack_level(feat)?;
        }
    }
    Tensor::stack(&frames)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::KeyedRng;

    #[test]
    fn constant_frame_single_level() {
        let frame = Tensor::<f64>::filled(&[1, 1, 4, 4], 2.0);
        let pyr = dwt2(&frame, 1).unwrap();
        for &v in pyr.ll.data() {
            assert!((v - 4.0).abs() < 1e-12);
        }
        for band in &pyr.bands[0] {
            for &v in band.data() {
                assert!(v.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn round_trip_two_levels() {
        let mut rng = KeyedRng::new(8).stream(&[300]);
        let frame = Tensor::<f64>::seeded_uniform(&[1, 3, 64, 64], 0.0, 1.0, &mut rng);
        let pyr = dwt2(&frame, 2).unwrap();
        let back = idwt2(&pyr).unwrap();
        assert!(frame.max_abs_diff(&back) < 1e-10);
    }

    #[test]
    fn band_shapes() {
        let frame = Tensor::<f64>::zeros(&[1, 1, 64, 64]);
        let pyr = dwt2(&frame, 1).unwrap();
        assert_eq!(pyr.ll.shape(), &[1, 1, 32, 32]);
        for band in &pyr.bands[0] {
            assert_eq!(band.shape(), &[1, 1, 32, 32]);
        }
    }

    #[test]
    fn energy_conservation() {
        let mut rng = KeyedRng::new(9).stream(&[301]);
        let frame = Tensor::<f64>::seeded_uniform(&[1, 1, 32, 32], -1.0, 1.0, &mut rng);
        let pyr = dwt2(&frame, 3).unwrap();
        let ep: f64 = frame.data().iter().map(|v| v * v).sum();
        let mut ec: f64 = pyr.ll.data().iter().map(|v| v * v).sum();
        for level in &pyr.bands {
            for band in level {
                ec += band.data().iter().map(|v| v * v).sum::<f64>();
            }
        }
        assert!((ep - ec).abs() / ep < 1e-9);
    }

    #[test]
    fn non_divisible_rejected() {
        let frame = Tensor::<f64>::zeros(&[1, 1, 6, 6]);
        assert!(dwt2(&frame, 2).is_err());
    }

    #[test]
    fn packet_round_trip_and_shape() {
        let mut rng = KeyedRng::new(10).stream(&[302]);
        let frame = Tensor::<f64>::seeded_uniform(&[2, 3, 32, 32], 0.0, 1.0, &mut rng);
        let packed = dwt_pack(&frame, 2).unwrap();
        assert_eq!(packed.shape(), &[2, 48, 8, 8]);
        let back = idwt_pack(&packed, 2).unwrap();
        assert!(frame.max_abs_diff(&back) < 1e-10);
    }
}
