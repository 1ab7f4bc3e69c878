//! Artifact I/O: the bit-exact tensor file format, PNG frames, and directory
//! helpers.
//!
//! Tensor files let oracles compare exact coefficients across runs; PNG
//! covers human-viewable frames, clamped to `[0, 1]` and quantized to 8 bits.
//!
//! Tensor file layout: magic `SEET`, `u8` version (1), `u8` dtype
//! (0 = f32, 1 = f64), `u8` ndim, `u8` pad (0), then `ndim` little-endian
//! `u32` dims, then the row-major payload in little-endian scalars.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Result, SeeClearError};
use crate::tensor::Tensor;
use crate::Scalar;

const MAGIC: &[u8; 4] = b"SEET";
const VERSION: u8 = 1;

fn dtype_code<S: Scalar>() -> u8 {
    match std::mem::size_of::<S>() {
        4 => 0,
        8 => 1,
        _ => unreachable!("scalar must be f32 or f64"),
    }
}

/// Serialize a tensor to the `SEET` byte layout.
pub fn tensor_to_bytes<S: Scalar>(t: &Tensor<S>) -> Result<Vec<u8>> {
    let ndim = t.shape().len();
    if ndim > u8::MAX as usize {
        return Err(SeeClearError::data("tensor rank exceeds format limit"));
    }
    let dtype = dtype_code::<S>();
    let elem = if dtype == 0 { 4 } else { 8 };
    let mut out = Vec::with_capacity(8 + 4 * ndim + elem * t.len());
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.push(dtype);
    out.push(ndim as u8);
    out.push(0);
    for &d in t.shape() {
        if d > u32::MAX as usize {
            return Err(SeeClearError::data("tensor extent exceeds format limit"));
        }
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for &v in t.data() {
        if dtype == 0 {
            out.extend_from_slice(&(v.to_f64c() as f32).to_le_bytes());
        } else {
            out.extend_from_slice(&v.to_f64c().to_le_bytes());
        }
    }
    Ok(out)
}

/// Deserialize a tensor, converting between scalar widths as needed.
pub fn tensor_from_bytes<S: Scalar>(bytes: &[u8]) -> Result<Tensor<S>> {
    if bytes.len() < 8 || &bytes[..4] != MAGIC {
        return Err(SeeClearError::data("not a SEET tensor file"));
    }
    if bytes[4] != VERSION {
        return Err(SeeClearError::data(format!(
            "unsupported tensor format version {}",
            bytes[4]
        )));
    }
    let dtype = bytes[5];
    if dtype > 1 {
        return Err(SeeClearError::data(format!("unknown dtype code {dtype}")));
    }
    let ndim = bytes[6] as usize;
    let header = 8 + 4 * ndim;
    if bytes.len() < header {
        return Err(SeeClearError::data("truncated tensor header"));
    }
    let mut shape = Vec::with_capacity(ndim);
    for i in 0..ndim {
        let off = 8 + 4 * i;
        shape.push(u32::from_le_bytes(bytes[off..off + 4].try_into().unwrap()) as usize);
    }
    let count: usize = shape.iter().product();
    let elem = if dtype == 0 { 4 } else { 8 };
    if bytes.len() != header + count * elem {
        return Err(SeeClearError::data(format!(
            "payload size {} does not match shape {:?}",
            bytes.len() - header,
            shape
        )));
    }
    let mut data = Vec::with_capacity(count);
    for i in 0..count {
        let off = header + i * elem;
        let v = if dtype == 0 {
            f32::from_le_bytes(bytes[off..off + 4].try_into().unwrap()) as f64
        } else {
            f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap())
        };
        data.push(S::from_f64c(v));
    }
    Tensor::from_vec(&shape, data)
}

pub fn write_tensor<S: Scalar>(path: &Path, t: &Tensor<S>) -> Result<()> {
    let bytes = tensor_to_bytes(t)?;
    let mut f = fs::File::create(path)?;
    f.write_all(&bytes)?;
    Ok(())
}

pub fn read_tensor<S: Scalar>(path: &Path) -> Result<Tensor<S>> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    tensor_from_bytes(&bytes)
}

/// Load an 8-bit PNG as a `(3, H, W)` tensor in `[0, 1]`.
pub fn load_png<S: Scalar>(path: &Path) -> Result<Tensor<S>> {
    let img = image::open(path)
        .map_err(|e| SeeClearError::data(format!("{}: {e}", path.display())))?
        .to_rgb8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    let mut out = Tensor::zeros(&[3, h, w]);
    for (x, y, px) in img.enumerate_pixels() {
        for c in 0..3 {
            out.set3(
                c,
                y as usize,
                x as usize,
                S::from_f64c(px.0[c] as f64 / 255.0),
            );
        }
    }
    Ok(out)
}

/// Save a `(3, H, W)` tensor as PNG, clamping to `[0, 1]` before quantizing.
pub fn save_png<S: Scalar>(path: &Path, frame: &Tensor<S>) -> Result<()> {
    if frame.shape().len() != 3 || frame.shape()[0] != 3 {
        return Err(SeeClearError::dim("save_png expects (3, H, W)"));
    }
    let (h, w) = (frame.shape()[1], frame.shape()[2]);
    let mut img = image::RgbImage::new(w as u32, h as u32);
    for y in 0..h {
        for x in 0..w {
            let px: [u8; 3] = std::array::from_fn(|c| {
                (frame.at3(c, y, x).to_f64c().clamp(0.0, 1.0) * 255.0).round() as u8
            });
            img.put_pixel(x as u32, y as u32, image::Rgb(px));
        }
    }
    img.save(path)
        .map_err(|e| SeeClearError::data(format!("{}: {e}", path.display())))
}

/// Sorted PNG paths in a directory; errors on missing or empty directories.
pub fn list_pngs(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| SeeClearError::data(format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "png"))
        .collect();
    if out.is_empty() {
        return Err(SeeClearError::data(format!(
            "no PNG frames in {}",
            dir.display()
        )));
    }
    out.sort();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::KeyedRng;

    #[test]
    fn tensor_round_trip_f64_bit_exact() {
        let mut r = KeyedRng::new(1).stream(&[1200]);
        let t = Tensor::<f64>::seeded_uniform(&[2, 3, 5], -10.0, 10.0, &mut r);
        let bytes = tensor_to_bytes(&t).unwrap();
        let back: Tensor<f64> = tensor_from_bytes(&bytes).unwrap();
        assert_eq!(t, back);
        // Serialization is deterministic, byte for byte.
        assert_eq!(bytes, tensor_to_bytes(&t).unwrap());
    }

    #[test]
    fn header_layout_pinned() {
        let t = Tensor::<f32>::filled(&[2, 3], 1.0);
        let bytes = tensor_to_bytes(&t).unwrap();
        assert_eq!(&bytes[..4], b"SEET");
        assert_eq!(bytes[4], 1); // version
        assert_eq!(bytes[5], 0); // f32
        assert_eq!(bytes[6], 2); // ndim
        assert_eq!(bytes[7], 0); // pad
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 2);
        assert_eq!(u32::from_le_bytes(bytes[12..16].try_into().unwrap()), 3);
        assert_eq!(bytes.len(), 16 + 6 * 4);
        let t64 = Tensor::<f64>::filled(&[1], 0.5);
        assert_eq!(tensor_to_bytes(&t64).unwrap()[5], 1); // f64
    }

    #[test]
    fn cross_width_conversion() {
        let t = Tensor::<f32>::filled(&[4], 0.25);
        let bytes = tensor_to_bytes(&t).unwrap();
        let as64: Tensor<f64> = tensor_from_bytes(&bytes).unwrap();
        assert_eq!(as64.data(), &[0.25; 4]);
    }

    #[test]
    fn corrupt_inputs_rejected() {
        assert!(tensor_from_bytes::<f64>(b"SEEX\x01\x01\x01\x00").is_err());
        assert!(tensor_from_bytes::<f64>(b"SE").is_err());
        let t = Tensor::<f64>::filled(&[2], 1.0);
        let mut bytes = tensor_to_bytes(&t).unwrap();
        bytes.pop();
        assert!(tensor_from_bytes::<f64>(&bytes).is_err());
        let mut bad_version = tensor_to_bytes(&t).unwrap();
        bad_version[4] = 9;
        assert!(tensor_from_bytes::<f64>(&bad_version).is_err());
    }

    #[test]
    fn png_round_trip_within_quantization() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.png");
        let mut r = KeyedRng::new(2).stream(&[1201]);
        let frame = Tensor::<f64>::seeded_uniform(&[3, 8, 8], 0.0, 1.0, &mut r);
        save_png(&path, &frame).unwrap();
        let back: Tensor<f64> = load_png(&path).unwrap();
        assert_eq!(back.shape(), &[3, 8, 8]);
        assert!(frame.max_abs_diff(&back) <= 0.5 / 255.0 + 1e-9);
    }

    #[test]
    fn png_clamps_out_of_range() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.png");
        let frame = Tensor::<f64>::from_fn(&[3, 2, 2], |idx| {
            if idx[0] == 0 {
                2.0
            } else {
                -1.0
            }
        });
        save_png(&path, &frame).unwrap();
        let back: Tensor<f64> = load_png(&path).unwrap();
        assert_eq!(back.at3(0, 0, 0), 1.0);
        assert_eq!(back.at3(1, 0, 0), 0.0);
    }

    #[test]
    fn list_pngs_sorted_and_empty_rejected() {
        let dir = tempfile::tempdir().unwrap();
        assert!(list_pngs(dir.path()).is_err());
        for name in ["b.png", "a.png", "c.txt"] {
            if name.ends_with(".png") {
                save_png(&dir.path().join(name), &Tensor::<f64>::zeros(&[3, 2, 2])).unwrap();
            } else {
                fs::write(dir.path().join(name), b"x").unwrap();
            }
        }
        let got = list_pngs(dir.path()).unwrap();
        let names: Vec<_> = got
            .iter()
            .map(|p| p.file_name().unwrap().to_str().unwrap().to_string())
            .collect();
        assert_eq!(names, vec!["a.png", "b.png"]);
    }
}
