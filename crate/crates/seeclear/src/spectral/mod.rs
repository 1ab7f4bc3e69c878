//! Orthonormal patch DCT, the diagonal heat-dissipation blur operator, the
//! Haar wavelet pyramid, and radial power-spectral-density profiling.
//!
//! Frames are `(frames, channels, rows, cols)` tensors throughout.

mod blur;
mod dct;
mod dwt;
mod psd;

pub use blur::{blur_apply, BlurOperator};
pub use dct::{dct2_patches, dct_basis, idct2_patches, PatchSpectrum};
pub use dwt::{dwt2, dwt_pack, haar_down, haar_up, idwt2, idwt_pack, WaveletPyramid};
pub use psd::{luma, psd_radial, PsdProfile};
