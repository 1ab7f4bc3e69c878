//! SeeClear: a Blurring-ResShift diffusion engine for video super-resolution.
//!
//! The crate is organized around a frequency-domain diffusion chain:
//! HR frames are corrupted by patch-level heat dissipation (diagonal in the
//! per-patch DCT basis) while the mean is shifted towards the LR observation
//! by a monotone schedule. Reverse sampling uses the closed-form Gaussian
//! posterior with a pluggable denoiser; a toy attention U-Net with
//! instance-centric (InCAM) and channel-wise memory (CaTeGory) conditioning
//! plays that role in the full generation loop.
//!
//! All numeric kernels are generic over the scalar type via [`Scalar`];
//! `f64` is used by the test suite and the CLI default, `f32` is available
//! for lighter production paths.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign};

pub mod category;
pub mod cli;
pub mod condenser;
pub mod diffusion;
pub mod error;
pub mod incam;
pub mod io;
pub mod metrics;
pub mod resample;
pub mod rng;
pub mod schedule;
pub mod semantics;
pub mod spectral;
pub mod tensor;

pub use error::{Result, SeeClearError};

/// Scalar type the numeric core is generic over.
pub trait Scalar:
    Float + FromPrimitive + NumAssign + Sum + Debug + Display + Send + Sync + 'static
{
    /// Lossy cast from `f64`, used for schedule constants and test literals.
    fn from_f64c(v: f64) -> Self {
        Self::from_f64(v).expect("f64 constant not representable")
    }

    /// Lossy cast to `f64` for reporting and file I/O.
    fn to_f64c(self) -> f64 {
        self.to_f64().expect("scalar not representable as f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

pub type Tensor32 = tensor::Tensor<f32>;
pub type Tensor64 = tensor::Tensor<f64>;
pub type Schedule64 = schedule::DiffusionSchedule<f64>;
