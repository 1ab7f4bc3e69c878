//! Heat-dissipation blur, diagonal in the per-patch DCT basis.
//!
//! The coefficient at patch coordinate `(x, y)` decays as
//! `exp(lambda(x, y) * tau)` with `lambda = -pi^2 (x^2 + y^2) / p^2`; the DC
//! entry has `lambda = 0` and never changes. Dissipation time `tau` relates
//! to Gaussian blur variance by `sigma^2 = 2 tau`.

use crate::error::{Result, SeeClearError};
use crate::Scalar;

use super::dct::PatchSpectrum;

/// Diagonal blur operator for a fixed patch size and dissipation time.
#[derive(Debug, Clone)]
pub struct BlurOperator<S> {
    pub patch: usize,
    pub tau: S,
    lambda: Vec<S>,
}

impl<S: Scalar> BlurOperator<S> {
    pub fn new(patch: usize, tau: S) -> Result<Self> {
        if tau < S::zero() {
            return Err(SeeClearError::arg("dissipation time must be nonnegative".to_string()));
        }
        Ok(BlurOperator {
            patch,
            tau,
            lambda: lambda_diag(patch),
        })
    }

    #[inline]
    pub fn lambda(&self, x: usize, y: usize) -> S {
        self.lambda[x * self.patch + y]
    }

    /// `exp(lambda(x,y) * tau)` decay factor.
    #[inline]
    pub fn factor(&self, x: usize, y: usize) -> S {
        (self.lambda(x, y) * self.tau).exp()
    }

    /// All `p*p` decay factors in `x*p+y` order.
    pub fn factors(&self) -> Vec<S> {
        self.lambda.iter().map(|&l| (l * self.tau).exp()).collect()
    }
}

/// `lambda[x*p+y] = -pi^2 (x^2/p^2 + y^2/p^2)`.
pub fn lambda_diag<S: Scalar>(p: usize) -> Vec<S> {
    let pi2 = std::f64::consts::PI * std::f64::consts::PI;
    let p2 = (p * p) as f64;
    let mut v = Vec::with_capacity(p * p);
    for x in 0..p {
        for y in 0..p {
            v.push(S::from_f64c(-pi2 * ((x * x) as f64 + (y * y) as f64) / p2));
        }
    }
    v
}

/// Coefficient-wise multiply by `exp(Lambda * tau)`.
pub fn blur_apply<S: Scalar>(spec: &PatchSpectrum<S>, tau: S) -> Result<PatchSpectrum<S>> {
    let op = BlurOperator::new(spec.patch, tau)?;
    let p = spec.patch;
    let mut out = spec.clone();
    let shape = out.coeffs.shape().to_vec();
    let (nf, nc, hp, wp) = (shape[0], shape[1], shape[2], shape[3]);
    for f in 0..nf {
        for c in 0..nc {
            for i in 0..hp {
                for j in 0..wp {
                    let factor = op.factor(i % p, j % p);
                    if factor != S::one() {
                        let v = out.coeffs.at4(f, c, i, j) * factor;
                        out.coeffs.set4(f, c, i, j, v);
                    }
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::KeyedRng;
    use crate::spectral::dct::{dct2_patches, idct2_patches};
    use crate::tensor::Tensor;

    fn random_spectrum(seed: u64) -> PatchSpectrum<f64> {
        let mut rng = KeyedRng::new(seed).stream(&[200]);
        let frame = Tensor::<f64>::seeded_uniform(&[1, 1, 16, 16], -1.0, 1.0, &mut rng);
        dct2_patches(&frame, 8).unwrap()
    }

    #[test]
    fn lambda_values() {
        let op = BlurOperator::<f64>::new(8, 1.0).unwrap();
        assert_eq!(op.lambda(0, 0), 0.0);
        let want = -std::f64::consts::PI.powi(2) * (1.0 / 64.0 + 1.0 / 64.0);
        assert!((op.lambda(1, 1) - want).abs() < 1e-15);
    }

    #[test]
    fn tau_zero_is_identity() {
        let spec = random_spectrum(1);
        let blurred = blur_apply(&spec, 0.0).unwrap();
        assert_eq!(spec.coeffs, blurred.coeffs);
    }

    #[test]
    fn negative_tau_rejected() {
        let spec = random_spectrum(2);
        assert!(blur_apply(&spec, -1.0).is_err());
    }

    #[test]
    fn coefficient_1_1_scaling() {
        let mut spec = random_spectrum(3);
        spec.coeffs = Tensor::zeros(spec.coeffs.shape());
        spec.coeffs.set4(0, 0, 1, 1, 2.0);
        let blurred = blur_apply(&spec, 1.0).unwrap();
        // lambda(1,1) = -pi^2 (1/64 + 1/64) = -pi^2/32 ~ -0.308425
        let want = 2.0 * (-std::f64::consts::PI.powi(2) / 32.0).exp();
        assert!((blurred.coeffs.at4(0, 0, 1, 1) - want).abs() < 1e-12);
        assert!((-std::f64::consts::PI.powi(2) / 32.0 + 0.308425).abs() < 1e-6);
    }

    #[test]
    fn large_tau_flattens_patches() {
        let mut rng = KeyedRng::new(4).stream(&[201]);
        let frame = Tensor::<f64>::seeded_uniform(&[1, 1, 8, 8], 0.0, 1.0, &mut rng);
        let spec = dct2_patches(&frame, 8).unwrap();
        let blurred = blur_apply(&spec, 1e3).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                if i == 0 && j == 0 {
                    continue;
                }
                assert!(blurred.coeffs.at4(0, 0, i, j).abs() <= 1e-12 * spec.coeffs.at4(0, 0, i, j).abs() + 1e-300);
            }
        }
        let pixels = idct2_patches(&blurred).unwrap();
        let mean: f64 = frame.data().iter().sum::<f64>() / 64.0;
        for &v in pixels.data() {
            assert!((v - mean).abs() < 1e-10);
        }
    }

    #[test]
    fn semigroup_property() {
        let spec = random_spectrum(5);
        let a = blur_apply(&blur_apply(&spec, 0.7).unwrap(), 1.3).unwrap();
        let b = blur_apply(&spec, 2.0).unwrap();
        assert!(a.coeffs.max_abs_diff(&b.coeffs) < 1e-12);
    }

    #[test]
    fn dc_invariant() {
        let spec = random_spectrum(6);
        let blurred = blur_apply(&spec, 123.0).unwrap();
        for i in (0..16).step_by(8) {
            for j in (0..16).step_by(8) {
                assert_eq!(spec.coeffs.at4(0, 0, i, j), blurred.coeffs.at4(0, 0, i, j));
            }
        }
    }

    #[test]
    fn blur_commutes_with_dct_round_trip() {
        let spec = random_spectrum(7);
        let blurred = blur_apply(&spec, 0.5).unwrap();
        let round = dct2_patches(&idct2_patches(&spec).unwrap(), 8).unwrap();
        let blurred_round = blur_apply(&round, 0.5).unwrap();
        assert!(blurred.coeffs.max_abs_diff(&blurred_round.coeffs) < 1e-10);
    }
}
