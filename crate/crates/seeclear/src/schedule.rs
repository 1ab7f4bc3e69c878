//! Diffusion schedules: the residual-shift sequence `eta`, noise scale
//! `kappa`, and dissipation times `tau`.
//!
//! `eta` is geometric in `sqrt(eta)` between the requested endpoints, which
//! preserves the shape of the ResShift family without copying unpublished
//! numbers. `tau` is linear in `t` with endpoint `sigma2_b / 2`, so the total
//! blur is a single knob and `sigma2_b = 0` degenerates to pure ResShift.
//! Index 0 is the clean state: `eta[0] = 0`, `tau[0] = 0`, which makes the
//! final reverse step collapse onto the denoiser estimate.

use crate::error::{Result, SeeClearError};
use crate::Scalar;

#[derive(Debug, Clone)]
pub struct DiffusionSchedule<S> {
    /// Number of diffusion steps `T`.
    pub steps: usize,
    /// `eta[0..=T]`, `eta[0] = 0`, strictly increasing on `1..=T`.
    pub eta: Vec<S>,
    /// `alpha[t] = eta[t] - eta[t-1]` for `t = 1..=T`; `alpha[0] = 0`.
    pub alpha: Vec<S>,
    /// Noise intensity; 0 gives a deterministic chain.
    pub kappa: S,
    /// Dissipation times `tau[0..=T]`, non-decreasing, `tau[T] = sigma2_b/2`.
    pub tau: Vec<S>,
    /// Total blur intensity knob.
    pub sigma2_b: S,
    /// DCT patch size.
    pub patch: usize,
}

/// One reported invariant breach.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NotIncreasing { index: usize },
    Eta1TooLarge { value: f64 },
    EtaTTooSmall { value: f64 },
    AlphaNonPositive { index: usize },
    TauDecreasing { index: usize },
    EtaZeroNonZero { value: f64 },
}

impl<S: Scalar> DiffusionSchedule<S> {
    /// Blur decay factor `exp(lambda * (tau[t] - tau[s]))` support:
    /// dissipation time accumulated between two steps.
    pub fn tau_delta(&self, s: usize, t: usize) -> S {
        self.tau[t] - self.tau[s]
    }
}

/// Construct a schedule. `eta` endpoints are hit exactly.
pub fn build_schedule<S: Scalar>(
    steps: usize,
    kappa: S,
    sigma2_b: S,
    eta1: S,
    eta_t: S,
    patch: usize,
) -> Result<DiffusionSchedule<S>> {
    if steps < 2 {
        return Err(SeeClearError::arg("schedule needs at least 2 steps".to_string()));
    }
    if !(eta1 > S::zero() && eta1 < eta_t && eta_t <= S::one()) {
        return Err(SeeClearError::arg(
            "eta endpoints must satisfy 0 < eta1 < etaT <= 1".to_string(),
        ));
    }
    if sigma2_b < S::zero() {
        return Err(SeeClearError::arg("sigma2_b must be nonnegative".to_string()));
    }
    if kappa < S::zero() {
        return Err(SeeClearError::arg("kappa must be nonnegative".to_string()));
    }
    if patch == 0 {
        return Err(SeeClearError::arg("patch size must be positive".to_string()));
    }
    let t_f = S::from_f64c(steps as f64);
    let mut eta = Vec::with_capacity(steps + 1);
    eta.push(S::zero());
    let ln_lo = eta1.sqrt().ln();
    let ln_hi = eta_t.sqrt().ln();
    for t in 1..=steps {
        let frac = S::from_f64c((t - 1) as f64 / (steps - 1) as f64);
        let sqrt_eta = (ln_lo + (ln_hi - ln_lo) * frac).exp();
        eta.push(sqrt_eta * sqrt_eta);
    }
    let mut alpha = vec![S::zero()];
    for t in 1..=steps {
        alpha.push(eta[t] - eta[t - 1]);
    }
    let tau: Vec<S> = (0..=steps)
        .map(|t| sigma2_b / S::from_f64c(2.0) * S::from_f64c(t as f64) / t_f)
        .collect();
    let sched = DiffusionSchedule {
        steps,
        eta,
        alpha,
        kappa,
        tau,
        sigma2_b,
        patch,
    };
    let violations = validate(&sched);
    if !violations.is_empty() {
        return Err(SeeClearError::ScheduleViolation(format!("{violations:?}")));
    }
    Ok(sched)
}

/// Report every violated schedule invariant with its index.
pub fn validate<S: Scalar>(s: &DiffusionSchedule<S>) -> Vec<Violation> {
    let mut out = Vec::new();
    if s.eta[0] != S::zero() {
        out.push(Violation::EtaZeroNonZero {
            value: s.eta[0].to_f64c(),
        });
    }
    for t in 2..=s.steps {
        if s.eta[t] <= s.eta[t - 1] {
            out.push(Violation::NotIncreasing { index: t });
        }
    }
    if s.eta[1] > S::from_f64c(0.01) {
        out.push(Violation::Eta1TooLarge {
            value: s.eta[1].to_f64c(),
        });
    }
    if s.eta[s.steps] < S::from_f64c(0.99) {
        out.push(Violation::EtaTTooSmall {
            value: s.eta[s.steps].to_f64c(),
        });
    }
    for t in 1..=s.steps {
        if s.alpha[t] <= S::zero() {
            out.push(Violation::AlphaNonPositive { index: t });
        }
    }
    for t in 1..=s.steps {
        if s.tau[t] < s.tau[t - 1] {
            out.push(Violation::TauDecreasing { index: t });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_sched() -> DiffusionSchedule<f64> {
        build_schedule(15, 2.0, 2.0, 0.001, 0.999, 8).unwrap()
    }

    #[test]
    fn default_step_count() {
        let s = default_sched();
        assert_eq!(s.steps, 15);
        assert_eq!(s.eta.len(), 16);
    }

    #[test]
    fn endpoints_hit_exactly() {
        let s = default_sched();
        assert!((s.eta[1] - 0.001).abs() < 1e-15);
        assert!((s.eta[15] - 0.999).abs() < 1e-12);
        for t in 2..=15 {
            assert!(s.eta[t] > s.eta[t - 1]);
        }
        // Telescoping: sum of increments is eta_T - eta_0. The first
        // increment eta_1 - 0 = 0.001 is part of the sum.
        let sum: f64 = s.alpha[1..].iter().sum();
        assert!((sum - 0.999).abs() < 1e-12);
        let tail: f64 = s.alpha[2..].iter().sum();
        assert!((tail - 0.998).abs() < 1e-12);
    }

    #[test]
    fn zero_blur_means_zero_tau() {
        let s = build_schedule(15, 2.0, 0.0, 0.001, 0.999, 8).unwrap();
        assert!(s.tau.iter().all(|&t| t == 0.0));
    }

    #[test]
    fn tau_linear_with_endpoint() {
        let s = default_sched();
        assert_eq!(s.tau[0], 0.0);
        assert!((s.tau[15] - 1.0).abs() < 1e-15);
        assert!((s.tau[5] - 5.0 / 15.0).abs() < 1e-15);
    }

    #[test]
    fn telescoping_alpha_sum() {
        let s = default_sched();
        let sum: f64 = s.alpha[1..].iter().sum();
        assert!((sum - (s.eta[15] - s.eta[0])).abs() < 1e-15);
    }

    #[test]
    fn valid_schedule_has_no_violations() {
        assert!(validate(&default_sched()).is_empty());
    }

    #[test]
    fn plateau_reported_with_index() {
        let mut s = default_sched();
        s.eta[7] = s.eta[6];
        let v = validate(&s);
        assert!(v.contains(&Violation::NotIncreasing { index: 7 }));
    }

    #[test]
    fn terminal_value_violation() {
        let mut s = default_sched();
        s.eta[15] = 0.5;
        let v = validate(&s);
        assert!(v
            .iter()
            .any(|x| matches!(x, Violation::EtaTTooSmall { .. })));
    }

    #[test]
    fn bad_preconditions_rejected() {
        assert!(build_schedule(1, 2.0, 2.0, 0.001, 0.999, 8).is_err());
        assert!(build_schedule(15, 2.0, 2.0, 0.9, 0.5, 8).is_err());
        assert!(build_schedule(15, 2.0, -1.0, 0.001, 0.999, 8).is_err());
    }
}
