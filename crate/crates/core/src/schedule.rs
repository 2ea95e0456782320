//! Linear beta schedule and its cumulative products.

use crate::error::{invalid, Error, Result};

pub const DEFAULT_BETA_START: f64 = 1e-4;
pub const DEFAULT_BETA_END: f64 = 0.02;

/// Precomputed `beta_t` and `alpha_bar_t` for `t = 0..=T`.
///
/// Index 0 is the future series (the initial diffusion state): `beta[0] = 0`
/// and `alpha_bar[0] = 1`. Index `T` is the historical series.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionSchedule {
    horizon: usize,
    beta_start: f64,
    beta_end: f64,
    beta: Vec<f64>,
    alpha_bar: Vec<f64>,
}

impl DiffusionSchedule {
    /// Linear interpolation of beta from `beta_start` (t = 1) to `beta_end` (t = T).
    pub fn new(horizon: usize, beta_start: f64, beta_end: f64) -> Result<Self> {
        if horizon == 0 {
            return Err(invalid("schedule horizon T must be at least 1"));
        }
        if !(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0) {
            return Err(invalid(format!(
                "beta bounds must satisfy 0 < beta_start <= beta_end < 1, got {beta_start}..{beta_end}"
            )));
        }
        let mut beta = Vec::with_capacity(horizon + 1);
        let mut alpha_bar = Vec::with_capacity(horizon + 1);
        beta.push(0.0);
        alpha_bar.push(1.0);
        let span = (horizon - 1).max(1) as f64;
        for t in 1..=horizon {
            let b = beta_start + (beta_end - beta_start) * (t - 1) as f64 / span;
            beta.push(b);
            alpha_bar.push(alpha_bar[t - 1] * (1.0 - b));
        }
        Ok(Self {
            horizon,
            beta_start,
            beta_end,
            beta,
            alpha_bar,
        })
    }

    pub fn with_defaults(horizon: usize) -> Result<Self> {
        Self::new(horizon, DEFAULT_BETA_START, DEFAULT_BETA_END)
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn beta_start(&self) -> f64 {
        self.beta_start
    }

    pub fn beta_end(&self) -> f64 {
        self.beta_end
    }

    /// Indexed by step; entry 0 is a zero placeholder.
    pub fn betas(&self) -> &[f64] {
        &self.beta
    }

    pub fn alpha_bars(&self) -> &[f64] {
        &self.alpha_bar
    }

    /// `alpha_bar_t`. Panics if `t > T`.
    pub fn alpha_bar(&self, t: usize) -> f64 {
        self.alpha_bar[t]
    }

    pub(crate) fn check_step(&self, t: usize, min: usize) -> Result<()> {
        if t < min || t > self.horizon {
            return Err(Error::StepOutOfRange {
                step: t,
                min,
                max: self.horizon,
            });
        }
        Ok(())
    }

    /// `(sqrt(1/alpha_bar_t), sqrt(1/alpha_bar_t - 1))`, the two coefficients of the
    /// evolution-trend transform. Undefined at `t = 0`.
    pub fn trend_coefficients(&self, t: usize) -> Result<(f64, f64)> {
        self.check_step(t, 1)?;
        let inv = 1.0 / self.alpha_bar[t];
        Ok((inv.sqrt(), (inv - 1.0).sqrt()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_step_schedule() {
        let s = DiffusionSchedule::new(1, 0.5, 0.5).unwrap();
        assert_eq!(s.alpha_bars(), &[1.0, 0.5]);
        assert_eq!(s.betas(), &[0.0, 0.5]);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(DiffusionSchedule::new(0, 1e-4, 0.02).is_err());
        assert!(DiffusionSchedule::new(4, 0.0, 0.02).is_err());
        assert!(DiffusionSchedule::new(4, 0.03, 0.02).is_err());
        assert!(DiffusionSchedule::new(4, 1e-4, 1.0).is_err());
        assert!(DiffusionSchedule::new(4, -1e-4, 0.5).is_err());
    }

    #[test]
    fn horizon_96_matches_high_precision_product() {
        // 50-digit product of (1 - beta_k) with exact decimal endpoints.
        let oracle = 0.378_578_702_634_126_8_f64;
        let s = DiffusionSchedule::with_defaults(96).unwrap();
        let rel = (s.alpha_bar(96) - oracle).abs() / oracle;
        assert!(rel < 1e-12, "relative error {rel:e}");
    }

    #[test]
    fn trend_coefficients_reject_step_zero() {
        let s = DiffusionSchedule::with_defaults(8).unwrap();
        assert!(matches!(s.trend_coefficients(0), Err(Error::StepOutOfRange { .. })));
        assert!(s.trend_coefficients(9).is_err());
        let (a, b) = s.trend_coefficients(8).unwrap();
        assert!(a > 1.0 && b > 0.0);
    }

    proptest! {
        #[test]
        fn ratio_reconstructs_beta(t in 1usize..300, lo in 1e-6f64..0.2, width in 0.0f64..0.5) {
            let hi = (lo + width).min(0.999);
            let s = DiffusionSchedule::new(t, lo, hi).unwrap();
            prop_assert_eq!(s.alpha_bar(0), 1.0);
            for k in 1..=t {
                let ratio = s.alpha_bar(k) / s.alpha_bar(k - 1);
                let expect = 1.0 - s.betas()[k];
                prop_assert!(((ratio - expect) / expect).abs() < 1e-12);
                prop_assert!(s.alpha_bar(k) < s.alpha_bar(k - 1));
                prop_assert!(s.alpha_bar(k) > 0.0 && s.alpha_bar(k) < 1.0);
            }
        }
    }
}
