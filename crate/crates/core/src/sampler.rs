//! Deterministic skip-step reverse sampling from the history to the forecast.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::devolution::{predict_trend, Devolver};
use crate::error::{invalid, Error, Result};
use crate::schedule::DiffusionSchedule;
use crate::series::SeriesMatrix;

/// Sampling-step grid searched on the validation split.
pub const SAMPLING_STEP_GRID: [usize; 7] = [1, 2, 3, 4, 6, 8, 12];

/// Default `sigma_t^2 / (1 - abar_{t-k})` for the sampling-noise ablation.
pub const DEFAULT_NOISE_FRACTION: f64 = 0.01;

/// Trajectories are kept by default up to this horizon.
pub const TRAJECTORY_HORIZON_LIMIT: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerConfig {
    pub n_steps: usize,
    pub add_noise: bool,
    /// With noise on, `sigma_t^2 = noise_fraction * (1 - abar_{t-k})`.
    pub noise_fraction: f64,
    pub seed: u64,
    /// `None` keeps intermediate states only when `T <= 512`.
    pub keep_trajectory: Option<bool>,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            n_steps: 1,
            add_noise: false,
            noise_fraction: DEFAULT_NOISE_FRACTION,
            seed: 0,
            keep_trajectory: None,
        }
    }
}

impl SamplerConfig {
    pub fn with_steps(n_steps: usize) -> Self {
        Self {
            n_steps,
            ..Self::default()
        }
    }

    /// `sigma_t` for a jump from `t` to `t - k`; zero unless noise is enabled.
    pub fn sigma(&self, schedule: &DiffusionSchedule, t: usize, k: usize) -> f64 {
        if self.add_noise {
            (self.noise_fraction * (1.0 - schedule.alpha_bar(t - k))).sqrt()
        } else {
            0.0
        }
    }

    pub fn noise_rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

/// Steps visited by `n_steps` reverse applications from `T`: equal jumps of
/// `floor(T / n_steps)`, with the last jump absorbing the remainder down to 0.
pub fn step_sequence(horizon: usize, n_steps: usize) -> Result<Vec<usize>> {
    if n_steps == 0 || n_steps > horizon {
        return Err(invalid(format!("n_steps must lie in 1..={horizon}, got {n_steps}")));
    }
    let jump = horizon / n_steps;
    let mut steps: Vec<usize> = (0..n_steps).map(|i| horizon - i * jump).collect();
    steps.push(0);
    Ok(steps)
}

/// One reverse application jumping from step `t` to `t - k`:
/// `sqrt(abar_{t-k}) x0_hat + sqrt(1 - abar_{t-k} - sigma_t^2) z_hat (+ sigma_t eps)`.
#[allow(clippy::too_many_arguments)]
pub fn sample_step<D: Devolver + ?Sized, R: Rng + ?Sized>(
    model: &D,
    xt: &SeriesMatrix,
    t: usize,
    k: usize,
    schedule: &DiffusionSchedule,
    config: &SamplerConfig,
    rng: &mut R,
) -> Result<SeriesMatrix> {
    if t == 0 || t > schedule.horizon() {
        return Err(Error::StepOutOfRange {
            step: t,
            min: 1,
            max: schedule.horizon(),
        });
    }
    if k == 0 || k > t {
        return Err(invalid(format!("skip count {k} must lie in 1..={t}")));
    }
    if config.add_noise && !(0.0..=1.0).contains(&config.noise_fraction) {
        return Err(invalid(format!(
            "noise_fraction {} makes sigma_t^2 exceed 1 - alpha_bar",
            config.noise_fraction
        )));
    }
    let pair = predict_trend(model, xt, t, schedule)?;
    let target_ab = schedule.alpha_bar(t - k);
    let sigma = config.sigma(schedule, t, k);
    let radicand = 1.0 - target_ab - sigma * sigma;
    // Tolerate rounding when sigma^2 == 1 - abar exactly.
    if radicand < -1e-15 {
        return Err(invalid(format!("sigma_t^2 exceeds 1 - alpha_bar at step {t}")));
    }
    let keep = target_ab.sqrt();
    let trend = radicand.max(0.0).sqrt();
    let mut next = pair.x0_hat.zip_map(&pair.z_hat, |x0, z| keep * x0 + trend * z)?;
    if sigma > 0.0 {
        next = next.map(|v| {
            let eps: f64 = rng.sample(StandardNormal);
            v + sigma * eps
        });
    }
    Ok(next)
}

/// A reverse trajectory from the history (`t = T`) to the forecast (`t = 0`).
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastRun {
    pub trajectory: Vec<(usize, SeriesMatrix)>,
    pub prediction: SeriesMatrix,
}

pub fn forecast<D: Devolver + ?Sized>(
    model: &D,
    history: &SeriesMatrix,
    schedule: &DiffusionSchedule,
    config: &SamplerConfig,
) -> Result<ForecastRun> {
    let horizon = schedule.horizon();
    if model.horizon() != horizon || history.n_timesteps() != horizon {
        return Err(Error::ShapeMismatch {
            expected: format!("model, schedule and history with T = {horizon}"),
            actual: format!(
                "model T = {}, history length {}",
                model.horizon(),
                history.n_timesteps()
            ),
        });
    }
    let steps = step_sequence(horizon, config.n_steps)?;
    let keep = config.keep_trajectory.unwrap_or(horizon <= TRAJECTORY_HORIZON_LIMIT);
    let mut rng = config.noise_rng();
    let mut trajectory = vec![(horizon, history.clone())];
    let mut state = history.clone();
    for pair in steps.windows(2) {
        let (t, next) = (pair[0], pair[1]);
        state = sample_step(model, &state, t, t - next, schedule, config, &mut rng)?;
        if keep || next == 0 {
            trajectory.push((next, state.clone()));
        }
    }
    Ok(ForecastRun {
        trajectory,
        prediction: state,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_sequences() {
        assert_eq!(step_sequence(96, 4).unwrap(), vec![96, 72, 48, 24, 0]);
        assert_eq!(step_sequence(96, 1).unwrap(), vec![96, 0]);
        assert_eq!(step_sequence(10, 3).unwrap(), vec![10, 7, 4, 0]);
        assert_eq!(step_sequence(5, 5).unwrap(), vec![5, 4, 3, 2, 1, 0]);
        assert!(step_sequence(4, 0).is_err());
        assert!(step_sequence(4, 5).is_err());
    }

    #[test]
    fn sigma_is_zero_without_noise() {
        let s = DiffusionSchedule::with_defaults(8).unwrap();
        let mut cfg = SamplerConfig::default();
        assert_eq!(cfg.sigma(&s, 8, 4), 0.0);
        cfg.add_noise = true;
        assert!(cfg.sigma(&s, 8, 4) > 0.0);
        assert_eq!(cfg.sigma(&s, 8, 8), 0.0);
    }
}
