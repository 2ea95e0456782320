//! Forward evolution: intermediate states obtained by sliding the window
//! toward the past, the evolution trend that makes the closed-form forward
//! relation exact, and the training-time deviation on network inputs.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Result};
use crate::schedule::DiffusionSchedule;
use crate::series::SeriesMatrix;
use crate::window::WindowSample;

/// The length-`T` slice at step `from_step + k`: the window moved `from_step + k`
/// steps from the future toward the history. `slide(s, 0, step)` is the step slice itself.
pub fn slide(sample: &WindowSample, k: usize, from_step: usize) -> Result<SeriesMatrix> {
    let horizon = sample.horizon();
    let step = from_step + k;
    if step > horizon {
        return Err(invalid(format!(
            "sliding {k} steps from step {from_step} leaves the 2T context (T = {horizon})"
        )));
    }
    sample.context().columns(horizon - step, 2 * horizon - step)
}

/// `z^t = (sqrt(1/abar_t) x_t - x_0) / sqrt(1/abar_t - 1)`.
pub fn evolution_trend(
    x0: &SeriesMatrix,
    xt: &SeriesMatrix,
    t: usize,
    schedule: &DiffusionSchedule,
) -> Result<SeriesMatrix> {
    let (scale, denom) = schedule.trend_coefficients(t)?;
    xt.zip_map(x0, |xt, x0| (scale * xt - x0) / denom)
}

/// A diffused training state and its ground-truth evolution trend.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusedState {
    pub step: usize,
    pub values: SeriesMatrix,
    pub trend: SeriesMatrix,
}

pub fn diffuse(sample: &WindowSample, t: usize, schedule: &DiffusionSchedule) -> Result<DiffusedState> {
    schedule.check_step(t, 1)?;
    let values = slide(sample, t, 0)?;
    let trend = evolution_trend(&sample.future(), &values, t, schedule)?;
    Ok(DiffusedState { step: t, values, trend })
}

/// Ablation variant: `X^0 + (X^T - X^0) t / T`, evaluated as the convex
/// combination `(1 - w) X^0 + w X^T` so both endpoints are reproduced exactly.
pub fn interpolate_state(sample: &WindowSample, t: usize) -> Result<SeriesMatrix> {
    let horizon = sample.horizon();
    if t > horizon {
        return Err(invalid(format!("interpolation step {t} exceeds T = {horizon}")));
    }
    let w = t as f64 / horizon as f64;
    sample
        .future()
        .zip_map(&sample.history(), |x0, xh| (1.0 - w) * x0 + w * xh)
}

/// How intermediate states are generated during training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StateGenerator {
    #[default]
    Sliding,
    Interpolation,
}

impl StateGenerator {
    pub fn state(self, sample: &WindowSample, t: usize) -> Result<SeriesMatrix> {
        match self {
            StateGenerator::Sliding => slide(sample, t, 0),
            StateGenerator::Interpolation => interpolate_state(sample, t),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            StateGenerator::Sliding => "sliding",
            StateGenerator::Interpolation => "interpolation",
        }
    }
}

impl std::str::FromStr for StateGenerator {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sliding" => Ok(Self::Sliding),
            "interpolation" => Ok(Self::Interpolation),
            other => Err(invalid(format!("unknown state generator '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DeviationConfig {
    pub enabled: bool,
    pub seed: u64,
}

impl Default for DeviationConfig {
    fn default() -> Self {
        Self { enabled: true, seed: 0 }
    }
}

impl DeviationConfig {
    /// The noise stream for this configuration.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(DEVIATION_STREAM);
        rng
    }
}

const DEVIATION_STREAM: u64 = 0xde71;

/// `x_t + abar_t * eps` with `eps ~ N(0, I)`; the identity when deviation is disabled.
pub fn apply_deviation<R: Rng + ?Sized>(
    xt: &SeriesMatrix,
    t: usize,
    schedule: &DiffusionSchedule,
    config: &DeviationConfig,
    rng: &mut R,
) -> Result<SeriesMatrix> {
    schedule.check_step(t, 1)?;
    if !config.enabled {
        return Ok(xt.clone());
    }
    let scale = schedule.alpha_bar(t);
    Ok(xt.map(|v| {
        let eps: f64 = rng.sample(StandardNormal);
        v + scale * eps
    }))
}
