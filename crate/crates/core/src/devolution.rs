//! The linear devolution network.
//!
//! A shared `T x T` linear map predicts the distance `D` from an intermediate
//! state to the future series, independently for each channel. A learned
//! per-step weight `W(t) = sigmoid(logit_t)` then blends `D` with the input:
//!
//! ```text
//! x0_hat = (W(t) x_t + (1 - b W(t)) D) / (1 + c W(t))^d
//! z_hat  = (sqrt(1/abar_t) x_t - x0_hat) / sqrt(1/abar_t - 1)
//! ```
//!
//! Gradients of the L1 trend loss are computed analytically.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::evolution::evolution_trend;
use crate::schedule::DiffusionSchedule;
use crate::series::SeriesMatrix;

/// Smallest accepted value of `1 + c W(t)` when a model is built.
pub const MIN_BALANCE_BASE: f64 = 1e-6;

/// Half-width of the uniform noise added to the identity weight at initialization.
pub const INIT_WEIGHT_NOISE: f64 = 0.01;

/// The fixed constants `b`, `c`, `d` of the balancing step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BalanceParams {
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Default for BalanceParams {
    fn default() -> Self {
        Self { b: 1.5, c: 1.0, d: 1.0 }
    }
}

impl BalanceParams {
    /// The search grid for `(b, c, d)`.
    pub fn grid() -> Vec<BalanceParams> {
        let mut out = Vec::new();
        for b in [1.0, 1.5, 2.0] {
            for c in [-1.0, -0.5, 0.5, 1.0] {
                for d in [0.3, 0.5, 1.0] {
                    out.push(BalanceParams { b, c, d });
                }
            }
        }
        out
    }
}

/// Anything that maps an intermediate state at step `t` to a prediction of the future series.
///
/// The sampler is written against this trait so it can drive test doubles as
/// well as trained models.
pub trait Devolver {
    fn horizon(&self) -> usize;
    fn predict_x0(&self, xt: &SeriesMatrix, t: usize) -> Result<SeriesMatrix>;
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn logit(p: f64) -> f64 {
    p.ln() - (-p).ln_1p()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DevolutionModel {
    horizon: usize,
    /// Row-major `T x T`; row `i` produces distance element `i`.
    weight: Vec<f64>,
    bias: Vec<f64>,
    /// `w_logits[t - 1]` parameterizes `W(t)`.
    w_logits: Vec<f64>,
    balance: BalanceParams,
}

impl DevolutionModel {
    /// Fresh model: identity weight plus `U(-0.01, 0.01)` noise, zero bias,
    /// and `W(t)` initialized to `alpha_bar_t`.
    pub fn new(schedule: &DiffusionSchedule, balance: BalanceParams, seed: u64) -> Result<Self> {
        let horizon = schedule.horizon();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weight = vec![0.0; horizon * horizon];
        for i in 0..horizon {
            for j in 0..horizon {
                let noise = rng.random_range(-INIT_WEIGHT_NOISE..INIT_WEIGHT_NOISE);
                weight[i * horizon + j] = if i == j { 1.0 } else { 0.0 } + noise;
            }
        }
        let w_logits = (1..=horizon).map(|t| logit(schedule.alpha_bar(t))).collect();
        Self::from_parts(horizon, weight, vec![0.0; horizon], w_logits, balance)
    }

    pub fn from_parts(
        horizon: usize,
        weight: Vec<f64>,
        bias: Vec<f64>,
        w_logits: Vec<f64>,
        balance: BalanceParams,
    ) -> Result<Self> {
        if horizon == 0 {
            return Err(invalid("model horizon must be at least 1"));
        }
        let check = |name: &str, v: &[f64], n: usize| -> Result<()> {
            if v.len() != n {
                return Err(Error::ShapeMismatch {
                    expected: format!("{n} {name} entries"),
                    actual: format!("{}", v.len()),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(invalid(format!("{name} contains non-finite values")));
            }
            Ok(())
        };
        check("weight", &weight, horizon * horizon)?;
        check("bias", &bias, horizon)?;
        check("w_logits", &w_logits, horizon)?;
        let BalanceParams { b, c, d } = balance;
        if !(b.is_finite() && c.is_finite() && d.is_finite()) {
            return Err(invalid("balance parameters must be finite"));
        }
        let model = Self {
            horizon,
            weight,
            bias,
            w_logits,
            balance,
        };
        for t in 1..=horizon {
            let base = 1.0 + c * model.step_weight(t);
            if base.is_nan() || base <= MIN_BALANCE_BASE || !base.powf(d).is_normal() {
                return Err(Error::DegenerateBalance { step: t, base });
            }
        }
        Ok(model)
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn weight(&self) -> &[f64] {
        &self.weight
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn w_logits(&self) -> &[f64] {
        &self.w_logits
    }

    pub fn balance(&self) -> BalanceParams {
        self.balance
    }

    pub(crate) fn params_mut(&mut self) -> (&mut [f64], &mut [f64], &mut [f64]) {
        (&mut self.weight, &mut self.bias, &mut self.w_logits)
    }

    /// `W(t)` for `t` in `1..=T`.
    pub fn step_weight(&self, t: usize) -> f64 {
        sigmoid(self.w_logits[t - 1])
    }

    fn check_input(&self, xt: &SeriesMatrix, t: usize) -> Result<()> {
        if xt.n_timesteps() != self.horizon {
            return Err(Error::ShapeMismatch {
                expected: format!("{} timesteps", self.horizon),
                actual: format!("{} timesteps", xt.n_timesteps()),
            });
        }
        if t == 0 || t > self.horizon {
            return Err(Error::StepOutOfRange {
                step: t,
                min: 1,
                max: self.horizon,
            });
        }
        Ok(())
    }

    fn distance_into(&self, x: &[f64], out: &mut [f64]) {
        let n = self.horizon;
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.weight[i * n..(i + 1) * n];
            *o = row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.bias[i];
        }
    }

    /// `D = weight * x + bias` for every channel.
    pub fn distance_head(&self, xt: &SeriesMatrix) -> Result<SeriesMatrix> {
        if xt.n_timesteps() != self.horizon {
            return Err(Error::ShapeMismatch {
                expected: format!("{} timesteps", self.horizon),
                actual: format!("{} timesteps", xt.n_timesteps()),
            });
        }
        let mut out = vec![0.0; xt.as_slice().len()];
        for (x, o) in xt.channels().zip(out.chunks_exact_mut(self.horizon)) {
            self.distance_into(x, o);
        }
        Ok(xt.with_values(out))
    }

    /// `(W(t), 1 + c W(t), (1 + c W(t))^d)`.
    fn balance_terms(&self, t: usize) -> Result<(f64, f64, f64)> {
        let w = self.step_weight(t);
        let base = 1.0 + self.balance.c * w;
        if base <= 0.0 {
            return Err(Error::DegenerateBalance { step: t, base });
        }
        Ok((w, base, base.powf(self.balance.d)))
    }
}

impl Devolver for DevolutionModel {
    fn horizon(&self) -> usize {
        self.horizon
    }

    fn predict_x0(&self, xt: &SeriesMatrix, t: usize) -> Result<SeriesMatrix> {
        self.check_input(xt, t)?;
        let (w, _, denom) = self.balance_terms(t)?;
        let mix = 1.0 - self.balance.b * w;
        let d = self.distance_head(xt)?;
        xt.zip_map(&d, |x, d| (w * x + mix * d) / denom)
    }
}

/// The network's estimate of the future series and of the evolution trend.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionPair {
    pub x0_hat: SeriesMatrix,
    pub z_hat: SeriesMatrix,
}

pub fn predict_trend<D: Devolver + ?Sized>(
    model: &D,
    xt: &SeriesMatrix,
    t: usize,
    schedule: &DiffusionSchedule,
) -> Result<PredictionPair> {
    predict_trend_from_input(model, xt, xt, t, schedule)
}

/// As [`predict_trend`], but the network sees `input` (e.g. a deviated copy of
/// `xt`) while the trend transform uses the clean `xt`.
pub fn predict_trend_from_input<D: Devolver + ?Sized>(
    model: &D,
    input: &SeriesMatrix,
    xt: &SeriesMatrix,
    t: usize,
    schedule: &DiffusionSchedule,
) -> Result<PredictionPair> {
    input.ensure_same_shape(xt)?;
    let x0_hat = model.predict_x0(input, t)?;
    let z_hat = evolution_trend(&x0_hat, xt, t, schedule)?;
    Ok(PredictionPair { x0_hat, z_hat })
}

/// Mean absolute difference over all elements.
pub fn l1_loss(z_true: &SeriesMatrix, z_hat: &SeriesMatrix) -> Result<f64> {
    z_true.ensure_same_shape(z_hat)?;
    let n = z_true.as_slice().len() as f64;
    Ok(z_true
        .as_slice()
        .iter()
        .zip(z_hat.as_slice())
        .map(|(a, b)| (a - b).abs())
        .sum::<f64>()
        / n)
}

/// Gradients with respect to every model parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
    pub w_logits: Vec<f64>,
}

impl Gradients {
    pub fn zeros(horizon: usize) -> Self {
        Self {
            weight: vec![0.0; horizon * horizon],
            bias: vec![0.0; horizon],
            w_logits: vec![0.0; horizon],
        }
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self
            .weight
            .iter_mut()
            .chain(self.bias.iter_mut())
            .chain(self.w_logits.iter_mut())
            .zip(other.weight.iter().chain(&other.bias).chain(&other.w_logits))
        {
            *a += b;
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for g in self
            .weight
            .iter_mut()
            .chain(self.bias.iter_mut())
            .chain(self.w_logits.iter_mut())
        {
            *g *= factor;
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.weight.iter().chain(&self.bias).chain(&self.w_logits).copied()
    }
}

/// Loss and its gradient for one training example.
///
/// The network sees `input`; `xt` is the clean state used in the trend
/// transform; `z_true` is the target trend. Only `w_logits[t - 1]` receives a
/// nonzero gradient. The subgradient of `|.|` at zero is taken as zero.
pub fn backward(
    model: &DevolutionModel,
    input: &SeriesMatrix,
    xt: &SeriesMatrix,
    t: usize,
    z_true: &SeriesMatrix,
    schedule: &DiffusionSchedule,
) -> Result<(f64, Gradients)> {
    model.check_input(input, t)?;
    input.ensure_same_shape(xt)?;
    input.ensure_same_shape(z_true)?;
    let n = model.horizon;
    let (scale, trend_denom) = schedule.trend_coefficients(t)?;
    let (w, base, denom) = model.balance_terms(t)?;
    let BalanceParams { b, c, d } = model.balance;
    let mix = 1.0 - b * w;
    let count = input.as_slice().len() as f64;

    let mut grads = Gradients::zeros(n);
    let mut loss = 0.0;
    let mut dist = vec![0.0; n];
    let mut grad_w = 0.0;
    for ((x, clean), z) in input.channels().zip(xt.channels()).zip(z_true.channels()) {
        model.distance_into(x, &mut dist);
        for i in 0..n {
            let x0_hat = (w * x[i] + mix * dist[i]) / denom;
            let z_hat = (scale * clean[i] - x0_hat) / trend_denom;
            let err = z[i] - z_hat;
            loss += err.abs();
            let sign = if err > 0.0 {
                1.0
            } else if err < 0.0 {
                -1.0
            } else {
                0.0
            };
            if sign == 0.0 {
                continue;
            }
            // dL/dz_hat = -sign / N and dz_hat/dx0_hat = -1 / trend_denom.
            let g_x0 = sign / (count * trend_denom);
            let g_dist = g_x0 * mix / denom;
            grads.bias[i] += g_dist;
            let row = &mut grads.weight[i * n..(i + 1) * n];
            for (g, xj) in row.iter_mut().zip(x) {
                *g += g_dist * xj;
            }
            grad_w += g_x0 * ((x[i] - b * dist[i]) / denom - x0_hat * c * d / base);
        }
    }
    grads.w_logits[t - 1] = grad_w * w * (1.0 - w);
    Ok((loss / count, grads))
}
