#![allow(dead_code)]

use std::cell::RefCell;

use armd_core::devolution::predict_trend_from_input;
use armd_core::{
    l1_loss, BalanceParams, DevolutionModel, Devolver, DiffusionSchedule, Result, SeriesMatrix,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_series(rng: &mut ChaCha8Rng, channels: usize, len: usize, scale: f64) -> SeriesMatrix {
    let chans = (0..channels)
        .map(|_| (0..len).map(|_| rng.random_range(-scale..scale)).collect())
        .collect();
    SeriesMatrix::from_channels(chans, None).unwrap()
}

/// A model with every parameter drawn at random, balance drawn from the search grid.
pub fn random_model(rng: &mut ChaCha8Rng, schedule: &DiffusionSchedule) -> DevolutionModel {
    let n = schedule.horizon();
    let grid = BalanceParams::grid();
    loop {
        let balance = grid[rng.random_range(0..grid.len())];
        let weight = (0..n * n).map(|_| rng.random_range(-0.5..0.5)).collect();
        let bias = (0..n).map(|_| rng.random_range(-0.5..0.5)).collect();
        let logits = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        if let Ok(m) = DevolutionModel::from_parts(n, weight, bias, logits, balance) {
            return m;
        }
    }
}

/// Loss evaluated through the forward path only.
pub fn forward_loss(
    model: &DevolutionModel,
    input: &SeriesMatrix,
    xt: &SeriesMatrix,
    t: usize,
    z: &SeriesMatrix,
    schedule: &DiffusionSchedule,
) -> f64 {
    let pair = predict_trend_from_input(model, input, xt, t, schedule).unwrap();
    l1_loss(z, &pair.z_hat).unwrap()
}

/// The residual signs `sign(z - z_hat)` of a forward pass.
pub fn residual_signs(
    model: &DevolutionModel,
    input: &SeriesMatrix,
    xt: &SeriesMatrix,
    t: usize,
    z: &SeriesMatrix,
    schedule: &DiffusionSchedule,
) -> (Vec<bool>, f64) {
    let pair = predict_trend_from_input(model, input, xt, t, schedule).unwrap();
    let res: Vec<f64> = z.as_slice().iter().zip(pair.z_hat.as_slice()).map(|(a, b)| a - b).collect();
    let margin = res.iter().map(|r| r.abs()).fold(f64::INFINITY, f64::min);
    (res.iter().map(|r| *r > 0.0).collect(), margin)
}

fn rebuild(model: &DevolutionModel, group: usize, idx: usize, delta: f64) -> DevolutionModel {
    let mut w = model.weight().to_vec();
    let mut b = model.bias().to_vec();
    let mut l = model.w_logits().to_vec();
    match group {
        0 => w[idx] += delta,
        1 => b[idx] += delta,
        _ => l[idx] += delta,
    }
    DevolutionModel::from_parts(model.horizon(), w, b, l, model.balance()).unwrap()
}

/// Central finite differences of the forward loss with respect to every
/// parameter, in the order weight, bias, w_logits. Returns `None` if any
/// perturbation flips the sign of a residual (the loss is not smooth there).
pub fn finite_difference_gradient(
    model: &DevolutionModel,
    input: &SeriesMatrix,
    xt: &SeriesMatrix,
    t: usize,
    z: &SeriesMatrix,
    schedule: &DiffusionSchedule,
    h: f64,
) -> Option<Vec<f64>> {
    let (base_signs, _) = residual_signs(model, input, xt, t, z, schedule);
    let sizes = [model.weight().len(), model.bias().len(), model.w_logits().len()];
    let mut out = Vec::new();
    for (group, &size) in sizes.iter().enumerate() {
        for idx in 0..size {
            let plus = rebuild(model, group, idx, h);
            let minus = rebuild(model, group, idx, -h);
            for m in [&plus, &minus] {
                if residual_signs(m, input, xt, t, z, schedule).0 != base_signs {
                    return None;
                }
            }
            let lp = forward_loss(&plus, input, xt, t, z, schedule);
            let lm = forward_loss(&minus, input, xt, t, z, schedule);
            out.push((lp - lm) / (2.0 * h));
        }
    }
    Some(out)
}

/// Relative error whose denominator is floored at `1e-6 * max(1, loss)`.
/// Gradients that cancel to exactly zero would otherwise be compared against
/// pure finite-difference rounding noise (about `eps * loss / h`).
pub fn relative_error(analytic: f64, numeric: f64, loss: f64) -> f64 {
    let floor = 1e-6 * loss.max(1.0);
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
}

/// Returns the true future for whichever history the current forecast started from.
pub struct OracleDevolver {
    horizon: usize,
    pairs: Vec<(SeriesMatrix, SeriesMatrix)>,
    current: RefCell<Option<usize>>,
}

impl OracleDevolver {
    pub fn new(pairs: Vec<(SeriesMatrix, SeriesMatrix)>) -> Self {
        let horizon = pairs[0].0.n_timesteps();
        Self {
            horizon,
            pairs,
            current: RefCell::new(None),
        }
    }
}

impl Devolver for OracleDevolver {
    fn horizon(&self) -> usize {
        self.horizon
    }

    fn predict_x0(&self, xt: &SeriesMatrix, t: usize) -> Result<SeriesMatrix> {
        if t == self.horizon {
            let idx = self.pairs.iter().position(|(h, _)| h.bit_eq(xt)).expect("unknown history");
            *self.current.borrow_mut() = Some(idx);
        }
        let idx = self.current.borrow().expect("forecast must start at t = T");
        Ok(self.pairs[idx].1.clone())
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
