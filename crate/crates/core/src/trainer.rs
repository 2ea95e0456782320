//! The training loop: sample windows and steps, build diffused states and
//! their trend targets, perturb the network input, and take Adam steps on the
//! L1 trend loss.

use std::time::Instant;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::devolution::{backward, BalanceParams, DevolutionModel, Gradients};
use crate::error::{invalid, Error, Result};
use crate::evolution::{apply_deviation, evolution_trend, DeviationConfig, StateGenerator};
use crate::optim::{adam_step, AdamConfig, AdamState};
use crate::schedule::DiffusionSchedule;
use crate::window::WindowSample;

const INIT_STREAM: u64 = 1;
const BATCH_STREAM: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub iterations: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub seed: u64,
    pub deviation: DeviationConfig,
    pub state_generator: StateGenerator,
    pub balance: BalanceParams,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let adam = AdamConfig::default();
        Self {
            iterations: 2000,
            batch_size: 128,
            learning_rate: adam.learning_rate,
            adam_beta1: adam.beta1,
            adam_beta2: adam.beta2,
            adam_eps: adam.eps,
            seed: 0,
            deviation: DeviationConfig::default(),
            state_generator: StateGenerator::Sliding,
            balance: BalanceParams::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(invalid("iterations must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(invalid("batch_size must be at least 1"));
        }
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 {
            return Err(invalid("learning_rate must be positive"));
        }
        if !(0.0..1.0).contains(&self.adam_beta1) || !(0.0..1.0).contains(&self.adam_beta2) {
            return Err(invalid("adam betas must lie in [0, 1)"));
        }
        if self.adam_eps.is_nan() || self.adam_eps <= 0.0 {
            return Err(invalid("adam_eps must be positive"));
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.adam_beta1,
            beta2: self.adam_beta2,
            eps: self.adam_eps,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// Mean batch loss at each iteration, before that iteration's update.
    pub loss_curve: Vec<f64>,
    pub wall_time: f64,
    pub final_loss: f64,
}

pub fn train(
    dataset: &[WindowSample],
    schedule: &DiffusionSchedule,
    config: &TrainConfig,
) -> Result<(DevolutionModel, TrainReport)> {
    train_with_checkpoints(dataset, schedule, config, 0, |_, _| Ok(()))
}

/// [`train`], calling `checkpoint(iteration, model)` after every
/// `checkpoint_every` iterations (never when it is 0).
pub fn train_with_checkpoints<F>(
    dataset: &[WindowSample],
    schedule: &DiffusionSchedule,
    config: &TrainConfig,
    checkpoint_every: usize,
    mut checkpoint: F,
) -> Result<(DevolutionModel, TrainReport)>
where
    F: FnMut(usize, &DevolutionModel) -> Result<()>,
{
    config.validate()?;
    let first = dataset.first().ok_or(Error::EmptyDataset)?;
    let horizon = schedule.horizon();
    for s in dataset {
        if s.horizon() != horizon || s.context().n_channels() != first.context().n_channels() {
            return Err(Error::ShapeMismatch {
                expected: format!("windows with T = {horizon} and {} channels", first.context().n_channels()),
                actual: format!("T = {} with {} channels", s.horizon(), s.context().n_channels()),
            });
        }
    }

    let started = Instant::now();
    let mut init_rng = ChaCha8Rng::seed_from_u64(config.seed);
    init_rng.set_stream(INIT_STREAM);
    let mut model = DevolutionModel::new(schedule, config.balance, init_rng.random())?;
    let mut batch_rng = ChaCha8Rng::seed_from_u64(config.seed);
    batch_rng.set_stream(BATCH_STREAM);
    let mut noise_rng = config.deviation.rng();

    let adam = config.adam();
    let mut states = [
        AdamState::new(horizon * horizon),
        AdamState::new(horizon),
        AdamState::new(horizon),
    ];
    let mut loss_curve = Vec::with_capacity(config.iterations);

    for iteration in 1..=config.iterations {
        let mut grads = Gradients::zeros(horizon);
        let mut batch_loss = 0.0;
        for _ in 0..config.batch_size {
            let sample = &dataset[batch_rng.random_range(0..dataset.len())];
            let t = batch_rng.random_range(1..=horizon);
            let xt = config.state_generator.state(sample, t)?;
            let target = evolution_trend(&sample.future(), &xt, t, schedule)?;
            let input = apply_deviation(&xt, t, schedule, &config.deviation, &mut noise_rng)?;
            let (loss, g) = backward(&model, &input, &xt, t, &target, schedule)?;
            grads.add_assign(&g);
            batch_loss += loss;
        }
        let inv = 1.0 / config.batch_size as f64;
        grads.scale(inv);
        loss_curve.push(batch_loss * inv);

        let (weight, bias, logits) = model.params_mut();
        adam_step(weight, &grads.weight, &mut states[0], &adam);
        adam_step(bias, &grads.bias, &mut states[1], &adam);
        adam_step(logits, &grads.w_logits, &mut states[2], &adam);

        if checkpoint_every > 0 && iteration % checkpoint_every == 0 {
            checkpoint(iteration, &model)?;
        }
    }

    let final_loss = *loss_curve.last().expect("at least one iteration");
    Ok((
        model,
        TrainReport {
            loss_curve,
            wall_time: started.elapsed().as_secs_f64(),
            final_loss,
        },
    ))
}
