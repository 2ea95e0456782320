//! `key = value` experiment configuration.
//!
//! Blank lines and `#` comments are ignored. Unknown keys are errors so that
//! typos do not silently fall back to defaults.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use armd_core::io::SplitSpec;
use armd_core::{BalanceParams, DiffusionSchedule, SamplerConfig, StateGenerator, TrainConfig, SAMPLING_STEP_GRID};

use crate::error::{Error, Result, StageExt};

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub dataset: PathBuf,
    pub output_dir: PathBuf,
    pub horizon: usize,
    pub beta_start: f64,
    pub beta_end: f64,
    /// Per-repeat seeds are `seed, seed + 1, ...`.
    pub train: TrainConfig,
    pub split: SplitSpec,
    pub sampling_grid: Vec<usize>,
    pub add_sampling_noise: bool,
    pub noise_fraction: f64,
    pub n_repeats: usize,
    pub train_stride: usize,
    pub eval_stride: usize,
    /// Write a model checkpoint every this many iterations; 0 disables.
    pub checkpoint_every: usize,
    /// Write predictions for every this-many-th test window; 0 means every `T`-th.
    pub prediction_every: usize,
    /// Choose the balance parameters by validation MSE over the full grid.
    pub balance_search: bool,
    /// Also fit the naive and least-squares baselines.
    pub baselines: bool,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        let sampler = SamplerConfig::default();
        Self {
            dataset: PathBuf::new(),
            output_dir: PathBuf::from("armd-output"),
            horizon: 96,
            beta_start: 1e-4,
            beta_end: 0.02,
            train: TrainConfig::default(),
            split: SplitSpec::default(),
            sampling_grid: SAMPLING_STEP_GRID.to_vec(),
            add_sampling_noise: false,
            noise_fraction: sampler.noise_fraction,
            n_repeats: 10,
            train_stride: 1,
            eval_stride: 1,
            checkpoint_every: 0,
            prediction_every: 0,
            balance_search: false,
            baselines: true,
        }
    }
}

/// Every accepted key, in documentation order.
pub const KEYS: &[&str] = &[
    "dataset",
    "output_dir",
    "horizon",
    "beta_start",
    "beta_end",
    "iterations",
    "batch_size",
    "learning_rate",
    "adam_beta1",
    "adam_beta2",
    "adam_eps",
    "seed",
    "hyper_b",
    "hyper_c",
    "hyper_d",
    "interpolation_states",
    "remove_deviation",
    "add_sampling_noise",
    "noise_fraction",
    "sampling_steps",
    "n_repeats",
    "train_fraction",
    "valid_fraction",
    "test_fraction",
    "train_stride",
    "eval_stride",
    "checkpoint_every",
    "prediction_every",
    "balance_search",
    "baselines",
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e: T::Err| Error::ConfigValue {
        key: key.to_string(),
        message: format!("'{value}': {e}"),
    })
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(Error::ConfigValue {
            key: key.to_string(),
            message: format!("'{value}' is not a boolean"),
        }),
    }
}

impl ExperimentSpec {
    /// Reads a spec file; a relative `dataset` or `output_dir` resolves against the file's directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            stage: "config",
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        Self::parse(&text, base)
    }

    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut spec = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Config {
                line: i + 1,
                message: format!("expected key = value, got '{line}'"),
            })?;
            spec.set(key.trim(), value.trim()).map_err(|e| Error::Config {
                line: i + 1,
                message: match e {
                    Error::ConfigValue { key, message } => format!("invalid value for '{key}': {message}"),
                    other => other.to_string(),
                },
            })?;
        }
        for p in [&mut spec.dataset, &mut spec.output_dir] {
            if p.is_relative() && !p.as_os_str().is_empty() {
                *p = base_dir.join(&*p);
            }
        }
        Ok(spec)
    }

    /// Applies one `key=value` override.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let t = &mut self.train;
        match key {
            "dataset" => self.dataset = PathBuf::from(value),
            "output_dir" => self.output_dir = PathBuf::from(value),
            "horizon" => self.horizon = parse(key, value)?,
            "beta_start" => self.beta_start = parse(key, value)?,
            "beta_end" => self.beta_end = parse(key, value)?,
            "iterations" => t.iterations = parse(key, value)?,
            "batch_size" => t.batch_size = parse(key, value)?,
            "learning_rate" => t.learning_rate = parse(key, value)?,
            "adam_beta1" => t.adam_beta1 = parse(key, value)?,
            "adam_beta2" => t.adam_beta2 = parse(key, value)?,
            "adam_eps" => t.adam_eps = parse(key, value)?,
            "seed" => t.seed = parse(key, value)?,
            "hyper_b" => t.balance.b = parse(key, value)?,
            "hyper_c" => t.balance.c = parse(key, value)?,
            "hyper_d" => t.balance.d = parse(key, value)?,
            "interpolation_states" => {
                t.state_generator = if parse_bool(key, value)? {
                    StateGenerator::Interpolation
                } else {
                    StateGenerator::Sliding
                }
            }
            "remove_deviation" => t.deviation.enabled = !parse_bool(key, value)?,
            "add_sampling_noise" => self.add_sampling_noise = parse_bool(key, value)?,
            "noise_fraction" => self.noise_fraction = parse(key, value)?,
            "sampling_steps" => {
                self.sampling_grid = value
                    .split(',')
                    .map(|v| parse(key, v.trim()))
                    .collect::<Result<_>>()?
            }
            "n_repeats" => self.n_repeats = parse(key, value)?,
            "train_fraction" => self.split.train_fraction = parse(key, value)?,
            "valid_fraction" => self.split.valid_fraction = parse(key, value)?,
            "test_fraction" => self.split.test_fraction = parse(key, value)?,
            "train_stride" => self.train_stride = parse(key, value)?,
            "eval_stride" => self.eval_stride = parse(key, value)?,
            "checkpoint_every" => self.checkpoint_every = parse(key, value)?,
            "prediction_every" => self.prediction_every = parse(key, value)?,
            "balance_search" => self.balance_search = parse_bool(key, value)?,
            "baselines" => self.baselines = parse_bool(key, value)?,
            _ => {
                return Err(Error::ConfigValue {
                    key: key.to_string(),
                    message: "unknown key".into(),
                })
            }
        }
        Ok(())
    }

    /// Applies `key=value` strings in order.
    pub fn apply_overrides<S: AsRef<str>>(&mut self, overrides: &[S]) -> Result<()> {
        for o in overrides {
            let o = o.as_ref();
            let (k, v) = o.split_once('=').ok_or_else(|| Error::ConfigValue {
                key: o.to_string(),
                message: "override must look like key=value".into(),
            })?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    pub fn schedule(&self) -> Result<DiffusionSchedule> {
        DiffusionSchedule::new(self.horizon, self.beta_start, self.beta_end).stage("config")
    }

    pub fn balance(&self) -> BalanceParams {
        self.train.balance
    }

    /// Sampler settings apart from the step count.
    pub fn sampler(&self, n_steps: usize) -> SamplerConfig {
        SamplerConfig {
            n_steps,
            add_noise: self.add_sampling_noise,
            noise_fraction: self.noise_fraction,
            seed: self.train.seed,
            keep_trajectory: Some(false),
        }
    }

    /// Training configuration for one repeat.
    pub fn train_config(&self, seed: u64) -> TrainConfig {
        let mut cfg = self.train;
        cfg.seed = seed;
        cfg.deviation.seed = seed;
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, message: &str| Error::ConfigValue {
            key: key.into(),
            message: message.into(),
        };
        if self.dataset.as_os_str().is_empty() {
            return Err(bad("dataset", "missing"));
        }
        if self.n_repeats == 0 {
            return Err(bad("n_repeats", "must be at least 1"));
        }
        if self.train_stride == 0 || self.eval_stride == 0 {
            return Err(bad("train_stride", "strides must be at least 1"));
        }
        if self.sampling_grid.is_empty() || self.sampling_grid.contains(&0) {
            return Err(bad("sampling_steps", "needs positive step counts"));
        }
        if !(0.0..=1.0).contains(&self.noise_fraction) {
            return Err(bad("noise_fraction", "must lie in [0, 1]"));
        }
        self.schedule()?;
        self.split.validate().stage("config")?;
        self.train.validate().stage("config")?;
        Ok(())
    }
}
