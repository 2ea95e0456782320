//! Seasonal toy data: a period-48 sinusoid plus a linear trend and Gaussian noise.

use std::path::Path;

use armd_core::SeriesMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub n_timesteps: usize,
    pub n_channels: usize,
    pub period: f64,
    pub trend_per_step: f64,
    pub noise_std: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            n_timesteps: 5000,
            n_channels: 3,
            period: 48.0,
            trend_per_step: 2e-4,
            noise_std: 0.1,
            seed: 7,
        }
    }
}

pub fn generate(config: &SyntheticConfig) -> Result<SeriesMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let noise = Normal::new(0.0, config.noise_std).map_err(|e| Error::ConfigValue {
        key: "noise_std".into(),
        message: e.to_string(),
    })?;
    let mut channels = Vec::with_capacity(config.n_channels);
    for c in 0..config.n_channels {
        let amp = 1.0 + 0.25 * c as f64;
        let phase = c as f64;
        let slope = config.trend_per_step * if c % 2 == 0 { 1.0 } else { -1.0 };
        channels.push(
            (0..config.n_timesteps)
                .map(|i| {
                    let x = i as f64;
                    amp * (std::f64::consts::TAU * x / config.period + phase).sin()
                        + slope * x
                        + noise.sample(&mut rng)
                })
                .collect(),
        );
    }
    let names = (0..config.n_channels).map(|c| format!("s{c}")).collect();
    Ok(SeriesMatrix::from_channels(channels, Some(names))?)
}

/// CSV text with a leading integer `timestamp` column.
pub fn to_csv(series: &SeriesMatrix) -> String {
    let mut out = String::from("timestamp");
    for name in series.channel_names() {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for t in 0..series.n_timesteps() {
        out.push_str(&t.to_string());
        for c in 0..series.n_channels() {
            out.push(',');
            out.push_str(&series.get(c, t).to_string());
        }
        out.push('\n');
    }
    out
}

pub fn write_csv(path: &Path, series: &SeriesMatrix) -> Result<()> {
    std::fs::write(path, to_csv(series)).map_err(|source| Error::Io {
        stage: "report",
        path: path.to_path_buf(),
        source,
    })
}
