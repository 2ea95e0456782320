use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::series::SeriesMatrix;

/// Per-channel z-score statistics, fitted on the training split only.
/// `std` is the population standard deviation (divide by N).
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizationStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

pub fn fit_normalizer(train: &SeriesMatrix) -> Result<NormalizationStats> {
    let n = train.n_timesteps() as f64;
    let mut mean = Vec::with_capacity(train.n_channels());
    let mut std = Vec::with_capacity(train.n_channels());
    for (c, ch) in train.channels().enumerate() {
        if ch.iter().all(|&v| v == ch[0]) {
            return Err(Error::ConstantChannel(train.channel_names()[c].clone()));
        }
        let m = ch.iter().sum::<f64>() / n;
        let var = ch.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
        mean.push(m);
        std.push(var.sqrt());
    }
    Ok(NormalizationStats { mean, std })
}

impl NormalizationStats {
    pub fn n_channels(&self) -> usize {
        self.mean.len()
    }

    fn check(&self, series: &SeriesMatrix) -> Result<()> {
        if series.n_channels() != self.mean.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} channels", self.mean.len()),
                actual: format!("{} channels", series.n_channels()),
            });
        }
        Ok(())
    }

    pub fn normalize(&self, series: &SeriesMatrix) -> Result<SeriesMatrix> {
        self.check(series)?;
        let n = series.n_timesteps();
        let values = series
            .as_slice()
            .iter()
            .enumerate()
            .map(|(i, v)| (v - self.mean[i / n]) / self.std[i / n])
            .collect();
        Ok(series.with_values(values))
    }

    pub fn denormalize(&self, series: &SeriesMatrix) -> Result<SeriesMatrix> {
        self.check(series)?;
        let n = series.n_timesteps();
        let values = series
            .as_slice()
            .iter()
            .enumerate()
            .map(|(i, v)| v * self.std[i / n] + self.mean[i / n])
            .collect();
        Ok(series.with_values(values))
    }

    /// A 64-bit digest of the exact bits of the statistics.
    pub fn fingerprint(&self) -> u64 {
        let mut h = Sha256::new();
        for v in self.mean.iter().chain(&self.std) {
            h.update(v.to_le_bytes());
        }
        let digest = h.finalize();
        u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
    }
}
