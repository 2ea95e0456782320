use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// A multivariate series stored channel-major: `values[c * n_timesteps + t]`.
///
/// Every constructor that takes external data checks that the matrix is
/// non-empty and finite.
#[derive(Clone, PartialEq)]
pub struct SeriesMatrix {
    n_channels: usize,
    n_timesteps: usize,
    values: Vec<f64>,
    channel_names: Arc<[String]>,
}

impl SeriesMatrix {
    /// Builds a matrix from one vector per channel.
    pub fn from_channels(channels: Vec<Vec<f64>>, channel_names: Option<Vec<String>>) -> Result<Self> {
        let n_channels = channels.len();
        if n_channels == 0 {
            return Err(Error::InvalidArgument("series needs at least one channel".into()));
        }
        let n_timesteps = channels[0].len();
        if let Some(bad) = channels.iter().position(|c| c.len() != n_timesteps) {
            return Err(Error::ShapeMismatch {
                expected: format!("{n_timesteps} timesteps in every channel"),
                actual: format!("{} timesteps in channel {bad}", channels[bad].len()),
            });
        }
        let values = channels.into_iter().flatten().collect();
        Self::from_flat(n_channels, n_timesteps, values, channel_names)
    }

    /// Builds a matrix from channel-major flat storage.
    pub fn from_flat(
        n_channels: usize,
        n_timesteps: usize,
        values: Vec<f64>,
        channel_names: Option<Vec<String>>,
    ) -> Result<Self> {
        if n_channels == 0 || n_timesteps == 0 {
            return Err(Error::InvalidArgument(format!(
                "series must be at least 1x1, got {n_channels}x{n_timesteps}"
            )));
        }
        if values.len() != n_channels * n_timesteps {
            return Err(Error::ShapeMismatch {
                expected: format!("{} values", n_channels * n_timesteps),
                actual: format!("{} values", values.len()),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                channel: i / n_timesteps,
                timestep: i % n_timesteps,
            });
        }
        let names = match channel_names {
            Some(names) if names.len() != n_channels => {
                return Err(Error::ShapeMismatch {
                    expected: format!("{n_channels} channel names"),
                    actual: format!("{} channel names", names.len()),
                })
            }
            Some(names) => names.into(),
            None => default_names(n_channels),
        };
        Ok(Self {
            n_channels,
            n_timesteps,
            values,
            channel_names: names,
        })
    }

    /// A matrix of the same shape and names as `self`, filled from `values`.
    /// Used on internal arithmetic results, which are finite whenever the inputs are.
    pub(crate) fn with_values(&self, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), self.values.len());
        Self {
            n_channels: self.n_channels,
            n_timesteps: self.n_timesteps,
            values,
            channel_names: Arc::clone(&self.channel_names),
        }
    }

    pub fn filled(n_channels: usize, n_timesteps: usize, value: f64) -> Result<Self> {
        Self::from_flat(n_channels, n_timesteps, vec![value; n_channels * n_timesteps], None)
    }

    pub fn n_channels(&self) -> usize {
        self.n_channels
    }

    pub fn n_timesteps(&self) -> usize {
        self.n_timesteps
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_channels, self.n_timesteps)
    }

    pub fn channel_names(&self) -> &[String] {
        &self.channel_names
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        &self.values[c * self.n_timesteps..(c + 1) * self.n_timesteps]
    }

    pub fn channels(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.n_timesteps)
    }

    pub fn get(&self, channel: usize, timestep: usize) -> f64 {
        self.values[channel * self.n_timesteps + timestep]
    }

    /// Columns `start..end` of every channel.
    pub fn columns(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.n_timesteps {
            return Err(Error::InvalidArgument(format!(
                "column range {start}..{end} invalid for {} timesteps",
                self.n_timesteps
            )));
        }
        let width = end - start;
        let mut values = Vec::with_capacity(self.n_channels * width);
        for ch in self.channels() {
            values.extend_from_slice(&ch[start..end]);
        }
        Ok(Self {
            n_channels: self.n_channels,
            n_timesteps: width,
            values,
            channel_names: Arc::clone(&self.channel_names),
        })
    }

    /// The last `n` columns.
    pub fn tail(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.n_timesteps {
            return Err(Error::InvalidArgument(format!(
                "cannot take the last {n} of {} timesteps",
                self.n_timesteps
            )));
        }
        self.columns(self.n_timesteps - n, self.n_timesteps)
    }

    /// Channels reordered so that output channel `i` is input channel `order[i]`.
    pub fn select_channels(&self, order: &[usize]) -> Result<Self> {
        let mut values = Vec::with_capacity(order.len() * self.n_timesteps);
        let mut names = Vec::with_capacity(order.len());
        for &c in order {
            if c >= self.n_channels {
                return Err(Error::InvalidArgument(format!("channel {c} out of range")));
            }
            values.extend_from_slice(self.channel(c));
            names.push(self.channel_names[c].clone());
        }
        Self::from_flat(order.len(), self.n_timesteps, values, Some(names))
    }

    pub fn ensure_same_shape(&self, other: &Self) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch {
                expected: format!("{}x{}", self.n_channels, self.n_timesteps),
                actual: format!("{}x{}", other.n_channels, other.n_timesteps),
            });
        }
        Ok(())
    }

    /// Elementwise `f(self, other)`.
    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.ensure_same_shape(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(self.with_values(values))
    }

    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Self {
        self.with_values(self.values.iter().map(|&v| f(v)).collect())
    }

    /// Largest absolute elementwise difference.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.ensure_same_shape(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// Bit-level equality of the values (distinguishes `0.0` from `-0.0`).
    pub fn bit_eq(&self, other: &Self) -> bool {
        self.shape() == other.shape()
            && self
                .values
                .iter()
                .zip(&other.values)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

fn default_names(n: usize) -> Arc<[String]> {
    (0..n).map(|i| format!("ch{i}")).collect::<Vec<_>>().into()
}

impl fmt::Debug for SeriesMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SeriesMatrix")
            .field("shape", &(self.n_channels, self.n_timesteps))
            .field("channel_names", &self.channel_names)
            .field("values", &self.values)
            .finish()
    }
}
