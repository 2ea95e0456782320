use crate::error::{invalid, Result};
use crate::series::SeriesMatrix;

/// Chronological train/validation/test fractions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub valid_fraction: f64,
    pub test_fraction: f64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_fraction: 0.70,
            valid_fraction: 0.10,
            test_fraction: 0.20,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        let parts = [self.train_fraction, self.valid_fraction, self.test_fraction];
        if parts.iter().any(|f| f.is_nan() || *f <= 0.0) || (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(invalid(format!("split fractions must be positive and sum to 1, got {parts:?}")));
        }
        Ok(())
    }

    /// `(train, valid, test)` lengths. The two boundaries sit at
    /// `floor(train_fraction * n)` and `floor((train_fraction + valid_fraction) * n)`;
    /// test takes the remainder.
    pub fn lengths(&self, n: usize) -> (usize, usize, usize) {
        // The epsilon keeps e.g. 0.7 * 100 from flooring to 69.
        let boundary = |f: f64| ((f * n as f64 + 1e-9).floor() as usize).min(n);
        let train_end = boundary(self.train_fraction);
        let valid_end = boundary(self.train_fraction + self.valid_fraction).max(train_end);
        (train_end, valid_end - train_end, n - valid_end)
    }
}

/// Contiguous chronological segments; each must hold at least one `2T` window.
pub fn chronological_split(
    series: &SeriesMatrix,
    spec: &SplitSpec,
    horizon: usize,
) -> Result<(SeriesMatrix, SeriesMatrix, SeriesMatrix)> {
    spec.validate()?;
    let (train, valid, test) = spec.lengths(series.n_timesteps());
    let need = 2 * horizon;
    if train.min(valid).min(test) < need {
        return Err(invalid(format!(
            "series of {} timesteps splits into {train}/{valid}/{test}, but every split needs at least 2T = {need}",
            series.n_timesteps()
        )));
    }
    Ok((
        series.columns(0, train)?,
        series.columns(train, train + valid)?,
        series.columns(train + valid, series.n_timesteps())?,
    ))
}
