use crate::error::{invalid, Error, Result};
use crate::series::SeriesMatrix;

/// A `2T`-column slice of a series: the first `T` columns are the history
/// (relative times `-T+1..=0`), the last `T` the future (`1..=T`).
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSample {
    context: SeriesMatrix,
    horizon: usize,
    origin_index: usize,
}

impl WindowSample {
    pub fn new(context: SeriesMatrix, origin_index: usize) -> Result<Self> {
        let len = context.n_timesteps();
        if len < 2 || !len.is_multiple_of(2) {
            return Err(invalid(format!("window context must have even length 2T, got {len}")));
        }
        Ok(Self {
            horizon: len / 2,
            context,
            origin_index,
        })
    }

    /// Builds a sample from a separate history and future of equal length.
    pub fn from_parts(history: &SeriesMatrix, future: &SeriesMatrix) -> Result<Self> {
        if history.shape() != future.shape() {
            return Err(Error::ShapeMismatch {
                expected: format!("{:?}", history.shape()),
                actual: format!("{:?}", future.shape()),
            });
        }
        let mut values = Vec::with_capacity(2 * history.as_slice().len());
        for (h, f) in history.channels().zip(future.channels()) {
            values.extend_from_slice(h);
            values.extend_from_slice(f);
        }
        let context = SeriesMatrix::from_flat(
            history.n_channels(),
            2 * history.n_timesteps(),
            values,
            Some(history.channel_names().to_vec()),
        )?;
        Self::new(context, history.n_timesteps() - 1)
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn context(&self) -> &SeriesMatrix {
        &self.context
    }

    /// Absolute index (in the source series) of relative time 0, the last history step.
    pub fn origin_index(&self) -> usize {
        self.origin_index
    }

    /// Absolute index of the first context column.
    pub fn start_index(&self) -> usize {
        self.origin_index + 1 - self.horizon
    }

    pub fn history(&self) -> SeriesMatrix {
        self.context.columns(0, self.horizon).expect("history within context")
    }

    pub fn future(&self) -> SeriesMatrix {
        self.context
            .columns(self.horizon, 2 * self.horizon)
            .expect("future within context")
    }
}

/// Every `2T` window starting at offsets `0, stride, 2*stride, ...` that fits
/// inside `series`. Returns an empty list when the series is shorter than `2T`.
pub fn make_window_samples(series: &SeriesMatrix, horizon: usize, stride: usize) -> Result<Vec<WindowSample>> {
    if horizon == 0 {
        return Err(invalid("horizon must be at least 1"));
    }
    if stride == 0 {
        return Err(invalid("stride must be at least 1"));
    }
    let len = 2 * horizon;
    if series.n_timesteps() < len {
        return Ok(Vec::new());
    }
    (0..=series.n_timesteps() - len)
        .step_by(stride)
        .map(|offset| WindowSample::new(series.columns(offset, offset + len)?, offset + horizon - 1))
        .collect()
}
