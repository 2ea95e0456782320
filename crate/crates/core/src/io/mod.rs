//! Dataset ingestion, normalization, splitting and model persistence.

mod artifact;
mod normalize;
mod split;
mod table;

pub use artifact::{load_model, save_model, ModelArtifact, FORMAT_VERSION, MAGIC};
pub use normalize::{fit_normalizer, NormalizationStats};
pub use split::{chronological_split, SplitSpec};
pub use table::{load_csv, write_loss_curve, write_series_csv};
