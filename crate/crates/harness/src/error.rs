use std::path::PathBuf;

/// Harness errors; every message starts with the pipeline stage in brackets.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("[{stage}] {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: armd_core::Error,
    },

    #[error("[core] {0}")]
    Core(#[from] armd_core::Error),

    #[error("[config] line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("[config] invalid value for '{key}': {message}")]
    ConfigValue { key: String, message: String },

    #[error("[grid-search] validation set is empty")]
    EmptyValidation,

    #[error("[evaluate] evaluation set is empty")]
    EmptyEvaluation,

    #[error("[baseline] least-squares normal equations are singular")]
    Singular,

    #[error("[{stage}] {path}: {source}")]
    Io {
        stage: &'static str,
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// The stage tag shown in brackets.
    pub fn stage(&self) -> &'static str {
        match self {
            Error::Stage { stage, .. } | Error::Io { stage, .. } => stage,
            Error::Core(_) => "core",
            Error::Config { .. } | Error::ConfigValue { .. } => "config",
            Error::EmptyValidation => "grid-search",
            Error::EmptyEvaluation => "evaluate",
            Error::Singular => "baseline",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

/// Attaches a stage name to core errors.
pub trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for armd_core::Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|source| Error::Stage { stage, source })
    }
}
