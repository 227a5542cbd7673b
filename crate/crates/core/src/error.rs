use thiserror::Error;

/// Errors raised by the library. Variants map one-to-one onto the failure
/// classes the CLI distinguishes (usage vs numerical).
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("capacity exceeded: operator dimension {requested} > cap {cap}")]
    Capacity { requested: usize, cap: usize },

    #[error("sampling failed: {0}")]
    Sampling(String),

    #[error("optimization failed: {0}")]
    Optimization(String),

    #[error("frame construction failed: {0}")]
    Frame(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("degenerate post-selection: success weight {0:e}")]
    DegeneratePostSelection(f64),

    #[error("invalid state: {0}")]
    InvalidState(crate::states::ValidationReport),

    /// An error raised inside a named stage of a multi-stage computation.
    #[error("{stage}: {source}")]
    Stage { stage: String, source: Box<Error> },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    /// True for errors caused by bad caller input rather than numerics.
    pub fn is_input_error(&self) -> bool {
        match self {
            Error::Stage { source, .. } => source.is_input_error(),
            e => matches!(
                e,
                Error::Parameter(_) | Error::Dimension(_) | Error::InvalidState(_)
            ),
        }
    }

    pub(crate) fn in_stage(self, stage: &str) -> Self {
        Error::Stage {
            stage: stage.to_string(),
            source: Box::new(self),
        }
    }
}
