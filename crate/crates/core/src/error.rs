use alloc::string::String;

/// Errors raised by the numeric engine.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch in {context}: {detail}")]
    Shape { context: String, detail: String },

    #[error("non-finite value in {context}")]
    NonFinite { context: String },

    #[error("invalid {what}: {detail}")]
    Invalid { what: &'static str, detail: String },

    #[error("layer `{layer}` collapses axis {axis} to a non-positive extent")]
    ExtentCollapse { layer: String, axis: usize },

    #[error("forward cache is stale (model revision {expected}, cache revision {found})")]
    StaleCache { expected: u64, found: u64 },

    #[error("non-finite training loss at iteration {iteration}")]
    NonFiniteLoss { iteration: usize },
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

impl Error {
    pub(crate) fn shape(context: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Shape {
            context: context.into(),
            detail: detail.into(),
        }
    }

    pub(crate) fn invalid(what: &'static str, detail: impl Into<String>) -> Self {
        Error::Invalid {
            what,
            detail: detail.into(),
        }
    }

    pub(crate) fn non_finite(context: impl Into<String>) -> Self {
        Error::NonFinite {
            context: context.into(),
        }
    }
}
