use thiserror::Error;

use crate::fock::ModeId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("mode {0} is not part of the registry")]
    UnknownMode(ModeId),

    #[error("invalid mode registry: {0}")]
    InvalidRegistry(String),

    #[error("operands were built over different mode registries")]
    RegistryMismatch,

    #[error("parameter `{name}` out of range: {reason}")]
    Parameter { name: &'static str, reason: String },

    /// Degree of polarization, Stokes ratios and similar quantities are
    /// undefined for a matrix with zero trace.
    #[error("coherence matrix has zero trace")]
    ZeroTrace,

    #[error("ill-posed reconstruction: {0}")]
    IllPosed(String),

    #[error("counts table, line {line}: {message}")]
    Table { line: u64, message: String },
}

impl Error {
    pub(crate) fn parameter(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            reason: reason.into(),
        }
    }
}
