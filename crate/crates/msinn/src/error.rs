//! Crate-wide error type.

/// Errors reported by the library.
///
/// Recoverable conditions (bad input data, malformed files, invalid
/// configuration) are reported through this enum; internal shape bookkeeping
/// that can only be violated by a bug inside the crate panics instead.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A vector or matrix had the wrong length for the operation.
    #[error("shape mismatch in {context}: expected {expected}, got {actual}")]
    ShapeMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    /// A configuration value is outside its documented domain.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// A tile code outside `0..=7`.
    #[error("invalid tile code {code}: codes are 0..=7")]
    InvalidCode { code: u8 },

    /// A requested notch frequency falls outside the modeled band.
    #[error("frequency {freq_ghz} GHz is outside the 4-45 GHz band")]
    FrequencyOutOfBand { freq_ghz: f64 },

    /// The requested pattern is absent from the cell or its notch overlaps
    /// its neighbors too strongly for the isolated-notch formulas to apply.
    #[error("pattern {code} is absent or its notch is not isolated in this cell")]
    NonIsolatedNotch { code: u8 },

    /// Training produced a non-finite loss and was aborted.
    #[error("training aborted at epoch {epoch}: loss is not finite")]
    NonFiniteLoss { epoch: usize },

    /// A gradient entry became non-finite during an optimizer step.
    #[error("non-finite gradient in layer {layer}")]
    NonFiniteGradient { layer: usize },

    /// Inference was requested from a model that has not been trained.
    #[error("model has not been trained")]
    Untrained,

    /// A serialized file declares a format this build does not read.
    #[error("unsupported format: expected {expected}, found {found}")]
    FormatVersion {
        expected: &'static str,
        found: String,
    },

    /// A dataset header digest does not match the configuration it carries.
    #[error("config digest mismatch: header says {header}, recomputed {recomputed}")]
    DigestMismatch { header: String, recomputed: String },

    /// A serialized file failed to parse.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// An underlying I/O failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Crate-wide result alias.
pub type Result<T, E = Error> = std::result::Result<T, E>;
