//! Error type shared across the toolkit.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid noise-schedule construction parameters.
    #[error("schedule construction: {0}")]
    Schedule(String),

    /// A caller violated an API contract (shape mismatch, timestep out of range, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// The requested DDIM sigma makes 1 - alpha_bar(t_prev) - sigma^2 negative.
    #[error("sigma too large: {0}")]
    SigmaTooLarge(String),

    /// A condition vector is out of bounds for the model or grid.
    #[error("condition: {0}")]
    Condition(String),

    /// Sequence longer than the model's configured maximum.
    #[error("capacity: {0}")]
    Capacity(String),

    /// Invalid model configuration.
    #[error("model config: {0}")]
    Config(String),

    /// Data preprocessing or validation failure.
    #[error("data: {0}")]
    Data(String),

    /// Trajectory too short to resample.
    #[error("resample: {0}")]
    Resample(String),

    /// Degenerate bounding box or inconsistent normalization meta.
    #[error("normalization: {0}")]
    Normalization(String),

    /// CSV ingestion failure.
    #[error("ingestion: {0}")]
    Ingestion(String),

    /// Metric preconditions violated (non-normalized distribution, empty input, ...).
    #[error("metric: {0}")]
    Metric(String),

    /// Training diverged (non-finite loss or gradient).
    #[error("numeric failure at step {step}: {message} (param norm {param_norm:.6e})")]
    Numeric {
        step: u64,
        message: String,
        param_norm: f64,
    },

    /// Unsupported container version.
    #[error("version mismatch: {0}")]
    Version(String),

    /// Stored checksum does not match the file contents.
    #[error("checksum mismatch: {0}")]
    Checksum(String),

    /// Checkpoint does not match the model configuration.
    #[error("checkpoint shape mismatch: {0}")]
    ShapeDiff(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
