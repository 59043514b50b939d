use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("layer {layer} ({kind}): expected input shape {expected}, got {actual:?}")]
    Shape {
        layer: usize,
        kind: &'static str,
        expected: String,
        actual: Vec<usize>,
    },

    #[error("tensor shape {shape:?} does not match {len} values")]
    TensorSize { shape: Vec<usize>, len: usize },

    #[error("layer {layer} ({kind}): backward called without a cached forward pass")]
    NoForwardCache { layer: usize, kind: &'static str },

    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },

    #[error("invalid loss input: {0}")]
    LossInput(String),

    #[error("training diverged at epoch {epoch}, batch {batch} (loss = {loss})")]
    Diverged { epoch: usize, batch: usize, loss: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("model has no {0} layer required by this method")]
    MissingLayer(&'static str),

    #[error("invalid probability vector: {0}")]
    Probability(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("class {class} has {available} samples, {requested} requested")]
    InsufficientSamples {
        class: usize,
        available: usize,
        requested: usize,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("weights: {0}")]
    Weights(String),

    #[error("{method} spc={spc} trial={trial}: {source}")]
    Trial {
        method: String,
        spc: usize,
        trial: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            message: message.into(),
        }
    }
}
