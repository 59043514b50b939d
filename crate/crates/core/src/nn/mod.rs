//! Minimal feed-forward network engine: tensors, layers with exact
//! reverse-mode gradients, losses, Adam, and a mini-batch trainer.

pub mod gradcheck;
pub mod init;
pub mod layers;
mod linalg;
pub mod loss;
mod model;
pub mod optim;
mod spec;
mod tensor;
pub mod train;
pub mod weights;

pub use gradcheck::{grad_check, grad_check_corrupted, standard_suite, GradCheckReport, SuiteEntry};
pub use layers::{Layer, LayerKind, Mode, Param};
pub use loss::LossKind;
pub use model::{HeadGrad, Model, PREDICT_CHUNK};
pub use optim::{Adam, AdamConfig};
pub use spec::{Architecture, MeanHead, ModelSpec, OutputHead, RegressionHeads, CNN_DENSE_UNITS, CNN_FILTERS};
pub use tensor::Tensor;
pub use train::{train, TrainConfig, TrainReport};

/// RNG used for every random draw in the engine.
pub type Rng = rand_chacha::ChaCha8Rng;
