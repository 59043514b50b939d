//! Layer set with cached forward state and exact reverse-mode gradients.
//!
//! Every layer caches what its backward pass needs (inputs, random masks,
//! normalisation statistics) during `forward`. Calling `backward` without a
//! preceding `forward` is an error. Parameter gradients are overwritten, not
//! accumulated, by each backward call.

mod activation;
mod conv;
mod dense;
mod norm;
mod rbf;
mod stochastic;

pub use activation::{sigmoid, softmax_row, softplus, Relu, Softmax, Softplus};
pub use conv::{Conv2d, MaxPool2d};
pub use dense::Dense;
pub use norm::BatchNorm;
pub use rbf::RbfOutput;
pub use stochastic::{DropConnect, Dropout, FlipoutDense};

use std::fmt;

use super::{Rng, Tensor};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LayerKind {
    Dense,
    Conv2d3x3,
    MaxPool2x2,
    BatchNorm,
    Relu,
    Softmax,
    Softplus,
    Dropout,
    DropConnect,
    FlipoutDense,
    RbfOutput,
}

impl LayerKind {
    pub const ALL: [LayerKind; 11] = [
        LayerKind::Dense,
        LayerKind::Conv2d3x3,
        LayerKind::MaxPool2x2,
        LayerKind::BatchNorm,
        LayerKind::Relu,
        LayerKind::Softmax,
        LayerKind::Softplus,
        LayerKind::Dropout,
        LayerKind::DropConnect,
        LayerKind::FlipoutDense,
        LayerKind::RbfOutput,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LayerKind::Dense => "dense",
            LayerKind::Conv2d3x3 => "conv2d_3x3",
            LayerKind::MaxPool2x2 => "maxpool_2x2",
            LayerKind::BatchNorm => "batchnorm",
            LayerKind::Relu => "relu",
            LayerKind::Softmax => "softmax",
            LayerKind::Softplus => "softplus",
            LayerKind::Dropout => "dropout",
            LayerKind::DropConnect => "dropconnect",
            LayerKind::FlipoutDense => "flipout_dense",
            LayerKind::RbfOutput => "rbf_output",
        }
    }
}

impl fmt::Display for LayerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A trainable tensor together with its most recent gradient.
#[derive(Debug, Clone)]
pub struct Param {
    pub name: &'static str,
    pub value: Tensor,
    pub grad: Tensor,
}

impl Param {
    pub fn new(name: &'static str, value: Tensor) -> Self {
        let grad = Tensor::zeros(value.shape());
        Self { name, value, grad }
    }
}

/// Non-trainable tensor state such as batchnorm running statistics.
#[derive(Debug, Clone)]
pub struct Buffer {
    pub name: &'static str,
    pub value: Tensor,
}

#[derive(Debug, Clone)]
pub enum Layer {
    Dense(Dense),
    Conv2d(Conv2d),
    MaxPool2d(MaxPool2d),
    BatchNorm(BatchNorm),
    Relu(Relu),
    Softmax(Softmax),
    Softplus(Softplus),
    Dropout(Dropout),
    DropConnect(DropConnect),
    FlipoutDense(FlipoutDense),
    Rbf(RbfOutput),
}

macro_rules! dispatch {
    ($self:expr, $l:ident => $body:expr) => {
        match $self {
            Layer::Dense($l) => $body,
            Layer::Conv2d($l) => $body,
            Layer::MaxPool2d($l) => $body,
            Layer::BatchNorm($l) => $body,
            Layer::Relu($l) => $body,
            Layer::Softmax($l) => $body,
            Layer::Softplus($l) => $body,
            Layer::Dropout($l) => $body,
            Layer::DropConnect($l) => $body,
            Layer::FlipoutDense($l) => $body,
            Layer::Rbf($l) => $body,
        }
    };
}

impl Layer {
    pub fn kind(&self) -> LayerKind {
        match self {
            Layer::Dense(_) => LayerKind::Dense,
            Layer::Conv2d(_) => LayerKind::Conv2d3x3,
            Layer::MaxPool2d(_) => LayerKind::MaxPool2x2,
            Layer::BatchNorm(_) => LayerKind::BatchNorm,
            Layer::Relu(_) => LayerKind::Relu,
            Layer::Softmax(_) => LayerKind::Softmax,
            Layer::Softplus(_) => LayerKind::Softplus,
            Layer::Dropout(_) => LayerKind::Dropout,
            Layer::DropConnect(_) => LayerKind::DropConnect,
            Layer::FlipoutDense(_) => LayerKind::FlipoutDense,
            Layer::Rbf(_) => LayerKind::RbfOutput,
        }
    }

    /// Runs the layer and caches whatever `backward` will need.
    ///
    /// `index` is only used to label shape errors.
    pub fn forward(&mut self, index: usize, input: &Tensor, mode: Mode, rng: &mut Rng) -> Result<Tensor> {
        let kind = self.kind();
        let out = dispatch!(self, l => l.forward(input, mode, rng));
        out.map_err(|expected| Error::Shape {
            layer: index,
            kind: kind.name(),
            expected,
            actual: input.shape().to_vec(),
        })
    }

    /// Propagates `upstream` (gradient w.r.t. this layer's output) back to the
    /// input, writing parameter gradients as a side effect.
    pub fn backward(&mut self, index: usize, upstream: &Tensor) -> Result<Tensor> {
        let kind = self.kind();
        dispatch!(self, l => l.backward(upstream)).ok_or(Error::NoForwardCache {
            layer: index,
            kind: kind.name(),
        })
    }

    pub fn params(&self) -> Vec<&Param> {
        dispatch!(self, l => l.params())
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        dispatch!(self, l => l.params_mut())
    }

    pub fn buffers(&self) -> Vec<&Buffer> {
        match self {
            Layer::BatchNorm(l) => l.buffers(),
            _ => Vec::new(),
        }
    }

    pub fn buffers_mut(&mut self) -> Vec<&mut Buffer> {
        match self {
            Layer::BatchNorm(l) => l.buffers_mut(),
            _ => Vec::new(),
        }
    }

    /// Parameters followed by buffers, each with its name.
    pub fn tensors_mut(&mut self) -> Vec<(&'static str, &mut Tensor)> {
        match self {
            Layer::BatchNorm(bn) => vec![
                (bn.gamma.name, &mut bn.gamma.value),
                (bn.beta.name, &mut bn.beta.value),
                (bn.running_mean.name, &mut bn.running_mean.value),
                (bn.running_var.name, &mut bn.running_var.value),
            ],
            other => other.params_mut().into_iter().map(|p| (p.name, &mut p.value)).collect(),
        }
    }

    pub fn clear_cache(&mut self) {
        dispatch!(self, l => l.clear_cache())
    }

    /// Whether this layer draws random numbers in the given mode.
    pub fn is_stochastic(&self, mode: Mode) -> bool {
        match self {
            Layer::Dropout(l) => l.active(mode),
            Layer::DropConnect(l) => l.active(mode),
            Layer::FlipoutDense(_) => true,
            _ => false,
        }
    }
}

/// Per-layer behaviour shared by all layer structs.
///
/// `forward` returns a description of the expected input shape on mismatch;
/// `backward` returns `None` when no forward cache is present.
pub(crate) trait LayerImpl {
    fn forward(&mut self, input: &Tensor, mode: Mode, rng: &mut Rng) -> std::result::Result<Tensor, String>;
    fn backward(&mut self, upstream: &Tensor) -> Option<Tensor>;
    fn params(&self) -> Vec<&Param> {
        Vec::new()
    }
    fn params_mut(&mut self) -> Vec<&mut Param> {
        Vec::new()
    }
    fn clear_cache(&mut self);
}

/// Checks `[n, features]` input (trailing dims are flattened) and returns `n`.
pub(crate) fn flat_rows(input: &Tensor, features: usize) -> std::result::Result<usize, String> {
    if input.shape().len() < 2 || input.row_len() != features {
        return Err(format!("[n, {features}] (or any shape flattening to it)"));
    }
    Ok(input.rows())
}
