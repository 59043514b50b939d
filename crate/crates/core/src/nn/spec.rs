use rand::SeedableRng;

use super::layers::{BatchNorm, Conv2d, DropConnect, Dense, Dropout, FlipoutDense, Layer, MaxPool2d, RbfOutput, Relu, Softmax, Softplus};
use super::{Model, Rng};

/// Filter counts of the three convolutional stages.
pub const CNN_FILTERS: [usize; 3] = [64, 128, 128];
/// Width of the fully connected layer before the output.
pub const CNN_DENSE_UNITS: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub enum Architecture {
    /// Fully connected ReLU network over flat inputs.
    Mlp { inputs: usize, hidden: Vec<usize> },
    /// Three conv(3×3, same) → ReLU → batchnorm → maxpool(2×2) stages with
    /// 64, 128 and 128 filters, then a 256-unit ReLU dense layer.
    Cnn { channels: usize, height: usize, width: usize },
}

/// Output layer variant; selects how an uncertainty method wraps the trunk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OutputHead {
    Softmax,
    /// Dropout before the output dense layer, kept active at inference.
    DropoutSoftmax { p: f64 },
    /// DropConnect output layer, kept active at inference.
    DropConnect { p: f64 },
    /// Flipout output layer.
    Flipout,
    /// Per-class RBF kernels; `centroid_dim` defaults to the feature width.
    Rbf { length_scale: f64, centroid_dim: Option<usize> },
}

/// Head layout of a regression network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressionHeads {
    pub mean: MeanHead,
    /// Dropout before the heads, kept active at inference.
    pub dropout: Option<f64>,
    /// Adds a softplus variance head.
    pub variance: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeanHead {
    Dense,
    Flipout,
    DropConnect { p: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub arch: Architecture,
    /// Class count; ignored for regression builds.
    pub classes: usize,
}

impl ModelSpec {
    pub fn cnn(channels: usize, height: usize, width: usize, classes: usize) -> Self {
        Self {
            arch: Architecture::Cnn { channels, height, width },
            classes,
        }
    }

    pub fn mlp(inputs: usize, hidden: Vec<usize>, classes: usize) -> Self {
        Self {
            arch: Architecture::Mlp { inputs, hidden },
            classes,
        }
    }

    /// Width of the penultimate (feature) layer.
    pub fn feature_dim(&self) -> usize {
        match &self.arch {
            Architecture::Mlp { inputs, hidden } => hidden.last().copied().unwrap_or(*inputs),
            Architecture::Cnn { .. } => CNN_DENSE_UNITS,
        }
    }

    /// Per-sample input shape (without the batch dimension).
    pub fn input_shape(&self) -> Vec<usize> {
        match &self.arch {
            Architecture::Mlp { inputs, .. } => vec![*inputs],
            Architecture::Cnn { channels, height, width } => vec![*channels, *height, *width],
        }
    }

    fn trunk(&self, rng: &mut Rng) -> Vec<Layer> {
        let mut layers = Vec::new();
        match &self.arch {
            Architecture::Mlp { inputs, hidden } => {
                let mut prev = *inputs;
                for &h in hidden {
                    layers.push(Layer::Dense(Dense::new(prev, h, rng)));
                    layers.push(Layer::Relu(Relu::new()));
                    prev = h;
                }
            }
            Architecture::Cnn { channels, height, width } => {
                let (mut c, mut h, mut w) = (*channels, *height, *width);
                for &filters in &CNN_FILTERS {
                    layers.push(Layer::Conv2d(Conv2d::new(c, filters, rng)));
                    layers.push(Layer::Relu(Relu::new()));
                    layers.push(Layer::BatchNorm(BatchNorm::new(filters)));
                    layers.push(Layer::MaxPool2d(MaxPool2d::new()));
                    c = filters;
                    h /= 2;
                    w /= 2;
                }
                assert!(h > 0 && w > 0, "input too small for three pooling stages");
                layers.push(Layer::Dense(Dense::new(c * h * w, CNN_DENSE_UNITS, rng)));
                layers.push(Layer::Relu(Relu::new()));
            }
        }
        layers
    }

    /// Builds a classifier with freshly initialised weights.
    pub fn build(&self, head: OutputHead, seed: u64) -> Model {
        let mut rng = Rng::seed_from_u64(seed);
        let body = self.trunk(&mut rng);
        let (f, c) = (self.feature_dim(), self.classes);
        let out = match head {
            OutputHead::Softmax => vec![Layer::Dense(Dense::new(f, c, &mut rng)), Layer::Softmax(Softmax::new())],
            OutputHead::DropoutSoftmax { p } => vec![
                Layer::Dropout(Dropout::new(p, true)),
                Layer::Dense(Dense::new(f, c, &mut rng)),
                Layer::Softmax(Softmax::new()),
            ],
            OutputHead::DropConnect { p } => vec![
                Layer::DropConnect(DropConnect::new(f, c, p, true, &mut rng)),
                Layer::Softmax(Softmax::new()),
            ],
            OutputHead::Flipout => vec![
                Layer::FlipoutDense(FlipoutDense::new(f, c, &mut rng)),
                Layer::Softmax(Softmax::new()),
            ],
            OutputHead::Rbf {
                length_scale,
                centroid_dim,
            } => vec![Layer::Rbf(RbfOutput::new(
                f,
                c,
                centroid_dim.unwrap_or(f),
                length_scale,
                &mut rng,
            ))],
        };
        Model::new(body, vec![out])
    }

    /// Builds a one-output regression network (mean head, optional variance head).
    pub fn build_regression(&self, heads: RegressionHeads, seed: u64) -> Model {
        let mut rng = Rng::seed_from_u64(seed);
        let mut body = self.trunk(&mut rng);
        let f = self.feature_dim();
        if let Some(p) = heads.dropout {
            body.push(Layer::Dropout(Dropout::new(p, true)));
        }
        let mean = match heads.mean {
            MeanHead::Dense => Layer::Dense(Dense::new(f, 1, &mut rng)),
            MeanHead::Flipout => Layer::FlipoutDense(FlipoutDense::new(f, 1, &mut rng)),
            MeanHead::DropConnect { p } => Layer::DropConnect(DropConnect::new(f, 1, p, true, &mut rng)),
        };
        let mut out = vec![vec![mean]];
        if heads.variance {
            out.push(vec![Layer::Dense(Dense::new(f, 1, &mut rng)), Layer::Softplus(Softplus::new())]);
        }
        Model::new(body, out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{LayerKind, Mode, Tensor};

    #[test]
    fn cnn_shapes_for_both_image_sizes() {
        for (c, s) in [(1, 28), (3, 32)] {
            let spec = ModelSpec::cnn(c, s, s, 10);
            let mut m = spec.build(OutputHead::Softmax, 0);
            let out = m
                .forward(&Tensor::zeros(&[2, c, s, s]), Mode::Eval, &mut Rng::seed_from_u64(0))
                .unwrap();
            assert_eq!(out[0].shape(), &[2, 10]);
            for r in 0..2 {
                assert!((out[0].row(r).iter().sum::<f64>() - 1.0).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn heads_place_stochastic_layers() {
        let spec = ModelSpec::mlp(2, vec![8, 8], 3);
        let m = spec.build(OutputHead::DropoutSoftmax { p: 0.25 }, 0);
        let kinds: Vec<LayerKind> = m.heads[0].iter().map(Layer::kind).collect();
        assert_eq!(kinds, [LayerKind::Dropout, LayerKind::Dense, LayerKind::Softmax]);
        assert!(spec.build(OutputHead::DropConnect { p: 0.25 }, 0).find(LayerKind::DropConnect).is_some());
        assert!(spec.build(OutputHead::Flipout, 0).is_stochastic(Mode::Eval));
        assert!(!spec.build(OutputHead::Softmax, 0).is_stochastic(Mode::Eval));
        let rbf = spec.build(
            OutputHead::Rbf {
                length_scale: 0.1,
                centroid_dim: None,
            },
            0,
        );
        match rbf.heads[0].last() {
            Some(Layer::Rbf(r)) => assert_eq!(r.centroid_dim(), 8),
            other => panic!("unexpected head {other:?}"),
        }
    }

    #[test]
    fn regression_variance_head_is_positive() {
        let spec = ModelSpec::mlp(1, vec![32, 32], 0);
        let mut m = spec.build_regression(
            RegressionHeads {
                mean: MeanHead::Dense,
                dropout: None,
                variance: true,
            },
            4,
        );
        let x = Tensor::new(vec![5, 1], vec![-7.0, -2.0, 0.0, 3.0, 7.0]).unwrap();
        let out = m.forward(&x, Mode::Eval, &mut Rng::seed_from_u64(0)).unwrap();
        assert_eq!(out.len(), 2);
        assert!(out[1].data().iter().all(|&v| v > 0.0));
    }

    #[test]
    fn same_seed_same_initialisation() {
        let spec = ModelSpec::mlp(2, vec![4], 2);
        let a = spec.build(OutputHead::Softmax, 5);
        let b = spec.build(OutputHead::Softmax, 5);
        let c = spec.build(OutputHead::Softmax, 6);
        let w = |m: &Model| m.params().iter().flat_map(|p| p.value.data().to_vec()).collect::<Vec<_>>();
        assert_eq!(w(&a), w(&b));
        assert_ne!(w(&a), w(&c));
    }
}
