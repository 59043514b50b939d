use rand::Rng as _;
use rand_distr::{Distribution, Normal};

use super::{Rng, Tensor};

/// Glorot/Xavier uniform initialisation: `U(-l, l)` with `l = sqrt(6 / (fan_in + fan_out))`.
pub fn glorot_uniform(shape: &[usize], fan_in: usize, fan_out: usize, rng: &mut Rng) -> Tensor {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let mut t = Tensor::zeros(shape);
    for v in t.data_mut() {
        *v = rng.random_range(-limit..limit);
    }
    t
}

pub fn normal(shape: &[usize], std: f64, rng: &mut Rng) -> Tensor {
    let dist = Normal::new(0.0, std).expect("std must be finite and non-negative");
    let mut t = Tensor::zeros(shape);
    for v in t.data_mut() {
        *v = dist.sample(rng);
    }
    t
}
