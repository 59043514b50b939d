use super::{Buffer, LayerImpl, Mode, Param};
use crate::nn::{Rng, Tensor};

pub const BATCHNORM_MOMENTUM: f64 = 0.99;
pub const BATCHNORM_EPSILON: f64 = 1e-3;

/// Batch normalisation over axis 1. Works for `[n, f]` and `[n, c, h, w]`.
///
/// Train mode normalises with batch statistics and updates the running
/// averages; eval mode uses only the running averages.
#[derive(Debug, Clone)]
pub struct BatchNorm {
    pub gamma: Param,
    pub beta: Param,
    pub running_mean: Buffer,
    pub running_var: Buffer,
    pub momentum: f64,
    pub epsilon: f64,
    cache: Option<NormCache>,
}

#[derive(Debug, Clone)]
struct NormCache {
    input_shape: Vec<usize>,
    xhat: Vec<f64>,
    inv_std: Vec<f64>,
    mode: Mode,
}

impl BatchNorm {
    pub fn new(channels: usize) -> Self {
        Self {
            gamma: Param::new("gamma", Tensor::full(&[channels], 1.0)),
            beta: Param::new("beta", Tensor::zeros(&[channels])),
            running_mean: Buffer {
                name: "running_mean",
                value: Tensor::zeros(&[channels]),
            },
            running_var: Buffer {
                name: "running_var",
                value: Tensor::full(&[channels], 1.0),
            },
            momentum: BATCHNORM_MOMENTUM,
            epsilon: BATCHNORM_EPSILON,
            cache: None,
        }
    }

    pub fn channels(&self) -> usize {
        self.gamma.value.len()
    }

    pub(crate) fn buffers(&self) -> Vec<&Buffer> {
        vec![&self.running_mean, &self.running_var]
    }

    pub(crate) fn buffers_mut(&mut self) -> Vec<&mut Buffer> {
        vec![&mut self.running_mean, &mut self.running_var]
    }
}

/// Iterates `(flat index, channel)` over a tensor whose channel axis is 1.
fn channel_of(shape: &[usize]) -> impl Fn(usize) -> usize {
    let c = shape[1];
    let inner: usize = shape[2..].iter().product();
    move |i| (i / inner) % c
}

impl LayerImpl for BatchNorm {
    fn forward(&mut self, input: &Tensor, mode: Mode, _rng: &mut Rng) -> Result<Tensor, String> {
        let s = input.shape();
        let c = self.channels();
        if s.len() < 2 || s[1] != c || input.is_empty() {
            return Err(format!("[n >= 1, {c}, ...]"));
        }
        let ch = channel_of(s);
        let x = input.data();
        let (mean, var) = match mode {
            Mode::Train => {
                let count = (x.len() / c) as f64;
                let mut mean = vec![0.0; c];
                for (i, v) in x.iter().enumerate() {
                    mean[ch(i)] += v;
                }
                mean.iter_mut().for_each(|m| *m /= count);
                let mut var = vec![0.0; c];
                for (i, v) in x.iter().enumerate() {
                    let d = v - mean[ch(i)];
                    var[ch(i)] += d * d;
                }
                var.iter_mut().for_each(|v| *v /= count);
                let m = self.momentum;
                for (r, b) in self.running_mean.value.data_mut().iter_mut().zip(&mean) {
                    *r = m * *r + (1.0 - m) * b;
                }
                for (r, b) in self.running_var.value.data_mut().iter_mut().zip(&var) {
                    *r = m * *r + (1.0 - m) * b;
                }
                (mean, var)
            }
            Mode::Eval => (
                self.running_mean.value.data().to_vec(),
                self.running_var.value.data().to_vec(),
            ),
        };
        let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + self.epsilon).sqrt()).collect();
        let (g, b) = (self.gamma.value.data(), self.beta.value.data());
        let mut xhat = vec![0.0; x.len()];
        let mut out = Tensor::zeros(s);
        for (i, (v, o)) in x.iter().zip(out.data_mut()).enumerate() {
            let k = ch(i);
            xhat[i] = (v - mean[k]) * inv_std[k];
            *o = g[k] * xhat[i] + b[k];
        }
        self.cache = Some(NormCache {
            input_shape: s.to_vec(),
            xhat,
            inv_std,
            mode,
        });
        Ok(out)
    }

    fn backward(&mut self, upstream: &Tensor) -> Option<Tensor> {
        let cache = self.cache.as_ref()?;
        let c = self.channels();
        let ch = channel_of(&cache.input_shape);
        let dy = upstream.data();
        let mut dgamma = vec![0.0; c];
        let mut dbeta = vec![0.0; c];
        for (i, g) in dy.iter().enumerate() {
            dgamma[ch(i)] += g * cache.xhat[i];
            dbeta[ch(i)] += g;
        }
        let gamma = self.gamma.value.data();
        let mut dx = Tensor::zeros(&cache.input_shape);
        match cache.mode {
            Mode::Eval => {
                for (i, (d, g)) in dx.data_mut().iter_mut().zip(dy).enumerate() {
                    let k = ch(i);
                    *d = g * gamma[k] * cache.inv_std[k];
                }
            }
            Mode::Train => {
                let count = (dy.len() / c) as f64;
                // sum(dxhat) = gamma * dbeta, sum(dxhat * xhat) = gamma * dgamma
                for (i, (d, g)) in dx.data_mut().iter_mut().zip(dy).enumerate() {
                    let k = ch(i);
                    let dxhat = g * gamma[k];
                    *d = cache.inv_std[k]
                        * (dxhat - gamma[k] * (dbeta[k] + cache.xhat[i] * dgamma[k]) / count);
                }
            }
        }
        self.gamma.grad.data_mut().copy_from_slice(&dgamma);
        self.beta.grad.data_mut().copy_from_slice(&dbeta);
        Some(dx)
    }

    fn params(&self) -> Vec<&Param> {
        vec![&self.gamma, &self.beta]
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.gamma, &mut self.beta]
    }

    fn clear_cache(&mut self) {
        self.cache = None;
    }
}
