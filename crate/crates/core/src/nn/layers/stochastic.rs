use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use super::activation::{sigmoid, softplus};
use super::dense::affine;
use super::{flat_rows, LayerImpl, Mode, Param};
use crate::nn::linalg::gemm;
use crate::nn::{init, Rng, Tensor};

/// Inverted dropout: kept activations are scaled by `1 / (1 - p)`.
///
/// Active in train mode, and in eval mode too when `stochastic_eval` is set
/// (Monte-Carlo dropout).
#[derive(Debug, Clone)]
pub struct Dropout {
    pub p: f64,
    pub stochastic_eval: bool,
    cache: Option<Option<Vec<f64>>>,
}

impl Dropout {
    pub fn new(p: f64, stochastic_eval: bool) -> Self {
        assert!((0.0..1.0).contains(&p), "drop probability must lie in [0, 1)");
        Self {
            p,
            stochastic_eval,
            cache: None,
        }
    }

    pub fn active(&self, mode: Mode) -> bool {
        mode == Mode::Train || self.stochastic_eval
    }
}

impl LayerImpl for Dropout {
    fn forward(&mut self, input: &Tensor, mode: Mode, rng: &mut Rng) -> Result<Tensor, String> {
        if !self.active(mode) || self.p == 0.0 {
            self.cache = Some(None);
            return Ok(input.clone());
        }
        let scale = 1.0 / (1.0 - self.p);
        let mask: Vec<f64> = (0..input.len())
            .map(|_| if rng.random::<f64>() < self.p { 0.0 } else { scale })
            .collect();
        let mut out = input.clone();
        for (o, m) in out.data_mut().iter_mut().zip(&mask) {
            *o *= m;
        }
        self.cache = Some(Some(mask));
        Ok(out)
    }

    fn backward(&mut self, upstream: &Tensor) -> Option<Tensor> {
        let mut dx = upstream.clone();
        if let Some(mask) = self.cache.as_ref()? {
            for (d, m) in dx.data_mut().iter_mut().zip(mask) {
                *d *= m;
            }
        }
        Some(dx)
    }

    fn clear_cache(&mut self) {
        self.cache = None;
    }
}

/// Dense layer whose weights (not bias) are multiplied by a Bernoulli keep
/// mask drawn once per forward pass. No rescaling is applied.
#[derive(Debug, Clone)]
pub struct DropConnect {
    pub weight: Param,
    pub bias: Param,
    pub p: f64,
    pub stochastic_eval: bool,
    cache: Option<DropConnectCache>,
}

#[derive(Debug, Clone)]
struct DropConnectCache {
    input: Tensor,
    mask: Option<Vec<f64>>,
}

impl DropConnect {
    pub fn new(inputs: usize, outputs: usize, p: f64, stochastic_eval: bool, rng: &mut Rng) -> Self {
        assert!((0.0..1.0).contains(&p), "drop probability must lie in [0, 1)");
        let w = init::glorot_uniform(&[inputs, outputs], inputs, outputs, rng);
        Self {
            weight: Param::new("weight", w),
            bias: Param::new("bias", Tensor::zeros(&[outputs])),
            p,
            stochastic_eval,
            cache: None,
        }
    }

    pub fn active(&self, mode: Mode) -> bool {
        mode == Mode::Train || self.stochastic_eval
    }

    fn dims(&self) -> (usize, usize) {
        (self.weight.value.shape()[0], self.weight.value.shape()[1])
    }
}

impl LayerImpl for DropConnect {
    fn forward(&mut self, input: &Tensor, mode: Mode, rng: &mut Rng) -> Result<Tensor, String> {
        let (i, o) = self.dims();
        let n = flat_rows(input, i)?;
        let mask = (self.active(mode) && self.p > 0.0).then(|| {
            (0..i * o)
                .map(|_| if rng.random::<f64>() < self.p { 0.0 } else { 1.0 })
                .collect::<Vec<f64>>()
        });
        let out = match &mask {
            Some(m) => {
                let w: Vec<f64> = self.weight.value.data().iter().zip(m).map(|(w, m)| w * m).collect();
                affine(input.data(), n, &w, self.bias.value.data(), i, o)
            }
            None => affine(input.data(), n, self.weight.value.data(), self.bias.value.data(), i, o),
        };
        self.cache = Some(DropConnectCache {
            input: input.clone(),
            mask,
        });
        Ok(out)
    }

    fn backward(&mut self, upstream: &Tensor) -> Option<Tensor> {
        let (i, o) = self.dims();
        let cache = self.cache.as_ref()?;
        let x = &cache.input;
        let n = x.rows();
        gemm(i, n, o, x.data(), true, upstream.data(), false, 0.0, self.weight.grad.data_mut());
        let masked_w: Vec<f64> = match &cache.mask {
            Some(m) => {
                for (g, m) in self.weight.grad.data_mut().iter_mut().zip(m) {
                    *g *= m;
                }
                self.weight.value.data().iter().zip(m).map(|(w, m)| w * m).collect()
            }
            None => self.weight.value.data().to_vec(),
        };
        let gb = self.bias.grad.data_mut();
        gb.fill(0.0);
        for r in 0..n {
            for (g, u) in gb.iter_mut().zip(upstream.row(r)) {
                *g += u;
            }
        }
        let mut dx = Tensor::zeros(x.shape());
        gemm(n, o, i, upstream.data(), false, &masked_w, true, 0.0, dx.data_mut());
        Some(dx)
    }

    fn params(&self) -> Vec<&Param> {
        vec![&self.weight, &self.bias]
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.weight, &mut self.bias]
    }

    fn clear_cache(&mut self) {
        self.cache = None;
    }
}

/// Initial posterior standard deviation of flipout weights.
pub const FLIPOUT_INIT_STD: f64 = 0.05;

/// Mean-field Gaussian dense layer sampled with flipout.
///
/// Weights are `N(mu, softplus(rho)^2)`; the bias is a single learnable
/// scalar shared by all outputs. Each forward pass draws one shared noise
/// matrix `E` plus per-example Rademacher sign vectors for the inputs and
/// outputs:
///
/// `y = x mu + ((x ∘ s_in)(softplus(rho) ∘ E)) ∘ s_out + b`
///
/// The layer samples in both train and eval mode.
#[derive(Debug, Clone)]
pub struct FlipoutDense {
    pub mu: Param,
    pub rho: Param,
    pub bias: Param,
    cache: Option<FlipoutCache>,
}

#[derive(Debug, Clone)]
struct FlipoutCache {
    input: Tensor,
    sign_in: Vec<f64>,
    sign_out: Vec<f64>,
    noise: Vec<f64>,
}

impl FlipoutDense {
    pub fn new(inputs: usize, outputs: usize, rng: &mut Rng) -> Self {
        let mu = init::glorot_uniform(&[inputs, outputs], inputs, outputs, rng);
        let rho = FLIPOUT_INIT_STD.exp_m1().ln();
        Self::from_weights(mu, Tensor::full(&[inputs, outputs], rho), 0.0)
    }

    pub fn from_weights(mu: Tensor, rho: Tensor, bias: f64) -> Self {
        Self {
            mu: Param::new("mu", mu),
            rho: Param::new("rho", rho),
            bias: Param::new("bias", Tensor::full(&[1], bias)),
            cache: None,
        }
    }

    fn dims(&self) -> (usize, usize) {
        (self.mu.value.shape()[0], self.mu.value.shape()[1])
    }

    pub fn std(&self) -> Tensor {
        self.rho.value.map(softplus)
    }
}

fn rademacher(len: usize, rng: &mut Rng) -> Vec<f64> {
    (0..len).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect()
}

impl LayerImpl for FlipoutDense {
    fn forward(&mut self, input: &Tensor, _mode: Mode, rng: &mut Rng) -> Result<Tensor, String> {
        let (i, o) = self.dims();
        let n = flat_rows(input, i)?;
        let noise: Vec<f64> = (0..i * o).map(|_| StandardNormal.sample(rng)).collect();
        let sign_in = rademacher(n * i, rng);
        let sign_out = rademacher(n * o, rng);

        let b = self.bias.value.data()[0];
        let mut out = affine(input.data(), n, self.mu.value.data(), &vec![b; o], i, o);
        let delta: Vec<f64> = self.std().data().iter().zip(&noise).map(|(s, e)| s * e).collect();
        let xs: Vec<f64> = input.data().iter().zip(&sign_in).map(|(x, s)| x * s).collect();
        let mut pert = vec![0.0; n * o];
        gemm(n, i, o, &xs, false, &delta, false, 0.0, &mut pert);
        for ((y, p), s) in out.data_mut().iter_mut().zip(&pert).zip(&sign_out) {
            *y += p * s;
        }
        self.cache = Some(FlipoutCache {
            input: input.clone(),
            sign_in,
            sign_out,
            noise,
        });
        Ok(out)
    }

    fn backward(&mut self, upstream: &Tensor) -> Option<Tensor> {
        let (i, o) = self.dims();
        let cache = self.cache.as_ref()?;
        let x = &cache.input;
        let n = x.rows();
        let g = upstream.data();

        gemm(i, n, o, x.data(), true, g, false, 0.0, self.mu.grad.data_mut());
        self.bias.grad.data_mut()[0] = g.iter().sum();

        let gs: Vec<f64> = g.iter().zip(&cache.sign_out).map(|(g, s)| g * s).collect();
        let xs: Vec<f64> = x.data().iter().zip(&cache.sign_in).map(|(x, s)| x * s).collect();
        let mut ddelta = vec![0.0; i * o];
        gemm(i, n, o, &xs, true, &gs, false, 0.0, &mut ddelta);
        for (((dr, dd), e), r) in self
            .rho
            .grad
            .data_mut()
            .iter_mut()
            .zip(&ddelta)
            .zip(&cache.noise)
            .zip(self.rho.value.data())
        {
            *dr = dd * e * sigmoid(*r);
        }

        let mut dx = Tensor::zeros(x.shape());
        gemm(n, o, i, g, false, self.mu.value.data(), true, 0.0, dx.data_mut());
        let delta: Vec<f64> = self.std().data().iter().zip(&cache.noise).map(|(s, e)| s * e).collect();
        let mut dxs = vec![0.0; n * i];
        gemm(n, o, i, &gs, false, &delta, true, 0.0, &mut dxs);
        for ((d, p), s) in dx.data_mut().iter_mut().zip(&dxs).zip(&cache.sign_in) {
            *d += p * s;
        }
        Some(dx)
    }

    fn params(&self) -> Vec<&Param> {
        vec![&self.mu, &self.rho, &self.bias]
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.mu, &mut self.rho, &mut self.bias]
    }

    fn clear_cache(&mut self) {
        self.cache = None;
    }
}
