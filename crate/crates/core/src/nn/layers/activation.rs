use super::{LayerImpl, Mode};
use crate::nn::{Rng, Tensor};

#[derive(Debug, Clone, Default)]
pub struct Relu {
    cache: Option<Tensor>,
}

impl Relu {
    pub fn new() -> Self {
        Self::default()
    }
}

impl LayerImpl for Relu {
    fn forward(&mut self, input: &Tensor, _mode: Mode, _rng: &mut Rng) -> Result<Tensor, String> {
        self.cache = Some(input.clone());
        Ok(input.map(|v| if v <= 0.0 { 0.0 } else { v }))
    }

    fn backward(&mut self, upstream: &Tensor) -> Option<Tensor> {
        let x = self.cache.as_ref()?;
        let mut dx = upstream.clone();
        for (d, v) in dx.data_mut().iter_mut().zip(x.data()) {
            if *v <= 0.0 {
                *d = 0.0;
            }
        }
        Some(dx)
    }

    fn clear_cache(&mut self) {
        self.cache = None;
    }
}

/// Row-wise softmax over the last axis of `[n, c]`.
#[derive(Debug, Clone, Default)]
pub struct Softmax {
    cache: Option<Tensor>,
}

impl Softmax {
    pub fn new() -> Self {
        Self::default()
    }
}

/// Numerically stable softmax of one row.
pub fn softmax_row(logits: &[f64], out: &mut [f64]) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for (o, z) in out.iter_mut().zip(logits) {
        *o = (z - max).exp();
        sum += *o;
    }
    out.iter_mut().for_each(|o| *o /= sum);
}

impl LayerImpl for Softmax {
    fn forward(&mut self, input: &Tensor, _mode: Mode, _rng: &mut Rng) -> Result<Tensor, String> {
        if input.shape().len() != 2 || input.row_len() == 0 {
            return Err("[n, classes]".into());
        }
        let mut out = Tensor::zeros(input.shape());
        for r in 0..input.rows() {
            softmax_row(input.row(r), out.row_mut(r));
        }
        self.cache = Some(out.clone());
        Ok(out)
    }

    fn backward(&mut self, upstream: &Tensor) -> Option<Tensor> {
        let p = self.cache.as_ref()?;
        let mut dx = Tensor::zeros(p.shape());
        for r in 0..p.rows() {
            let (pr, gr) = (p.row(r), upstream.row(r));
            let dot: f64 = pr.iter().zip(gr).map(|(a, b)| a * b).sum();
            for ((d, pv), g) in dx.row_mut(r).iter_mut().zip(pr).zip(gr) {
                *d = pv * (g - dot);
            }
        }
        Some(dx)
    }

    fn clear_cache(&mut self) {
        self.cache = None;
    }
}

#[derive(Debug, Clone, Default)]
pub struct Softplus {
    cache: Option<Tensor>,
}

impl Softplus {
    pub fn new() -> Self {
        Self::default()
    }
}

/// `ln(1 + e^x)` without overflow.
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl LayerImpl for Softplus {
    fn forward(&mut self, input: &Tensor, _mode: Mode, _rng: &mut Rng) -> Result<Tensor, String> {
        self.cache = Some(input.clone());
        Ok(input.map(softplus))
    }

    fn backward(&mut self, upstream: &Tensor) -> Option<Tensor> {
        let x = self.cache.as_ref()?;
        let mut dx = upstream.clone();
        for (d, v) in dx.data_mut().iter_mut().zip(x.data()) {
            *d *= sigmoid(*v);
        }
        Some(dx)
    }

    fn clear_cache(&mut self) {
        self.cache = None;
    }
}
