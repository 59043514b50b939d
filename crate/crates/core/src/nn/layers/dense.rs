use super::{flat_rows, LayerImpl, Mode, Param};
use crate::nn::linalg::gemm;
use crate::nn::{init, Rng, Tensor};

/// Fully connected layer `y = x W + b`; inputs with more than two dims are
/// flattened per sample.
#[derive(Debug, Clone)]
pub struct Dense {
    pub weight: Param,
    pub bias: Param,
    cache: Option<Tensor>,
}

impl Dense {
    pub fn new(inputs: usize, outputs: usize, rng: &mut Rng) -> Self {
        let w = init::glorot_uniform(&[inputs, outputs], inputs, outputs, rng);
        Self::from_weights(w, Tensor::zeros(&[outputs]))
    }

    pub fn from_weights(weight: Tensor, bias: Tensor) -> Self {
        Self {
            weight: Param::new("weight", weight),
            bias: Param::new("bias", bias),
            cache: None,
        }
    }

    pub fn inputs(&self) -> usize {
        self.weight.value.shape()[0]
    }

    pub fn outputs(&self) -> usize {
        self.weight.value.shape()[1]
    }
}

/// `x W + b` for row-major `x` of shape `[n, in]`.
pub(crate) fn affine(x: &[f64], n: usize, w: &[f64], b: &[f64], inputs: usize, outputs: usize) -> Tensor {
    let mut out = Tensor::zeros(&[n, outputs]);
    for r in 0..n {
        out.row_mut(r).copy_from_slice(b);
    }
    gemm(n, inputs, outputs, x, false, w, false, 1.0, out.data_mut());
    out
}

impl LayerImpl for Dense {
    fn forward(&mut self, input: &Tensor, _mode: Mode, _rng: &mut Rng) -> Result<Tensor, String> {
        let n = flat_rows(input, self.inputs())?;
        let out = affine(
            input.data(),
            n,
            self.weight.value.data(),
            self.bias.value.data(),
            self.inputs(),
            self.outputs(),
        );
        self.cache = Some(input.clone());
        Ok(out)
    }

    fn backward(&mut self, upstream: &Tensor) -> Option<Tensor> {
        let x = self.cache.as_ref()?;
        let (n, i, o) = (x.rows(), self.inputs(), self.outputs());
        gemm(i, n, o, x.data(), true, upstream.data(), false, 0.0, self.weight.grad.data_mut());
        let gb = self.bias.grad.data_mut();
        gb.fill(0.0);
        for r in 0..n {
            for (g, u) in gb.iter_mut().zip(upstream.row(r)) {
                *g += u;
            }
        }
        let mut dx = Tensor::zeros(x.shape());
        gemm(n, o, i, upstream.data(), false, self.weight.value.data(), true, 0.0, dx.data_mut());
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
