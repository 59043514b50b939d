use super::{flat_rows, LayerImpl, Mode, Param};
use crate::nn::linalg::gemm;
use crate::nn::{init, Rng, Tensor};

/// Initial scale of the per-class projections and centroids.
pub const RBF_INIT_STD: f64 = 0.05;

/// RBF classifier head: one projection `W_c` (`features → centroid_dim`) and
/// one centroid `e_c` per class, both learned by gradient descent.
///
/// `K_c(h) = exp(-‖W_c h - e_c‖² / (2 · centroid_dim · length_scale²))`
#[derive(Debug, Clone)]
pub struct RbfOutput {
    /// `[classes, centroid_dim, features]`
    pub weight: Param,
    /// `[classes, centroid_dim]`
    pub centroids: Param,
    pub length_scale: f64,
    cache: Option<RbfCache>,
}

#[derive(Debug, Clone)]
struct RbfCache {
    input: Tensor,
    // [n, classes * centroid_dim]
    diff: Vec<f64>,
    kernels: Tensor,
}

impl RbfOutput {
    pub fn new(features: usize, classes: usize, centroid_dim: usize, length_scale: f64, rng: &mut Rng) -> Self {
        let weight = init::normal(&[classes, centroid_dim, features], RBF_INIT_STD, rng);
        let centroids = init::normal(&[classes, centroid_dim], RBF_INIT_STD, rng);
        Self::from_weights(weight, centroids, length_scale)
    }

    pub fn from_weights(weight: Tensor, centroids: Tensor, length_scale: f64) -> Self {
        assert!(length_scale > 0.0, "length scale must be positive");
        Self {
            weight: Param::new("weight", weight),
            centroids: Param::new("centroids", centroids),
            length_scale,
            cache: None,
        }
    }

    pub fn classes(&self) -> usize {
        self.weight.value.shape()[0]
    }

    pub fn centroid_dim(&self) -> usize {
        self.weight.value.shape()[1]
    }

    pub fn features(&self) -> usize {
        self.weight.value.shape()[2]
    }

    fn denom(&self) -> f64 {
        2.0 * self.centroid_dim() as f64 * self.length_scale * self.length_scale
    }
}

impl LayerImpl for RbfOutput {
    fn forward(&mut self, input: &Tensor, _mode: Mode, _rng: &mut Rng) -> Result<Tensor, String> {
        let (c, d, f) = (self.classes(), self.centroid_dim(), self.features());
        let n = flat_rows(input, f)?;
        let mut diff = vec![0.0; n * c * d];
        // z[n, c*d] = h[n, f] · W[c*d, f]ᵀ
        gemm(n, f, c * d, input.data(), false, self.weight.value.data(), true, 0.0, &mut diff);
        let e = self.centroids.value.data();
        let denom = self.denom();
        let mut kernels = Tensor::zeros(&[n, c]);
        for r in 0..n {
            let row = &mut diff[r * c * d..(r + 1) * c * d];
            for (v, centre) in row.iter_mut().zip(e) {
                *v -= centre;
            }
            for k in 0..c {
                let sq: f64 = row[k * d..(k + 1) * d].iter().map(|v| v * v).sum();
                kernels.row_mut(r)[k] = (-sq / denom).exp();
            }
        }
        self.cache = Some(RbfCache {
            input: input.clone(),
            diff,
            kernels: kernels.clone(),
        });
        Ok(kernels)
    }

    fn backward(&mut self, upstream: &Tensor) -> Option<Tensor> {
        let (c, d, f) = (self.classes(), self.centroid_dim(), self.features());
        let denom = self.denom();
        let cache = self.cache.as_ref()?;
        let n = cache.input.rows();
        // d loss / d diff = dK · K · (-2 diff / denom)
        let mut ddiff = cache.diff.clone();
        for r in 0..n {
            for k in 0..c {
                let s = upstream.row(r)[k] * cache.kernels.row(r)[k] * (-2.0 / denom);
                for v in &mut ddiff[(r * c + k) * d..(r * c + k + 1) * d] {
                    *v *= s;
                }
            }
        }
        gemm(c * d, n, f, &ddiff, true, cache.input.data(), false, 0.0, self.weight.grad.data_mut());
        let ge = self.centroids.grad.data_mut();
        ge.fill(0.0);
        for r in 0..n {
            for (g, v) in ge.iter_mut().zip(&ddiff[r * c * d..(r + 1) * c * d]) {
                *g -= v;
            }
        }
        let mut dx = Tensor::zeros(cache.input.shape());
        gemm(n, c * d, f, &ddiff, false, self.weight.value.data(), false, 0.0, dx.data_mut());
        Some(dx)
    }

    fn params(&self) -> Vec<&Param> {
        vec![&self.weight, &self.centroids]
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.weight, &mut self.centroids]
    }

    fn clear_cache(&mut self) {
        self.cache = None;
    }
}
