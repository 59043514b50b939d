use super::layers::Param;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-7,
        }
    }
}

/// Bias-corrected Adam.
///
/// Moment buffers are created lazily on the first step and matched to
/// parameters by position, so the parameter list must keep a stable order.
#[derive(Debug, Clone)]
pub struct Adam {
    pub config: AdamConfig,
    step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(config: AdamConfig) -> Self {
        Self {
            config,
            step: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    /// Applies one update using each parameter's current `grad`.
    pub fn step(&mut self, params: Vec<&mut Param>) {
        if self.m.is_empty() {
            self.m = params.iter().map(|p| vec![0.0; p.value.len()]).collect();
            self.v = self.m.clone();
        }
        assert_eq!(self.m.len(), params.len(), "parameter list changed between steps");
        self.step += 1;
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        let t = self.step as i32;
        let c1 = 1.0 - beta1.powi(t);
        let c2 = 1.0 - beta2.powi(t);
        for ((p, m), v) in params.into_iter().zip(&mut self.m).zip(&mut self.v) {
            let grads = p.grad.data();
            for (((w, g), m), v) in p.value.data_mut().iter_mut().zip(grads).zip(m.iter_mut()).zip(v.iter_mut()) {
                *m = beta1 * *m + (1.0 - beta1) * g;
                *v = beta2 * *v + (1.0 - beta2) * g * g;
                let mhat = *m / c1;
                let vhat = *v / c2;
                *w -= learning_rate * mhat / (vhat.sqrt() + epsilon);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Tensor;

    fn scalar(value: f64, grad: f64) -> Param {
        let mut p = Param::new("w", Tensor::full(&[1], value));
        p.grad = Tensor::full(&[1], grad);
        p
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut p = scalar(1.25, 0.0);
        let mut adam = Adam::new(AdamConfig::default());
        adam.step(vec![&mut p]);
        adam.step(vec![&mut p]);
        assert_eq!(p.value.data()[0], 1.25);
    }

    #[test]
    fn first_step_has_magnitude_learning_rate() {
        let cfg = AdamConfig::default();
        for g in [3.0, -0.02, 1e3] {
            let mut p = scalar(0.0, g);
            Adam::new(cfg).step(vec![&mut p]);
            let want = -cfg.learning_rate * g / (g.abs() + cfg.epsilon);
            assert!((p.value.data()[0] - want).abs() < 1e-15);
        }
    }

    #[test]
    fn two_steps_match_hand_unrolled_recurrence() {
        let (a, b1, b2, eps): (f64, f64, f64, f64) = (1e-3, 0.9, 0.999, 1e-7);
        let g: f64 = 0.7;
        let mut w = 0.5;
        let m1 = (1.0 - b1) * g;
        let v1 = (1.0 - b2) * g * g;
        w -= a * (m1 / (1.0 - b1)) / ((v1 / (1.0 - b2)).sqrt() + eps);
        let m2 = b1 * m1 + (1.0 - b1) * g;
        let v2 = b2 * v1 + (1.0 - b2) * g * g;
        w -= a * (m2 / (1.0 - b1 * b1)) / ((v2 / (1.0 - b2 * b2)).sqrt() + eps);

        let mut p = scalar(0.5, g);
        let mut adam = Adam::new(AdamConfig::default());
        adam.step(vec![&mut p]);
        adam.step(vec![&mut p]);
        assert!((p.value.data()[0] - w).abs() < 1e-12);
        assert_eq!(adam.steps_taken(), 2);
    }
}
