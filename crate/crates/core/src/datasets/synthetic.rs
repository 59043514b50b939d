use std::f64::consts::PI;

use rand::{Rng as _, SeedableRng};
use rand_distr::{Distribution, Normal};

use super::LabeledDataset;
use crate::nn::{Rng, Tensor};

/// Interval the toy regression training inputs are drawn from.
pub const TOY_TRAIN_RANGE: (f64, f64) = (-4.0, 4.0);
/// Interval the toy regression models are evaluated on.
pub const TOY_EVAL_RANGE: (f64, f64) = (-7.0, 7.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MoonsLayout {
    /// Arc parameters drawn uniformly from `[0, π]`.
    Random,
    /// Equally spaced arc parameters, as in the scikit-learn generator.
    Grid,
}

/// Two interleaving half circles.
///
/// Class 0 lies on `(cos t, sin t)`, class 1 on `(1 - cos t, 1 - sin t - 0.5)`
/// for `t ∈ [0, π]`; isotropic Gaussian noise is added to both coordinates.
/// Class 0 samples come first.
pub fn make_two_moons(n_per_class: usize, noise_std: f64, layout: MoonsLayout, seed: u64) -> LabeledDataset {
    let mut rng = Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, noise_std.max(0.0)).expect("finite noise level");
    let params: Vec<f64> = match layout {
        MoonsLayout::Random => (0..2 * n_per_class).map(|_| rng.random_range(0.0..=PI)).collect(),
        MoonsLayout::Grid => {
            let grid: Vec<f64> = (0..n_per_class)
                .map(|i| if n_per_class == 1 { 0.0 } else { PI * i as f64 / (n_per_class - 1) as f64 })
                .collect();
            grid.iter().chain(&grid).copied().collect()
        }
    };
    let mut data = Vec::with_capacity(4 * n_per_class);
    let mut labels = Vec::with_capacity(2 * n_per_class);
    for (i, &t) in params.iter().enumerate() {
        let class = usize::from(i >= n_per_class);
        let (x, y) = if class == 0 {
            (t.cos(), t.sin())
        } else {
            (1.0 - t.cos(), 1.0 - t.sin() - 0.5)
        };
        if noise_std > 0.0 {
            data.push(x + noise.sample(&mut rng));
            data.push(y + noise.sample(&mut rng));
        } else {
            data.push(x);
            data.push(y);
        }
        labels.push(class);
    }
    let features = Tensor::new(vec![2 * n_per_class, 2], data).expect("two columns");
    LabeledDataset::classification("two_moons", features, labels, 2).expect("labels are 0 or 1")
}

/// Equally spaced variant of [`make_two_moons`].
pub fn make_two_moons_grid(n_per_class: usize, noise_std: f64, seed: u64) -> LabeledDataset {
    make_two_moons(n_per_class, noise_std, MoonsLayout::Grid, seed)
}

/// Points drawn uniformly from an axis-aligned box, labelled with `label`.
pub fn make_uniform_box(n: usize, lower: [f64; 2], upper: [f64; 2], classes: usize, seed: u64) -> LabeledDataset {
    let mut rng = Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(2 * n);
    for _ in 0..n {
        data.push(rng.random_range(lower[0]..upper[0]));
        data.push(rng.random_range(lower[1]..upper[1]));
    }
    let features = Tensor::new(vec![n, 2], data).expect("two columns");
    LabeledDataset::classification("uniform_box", features, vec![0; n], classes.max(1)).expect("label 0")
}

/// Noise standard deviation of the toy regression target: `0.15 / (1 + e^-x)`.
pub fn toy_noise_std(x: f64) -> f64 {
    0.15 / (1.0 + (-x).exp())
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// `n` equally spaced inputs over `[-4, 4]` with `y = sin x + ε`,
/// `ε ~ N(0, toy_noise_std(x)²)`.
pub fn make_toy_regression(n_samples: usize, seed: u64) -> LabeledDataset {
    assert!(n_samples >= 2, "need at least two samples");
    let mut rng = Rng::seed_from_u64(seed);
    let xs = linspace(TOY_TRAIN_RANGE.0, TOY_TRAIN_RANGE.1, n_samples);
    let ys = xs
        .iter()
        .map(|&x| {
            let eps: f64 = rand_distr::StandardNormal.sample(&mut rng);
            x.sin() + toy_noise_std(x) * eps
        })
        .collect();
    let features = Tensor::new(vec![n_samples, 1], xs).expect("one column");
    LabeledDataset::regression("toy_regression", features, ys).expect("matching lengths")
}

/// Evaluation inputs: `points` equally spaced values over `[-7, 7]`, shape `[points, 1]`.
pub fn toy_regression_grid(points: usize) -> Tensor {
    let xs = linspace(TOY_EVAL_RANGE.0, TOY_EVAL_RANGE.1, points);
    Tensor::new(vec![points, 1], xs).expect("one column")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_endpoints() {
        let d = make_two_moons_grid(5, 0.0, 0);
        assert_eq!(d.features.row(0), &[1.0, 0.0]);
        assert_eq!(d.features.row(5), &[0.0, 0.5]);
        assert_eq!(d.class_histogram(), vec![5, 5]);
    }

    #[test]
    fn balanced_classes() {
        for n in [1, 2, 7, 30] {
            let d = make_two_moons(n, 0.1, MoonsLayout::Random, 3);
            assert_eq!(d.class_histogram(), vec![n, n]);
            assert_eq!(d.features.shape(), &[2 * n, 2]);
        }
    }

    #[test]
    fn noiseless_points_lie_on_arcs() {
        let d = make_two_moons(200, 0.0, MoonsLayout::Random, 8);
        let grid: Vec<f64> = (0..=20_000).map(|i| PI * i as f64 / 20_000.0).collect();
        for i in 0..d.len() {
            let p = d.features.row(i);
            let class = d.labels()[i];
            let best = grid
                .iter()
                .map(|&t| {
                    let (x, y) = if class == 0 {
                        (t.cos(), t.sin())
                    } else {
                        (1.0 - t.cos(), 0.5 - t.sin())
                    };
                    (x - p[0]).hypot(y - p[1])
                })
                .fold(f64::INFINITY, f64::min);
            // grid spacing π/20000 bounds the nearest-point error; the exact
            // arc parameter recovered from the point itself closes the gap
            let t = if class == 0 { p[1].atan2(p[0]) } else { (0.5 - p[1]).atan2(1.0 - p[0]) };
            let (x, y) = if class == 0 { (t.cos(), t.sin()) } else { (1.0 - t.cos(), 0.5 - t.sin()) };
            assert!((x - p[0]).hypot(y - p[1]) < 1e-9);
            assert!(best < 1e-3);
        }
    }

    #[test]
    fn toy_inputs_and_noise_level() {
        let d = make_toy_regression(2, 0);
        assert_eq!(d.features.data(), &[-4.0, 4.0]);
        assert!((toy_noise_std(0.0) - 0.075).abs() < 1e-15);
        let xs = linspace(-7.0, 7.0, 100);
        assert!(xs.windows(2).all(|w| toy_noise_std(w[0]) < toy_noise_std(w[1])));
        let g = toy_regression_grid(15);
        assert_eq!(g.data()[0], -7.0);
        assert_eq!(g.data()[14], 7.0);
    }

    #[test]
    fn toy_noise_is_heteroscedastic() {
        // many draws at the two endpoints; sample std must match toy_noise_std
        let draws = 4000;
        for (idx, x) in [(0usize, -4.0f64), (1, 4.0)] {
            let residuals: Vec<f64> = (0..draws)
                .map(|s| {
                    let d = make_toy_regression(2, s as u64);
                    d.targets.values().unwrap()[idx] - x.sin()
                })
                .collect();
            let mean = residuals.iter().sum::<f64>() / draws as f64;
            let var = residuals.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (draws - 1) as f64;
            let std = var.sqrt();
            let sigma = toy_noise_std(x);
            // standard error of the sample std of a Gaussian
            let se = sigma / (2.0 * (draws as f64 - 1.0)).sqrt();
            assert!((std - sigma).abs() < 3.0 * se, "x={x}: {std} vs {sigma}");
        }
    }
}
