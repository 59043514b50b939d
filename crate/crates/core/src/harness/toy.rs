use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;

use super::SweepData;
use crate::datasets::{make_toy_regression, subsample_per_class, toy_regression_grid};
use crate::error::{Error, Result};
use crate::methods::{MethodConfig, TrainedMethod};
use crate::nn::{train, AdamConfig, LossKind, MeanHead, Mode, ModelSpec, RegressionHeads, Rng, Tensor, TrainConfig};
use crate::seed::derive_seed;

/// Region covered by the Two Moons confidence grid.
pub const TWO_MOONS_GRID_BOX: ([f64; 2], [f64; 2]) = ([-2.0, -1.5], [3.0, 2.0]);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub x: f64,
    pub y: f64,
    pub confidence: f64,
}

/// Trains one method on `spc` Two Moons samples per class and reports its
/// max-probability confidence over a `resolution × resolution` grid.
pub fn run_two_moons_toy(
    method: &MethodConfig,
    spc: usize,
    train_cfg: &TrainConfig,
    resolution: usize,
    seed: u64,
) -> Result<Vec<GridPoint>> {
    if resolution < 2 {
        return Err(Error::Config("grid resolution must be at least 2".into()));
    }
    let data = SweepData::two_moons(seed);
    let trial_seed = derive_seed(seed, &[spc as u64]);
    let train_set = subsample_per_class(&data.train_pool, spc, trial_seed)?;
    let cfg = TrainConfig {
        seed: trial_seed,
        ..train_cfg.clone()
    };
    let mut trained = TrainedMethod::fit(*method, &data.default_spec(), &train_set, &cfg)?;
    let ([x0, y0], [x1, y1]) = TWO_MOONS_GRID_BOX;
    let step = |lo: f64, hi: f64, i: usize| lo + (hi - lo) * i as f64 / (resolution - 1) as f64;
    let mut coords = Vec::with_capacity(2 * resolution * resolution);
    for i in 0..resolution {
        for j in 0..resolution {
            coords.push(step(x0, x1, i));
            coords.push(step(y0, y1, j));
        }
    }
    let grid = Tensor::new(vec![resolution * resolution, 2], coords)?;
    let pred = trained.predict(&grid, derive_seed(trial_seed, &[4]))?;
    Ok(pred
        .max_prob()
        .into_iter()
        .enumerate()
        .map(|(k, confidence)| GridPoint {
            x: grid.row(k)[0],
            y: grid.row(k)[1],
            confidence,
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RegressionMethod {
    /// Single network, mean head only, squared error.
    BaselineMse,
    /// Ensemble of mean + variance networks trained with Gaussian NLL.
    EnsembleNll,
    /// Flipout mean head, squared error.
    Flipout,
    /// Flipout mean head plus variance head, Gaussian NLL.
    FlipoutNll,
    /// Inference-time dropout before the mean head, squared error.
    Dropout,
    /// DropConnect mean head, squared error.
    DropConnect,
}

impl RegressionMethod {
    pub const ALL: [RegressionMethod; 6] = [
        RegressionMethod::BaselineMse,
        RegressionMethod::EnsembleNll,
        RegressionMethod::Flipout,
        RegressionMethod::FlipoutNll,
        RegressionMethod::Dropout,
        RegressionMethod::DropConnect,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RegressionMethod::BaselineMse => "baseline-mse",
            RegressionMethod::EnsembleNll => "ensemble-nll",
            RegressionMethod::Flipout => "flipout",
            RegressionMethod::FlipoutNll => "flipout-nll",
            RegressionMethod::Dropout => "dropout",
            RegressionMethod::DropConnect => "dropconnect",
        }
    }

    fn heads(self, p: f64) -> RegressionHeads {
        let (mean, dropout, variance) = match self {
            RegressionMethod::BaselineMse => (MeanHead::Dense, None, false),
            RegressionMethod::EnsembleNll => (MeanHead::Dense, None, true),
            RegressionMethod::Flipout => (MeanHead::Flipout, None, false),
            RegressionMethod::FlipoutNll => (MeanHead::Flipout, None, true),
            RegressionMethod::Dropout => (MeanHead::Dense, Some(p), false),
            RegressionMethod::DropConnect => (MeanHead::DropConnect { p }, None, false),
        };
        RegressionHeads { mean, dropout, variance }
    }

    fn loss(self) -> LossKind {
        match self {
            RegressionMethod::EnsembleNll | RegressionMethod::FlipoutNll => LossKind::GaussianNll,
            _ => LossKind::MeanSquaredError,
        }
    }

    fn stochastic(self) -> bool {
        !matches!(self, RegressionMethod::BaselineMse | RegressionMethod::EnsembleNll)
    }
}

impl fmt::Display for RegressionMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RegressionMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RegressionMethod::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                let names: Vec<&str> = RegressionMethod::ALL.iter().map(|m| m.name()).collect();
                Error::Config(format!("unknown regression method '{s}' (expected one of {})", names.join(", ")))
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub mc_samples: usize,
    pub ensemble_size: usize,
    pub drop_prob: f64,
    pub grid_points: usize,
    pub seed: u64,
}

impl Default for ToyConfig {
    fn default() -> Self {
        Self {
            epochs: 1000,
            batch_size: 64,
            adam: AdamConfig::default(),
            mc_samples: 50,
            ensemble_size: 5,
            drop_prob: 0.25,
            grid_points: 200,
            seed: 0,
        }
    }
}

/// Predictions of a regression method on the evaluation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionCurve {
    pub x: Vec<f64>,
    pub mean: Vec<f64>,
    /// Predicted noise variance; absent for methods without a variance head.
    pub aleatoric_var: Option<Vec<f64>>,
    /// Spread of the mean head over Monte-Carlo samples or ensemble members;
    /// absent when a single deterministic network makes the prediction.
    pub epistemic_std: Option<Vec<f64>>,
}

/// Trains the two-hidden-layer (32 units) regression network on `n_samples`
/// toy points and evaluates it on the `[-7, 7]` grid.
pub fn run_regression_toy(method: RegressionMethod, n_samples: usize, cfg: &ToyConfig) -> Result<RegressionCurve> {
    if n_samples < 2 {
        return Err(Error::Config("need at least two regression samples".into()));
    }
    let data = make_toy_regression(n_samples, derive_seed(cfg.seed, &[n_samples as u64]));
    let spec = ModelSpec::mlp(1, vec![32, 32], 0);
    let heads = method.heads(cfg.drop_prob);
    let grid = toy_regression_grid(cfg.grid_points);
    let members = if method == RegressionMethod::EnsembleNll { cfg.ensemble_size.max(1) } else { 1 };
    let passes = if method.stochastic() { cfg.mc_samples.max(1) } else { 1 };

    let mut means: Vec<Vec<f64>> = Vec::with_capacity(members * passes);
    let mut vars: Vec<Vec<f64>> = Vec::new();
    for k in 0..members {
        let seed = derive_seed(cfg.seed, &[n_samples as u64, k as u64]);
        let mut model = spec.build_regression(heads, seed);
        let train_cfg = TrainConfig {
            epochs: cfg.epochs,
            batch_size: cfg.batch_size,
            adam: cfg.adam,
            loss: method.loss(),
            seed,
        };
        train(&mut model, &data, &train_cfg)?;
        let mut rng = Rng::seed_from_u64(seed);
        rng.set_stream(3);
        for _ in 0..passes {
            let out = model.predict(&grid, Mode::Eval, &mut rng)?;
            means.push(out[0].data().to_vec());
            if heads.variance {
                vars.push(out[1].data().to_vec());
            }
        }
    }
    let n = grid.rows();
    let avg = |rows: &[Vec<f64>], i: usize| rows.iter().map(|r| r[i]).sum::<f64>() / rows.len() as f64;
    let mean: Vec<f64> = (0..n).map(|i| avg(&means, i)).collect();
    let epistemic_std = (means.len() > 1).then(|| {
        (0..n)
            .map(|i| {
                let m = mean[i];
                (means.iter().map(|r| (r[i] - m).powi(2)).sum::<f64>() / means.len() as f64).sqrt()
            })
            .collect()
    });
    let aleatoric_var = heads.variance.then(|| (0..n).map(|i| avg(&vars, i)).collect());
    Ok(RegressionCurve {
        x: grid.into_data(),
        mean,
        aleatoric_var,
        epistemic_std,
    })
}
