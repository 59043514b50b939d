//! Experiment driver: sub-sample, train, evaluate, aggregate over trials.

mod csv;
mod data;
mod toy;

pub use csv::{csv_file_name, csv_header, format_csv, parse_csv, write_atomic, write_csv, write_manifest};
pub use data::{load_named, two_moons_data, SweepData, TWO_MOONS_OOD_BOX};
pub use toy::{
    run_regression_toy, run_two_moons_toy, GridPoint, RegressionCurve, RegressionMethod, ToyConfig, TWO_MOONS_GRID_BOX,
};

use crate::datasets::{subsample_per_class, LabeledDataset};
use crate::error::{Error, Result};
use crate::methods::{MethodConfig, PredictionSet, TrainedMethod};
use crate::metrics::{ece_of, entropies, ood_suite, DEFAULT_ECE_BINS};
use crate::nn::{ModelSpec, TrainConfig};
use crate::seed::derive_seed;

/// Metrics of one trained model. Entropy-based fields are NaN for methods
/// that produce no probability vector.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TrialResult {
    pub acc: f64,
    pub mean_entropy: f64,
    pub mean_maxprob: f64,
    pub train_ece: f64,
    pub ece: f64,
    pub ood_auc_entropy: f64,
    pub ood_auc_maxprob: f64,
    pub tr_test_auc_entropy: f64,
    pub tr_test_auc_maxprob: f64,
    pub tr_ood_auc_entropy: f64,
    pub tr_ood_auc_maxprob: f64,
}

impl TrialResult {
    /// Column stems in output order.
    pub const STEMS: [&'static str; 11] = [
        "acc",
        "mean_entropy",
        "mean_maxprob",
        "train_ece",
        "ece",
        "ood_auc_entropy",
        "ood_auc_maxprob",
        "tr_test_auc_entropy",
        "tr_test_auc_maxprob",
        "tr_ood_auc_entropy",
        "tr_ood_auc_maxprob",
    ];

    pub fn values(&self) -> [f64; 11] {
        [
            self.acc,
            self.mean_entropy,
            self.mean_maxprob,
            self.train_ece,
            self.ece,
            self.ood_auc_entropy,
            self.ood_auc_maxprob,
            self.tr_test_auc_entropy,
            self.tr_test_auc_maxprob,
            self.tr_ood_auc_entropy,
            self.tr_ood_auc_maxprob,
        ]
    }

    pub fn from_values(v: [f64; 11]) -> Self {
        Self {
            acc: v[0],
            mean_entropy: v[1],
            mean_maxprob: v[2],
            train_ece: v[3],
            ece: v[4],
            ood_auc_entropy: v[5],
            ood_auc_maxprob: v[6],
            tr_test_auc_entropy: v[7],
            tr_test_auc_maxprob: v[8],
            tr_ood_auc_entropy: v[9],
            tr_ood_auc_maxprob: v[10],
        }
    }
}

/// Mean and population standard deviation of every metric at one SPC value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub spc: usize,
    pub mean: TrialResult,
    pub std: TrialResult,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPlan {
    pub spc_values: Vec<usize>,
    pub trials: usize,
    pub base_seed: u64,
}

impl Default for SweepPlan {
    fn default() -> Self {
        Self {
            spc_values: vec![1, 5, 10, 50, 100, 250, 500, 1000, 5000],
            trials: 5,
            base_seed: 0,
        }
    }
}

impl SweepPlan {
    pub fn validate(&self) -> Result<()> {
        if self.spc_values.is_empty() {
            return Err(Error::Config("no SPC values".into()));
        }
        if self.spc_values[0] == 0 || self.spc_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(format!(
                "SPC values must be positive and strictly increasing, got {:?}",
                self.spc_values
            )));
        }
        if self.trials == 0 {
            return Err(Error::Config("at least one trial required".into()));
        }
        Ok(())
    }

    pub fn trial_seed(&self, spc: usize, trial: usize) -> u64 {
        derive_seed(self.base_seed, &[spc as u64, trial as u64])
    }
}

/// Everything a trial evaluates on, computed from one trained method.
#[derive(Debug, Clone)]
pub struct TrialPredictions {
    pub train: LabeledDataset,
    pub pred_train: PredictionSet,
    pub pred_test: PredictionSet,
    pub pred_ood: PredictionSet,
}

/// Sub-samples, trains and predicts on the train/test/OOD sets.
pub fn trial_predictions(
    method: &MethodConfig,
    spec: &ModelSpec,
    train_cfg: &TrainConfig,
    data: &SweepData,
    spc: usize,
    trial_seed: u64,
) -> Result<TrialPredictions> {
    let train = subsample_per_class(&data.train_pool, spc, trial_seed)?;
    let cfg = TrainConfig {
        seed: trial_seed,
        ..train_cfg.clone()
    };
    let mut trained = TrainedMethod::fit(*method, spec, &train, &cfg)?;
    let pred_train = trained.predict(&train.features, derive_seed(trial_seed, &[1]))?;
    let pred_test = trained.predict(&data.test.features, derive_seed(trial_seed, &[2]))?;
    let pred_ood = trained.predict(&data.ood.features, derive_seed(trial_seed, &[3]))?;
    Ok(TrialPredictions {
        train,
        pred_train,
        pred_test,
        pred_ood,
    })
}

/// Turns the three prediction sets of one trial into its metrics.
pub fn evaluate(preds: &TrialPredictions, test_labels: &[usize]) -> Result<TrialResult> {
    let test = &preds.pred_test;
    if test.is_empty() {
        return Err(Error::Empty("test set"));
    }
    let n = test.len() as f64;
    let predicted = test.predicted();
    let acc = predicted.iter().zip(test_labels).filter(|(p, l)| p == l).count() as f64 / n;
    let mean_entropy = if test.has_entropy() {
        entropies(test)?.iter().sum::<f64>() / n
    } else {
        f64::NAN
    };
    let mean_maxprob = test.max_prob().iter().sum::<f64>() / n;
    let train_ece = ece_of(&preds.pred_train, preds.train.labels(), DEFAULT_ECE_BINS)?.ece;
    let ece = ece_of(test, test_labels, DEFAULT_ECE_BINS)?.ece;
    let suite = ood_suite(&preds.pred_train, test, &preds.pred_ood)?;
    let nan = |v: Option<f64>| v.unwrap_or(f64::NAN);
    Ok(TrialResult {
        acc,
        mean_entropy,
        mean_maxprob,
        train_ece,
        ece,
        ood_auc_entropy: nan(suite.test_vs_ood_entropy),
        ood_auc_maxprob: suite.test_vs_ood_maxprob,
        tr_test_auc_entropy: nan(suite.train_vs_test_entropy),
        tr_test_auc_maxprob: suite.train_vs_test_maxprob,
        tr_ood_auc_entropy: nan(suite.train_vs_ood_entropy),
        tr_ood_auc_maxprob: suite.train_vs_ood_maxprob,
    })
}

/// One (method, SPC, trial) cell: sub-sample with `trial_seed`, train, evaluate.
pub fn run_trial(
    method: &MethodConfig,
    spec: &ModelSpec,
    train_cfg: &TrainConfig,
    data: &SweepData,
    spc: usize,
    trial_seed: u64,
) -> Result<TrialResult> {
    let preds = trial_predictions(method, spec, train_cfg, data, spc, trial_seed)?;
    evaluate(&preds, data.test.labels())
}

/// Mean and population standard deviation per field.
pub fn aggregate(spc: usize, trials: &[TrialResult]) -> SweepRow {
    let k = trials.len() as f64;
    let mut mean = [0.0; 11];
    let mut std = [0.0; 11];
    for t in trials {
        for (m, v) in mean.iter_mut().zip(t.values()) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= k);
    for t in trials {
        for ((s, v), m) in std.iter_mut().zip(t.values()).zip(mean) {
            *s += (v - m).powi(2);
        }
    }
    std.iter_mut().for_each(|s| *s = (*s / k).sqrt());
    SweepRow {
        spc,
        mean: TrialResult::from_values(mean),
        std: TrialResult::from_values(std),
    }
}

/// Runs every (SPC, trial) cell of `plan` and aggregates per SPC value.
/// `progress` is called after each finished trial.
pub fn run_sweep(
    method: &MethodConfig,
    spec: &ModelSpec,
    train_cfg: &TrainConfig,
    data: &SweepData,
    plan: &SweepPlan,
    mut progress: impl FnMut(usize, usize, &TrialResult),
) -> Result<Vec<SweepRow>> {
    plan.validate()?;
    method.validate()?;
    let mut rows = Vec::with_capacity(plan.spc_values.len());
    for &spc in &plan.spc_values {
        let mut results = Vec::with_capacity(plan.trials);
        for trial in 0..plan.trials {
            let r = run_trial(method, spec, train_cfg, data, spc, plan.trial_seed(spc, trial)).map_err(|e| {
                Error::Trial {
                    method: method.method.name().to_string(),
                    spc,
                    trial,
                    source: Box::new(e),
                }
            })?;
            progress(spc, trial, &r);
            results.push(r);
        }
        rows.push(aggregate(spc, &results));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::methods::Method;

    fn small() -> (ModelSpec, TrainConfig, SweepData) {
        let spec = ModelSpec::mlp(2, vec![16], 2);
        let cfg = TrainConfig {
            epochs: 5,
            batch_size: 16,
            ..TrainConfig::default()
        };
        (spec, cfg, two_moons_data(3, 100, 50, 60))
    }

    #[test]
    fn plan_validation() {
        assert!(SweepPlan::default().validate().is_ok());
        for bad in [vec![], vec![0, 1], vec![5, 5], vec![10, 5]] {
            let p = SweepPlan {
                spc_values: bad,
                ..SweepPlan::default()
            };
            assert!(p.validate().is_err());
        }
        let p = SweepPlan {
            trials: 0,
            ..SweepPlan::default()
        };
        assert!(p.validate().is_err());
    }

    #[test]
    fn aggregate_uses_population_std() {
        let t = |v: f64| TrialResult::from_values([v; 11]);
        let row = aggregate(5, &[t(0.2), t(0.4), t(0.6)]);
        for (m, s) in row.mean.values().iter().zip(row.std.values()) {
            assert!((m - 0.4).abs() < 1e-12);
            assert!((s - (0.08f64 / 3.0).sqrt()).abs() < 1e-12);
        }
        assert!((row.std.acc - 0.1633).abs() < 1e-4);
        let single = aggregate(1, &[t(0.7)]);
        assert!(single.std.values().iter().all(|&s| s == 0.0));
    }

    #[test]
    fn trial_replays_identically() {
        let (spec, cfg, data) = small();
        let m = MethodConfig::new(Method::Baseline);
        let a = run_trial(&m, &spec, &cfg, &data, 10, 42).unwrap();
        let b = run_trial(&m, &spec, &cfg, &data, 10, 42).unwrap();
        assert_eq!(a.values().map(f64::to_bits), b.values().map(f64::to_bits));
        for v in a.values() {
            assert!((0.0..=1.0).contains(&v), "{v}");
        }
    }

    #[test]
    fn ood_equal_to_test_gives_half() {
        let (spec, cfg, mut data) = small();
        data.ood = data.test.clone();
        let mut m = MethodConfig::new(Method::Baseline);
        m.mc_samples = 2;
        let r = run_trial(&m, &spec, &cfg, &data, 10, 1).unwrap();
        assert_eq!(r.ood_auc_entropy, 0.5);
        assert_eq!(r.ood_auc_maxprob, 0.5);
    }

    #[test]
    fn gradient_trials_leave_entropy_undefined() {
        let (spec, cfg, data) = small();
        let r = run_trial(&MethodConfig::new(Method::Gradient), &spec, &cfg, &data, 5, 1).unwrap();
        assert!(r.mean_entropy.is_nan() && r.ood_auc_entropy.is_nan() && r.tr_test_auc_entropy.is_nan());
        assert!(r.ood_auc_maxprob.is_finite() && r.ece.is_finite());
    }

    #[test]
    fn sweep_rows_follow_plan_and_wrap_errors() {
        let (spec, cfg, data) = small();
        let plan = SweepPlan {
            spc_values: vec![1, 5, 10],
            trials: 2,
            base_seed: 9,
        };
        let mut calls = 0;
        let rows = run_sweep(&MethodConfig::new(Method::Baseline), &spec, &cfg, &data, &plan, |_, _, _| calls += 1).unwrap();
        assert_eq!(rows.iter().map(|r| r.spc).collect::<Vec<_>>(), vec![1, 5, 10]);
        assert_eq!(calls, 6);

        let plan = SweepPlan {
            spc_values: vec![1, 5000],
            trials: 1,
            base_seed: 9,
        };
        let err = run_sweep(&MethodConfig::new(Method::Baseline), &spec, &cfg, &data, &plan, |_, _, _| {}).unwrap_err();
        assert!(matches!(err, Error::Trial { spc: 5000, trial: 0, .. }), "{err}");
        assert!(err.to_string().contains("baseline spc=5000"));
    }
}
