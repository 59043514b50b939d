//! Uncertainty-quantification methods: training recipes and prediction pipelines.

mod gradient;

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;

pub use gradient::{gradient_to_confidence, gradient_uncertainty, Aggregator};

use crate::datasets::LabeledDataset;
use crate::error::{Error, Result};
use crate::nn::{train, Layer, LayerKind, LossKind, Mode, Model, ModelSpec, OutputHead, Rng, Tensor, TrainConfig};
use crate::seed::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Baseline,
    Dropout,
    DropConnect,
    Ensemble,
    Duq,
    Flipout,
    Gradient,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Baseline,
        Method::Dropout,
        Method::DropConnect,
        Method::Ensemble,
        Method::Duq,
        Method::Flipout,
        Method::Gradient,
    ];

    /// Name used on the command line and in output file names.
    pub fn name(self) -> &'static str {
        match self {
            Method::Baseline => "baseline",
            Method::Dropout => "dropout",
            Method::DropConnect => "dropconnect",
            Method::Ensemble => "ensemble",
            Method::Duq => "duq",
            Method::Flipout => "flipout",
            Method::Gradient => "gradient",
        }
    }

    pub fn abbreviation(self) -> &'static str {
        match self {
            Method::Baseline => "BL",
            Method::Dropout => "DO",
            Method::DropConnect => "DC",
            Method::Ensemble => "DE",
            Method::Duq => "DUQ",
            Method::Flipout => "VI",
            Method::Gradient => "GD",
        }
    }

    /// Whether predictions carry a full probability vector (and thus entropy).
    pub fn has_entropy(self) -> bool {
        self != Method::Gradient
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s) || m.abbreviation().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                let names: Vec<&str> = Method::ALL.iter().map(|m| m.name()).collect();
                Error::Config(format!("unknown method '{s}' (expected one of {})", names.join(", ")))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DuqConfig {
    pub length_scale: f64,
    /// Defaults to the width of the penultimate layer.
    pub centroid_dim: Option<usize>,
}

impl Default for DuqConfig {
    fn default() -> Self {
        Self {
            length_scale: 0.1,
            centroid_dim: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MethodConfig {
    pub method: Method,
    pub mc_samples: usize,
    pub drop_prob: f64,
    pub ensemble_size: usize,
    pub duq: DuqConfig,
    pub aggregator: Aggregator,
}

impl MethodConfig {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            mc_samples: 50,
            drop_prob: 0.25,
            ensemble_size: 5,
            duq: DuqConfig::default(),
            aggregator: Aggregator::L2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.mc_samples == 0 {
            return Err(Error::Config("mc_samples must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.drop_prob) {
            return Err(Error::Config(format!("drop probability {} outside [0, 1)", self.drop_prob)));
        }
        if self.ensemble_size == 0 {
            return Err(Error::Config("ensemble_size must be at least 1".into()));
        }
        if !(self.duq.length_scale > 0.0) {
            return Err(Error::Config(format!("length scale {} must be positive", self.duq.length_scale)));
        }
        Ok(())
    }

    /// Output layer and training loss for this method.
    pub fn head(&self) -> (OutputHead, LossKind) {
        let ce = LossKind::CategoricalCrossEntropy;
        match self.method {
            Method::Baseline | Method::Ensemble | Method::Gradient => (OutputHead::Softmax, ce),
            Method::Dropout => (OutputHead::DropoutSoftmax { p: self.drop_prob }, ce),
            Method::DropConnect => (OutputHead::DropConnect { p: self.drop_prob }, ce),
            Method::Flipout => (OutputHead::Flipout, ce),
            Method::Duq => (
                OutputHead::Rbf {
                    length_scale: self.duq.length_scale,
                    centroid_dim: self.duq.centroid_dim,
                },
                LossKind::BinaryCrossEntropy,
            ),
        }
    }
}

/// Per-sample outputs of one method on one evaluation set.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    /// `[n, C]`; rows sum to one.
    pub probs: Tensor,
    /// Normalised gradient confidence (gradient method only).
    pub confidence: Option<Vec<f64>>,
    /// Aggregated gradient before normalisation (gradient method only).
    pub raw_score: Option<Vec<f64>>,
    /// Unnormalised per-class kernel values (DUQ only).
    pub kernels: Option<Tensor>,
}

impl PredictionSet {
    pub fn from_probs(probs: Tensor) -> Self {
        Self {
            probs,
            confidence: None,
            raw_score: None,
            kernels: None,
        }
    }

    pub fn len(&self) -> usize {
        self.probs.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn predicted(&self) -> Vec<usize> {
        (0..self.len()).map(|i| gradient::argmax(self.probs.row(i))).collect()
    }

    /// Score behind the max-probability metric: gradient confidence, the
    /// largest raw DUQ kernel, or the largest class probability.
    pub fn max_prob(&self) -> Vec<f64> {
        if let Some(c) = &self.confidence {
            return c.clone();
        }
        let src = self.kernels.as_ref().unwrap_or(&self.probs);
        (0..src.rows())
            .map(|i| src.row(i).iter().copied().fold(f64::NEG_INFINITY, f64::max))
            .collect()
    }

    /// Confidence used for calibration: gradient confidence or the largest
    /// (normalised) class probability.
    pub fn calibration_confidence(&self) -> Vec<f64> {
        match &self.confidence {
            Some(c) => c.clone(),
            None => (0..self.len())
                .map(|i| self.probs.row(i).iter().copied().fold(f64::NEG_INFINITY, f64::max))
                .collect(),
        }
    }

    pub fn has_entropy(&self) -> bool {
        self.confidence.is_none()
    }
}

fn mc_rng(seed: u64) -> Rng {
    let mut rng = Rng::seed_from_u64(seed);
    rng.set_stream(3);
    rng
}

/// One deterministic eval-mode pass.
pub fn predict_baseline(model: &mut Model, batch: &Tensor) -> Result<PredictionSet> {
    let out = model.predict(batch, Mode::Eval, &mut mc_rng(0))?;
    Ok(PredictionSet::from_probs(out.into_iter().next().ok_or(Error::MissingLayer("output head"))?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum McKind {
    Dropout,
    DropConnect,
    Flipout,
}

impl McKind {
    fn layer(self) -> LayerKind {
        match self {
            McKind::Dropout => LayerKind::Dropout,
            McKind::DropConnect => LayerKind::DropConnect,
            McKind::Flipout => LayerKind::FlipoutDense,
        }
    }
}

/// Mean of `samples` stochastic eval-mode passes. Batchnorm uses running
/// statistics; every pass draws fresh masks from `rng`.
pub fn predict_mc(model: &mut Model, batch: &Tensor, samples: usize, kind: McKind, rng: &mut Rng) -> Result<PredictionSet> {
    let layer = kind.layer();
    let present = match model.find(layer) {
        Some(Layer::Dropout(d)) => d.stochastic_eval,
        Some(Layer::DropConnect(d)) => d.stochastic_eval,
        Some(Layer::FlipoutDense(_)) => true,
        _ => false,
    };
    if !present {
        return Err(Error::MissingLayer(match kind {
            McKind::Dropout => "inference-time dropout",
            McKind::DropConnect => "inference-time dropconnect",
            McKind::Flipout => "flipout",
        }));
    }
    if samples == 0 {
        return Err(Error::Config("at least one Monte-Carlo sample required".into()));
    }
    let mut sum: Option<Tensor> = None;
    for _ in 0..samples {
        let out = model.predict(batch, Mode::Eval, rng)?.swap_remove(0);
        sum = Some(match sum {
            None => out,
            Some(mut acc) => {
                acc.data_mut().iter_mut().zip(out.data()).for_each(|(a, b)| *a += b);
                acc
            }
        });
    }
    let mut mean = sum.expect("samples > 0");
    let scale = 1.0 / samples as f64;
    mean.data_mut().iter_mut().for_each(|v| *v *= scale);
    Ok(PredictionSet::from_probs(mean))
}

/// Trains `members` networks of identical architecture; member `k` uses
/// its own seed for initialisation and shuffling (member 0 uses `cfg.seed`).
pub fn train_ensemble(spec: &ModelSpec, data: &LabeledDataset, cfg: &TrainConfig, members: usize) -> Result<Vec<Model>> {
    (0..members)
        .map(|k| {
            let seed = member_seed(cfg.seed, k);
            let mut model = spec.build(OutputHead::Softmax, seed);
            let member_cfg = TrainConfig { seed, ..cfg.clone() };
            train(&mut model, data, &member_cfg)?;
            Ok(model)
        })
        .collect()
}

fn member_seed(seed: u64, k: usize) -> u64 {
    if k == 0 {
        seed
    } else {
        derive_seed(seed, &[k as u64])
    }
}

/// Uniform mean of the members' softmax outputs.
pub fn predict_ensemble(models: &mut [Model], batch: &Tensor) -> Result<PredictionSet> {
    if models.is_empty() {
        return Err(Error::Empty("ensemble"));
    }
    let mut sum: Option<Tensor> = None;
    for m in models.iter_mut() {
        let p = predict_baseline(m, batch)?.probs;
        sum = Some(match sum {
            None => p,
            Some(mut acc) => {
                acc.data_mut().iter_mut().zip(p.data()).for_each(|(a, b)| *a += b);
                acc
            }
        });
    }
    let mut mean = sum.expect("nonempty");
    let scale = 1.0 / models.len() as f64;
    mean.data_mut().iter_mut().for_each(|v| *v *= scale);
    Ok(PredictionSet::from_probs(mean))
}

/// Per-class RBF kernel values of a model whose head ends in an RBF layer.
pub fn duq_forward(model: &mut Model, batch: &Tensor) -> Result<Tensor> {
    if !matches!(model.heads.first().and_then(|h| h.last()), Some(Layer::Rbf(_))) {
        return Err(Error::MissingLayer("rbf output"));
    }
    Ok(model.predict(batch, Mode::Eval, &mut mc_rng(0))?.swap_remove(0))
}

/// Normalises kernel values to sum to one; an all-zero row becomes uniform.
pub fn duq_to_probs(kernels: &[f64]) -> Vec<f64> {
    let sum: f64 = kernels.iter().sum();
    if sum > 0.0 {
        kernels.iter().map(|k| k / sum).collect()
    } else {
        vec![1.0 / kernels.len() as f64; kernels.len()]
    }
}

pub fn predict_duq(model: &mut Model, batch: &Tensor) -> Result<PredictionSet> {
    let kernels = duq_forward(model, batch)?;
    let c = kernels.row_len();
    let mut probs = Vec::with_capacity(kernels.len());
    for i in 0..kernels.rows() {
        probs.extend(duq_to_probs(kernels.row(i)));
    }
    Ok(PredictionSet {
        probs: Tensor::new(vec![kernels.rows(), c], probs)?,
        confidence: None,
        raw_score: None,
        kernels: Some(kernels),
    })
}

/// Gradient-method prediction; confidences are min-max normalised over this batch.
pub fn predict_gradient(model: &mut Model, batch: &Tensor, aggregator: Aggregator) -> Result<PredictionSet> {
    let (probs, raw) = gradient_uncertainty(model, batch, aggregator)?;
    let confidence = if raw.is_empty() { Vec::new() } else { gradient_to_confidence(&raw)? };
    Ok(PredictionSet {
        probs,
        confidence: Some(confidence),
        raw_score: Some(raw),
        kernels: None,
    })
}

/// A method together with its trained network(s).
#[derive(Debug, Clone)]
pub struct TrainedMethod {
    pub config: MethodConfig,
    pub models: Vec<Model>,
}

impl TrainedMethod {
    /// Builds and trains the network(s) the method needs. The training loss
    /// in `train_cfg` is replaced by the method's own loss.
    pub fn fit(config: MethodConfig, spec: &ModelSpec, data: &LabeledDataset, train_cfg: &TrainConfig) -> Result<Self> {
        config.validate()?;
        let (head, loss) = config.head();
        let cfg = TrainConfig {
            loss,
            ..train_cfg.clone()
        };
        let models = if config.method == Method::Ensemble {
            train_ensemble(spec, data, &cfg, config.ensemble_size)?
        } else {
            let mut model = spec.build(head, cfg.seed);
            train(&mut model, data, &cfg)?;
            vec![model]
        };
        Ok(Self { config, models })
    }

    /// Predictions on `batch`; `seed` drives Monte-Carlo masks.
    pub fn predict(&mut self, batch: &Tensor, seed: u64) -> Result<PredictionSet> {
        let cfg = self.config;
        let kind = match cfg.method {
            Method::Dropout => McKind::Dropout,
            Method::DropConnect => McKind::DropConnect,
            Method::Flipout => McKind::Flipout,
            Method::Baseline => return predict_baseline(&mut self.models[0], batch),
            Method::Ensemble => return predict_ensemble(&mut self.models, batch),
            Method::Duq => return predict_duq(&mut self.models[0], batch),
            Method::Gradient => return predict_gradient(&mut self.models[0], batch, cfg.aggregator),
        };
        predict_mc(&mut self.models[0], batch, cfg.mc_samples, kind, &mut mc_rng(seed))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::{make_two_moons, MoonsLayout};
    use crate::nn::layers::{Dense, FlipoutDense, Softmax};

    fn spec() -> ModelSpec {
        ModelSpec::mlp(2, vec![8], 2)
    }

    fn moons() -> LabeledDataset {
        make_two_moons(20, 0.1, MoonsLayout::Random, 1)
    }

    fn quick() -> TrainConfig {
        TrainConfig {
            epochs: 3,
            batch_size: 16,
            ..TrainConfig::default()
        }
    }

    fn assert_rows_sum_to_one(p: &PredictionSet) {
        for i in 0..p.len() {
            assert!((p.probs.row(i).iter().sum::<f64>() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn zeroed_output_layer_gives_uniform_probs() {
        let mut m = spec().build(OutputHead::Softmax, 0);
        if let Layer::Dense(d) = &mut m.heads[0][0] {
            d.weight.value.data_mut().fill(0.0);
            d.bias.value.data_mut().fill(0.0);
        }
        let p = predict_baseline(&mut m, &moons().features).unwrap();
        assert!(p.probs.data().iter().all(|&v| v == 0.5));
    }

    #[test]
    fn baseline_equals_direct_forward() {
        let mut m = spec().build(OutputHead::Softmax, 3);
        let x = moons().features;
        let direct = m.forward(&x, Mode::Eval, &mut Rng::seed_from_u64(0)).unwrap();
        let p = predict_baseline(&mut m, &x).unwrap();
        assert!(p.probs.max_abs_diff(&direct[0]) < 1e-12);
    }

    #[test]
    fn mc_with_zero_drop_is_baseline() {
        let mut m = spec().build(OutputHead::DropoutSoftmax { p: 0.0 }, 2);
        let x = moons().features;
        let base = predict_baseline(&mut m, &x).unwrap();
        let mc = predict_mc(&mut m, &x, 50, McKind::Dropout, &mut mc_rng(1)).unwrap();
        assert!(base.probs.max_abs_diff(&mc.probs) < 1e-12);
    }

    #[test]
    fn mc_mean_matches_scripted_replay() {
        let mut m = spec().build(OutputHead::DropoutSoftmax { p: 0.25 }, 2);
        let x = moons().features;
        let mc = predict_mc(&mut m, &x, 50, McKind::Dropout, &mut mc_rng(5)).unwrap();
        let mut rng = mc_rng(5);
        let mut acc = vec![0.0; x.rows() * 2];
        for _ in 0..50 {
            let out = m.forward(&x, Mode::Eval, &mut rng).unwrap();
            for (a, b) in acc.iter_mut().zip(out[0].data()) {
                *a += b / 50.0;
            }
        }
        let replay = Tensor::new(vec![x.rows(), 2], acc).unwrap();
        assert!(mc.probs.max_abs_diff(&replay) < 1e-12);
        assert_rows_sum_to_one(&mc);
    }

    #[test]
    fn single_mc_sample_is_one_stochastic_pass() {
        let mut m = spec().build(OutputHead::DropConnect { p: 0.25 }, 2);
        let x = moons().features;
        let mc = predict_mc(&mut m, &x, 1, McKind::DropConnect, &mut mc_rng(8)).unwrap();
        let one = m.forward(&x, Mode::Eval, &mut mc_rng(8)).unwrap();
        assert!(mc.probs.max_abs_diff(&one[0]) < 1e-12);
    }

    #[test]
    fn mc_requires_stochastic_layer() {
        let mut m = spec().build(OutputHead::Softmax, 0);
        let x = moons().features;
        for kind in [McKind::Dropout, McKind::DropConnect, McKind::Flipout] {
            assert!(matches!(
                predict_mc(&mut m, &x, 5, kind, &mut mc_rng(0)),
                Err(Error::MissingLayer(_))
            ));
        }
    }

    #[test]
    fn more_samples_reduce_spread_of_the_mean() {
        let mut m = spec().build(OutputHead::DropoutSoftmax { p: 0.25 }, 4);
        let x = Tensor::from_rows(&[vec![0.4, 0.2]]).unwrap();
        let spread = |m: &mut Model, samples: usize| {
            let means: Vec<f64> = (0..50)
                .map(|r| {
                    predict_mc(m, &x, samples, McKind::Dropout, &mut mc_rng(100 + r))
                        .unwrap()
                        .probs
                        .data()[0]
                })
                .collect();
            let mu = means.iter().sum::<f64>() / 50.0;
            means.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / 50.0
        };
        let (v50, v5) = (spread(&mut m, 50), spread(&mut m, 5));
        assert!(v50 <= v5, "{v50} vs {v5}");
    }

    #[test]
    fn ensemble_of_identical_members_and_hand_set_outputs() {
        let spec = spec();
        let x = moons().features;
        let mut single = spec.build(OutputHead::Softmax, 7);
        let mut copies = vec![single.clone(), single.clone(), single.clone()];
        let base = predict_baseline(&mut single, &x).unwrap();
        let ens = predict_ensemble(&mut copies, &x).unwrap();
        assert!(base.probs.max_abs_diff(&ens.probs) < 1e-12);

        let constant = |bias: [f64; 2]| {
            let mut w = Tensor::zeros(&[2, 2]);
            w.data_mut().fill(0.0);
            Model::sequential(vec![
                Layer::Dense(Dense::from_weights(w, Tensor::new(vec![2], bias.to_vec()).unwrap())),
                Layer::Softmax(Softmax::new()),
            ])
        };
        let mut pair = vec![constant([1000.0, 0.0]), constant([0.0, 1000.0])];
        let p = predict_ensemble(&mut pair, &x).unwrap();
        assert!(p.probs.data().iter().all(|&v| v == 0.5));
    }

    #[test]
    fn ensemble_mean_matches_scripted_average() {
        let data = moons();
        let mut members = train_ensemble(&spec(), &data, &quick(), 5).unwrap();
        let ens = predict_ensemble(&mut members, &data.features).unwrap();
        let mut acc = Tensor::zeros(ens.probs.shape());
        for m in &mut members {
            let p = m.forward(&data.features, Mode::Eval, &mut Rng::seed_from_u64(0)).unwrap();
            acc.data_mut().iter_mut().zip(p[0].data()).for_each(|(a, b)| *a += b / 5.0);
        }
        assert!(ens.probs.max_abs_diff(&acc) < 1e-12);
        // members differ
        let w = |m: &Model| m.params()[0].value.clone();
        assert_ne!(w(&members[0]), w(&members[1]));
    }

    #[test]
    fn single_member_ensemble_is_baseline() {
        let data = moons();
        let cfg = quick();
        let bl = TrainedMethod::fit(MethodConfig::new(Method::Baseline), &spec(), &data, &cfg).unwrap();
        let mut de_cfg = MethodConfig::new(Method::Ensemble);
        de_cfg.ensemble_size = 1;
        let mut de = TrainedMethod::fit(de_cfg, &spec(), &data, &cfg).unwrap();
        let mut bl = bl;
        let a = bl.predict(&data.features, 0).unwrap();
        let b = de.predict(&data.features, 0).unwrap();
        assert!(a.probs.max_abs_diff(&b.probs) < 1e-12);
    }

    #[test]
    fn duq_probabilities() {
        assert_eq!(duq_to_probs(&[1.0, 1.0]), vec![0.5, 0.5]);
        let p = duq_to_probs(&[0.8, 0.2]);
        assert!((p[0] - 0.8).abs() < 1e-15 && (p[1] - 0.2).abs() < 1e-15);
        assert_eq!(duq_to_probs(&[0.0, 0.0, 0.0, 0.0]), vec![0.25; 4]);
        let mut rng = Rng::seed_from_u64(3);
        for _ in 0..100 {
            let k: Vec<f64> = (0..10).map(|_| rand::Rng::random_range(&mut rng, 1e-6..1.0)).collect();
            assert!((duq_to_probs(&k).iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn duq_pipeline_keeps_argmax_and_raw_max() {
        let data = moons();
        let mut t = TrainedMethod::fit(MethodConfig::new(Method::Duq), &spec(), &data, &quick()).unwrap();
        let p = t.predict(&data.features, 0).unwrap();
        let k = p.kernels.as_ref().unwrap();
        assert!(k.data().iter().all(|&v| v > 0.0 && v <= 1.0));
        let raw_max = p.max_prob();
        for i in 0..p.len() {
            assert_eq!(gradient::argmax(k.row(i)), p.predicted()[i]);
            assert_eq!(raw_max[i], k.row(i).iter().copied().fold(0.0, f64::max));
        }
        assert_rows_sum_to_one(&p);
        assert!(p.has_entropy());
    }

    #[test]
    fn flipout_with_zero_std_is_dense() {
        let mut rng = Rng::seed_from_u64(1);
        let dense = Dense::new(2, 3, &mut rng);
        let mu = dense.weight.value.clone();
        let bias = 0.3;
        let mut det = Model::sequential(vec![
            Layer::Dense(Dense::from_weights(mu.clone(), Tensor::full(&[3], bias))),
            Layer::Softmax(Softmax::new()),
        ]);
        let mut vi = Model::sequential(vec![
            Layer::FlipoutDense(FlipoutDense::from_weights(mu, Tensor::full(&[2, 3], -800.0), bias)),
            Layer::Softmax(Softmax::new()),
        ]);
        let x = moons().features;
        let a = predict_baseline(&mut det, &x).unwrap();
        let b = predict_mc(&mut vi, &x, 10, McKind::Flipout, &mut mc_rng(2)).unwrap();
        assert!(a.probs.max_abs_diff(&b.probs) < 1e-12);
    }

    #[test]
    fn only_gradient_method_sets_confidence() {
        let data = moons();
        for method in Method::ALL {
            let mut cfg = MethodConfig::new(method);
            cfg.mc_samples = 3;
            cfg.ensemble_size = 2;
            let mut t = TrainedMethod::fit(cfg, &spec(), &data, &quick()).unwrap();
            let p = t.predict(&data.features, 1).unwrap();
            assert_eq!(p.confidence.is_some(), method == Method::Gradient, "{method}");
            assert_eq!(p.has_entropy(), method.has_entropy());
            assert_rows_sum_to_one(&p);
        }
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
            assert_eq!(m.abbreviation().parse::<Method>().unwrap(), m);
        }
        assert!("swag".parse::<Method>().is_err());
    }

    #[test]
    fn config_validation() {
        let mut c = MethodConfig::new(Method::Dropout);
        assert!(c.validate().is_ok());
        c.drop_prob = 1.0;
        assert!(c.validate().is_err());
        let mut c = MethodConfig::new(Method::Duq);
        c.duq.length_scale = 0.0;
        assert!(c.validate().is_err());
    }
}
