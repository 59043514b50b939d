use rand::seq::SliceRandom;
use rand::SeedableRng;

use super::layers::{Layer, Mode};
use super::loss::{self, LossKind};
use super::model::{HeadGrad, Model};
use super::optim::{Adam, AdamConfig};
use super::{Rng, Tensor};
use crate::datasets::{LabeledDataset, Targets};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub loss: LossKind,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            batch_size: 64,
            adam: AdamConfig::default(),
            loss: LossKind::CategoricalCrossEntropy,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainReport {
    /// Mean batch loss per epoch.
    pub epoch_losses: Vec<f64>,
}

/// RNG streams derived from one seed: shuffling and stochastic layers never
/// share draws, so changing the batch size does not perturb masks and vice versa.
pub(crate) fn streams(seed: u64) -> (Rng, Rng) {
    let mut shuffle = Rng::seed_from_u64(seed);
    shuffle.set_stream(1);
    let mut masks = Rng::seed_from_u64(seed);
    masks.set_stream(2);
    (shuffle, masks)
}

/// Loss value and per-head gradients for a batch of model outputs.
pub fn loss_and_grads(outputs: &[Tensor], targets: &Targets, loss: LossKind, model: &Model) -> Result<(f64, Vec<HeadGrad>)> {
    match loss {
        LossKind::CategoricalCrossEntropy => {
            let labels = targets
                .classes()
                .ok_or_else(|| Error::Config("cross-entropy needs class labels".into()))?;
            if !matches!(model.heads[0].last(), Some(Layer::Softmax(_))) {
                return Err(Error::Config("cross-entropy needs a softmax output layer".into()));
            }
            let (l, g) = loss::categorical_ce(&outputs[0], labels)?;
            Ok((l, vec![HeadGrad::BeforeLast(g)]))
        }
        LossKind::BinaryCrossEntropy => {
            let labels = targets
                .classes()
                .ok_or_else(|| Error::Config("binary cross-entropy needs class labels".into()))?;
            let out = &outputs[0];
            let c = out.row_len();
            let mut onehot = Tensor::zeros(out.shape());
            for (r, &l) in labels.iter().enumerate() {
                if l >= c {
                    return Err(Error::LabelOutOfRange { label: l, classes: c });
                }
                onehot.row_mut(r)[l] = 1.0;
            }
            let (l, g) = loss::binary_ce(out, &onehot)?;
            Ok((l, vec![HeadGrad::Output(g)]))
        }
        LossKind::MeanSquaredError => {
            let y = targets
                .values()
                .ok_or_else(|| Error::Config("mean squared error needs real targets".into()))?;
            let (l, g) = loss::mse(&outputs[0], y)?;
            let mut grads = vec![HeadGrad::Output(g)];
            // extra heads (e.g. an untrained variance head) receive no gradient
            for o in &outputs[1..] {
                grads.push(HeadGrad::Output(Tensor::zeros(o.shape())));
            }
            Ok((l, grads))
        }
        LossKind::GaussianNll => {
            let y = targets
                .values()
                .ok_or_else(|| Error::Config("Gaussian NLL needs real targets".into()))?;
            if outputs.len() != 2 {
                return Err(Error::Config("Gaussian NLL needs a mean head and a variance head".into()));
            }
            let (l, gm, gv) = loss::gaussian_nll(&outputs[0], &outputs[1], y)?;
            Ok((l, vec![HeadGrad::Output(gm), HeadGrad::Output(gv)]))
        }
    }
}

/// Trains `model` in place with mini-batch Adam.
///
/// Every epoch reshuffles the data (Fisher-Yates); the last batch may be
/// short. Returns the per-epoch mean loss. Deterministic for a given seed.
pub fn train(model: &mut Model, data: &LabeledDataset, cfg: &TrainConfig) -> Result<TrainReport> {
    if data.is_empty() {
        return Err(Error::Empty("training set"));
    }
    if cfg.batch_size == 0 {
        return Err(Error::Config("batch size must be positive".into()));
    }
    let (mut shuffle_rng, mut mask_rng) = streams(cfg.seed);
    let mut adam = Adam::new(cfg.adam);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut report = TrainReport::default();
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut total = 0.0;
        let mut batches = 0;
        for (batch, idx) in order.chunks(cfg.batch_size).enumerate() {
            let x = data.features.select_rows(idx);
            let t = data.targets.select(idx);
            let outputs = model.forward(&x, Mode::Train, &mut mask_rng)?;
            if !outputs.iter().all(Tensor::all_finite) {
                return Err(Error::Diverged { epoch, batch, loss: f64::NAN });
            }
            let (l, grads) = loss_and_grads(&outputs, &t, cfg.loss, model)?;
            if !l.is_finite() {
                return Err(Error::Diverged { epoch, batch, loss: l });
            }
            model.backward(grads)?;
            adam.step(model.params_mut());
            total += l;
            batches += 1;
        }
        report.epoch_losses.push(total / batches as f64);
    }
    model.clear_cache();
    Ok(report)
}
