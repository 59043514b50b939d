use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;

use crate::error::{Error, Result};
use crate::nn::loss::categorical_ce;
use crate::nn::{HeadGrad, Layer, Mode, Model, Rng, Tensor};

/// Reduction applied to the flattened parameter gradient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Aggregator {
    L1,
    L2,
    Mean,
    Std,
    Min,
    Max,
}

impl Aggregator {
    pub const ALL: [Aggregator; 6] = [
        Aggregator::L1,
        Aggregator::L2,
        Aggregator::Mean,
        Aggregator::Std,
        Aggregator::Min,
        Aggregator::Max,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Aggregator::L1 => "l1_norm",
            Aggregator::L2 => "l2_norm",
            Aggregator::Mean => "mean",
            Aggregator::Std => "std",
            Aggregator::Min => "min",
            Aggregator::Max => "max",
        }
    }

    pub fn apply(self, v: &[f64]) -> f64 {
        if v.is_empty() {
            return 0.0;
        }
        let n = v.len() as f64;
        match self {
            Aggregator::L1 => v.iter().map(|x| x.abs()).sum(),
            Aggregator::L2 => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
            Aggregator::Mean => v.iter().sum::<f64>() / n,
            Aggregator::Std => {
                let mean = v.iter().sum::<f64>() / n;
                (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt()
            }
            Aggregator::Min => v.iter().copied().fold(f64::INFINITY, f64::min),
            Aggregator::Max => v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

impl fmt::Display for Aggregator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Aggregator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase();
        Aggregator::ALL
            .into_iter()
            .find(|a| a.name() == key || a.name().trim_end_matches("_norm") == key)
            .ok_or_else(|| {
                let names: Vec<&str> = Aggregator::ALL.iter().map(|a| a.name()).collect();
                Error::Config(format!("unknown aggregator '{s}' (expected one of {})", names.join(", ")))
            })
    }
}

/// Softmax outputs and aggregated virtual-label gradients, one per sample.
///
/// Each sample gets its own forward pass in eval mode, the categorical
/// cross-entropy against its own argmax, and a backward pass over every
/// trainable parameter.
pub fn gradient_uncertainty(model: &mut Model, batch: &Tensor, aggregator: Aggregator) -> Result<(Tensor, Vec<f64>)> {
    if !matches!(model.heads.first().and_then(|h| h.last()), Some(Layer::Softmax(_))) {
        return Err(Error::MissingLayer("softmax output"));
    }
    let n = batch.rows();
    let mut rng = Rng::seed_from_u64(0);
    let mut probs = Vec::with_capacity(batch.len());
    let mut scores = Vec::with_capacity(n);
    let mut flat = Vec::with_capacity(model.num_params());
    for i in 0..n {
        let x = batch.select_rows(&[i]);
        let out = model.forward(&x, Mode::Eval, &mut rng)?;
        let p = out[0].row(0);
        let label = argmax(p);
        let (_, g) = categorical_ce(&out[0], &[label])?;
        model.backward(vec![HeadGrad::BeforeLast(g)])?;
        flat.clear();
        for param in model.params() {
            flat.extend_from_slice(param.grad.data());
        }
        scores.push(aggregator.apply(&flat));
        probs.extend_from_slice(p);
    }
    model.clear_cache();
    let classes = probs.len().checked_div(n).unwrap_or(0);
    Ok((Tensor::new(vec![n, classes], probs)?, scores))
}

/// Min-max normalises `scores` and reflects them: `p = 1 - (g - min) / (max - min)`.
/// A constant score vector maps to all ones.
pub fn gradient_to_confidence(scores: &[f64]) -> Result<Vec<f64>> {
    if scores.is_empty() {
        return Err(Error::Empty("gradient scores"));
    }
    let lo = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = hi - lo;
    if range == 0.0 {
        return Ok(vec![1.0; scores.len()]);
    }
    Ok(scores.iter().map(|g| 1.0 - (g - lo) / range).collect())
}

pub(crate) fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}
