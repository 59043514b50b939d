//! Uncertainty-quality metrics: entropy, maximum probability, calibration
//! error and rank-based ROC-AUC.

use crate::error::{Error, Result};
use crate::methods::{gradient_to_confidence, PredictionSet};

pub const DEFAULT_ECE_BINS: usize = 15;

/// Predictive entropy in nats; `0 · ln 0` counts as 0.
pub fn entropy(probs: &[f64]) -> Result<f64> {
    let mut h = 0.0;
    for &p in probs {
        if p < 0.0 {
            return Err(Error::Probability(format!("negative entry {p}")));
        }
        if p > 0.0 {
            h -= p * p.ln();
        }
    }
    Ok(h.max(0.0))
}

pub fn max_prob(probs: &[f64]) -> f64 {
    probs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EceBin {
    pub lower: f64,
    pub upper: f64,
    /// Mean confidence of the bin; 0 for an empty bin.
    pub confidence: f64,
    /// Fraction correct in the bin; 0 for an empty bin.
    pub accuracy: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EceReport {
    pub ece: f64,
    pub bins: Vec<EceBin>,
}

/// Bin holding `confidence` among `n_bins` equal-width, right-inclusive
/// bins over (0, 1]. Zero goes to the first bin.
pub fn ece_bin_index(confidence: f64, n_bins: usize) -> usize {
    let n = n_bins as f64;
    let mut b = ((confidence * n).ceil() as usize).clamp(1, n_bins) - 1;
    // settle rounding at the edges against the same edges the bins report
    while b > 0 && confidence <= b as f64 / n {
        b -= 1;
    }
    while b + 1 < n_bins && confidence > (b + 1) as f64 / n {
        b += 1;
    }
    b
}

/// Expected calibration error from per-sample confidence and correctness.
pub fn ece(confidence: &[f64], correct: &[bool], n_bins: usize) -> Result<EceReport> {
    if confidence.len() != correct.len() {
        return Err(Error::Config(format!(
            "{} confidences for {} outcomes",
            confidence.len(),
            correct.len()
        )));
    }
    if n_bins == 0 {
        return Err(Error::Config("ECE needs at least one bin".into()));
    }
    let mut conf_sum = vec![0.0; n_bins];
    let mut hits = vec![0usize; n_bins];
    let mut counts = vec![0usize; n_bins];
    for (&c, &ok) in confidence.iter().zip(correct) {
        let b = ece_bin_index(c, n_bins);
        conf_sum[b] += c;
        hits[b] += usize::from(ok);
        counts[b] += 1;
    }
    let total = confidence.len();
    let mut ece = 0.0;
    let bins = (0..n_bins)
        .map(|b| {
            let (confidence, accuracy) = if counts[b] == 0 {
                (0.0, 0.0)
            } else {
                let n = counts[b] as f64;
                (conf_sum[b] / n, hits[b] as f64 / n)
            };
            if counts[b] > 0 {
                ece += counts[b] as f64 / total as f64 * (accuracy - confidence).abs();
            }
            EceBin {
                lower: b as f64 / n_bins as f64,
                upper: (b + 1) as f64 / n_bins as f64,
                confidence,
                accuracy,
                count: counts[b],
            }
        })
        .collect();
    Ok(EceReport { ece, bins })
}

/// ECE of a prediction set against true labels.
pub fn ece_of(pred: &PredictionSet, labels: &[usize], n_bins: usize) -> Result<EceReport> {
    let correct: Vec<bool> = pred.predicted().iter().zip(labels).map(|(p, l)| p == l).collect();
    ece(&pred.calibration_confidence(), &correct, n_bins)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    /// Higher score means more likely positive.
    HigherPositive,
    /// Lower score means more likely positive (scores are negated).
    LowerPositive,
}

/// Mann-Whitney AUC: probability that a positive outranks a negative, ties 1/2.
pub fn roc_auc(positive: &[f64], negative: &[f64], orientation: Orientation) -> Result<f64> {
    if positive.is_empty() {
        return Err(Error::Empty("positive scores"));
    }
    if negative.is_empty() {
        return Err(Error::Empty("negative scores"));
    }
    let sign = match orientation {
        Orientation::HigherPositive => 1.0,
        Orientation::LowerPositive => -1.0,
    };
    let mut all: Vec<(f64, bool)> = positive
        .iter()
        .map(|&s| (sign * s, true))
        .chain(negative.iter().map(|&s| (sign * s, false)))
        .collect();
    if all.iter().any(|(s, _)| s.is_nan()) {
        return Err(Error::Probability("NaN score in AUC input".into()));
    }
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    // average ranks over tie groups, then the rank-sum statistic
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j + 1 < all.len() && all[j + 1].0 == all[i].0 {
            j += 1;
        }
        let avg_rank = (i + j) as f64 / 2.0 + 1.0;
        rank_sum += avg_rank * all[i..=j].iter().filter(|(_, p)| *p).count() as f64;
        i = j + 1;
    }
    let (np, nn) = (positive.len() as f64, negative.len() as f64);
    Ok((rank_sum - np * (np + 1.0) / 2.0) / (np * nn))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OodSuiteResult {
    pub test_vs_ood_entropy: Option<f64>,
    pub test_vs_ood_maxprob: f64,
    pub train_vs_ood_entropy: Option<f64>,
    pub train_vs_ood_maxprob: f64,
    pub train_vs_test_entropy: Option<f64>,
    pub train_vs_test_maxprob: f64,
}

pub fn entropies(pred: &PredictionSet) -> Result<Vec<f64>> {
    (0..pred.len()).map(|i| entropy(pred.probs.row(i))).collect()
}

/// Max-prob scores of `neg` and `pos`; gradient confidences are renormalised
/// over the union of the two sets so that both sides share one scale.
fn paired_maxprob(neg: &PredictionSet, pos: &PredictionSet) -> Result<(Vec<f64>, Vec<f64>)> {
    match (&neg.raw_score, &pos.raw_score) {
        (Some(a), Some(b)) => {
            let union: Vec<f64> = a.iter().chain(b).copied().collect();
            let mut p = gradient_to_confidence(&union)?;
            let pos_part = p.split_off(a.len());
            Ok((p, pos_part))
        }
        _ => Ok((neg.max_prob(), pos.max_prob())),
    }
}

fn pair(neg: &PredictionSet, pos: &PredictionSet) -> Result<(Option<f64>, f64)> {
    let (neg_mp, pos_mp) = paired_maxprob(neg, pos)?;
    let maxprob = roc_auc(&pos_mp, &neg_mp, Orientation::LowerPositive)?;
    let entropy = if neg.has_entropy() && pos.has_entropy() {
        Some(roc_auc(&entropies(pos)?, &entropies(neg)?, Orientation::HigherPositive)?)
    } else {
        None
    };
    Ok((entropy, maxprob))
}

/// The three dataset pairings, with the unseen side (test or OOD) positive.
pub fn ood_suite(train: &PredictionSet, test: &PredictionSet, ood: &PredictionSet) -> Result<OodSuiteResult> {
    let (test_vs_ood_entropy, test_vs_ood_maxprob) = pair(test, ood)?;
    let (train_vs_ood_entropy, train_vs_ood_maxprob) = pair(train, ood)?;
    let (train_vs_test_entropy, train_vs_test_maxprob) = pair(train, test)?;
    Ok(OodSuiteResult {
        test_vs_ood_entropy,
        test_vs_ood_maxprob,
        train_vs_ood_entropy,
        train_vs_ood_maxprob,
        train_vs_test_entropy,
        train_vs_test_maxprob,
    })
}
