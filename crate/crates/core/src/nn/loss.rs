//! Training losses. Each returns the batch-mean loss and its gradient.

use super::Tensor;
use crate::error::{Error, Result};

/// Clamp applied to BCE inputs before taking logs.
pub const BCE_EPSILON: f64 = 1e-7;
/// How far outside `[0, 1]` a BCE input may stray before it is rejected.
pub const BCE_TOLERANCE: f64 = 1e-9;
/// Allowed deviation of a probability row sum from 1.
pub const PROB_SUM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    CategoricalCrossEntropy,
    BinaryCrossEntropy,
    MeanSquaredError,
    GaussianNll,
}

impl LossKind {
    pub fn name(self) -> &'static str {
        match self {
            LossKind::CategoricalCrossEntropy => "categorical_ce",
            LossKind::BinaryCrossEntropy => "binary_ce",
            LossKind::MeanSquaredError => "mse",
            LossKind::GaussianNll => "gaussian_nll",
        }
    }
}

/// Categorical cross-entropy on softmax outputs `probs` (`[n, c]`).
///
/// Returns `mean(-ln p[label])` and the gradient w.r.t. the pre-softmax
/// logits, `(p - onehot) / n`.
pub fn categorical_ce(probs: &Tensor, labels: &[usize]) -> Result<(f64, Tensor)> {
    let (n, c) = (probs.rows(), probs.row_len());
    if labels.len() != n || n == 0 {
        return Err(Error::LossInput(format!("{} labels for {n} rows", labels.len())));
    }
    let mut grad = probs.clone();
    let mut loss = 0.0;
    for (r, &label) in labels.iter().enumerate() {
        if label >= c {
            return Err(Error::LabelOutOfRange { label, classes: c });
        }
        let row = probs.row(r);
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > PROB_SUM_TOLERANCE {
            return Err(Error::LossInput(format!("row {r} sums to {sum}")));
        }
        loss -= row[label].max(f64::MIN_POSITIVE).ln();
        grad.row_mut(r)[label] -= 1.0;
    }
    let scale = 1.0 / n as f64;
    grad.data_mut().iter_mut().for_each(|g| *g *= scale);
    Ok((loss * scale, grad))
}

/// Binary cross-entropy averaged over batch and outputs; gradient w.r.t. `outputs`.
pub fn binary_ce(outputs: &Tensor, targets: &Tensor) -> Result<(f64, Tensor)> {
    if outputs.shape() != targets.shape() || outputs.is_empty() {
        return Err(Error::LossInput(format!(
            "outputs {:?} vs targets {:?}",
            outputs.shape(),
            targets.shape()
        )));
    }
    let scale = 1.0 / outputs.len() as f64;
    let mut loss = 0.0;
    let mut grad = Tensor::zeros(outputs.shape());
    for ((o, t), g) in outputs.data().iter().zip(targets.data()).zip(grad.data_mut()) {
        if !(-BCE_TOLERANCE..=1.0 + BCE_TOLERANCE).contains(o) {
            return Err(Error::LossInput(format!("BCE output {o} outside (0, 1)")));
        }
        let oc = o.clamp(BCE_EPSILON, 1.0 - BCE_EPSILON);
        loss -= t * oc.ln() + (1.0 - t) * (1.0 - oc).ln();
        *g = (oc - t) / (oc * (1.0 - oc)) * scale;
    }
    Ok((loss * scale, grad))
}

pub fn mse(pred: &Tensor, targets: &[f64]) -> Result<(f64, Tensor)> {
    if pred.len() != targets.len() || targets.is_empty() {
        return Err(Error::LossInput(format!("{} predictions for {} targets", pred.len(), targets.len())));
    }
    let scale = 1.0 / targets.len() as f64;
    let mut loss = 0.0;
    let mut grad = Tensor::zeros(pred.shape());
    for ((p, y), g) in pred.data().iter().zip(targets).zip(grad.data_mut()) {
        let r = p - y;
        loss += r * r;
        *g = 2.0 * r * scale;
    }
    Ok((loss * scale, grad))
}

/// Heteroscedastic Gaussian negative log-likelihood (constant term dropped):
///
/// `L = 0.5 / N · Σ (ln σ²ᵢ + (μᵢ - yᵢ)² / σ²ᵢ)`
///
/// Returns the loss and the gradients w.r.t. the mean and the variance.
pub fn gaussian_nll(mean: &Tensor, variance: &Tensor, targets: &[f64]) -> Result<(f64, Tensor, Tensor)> {
    if mean.len() != targets.len() || variance.len() != targets.len() || targets.is_empty() {
        return Err(Error::LossInput(format!(
            "mean {} / variance {} / targets {}",
            mean.len(),
            variance.len(),
            targets.len()
        )));
    }
    let n = targets.len() as f64;
    let mut loss = 0.0;
    let mut gm = Tensor::zeros(mean.shape());
    let mut gv = Tensor::zeros(variance.shape());
    for (i, ((m, v), y)) in mean.data().iter().zip(variance.data()).zip(targets).enumerate() {
        if !(*v > 0.0) {
            return Err(Error::LossInput(format!("variance {v} at row {i} is not positive")));
        }
        let r = m - y;
        loss += v.ln() + r * r / v;
        gm.data_mut()[i] = r / (v * n);
        gv.data_mut()[i] = 0.5 * (1.0 / v - r * r / (v * v)) / n;
    }
    Ok((0.5 * loss / n, gm, gv))
}

#[cfg(test)]
mod tests {
    use rand::{Rng as _, SeedableRng};

    use super::*;
    use crate::nn::gradcheck::relative_error;
    use crate::nn::layers::softmax_row;
    use crate::nn::Rng;

    fn onehot(label: usize, c: usize) -> Vec<f64> {
        (0..c).map(|k| if k == label { 1.0 } else { 0.0 }).collect()
    }

    #[test]
    fn ce_perfect_prediction() {
        let p = Tensor::from_rows(&[onehot(1, 3)]).unwrap();
        let (loss, g) = categorical_ce(&p, &[1]).unwrap();
        assert_eq!(loss, 0.0);
        assert!(g.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn ce_uniform_binary_is_ln2() {
        let p = Tensor::from_rows(&[vec![0.5, 0.5]]).unwrap();
        let (loss, _) = categorical_ce(&p, &[0]).unwrap();
        assert!((loss - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn ce_rejects_bad_label() {
        let p = Tensor::from_rows(&[vec![0.5, 0.5]]).unwrap();
        assert!(matches!(
            categorical_ce(&p, &[2]),
            Err(Error::LabelOutOfRange { label: 2, classes: 2 })
        ));
    }

    #[test]
    fn ce_matches_direct_summation() {
        let mut rng = Rng::seed_from_u64(4);
        let rows: Vec<Vec<f64>> = (0..8)
            .map(|_| {
                let logits: Vec<f64> = (0..5).map(|_| rng.random_range(-3.0..3.0)).collect();
                let mut p = vec![0.0; 5];
                softmax_row(&logits, &mut p);
                p
            })
            .collect();
        let labels: Vec<usize> = (0..8).map(|_| rng.random_range(0..5)).collect();
        let p = Tensor::from_rows(&rows).unwrap();
        let (loss, _) = categorical_ce(&p, &labels).unwrap();
        let direct = -rows.iter().zip(&labels).map(|(r, &l)| r[l].ln()).sum::<f64>() / 8.0;
        assert!((loss - direct).abs() < 1e-12);
    }

    #[test]
    fn ce_logit_gradient_matches_finite_differences() {
        let logits = [0.3, -1.2, 0.8, 0.1];
        let label = 2;
        let f = |z: &[f64]| {
            let mut p = vec![0.0; z.len()];
            softmax_row(z, &mut p);
            categorical_ce(&Tensor::from_rows(&[p]).unwrap(), &[label]).unwrap().0
        };
        let mut p = vec![0.0; 4];
        softmax_row(&logits, &mut p);
        let (_, g) = categorical_ce(&Tensor::from_rows(&[p]).unwrap(), &[label]).unwrap();
        for i in 0..4 {
            let (mut a, mut b) = (logits, logits);
            a[i] += 1e-5;
            b[i] -= 1e-5;
            let fd = (f(&a) - f(&b)) / 2e-5;
            assert!(relative_error(g.data()[i], fd) < 1e-4);
        }
    }

    #[test]
    fn bce_known_values() {
        let o = Tensor::from_rows(&[vec![BCE_EPSILON, 1.0 - BCE_EPSILON]]).unwrap();
        let t = Tensor::from_rows(&[vec![BCE_EPSILON, 1.0 - BCE_EPSILON]]).unwrap();
        assert!(binary_ce(&o, &t).unwrap().0 < 2e-6);
        let o = Tensor::full(&[3, 2], 0.5);
        let t = Tensor::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert!((binary_ce(&o, &t).unwrap().0 - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn bce_matches_summation_and_differences() {
        let mut rng = Rng::seed_from_u64(8);
        let o: Vec<f64> = (0..12).map(|_| rng.random_range(0.05..0.95)).collect();
        let t: Vec<f64> = (0..12).map(|_| if rng.random::<bool>() { 1.0 } else { 0.0 }).collect();
        let ot = Tensor::new(vec![4, 3], o.clone()).unwrap();
        let tt = Tensor::new(vec![4, 3], t.clone()).unwrap();
        let (loss, g) = binary_ce(&ot, &tt).unwrap();
        let direct = -o.iter().zip(&t).map(|(o, t)| t * o.ln() + (1.0 - t) * (1.0 - o).ln()).sum::<f64>() / 12.0;
        assert!((loss - direct).abs() < 1e-12);
        for i in 0..12 {
            let mut a = ot.clone();
            let mut b = ot.clone();
            a.data_mut()[i] += 1e-6;
            b.data_mut()[i] -= 1e-6;
            let fd = (binary_ce(&a, &tt).unwrap().0 - binary_ce(&b, &tt).unwrap().0) / 2e-6;
            assert!(relative_error(g.data()[i], fd) < 1e-4);
        }
    }

    #[test]
    fn bce_rejects_out_of_range() {
        let o = Tensor::from_rows(&[vec![1.5]]).unwrap();
        assert!(binary_ce(&o, &Tensor::from_rows(&[vec![1.0]]).unwrap()).is_err());
    }

    #[test]
    fn nll_reference_values() {
        let y = [0.3, -1.0];
        let m = Tensor::from_rows(&[vec![0.3], vec![-1.0]]).unwrap();
        let (l, _, _) = gaussian_nll(&m, &Tensor::full(&[2, 1], 1.0), &y).unwrap();
        assert_eq!(l, 0.0);

        let m = Tensor::from_rows(&[vec![1.3]]).unwrap();
        let (l, _, _) = gaussian_nll(&m, &Tensor::full(&[1, 1], 1.0), &[0.3]).unwrap();
        assert!((l - 0.5).abs() < 1e-15);

        let m = Tensor::from_rows(&[vec![0.3]]).unwrap();
        let (l, _, _) = gaussian_nll(&m, &Tensor::full(&[1, 1], std::f64::consts::E), &[0.3]).unwrap();
        assert!((l - 0.5).abs() < 1e-15);
    }

    #[test]
    fn nll_rejects_nonpositive_variance() {
        let m = Tensor::from_rows(&[vec![0.0]]).unwrap();
        assert!(gaussian_nll(&m, &Tensor::zeros(&[1, 1]), &[0.0]).is_err());
    }

    #[test]
    fn nll_and_mse_gradients_match_differences() {
        let y = [0.2, -0.7, 1.1];
        let m = Tensor::new(vec![3, 1], vec![0.5, -0.1, 0.9]).unwrap();
        let v = Tensor::new(vec![3, 1], vec![0.3, 1.7, 0.05]).unwrap();
        let (_, gm, gv) = gaussian_nll(&m, &v, &y).unwrap();
        let (_, gmse) = mse(&m, &y).unwrap();
        let h = 1e-6;
        for i in 0..3 {
            let (mut mp, mut mm) = (m.clone(), m.clone());
            mp.data_mut()[i] += h;
            mm.data_mut()[i] -= h;
            let fd = (gaussian_nll(&mp, &v, &y).unwrap().0 - gaussian_nll(&mm, &v, &y).unwrap().0) / (2.0 * h);
            assert!(relative_error(gm.data()[i], fd) < 1e-4);
            let fd = (mse(&mp, &y).unwrap().0 - mse(&mm, &y).unwrap().0) / (2.0 * h);
            assert!(relative_error(gmse.data()[i], fd) < 1e-4);
            let (mut vp, mut vm) = (v.clone(), v.clone());
            vp.data_mut()[i] += h * 0.01;
            vm.data_mut()[i] -= h * 0.01;
            let fd = (gaussian_nll(&m, &vp, &y).unwrap().0 - gaussian_nll(&m, &vm, &y).unwrap().0) / (2.0 * h * 0.01);
            assert!(relative_error(gv.data()[i], fd) < 1e-4);
        }
    }
}
