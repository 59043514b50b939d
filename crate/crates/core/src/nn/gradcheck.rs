//! Central finite-difference verification of analytic gradients.

use rand::SeedableRng;

use super::layers::Mode;
use super::loss::LossKind;
use super::model::Model;
use super::train::loss_and_grads;
use super::{Rng, Tensor};
use crate::datasets::Targets;
use crate::error::{Error, Result};

pub const FD_STEP: f64 = 1e-5;
/// Denominator floor so that near-zero gradients are compared absolutely.
pub const RELATIVE_FLOOR: f64 = 1e-4;
pub const MAX_CHECKED_PARAMS: usize = 10_000;

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(RELATIVE_FLOOR)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    /// Name of the tensor holding the worst entry (`"input"` for the input).
    pub worst: String,
    pub checked: usize,
}

/// Compares the model's backward pass against central differences of the
/// loss, over every parameter entry and every input entry.
///
/// Stochastic layers replay identical masks because the RNG is reseeded
/// before every forward pass.
pub fn grad_check(model: &mut Model, input: &Tensor, targets: &Targets, loss: LossKind, mode: Mode) -> Result<GradCheckReport> {
    run(model, input, targets, loss, mode, false)
}

/// Same as [`grad_check`] but perturbs every analytic gradient before the
/// comparison. Exists as a negative control for the checker itself.
pub fn grad_check_corrupted(
    model: &mut Model,
    input: &Tensor,
    targets: &Targets,
    loss: LossKind,
    mode: Mode,
) -> Result<GradCheckReport> {
    run(model, input, targets, loss, mode, true)
}

fn run(model: &mut Model, input: &Tensor, targets: &Targets, loss: LossKind, mode: Mode, corrupt: bool) -> Result<GradCheckReport> {
    if model.num_params() > MAX_CHECKED_PARAMS {
        return Err(Error::Config(format!(
            "gradient check limited to {MAX_CHECKED_PARAMS} parameters, model has {}",
            model.num_params()
        )));
    }
    let seed = 0x6772_6164;
    let eval = |model: &mut Model, x: &Tensor| -> Result<f64> {
        let mut rng = Rng::seed_from_u64(seed);
        let out = model.forward(x, mode, &mut rng)?;
        Ok(loss_and_grads(&out, targets, loss, model)?.0)
    };

    let mut rng = Rng::seed_from_u64(seed);
    let out = model.forward(input, mode, &mut rng)?;
    let (_, grads) = loss_and_grads(&out, targets, loss, model)?;
    let mut input_grad = model.backward(grads)?;
    let mut analytic: Vec<(String, Tensor)> = param_names(model)
        .into_iter()
        .zip(model.params().iter().map(|p| p.grad.clone()))
        .collect();
    if corrupt {
        let skew = |t: &mut Tensor| t.data_mut().iter_mut().for_each(|g| *g = 1.1 * *g + 1e-2);
        skew(&mut input_grad);
        analytic.iter_mut().for_each(|(_, g)| skew(g));
    }

    let mut report = GradCheckReport {
        max_relative_error: 0.0,
        worst: String::new(),
        checked: 0,
    };
    let mut record = |name: &str, a: f64, n: f64| {
        let e = relative_error(a, n);
        report.checked += 1;
        if report.worst.is_empty() || e > report.max_relative_error {
            report.max_relative_error = e;
            report.worst = name.to_string();
        }
    };

    let mut x = input.clone();
    for i in 0..x.len() {
        let orig = x.data()[i];
        x.data_mut()[i] = orig + FD_STEP;
        let fp = eval(model, &x)?;
        x.data_mut()[i] = orig - FD_STEP;
        let fm = eval(model, &x)?;
        x.data_mut()[i] = orig;
        record("input", input_grad.data()[i], (fp - fm) / (2.0 * FD_STEP));
    }
    for (name, grad) in &analytic {
        for i in 0..grad.len() {
            let orig = param_value(model, name, i);
            set_param(model, name, i, orig + FD_STEP);
            let fp = eval(model, input)?;
            set_param(model, name, i, orig - FD_STEP);
            let fm = eval(model, input)?;
            set_param(model, name, i, orig);
            record(name, grad.data()[i], (fp - fm) / (2.0 * FD_STEP));
        }
    }
    model.clear_cache();
    Ok(report)
}

fn param_names(model: &Model) -> Vec<String> {
    let mut names = Vec::new();
    let groups = std::iter::once(("body".to_string(), &model.body))
        .chain(model.heads.iter().enumerate().map(|(h, l)| (format!("head{h}"), l)));
    for (prefix, layers) in groups {
        for (i, layer) in layers.iter().enumerate() {
            for p in layer.params() {
                names.push(format!("{prefix}.{i}.{}", p.name));
            }
        }
    }
    names
}

fn param_value(model: &mut Model, name: &str, i: usize) -> f64 {
    model
        .named_tensors_mut()
        .into_iter()
        .find(|(n, _)| n == name)
        .map(|(_, t)| t.data()[i])
        .expect("parameter name from the same model")
}

fn set_param(model: &mut Model, name: &str, i: usize, value: f64) {
    if let Some((_, t)) = model.named_tensors_mut().into_iter().find(|(n, _)| n == name) {
        t.data_mut()[i] = value;
    }
}

/// One entry of [`standard_suite`]: what was checked and the outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteEntry {
    /// `"layer"` or `"loss"`.
    pub group: &'static str,
    pub name: &'static str,
    pub report: GradCheckReport,
}

/// Gradient checks covering every layer kind and every loss, each on a
/// small network built around the component under test. With `corrupt`
/// the analytic gradients are skewed, which every entry must then flag.
pub fn standard_suite(seed: u64, corrupt: bool) -> Result<Vec<SuiteEntry>> {
    use super::init::normal;
    use super::layers::{
        BatchNorm, Conv2d, DropConnect, Dense, Dropout, FlipoutDense, Layer, LayerKind, MaxPool2d, RbfOutput, Relu, Softmax,
        Softplus,
    };

    let mut rng = Rng::seed_from_u64(seed);
    let check = if corrupt { grad_check_corrupted } else { grad_check };
    let classes = |n: usize, c: usize| Targets::Classes((0..n).map(|i| i % c).collect());
    let values = |n: usize, rng: &mut Rng| Targets::Values(normal(&[n], 1.0, rng).into_data());
    let ce = LossKind::CategoricalCrossEntropy;
    let mut out = Vec::new();

    for kind in LayerKind::ALL {
        let r = &mut rng;
        let flat = normal(&[4, 3], 1.0, r);
        let image = normal(&[3, 1, 4, 4], 1.0, r);
        let (mut model, x, t, loss) = match kind {
            LayerKind::Dense => (
                Model::sequential(vec![Layer::Dense(Dense::new(3, 3, r)), Layer::Softmax(Softmax::new())]),
                flat,
                classes(4, 3),
                ce,
            ),
            LayerKind::Conv2d3x3 => (
                Model::sequential(vec![
                    Layer::Conv2d(Conv2d::new(1, 2, r)),
                    Layer::Dense(Dense::new(32, 3, r)),
                    Layer::Softmax(Softmax::new()),
                ]),
                image,
                classes(3, 3),
                ce,
            ),
            LayerKind::MaxPool2x2 => (
                Model::sequential(vec![
                    Layer::Conv2d(Conv2d::new(1, 2, r)),
                    Layer::MaxPool2d(MaxPool2d::new()),
                    Layer::Dense(Dense::new(8, 3, r)),
                    Layer::Softmax(Softmax::new()),
                ]),
                image,
                classes(3, 3),
                ce,
            ),
            LayerKind::BatchNorm => (
                Model::sequential(vec![
                    Layer::Dense(Dense::new(3, 4, r)),
                    Layer::BatchNorm(BatchNorm::new(4)),
                    Layer::Dense(Dense::new(4, 3, r)),
                    Layer::Softmax(Softmax::new()),
                ]),
                flat,
                classes(4, 3),
                ce,
            ),
            LayerKind::Relu => (
                Model::sequential(vec![
                    Layer::Dense(Dense::new(3, 5, r)),
                    Layer::Relu(Relu::new()),
                    Layer::Dense(Dense::new(5, 3, r)),
                    Layer::Softmax(Softmax::new()),
                ]),
                flat,
                classes(4, 3),
                ce,
            ),
            // binary cross-entropy differentiates through the softmax itself
            LayerKind::Softmax => (
                Model::sequential(vec![Layer::Dense(Dense::new(3, 3, r)), Layer::Softmax(Softmax::new())]),
                flat,
                classes(4, 3),
                LossKind::BinaryCrossEntropy,
            ),
            LayerKind::Softplus => (
                Model::sequential(vec![Layer::Dense(Dense::new(3, 1, r)), Layer::Softplus(Softplus::new())]),
                flat,
                values(4, r),
                LossKind::MeanSquaredError,
            ),
            LayerKind::Dropout => (
                Model::sequential(vec![
                    Layer::Dense(Dense::new(3, 5, r)),
                    Layer::Dropout(Dropout::new(0.5, true)),
                    Layer::Dense(Dense::new(5, 3, r)),
                    Layer::Softmax(Softmax::new()),
                ]),
                flat,
                classes(4, 3),
                ce,
            ),
            LayerKind::DropConnect => (
                Model::sequential(vec![
                    Layer::DropConnect(DropConnect::new(3, 3, 0.5, true, r)),
                    Layer::Softmax(Softmax::new()),
                ]),
                flat,
                classes(4, 3),
                ce,
            ),
            LayerKind::FlipoutDense => (
                Model::sequential(vec![Layer::FlipoutDense(FlipoutDense::new(3, 3, r)), Layer::Softmax(Softmax::new())]),
                flat,
                classes(4, 3),
                ce,
            ),
            LayerKind::RbfOutput => (
                Model::sequential(vec![
                    Layer::Dense(Dense::new(3, 4, r)),
                    Layer::Rbf(RbfOutput::new(4, 3, 4, 1.0, r)),
                ]),
                flat,
                classes(4, 3),
                LossKind::BinaryCrossEntropy,
            ),
        };
        let report = check(&mut model, &x, &t, loss, Mode::Train)?;
        out.push(SuiteEntry {
            group: "layer",
            name: kind.name(),
            report,
        });
    }

    for loss in [
        LossKind::CategoricalCrossEntropy,
        LossKind::BinaryCrossEntropy,
        LossKind::MeanSquaredError,
        LossKind::GaussianNll,
    ] {
        let r = &mut rng;
        let x = normal(&[5, 2], 1.0, r);
        let trunk = |r: &mut Rng| vec![Layer::Dense(Dense::new(2, 4, r)), Layer::Relu(Relu::new())];
        let (mut model, t) = match loss {
            LossKind::CategoricalCrossEntropy | LossKind::BinaryCrossEntropy => {
                let head = vec![Layer::Dense(Dense::new(4, 3, r)), Layer::Softmax(Softmax::new())];
                (Model::new(trunk(r), vec![head]), classes(5, 3))
            }
            LossKind::MeanSquaredError => {
                let head = vec![Layer::Dense(Dense::new(4, 1, r))];
                (Model::new(trunk(r), vec![head]), values(5, r))
            }
            LossKind::GaussianNll => {
                let body = trunk(r);
                let mean = vec![Layer::Dense(Dense::new(4, 1, r))];
                let var = vec![Layer::Dense(Dense::new(4, 1, r)), Layer::Softplus(Softplus::new())];
                (Model::new(body, vec![mean, var]), values(5, r))
            }
        };
        let report = check(&mut model, &x, &t, loss, Mode::Train)?;
        out.push(SuiteEntry {
            group: "loss",
            name: loss.name(),
            report,
        });
    }
    Ok(out)
}
