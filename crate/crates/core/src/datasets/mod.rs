//! Datasets: synthetic generators, binary loaders and per-class sub-sampling.

mod cifar;
mod idx;
mod subsample;
mod synthetic;

pub use cifar::{load_cifar10_binary, CIFAR_RECORD_BYTES};
pub use idx::{load_idx, write_idx_images, write_idx_labels, IDX_IMAGES_MAGIC, IDX_LABELS_MAGIC, IDX_VOLUME_MAGIC};
pub use subsample::{subsample_per_class, subsample_indices};
pub use synthetic::{
    make_two_moons, make_two_moons_grid, make_uniform_box, make_toy_regression, toy_noise_std, toy_regression_grid,
    MoonsLayout, TOY_EVAL_RANGE, TOY_TRAIN_RANGE,
};

use crate::error::{Error, Result};
use crate::nn::Tensor;

#[derive(Debug, Clone, PartialEq)]
pub enum Targets {
    Classes(Vec<usize>),
    Values(Vec<f64>),
}

impl Targets {
    pub fn len(&self) -> usize {
        match self {
            Targets::Classes(v) => v.len(),
            Targets::Values(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn select(&self, indices: &[usize]) -> Targets {
        match self {
            Targets::Classes(v) => Targets::Classes(indices.iter().map(|&i| v[i]).collect()),
            Targets::Values(v) => Targets::Values(indices.iter().map(|&i| v[i]).collect()),
        }
    }

    pub fn classes(&self) -> Option<&[usize]> {
        match self {
            Targets::Classes(v) => Some(v),
            Targets::Values(_) => None,
        }
    }

    pub fn values(&self) -> Option<&[f64]> {
        match self {
            Targets::Values(v) => Some(v),
            Targets::Classes(_) => None,
        }
    }
}

/// Features plus class labels (or real targets for regression).
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub name: String,
    /// `[n, ...]`
    pub features: Tensor,
    pub targets: Targets,
    /// Number of classes; 0 for regression data.
    pub classes: usize,
}

impl LabeledDataset {
    pub fn classification(name: impl Into<String>, features: Tensor, labels: Vec<usize>, classes: usize) -> Result<Self> {
        if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
            return Err(Error::LabelOutOfRange { label: bad, classes });
        }
        Self::checked(name.into(), features, Targets::Classes(labels), classes)
    }

    pub fn regression(name: impl Into<String>, features: Tensor, values: Vec<f64>) -> Result<Self> {
        Self::checked(name.into(), features, Targets::Values(values), 0)
    }

    fn checked(name: String, features: Tensor, targets: Targets, classes: usize) -> Result<Self> {
        if features.rows() != targets.len() {
            return Err(Error::Config(format!(
                "{name}: {} feature rows but {} targets",
                features.rows(),
                targets.len()
            )));
        }
        Ok(Self {
            name,
            features,
            targets,
            classes,
        })
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn labels(&self) -> &[usize] {
        self.targets.classes().unwrap_or(&[])
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            name: self.name.clone(),
            features: self.features.select_rows(indices),
            targets: self.targets.select(indices),
            classes: self.classes,
        }
    }

    /// Concatenates datasets that share feature shape and class count.
    pub fn concat(parts: &[LabeledDataset]) -> Result<Self> {
        let first = parts.first().ok_or(Error::Empty("dataset list"))?;
        let features = Tensor::concat_rows(&parts.iter().map(|p| &p.features).collect::<Vec<_>>())?;
        let targets = match &first.targets {
            Targets::Classes(_) => Targets::Classes(parts.iter().flat_map(|p| p.labels().iter().copied()).collect()),
            Targets::Values(_) => Targets::Values(
                parts
                    .iter()
                    .flat_map(|p| p.targets.values().unwrap_or(&[]).iter().copied())
                    .collect(),
            ),
        };
        Self::checked(first.name.clone(), features, targets, first.classes)
    }

    /// Count of samples per class.
    pub fn class_histogram(&self) -> Vec<usize> {
        let mut h = vec![0; self.classes];
        for &l in self.labels() {
            h[l] += 1;
        }
        h
    }
}
