use std::path::{Path, PathBuf};

use crate::datasets::{load_cifar10_binary, load_idx, make_two_moons, make_uniform_box, LabeledDataset, MoonsLayout};
use crate::error::{Error, Result};
use crate::nn::ModelSpec;
use crate::seed::derive_seed;

/// Axis-aligned box (`[x_lo, y_lo]`, `[x_hi, y_hi]`) the Two Moons OOD points are drawn from.
pub const TWO_MOONS_OOD_BOX: ([f64; 2], [f64; 2]) = ([-4.0, -4.0], [5.0, 4.5]);
const TWO_MOONS_NOISE: f64 = 0.1;

/// Training pool, in-distribution test set and out-of-distribution test set.
#[derive(Debug, Clone)]
pub struct SweepData {
    pub name: String,
    pub train_pool: LabeledDataset,
    pub test: LabeledDataset,
    pub ood: LabeledDataset,
}

impl SweepData {
    /// Small MLP (two hidden layers of 32) for flat inputs, the three-stage CNN for images.
    pub fn default_spec(&self) -> ModelSpec {
        let shape = self.train_pool.features.shape();
        let classes = self.train_pool.classes;
        match shape.len() {
            4 => ModelSpec::cnn(shape[1], shape[2], shape[3], classes),
            _ => ModelSpec::mlp(shape[1..].iter().product(), vec![32, 32], classes),
        }
    }

    /// Two Moons pool and test set (noise 0.1) plus uniform-box OOD points;
    /// every part has its own seed derived from `seed`.
    pub fn two_moons(seed: u64) -> Self {
        two_moons_data(seed, 1000, 500, 1000)
    }

    /// Named datasets from `data_dir`; `two_moons` needs no files.
    pub fn load(dataset: &str, ood: Option<&str>, data_dir: &Path, seed: u64) -> Result<Self> {
        if dataset == "two_moons" {
            return match ood {
                None | Some("uniform_box") => Ok(Self::two_moons(seed)),
                Some(other) => Err(Error::Config(format!("two_moons only supports the uniform_box OOD set, not {other}"))),
            };
        }
        let ood = ood.map(str::to_string).or_else(|| default_ood(dataset).map(str::to_string)).ok_or_else(|| {
            Error::Config(format!("no default OOD dataset for {dataset}; pass one explicitly"))
        })?;
        Ok(Self {
            name: dataset.to_string(),
            train_pool: load_named(dataset, data_dir, true)?,
            test: load_named(dataset, data_dir, false)?,
            ood: load_named(&ood, data_dir, false)?,
        })
    }
}

fn default_ood(dataset: &str) -> Option<&'static str> {
    match dataset {
        "fashion_mnist" => Some("mnist"),
        "mnist" => Some("fashion_mnist"),
        "cifar10" => Some("svhn"),
        _ => None,
    }
}

pub fn two_moons_data(seed: u64, pool_per_class: usize, test_per_class: usize, ood_points: usize) -> SweepData {
    let (lo, hi) = TWO_MOONS_OOD_BOX;
    let mut ood = make_uniform_box(ood_points, lo, hi, 2, derive_seed(seed, &[3]));
    ood.name = "uniform_box".into();
    SweepData {
        name: "two_moons".into(),
        train_pool: make_two_moons(pool_per_class, TWO_MOONS_NOISE, MoonsLayout::Random, derive_seed(seed, &[1])),
        test: make_two_moons(test_per_class, TWO_MOONS_NOISE, MoonsLayout::Random, derive_seed(seed, &[2])),
        ood,
    }
}

fn idx_paths(dir: &Path, train: bool) -> (PathBuf, PathBuf) {
    let prefix = if train { "train" } else { "t10k" };
    (
        dir.join(format!("{prefix}-images-idx3-ubyte")),
        dir.join(format!("{prefix}-labels-idx1-ubyte")),
    )
}

/// Loads the train or test split of a dataset stored under `data_dir/<name>/`.
///
/// `cifar10` reads `data_batch_1.bin` … `data_batch_5.bin` / `test_batch.bin`;
/// every other name reads `{train,t10k}-{images-idx3,labels-idx1}-ubyte`.
pub fn load_named(name: &str, data_dir: &Path, train: bool) -> Result<LabeledDataset> {
    let dir = data_dir.join(name);
    let mut data = if name == "cifar10" {
        let files: Vec<PathBuf> = if train {
            (1..=5).map(|i| dir.join(format!("data_batch_{i}.bin"))).collect()
        } else {
            vec![dir.join("test_batch.bin")]
        };
        load_cifar10_binary(&files)?
    } else {
        let (images, labels) = idx_paths(&dir, train);
        load_idx(images, labels)?
    };
    data.name = name.to_string();
    Ok(data)
}
