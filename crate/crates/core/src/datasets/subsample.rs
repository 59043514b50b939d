use rand::seq::SliceRandom;
use rand::SeedableRng;

use super::LabeledDataset;
use crate::error::{Error, Result};
use crate::nn::Rng;

/// Draws `spc` indices per class without replacement, grouped by class and
/// shuffled within each class.
pub fn subsample_indices(labels: &[usize], classes: usize, spc: usize, seed: u64) -> Result<Vec<usize>> {
    let mut by_class = vec![Vec::new(); classes];
    for (i, &l) in labels.iter().enumerate() {
        if l >= classes {
            return Err(Error::LabelOutOfRange { label: l, classes });
        }
        by_class[l].push(i);
    }
    let mut rng = Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(spc * classes);
    for (class, mut idx) in by_class.into_iter().enumerate() {
        if idx.len() < spc {
            return Err(Error::InsufficientSamples {
                class,
                available: idx.len(),
                requested: spc,
            });
        }
        idx.shuffle(&mut rng);
        out.extend_from_slice(&idx[..spc]);
    }
    Ok(out)
}

/// Keeps exactly `spc` randomly chosen samples of every class.
pub fn subsample_per_class(data: &LabeledDataset, spc: usize, seed: u64) -> Result<LabeledDataset> {
    let labels = data
        .targets
        .classes()
        .ok_or_else(|| Error::Config(format!("{}: sub-sampling needs class labels", data.name)))?;
    let idx = subsample_indices(labels, data.classes, spc, seed)?;
    Ok(data.subset(&idx))
}
