use std::fs;
use std::path::Path;

use super::LabeledDataset;
use crate::error::{Error, Result};
use crate::nn::Tensor;

/// One label byte followed by 3 × 32 × 32 channel-major pixel bytes.
pub const CIFAR_RECORD_BYTES: usize = 3073;
const CIFAR_CLASSES: usize = 10;

/// Loads CIFAR-10 binary batches, concatenated in the given order.
pub fn load_cifar10_binary<P: AsRef<Path>>(paths: &[P]) -> Result<LabeledDataset> {
    let mut labels = Vec::new();
    let mut pixels = Vec::new();
    for path in paths {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        if bytes.len() % CIFAR_RECORD_BYTES != 0 {
            return Err(Error::format(
                path,
                format!("size {} is not a multiple of {CIFAR_RECORD_BYTES}", bytes.len()),
            ));
        }
        for record in bytes.chunks_exact(CIFAR_RECORD_BYTES) {
            labels.push(usize::from(record[0]));
            pixels.extend(record[1..].iter().map(|&b| f64::from(b) / 255.0));
        }
    }
    let features = Tensor::new(vec![labels.len(), 3, 32, 32], pixels)?;
    LabeledDataset::classification("cifar10", features, labels, CIFAR_CLASSES)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(label: u8, fill: impl Fn(usize) -> u8) -> Vec<u8> {
        std::iter::once(label).chain((0..3072).map(fill)).collect()
    }

    #[test]
    fn single_record_layout() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("b.bin");
        // red plane 255, green plane 0, blue plane 51
        fs::write(&path, record(6, |i| [255, 0, 51][i / 1024])).unwrap();
        let d = load_cifar10_binary(&[&path]).unwrap();
        assert_eq!(d.features.shape(), &[1, 3, 32, 32]);
        assert_eq!(d.labels(), &[6]);
        let x = d.features.data();
        assert_eq!(x[0], 1.0);
        assert_eq!(x[1023], 1.0);
        assert_eq!(x[1024], 0.0);
        assert_eq!(x[2048], 0.2);
        assert_eq!(x[3071], 0.2);
    }

    #[test]
    fn empty_and_concatenated_files() {
        let dir = tempfile::tempdir().unwrap();
        let empty = dir.path().join("e.bin");
        fs::write(&empty, []).unwrap();
        assert!(load_cifar10_binary(&[&empty]).unwrap().is_empty());

        let a = dir.path().join("a.bin");
        let b = dir.path().join("b.bin");
        fs::write(&a, [record(1, |_| 0), record(2, |_| 10)].concat()).unwrap();
        fs::write(&b, record(3, |i| (i % 256) as u8)).unwrap();
        let d = load_cifar10_binary(&[&a, &empty, &b]).unwrap();
        assert_eq!(d.labels(), &[1, 2, 3]);
        let back: Vec<u8> = d.features.row(2).iter().map(|v| (v * 255.0).round() as u8).collect();
        assert_eq!(back, record(3, |i| (i % 256) as u8)[1..]);
    }

    #[test]
    fn partial_record_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.bin");
        fs::write(&path, vec![0u8; CIFAR_RECORD_BYTES + 1]).unwrap();
        let err = load_cifar10_binary(&[&path]).unwrap_err().to_string();
        assert!(err.contains("3073"), "{err}");
    }
}
