use std::fs;
use std::path::Path;

use super::LabeledDataset;
use crate::error::{Error, Result};
use crate::nn::Tensor;

/// Unsigned-byte, three-dimensional volume (`n × rows × cols`).
pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
/// Unsigned-byte, one-dimensional vector.
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;
/// Unsigned-byte, four-dimensional volume (`n × channels × rows × cols`).
/// Accepted so that colour images converted to the same container load too.
pub const IDX_VOLUME_MAGIC: u32 = 0x0000_0804;

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

/// Parses the header; returns the dimension sizes and the payload.
fn parse<'a>(path: &Path, bytes: &'a [u8], allowed: &[u32]) -> Result<(Vec<usize>, &'a [u8])> {
    let word = |i: usize| -> Result<u32> {
        bytes
            .get(4 * i..4 * i + 4)
            .map(|b| u32::from_be_bytes(b.try_into().expect("4 bytes")))
            .ok_or_else(|| Error::format(path, "truncated header"))
    };
    let magic = word(0)?;
    if !allowed.contains(&magic) {
        let want: Vec<String> = allowed.iter().map(|m| format!("{m:#010x}")).collect();
        return Err(Error::format(
            path,
            format!("bad magic {magic:#010x}, expected {}", want.join(" or ")),
        ));
    }
    let rank = (magic & 0xff) as usize;
    let dims = (1..=rank).map(|i| word(i).map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
    let header = 4 * (rank + 1);
    let need: usize = dims.iter().product();
    let payload = &bytes[header..];
    if payload.len() < need {
        return Err(Error::format(
            path,
            format!("truncated file: {} data bytes, header promises {need}", payload.len()),
        ));
    }
    if payload.len() > need {
        return Err(Error::format(
            path,
            format!("{} trailing bytes after {need} data bytes", payload.len() - need),
        ));
    }
    Ok((dims, payload))
}

/// Loads an IDX image/label pair. Pixels are scaled by 1/255; single-channel
/// images get shape `n × 1 × rows × cols`. The class count is one more than
/// the largest label.
pub fn load_idx(images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<LabeledDataset> {
    let (images_path, labels_path) = (images_path.as_ref(), labels_path.as_ref());
    let image_bytes = read(images_path)?;
    let label_bytes = read(labels_path)?;
    let (dims, pixels) = parse(images_path, &image_bytes, &[IDX_IMAGES_MAGIC, IDX_VOLUME_MAGIC])?;
    let (label_dims, labels) = parse(labels_path, &label_bytes, &[IDX_LABELS_MAGIC])?;
    if dims[0] != label_dims[0] {
        return Err(Error::format(
            labels_path,
            format!("{} labels for {} images in {}", label_dims[0], dims[0], images_path.display()),
        ));
    }
    let shape = if dims.len() == 3 {
        vec![dims[0], 1, dims[1], dims[2]]
    } else {
        dims
    };
    let features = Tensor::new(shape, pixels.iter().map(|&b| f64::from(b) / 255.0).collect())?;
    let labels: Vec<usize> = labels.iter().map(|&l| usize::from(l)).collect();
    let classes = labels.iter().max().map_or(0, |&m| m + 1);
    let name = images_path
        .file_name()
        .map_or_else(|| "idx".to_string(), |n| n.to_string_lossy().into_owned());
    LabeledDataset::classification(name, features, labels, classes)
}

/// Writes `n × rows × cols` bytes as an IDX image file.
pub fn write_idx_images(path: impl AsRef<Path>, n: usize, rows: usize, cols: usize, pixels: &[u8]) -> Result<()> {
    let path = path.as_ref();
    if pixels.len() != n * rows * cols {
        return Err(Error::format(
            path,
            format!("{} pixels for {n}×{rows}×{cols} images", pixels.len()),
        ));
    }
    let mut out = Vec::with_capacity(16 + pixels.len());
    for word in [IDX_IMAGES_MAGIC, n as u32, rows as u32, cols as u32] {
        out.extend(word.to_be_bytes());
    }
    out.extend_from_slice(pixels);
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn write_idx_labels(path: impl AsRef<Path>, labels: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend(IDX_LABELS_MAGIC.to_be_bytes());
    out.extend((labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
