//! Flat binary weight snapshots.
//!
//! Layout: the magic bytes `UQW1`, then for every tensor until end of file:
//! name length (`u32`), UTF-8 name, rank (`u32`), `rank` dimensions (`u64`
//! each), then `product(dims)` values as `f64`. All integers and floats are
//! little-endian.

use std::io::{Read, Write};

use super::{Model, Tensor};
use crate::error::{Error, Result};

pub const WEIGHTS_MAGIC: &[u8; 4] = b"UQW1";

pub fn write_tensors<'a>(mut w: impl Write, tensors: impl IntoIterator<Item = (String, &'a Tensor)>) -> Result<()> {
    let io = |e| Error::Weights(format!("write failed: {e}"));
    w.write_all(WEIGHTS_MAGIC).map_err(io)?;
    for (name, t) in tensors {
        w.write_all(&(name.len() as u32).to_le_bytes()).map_err(io)?;
        w.write_all(name.as_bytes()).map_err(io)?;
        w.write_all(&(t.shape().len() as u32).to_le_bytes()).map_err(io)?;
        for &d in t.shape() {
            w.write_all(&(d as u64).to_le_bytes()).map_err(io)?;
        }
        for v in t.data() {
            w.write_all(&v.to_le_bytes()).map_err(io)?;
        }
    }
    Ok(())
}

pub fn read_tensors(mut r: impl Read) -> Result<Vec<(String, Tensor)>> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)
        .map_err(|e| Error::Weights(format!("read failed: {e}")))?;
    if bytes.len() < 4 || &bytes[..4] != WEIGHTS_MAGIC {
        return Err(Error::Weights("missing UQW1 magic".into()));
    }
    let mut cur = Cursor { bytes: &bytes, pos: 4 };
    let mut out = Vec::new();
    while cur.pos < bytes.len() {
        let name_len = cur.u32()? as usize;
        let name = String::from_utf8(cur.take(name_len)?.to_vec())
            .map_err(|_| Error::Weights("tensor name is not UTF-8".into()))?;
        let rank = cur.u32()? as usize;
        let shape = (0..rank).map(|_| cur.u64().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
        let count: usize = shape.iter().product();
        let data = (0..count)
            .map(|_| cur.take(8).map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes"))))
            .collect::<Result<Vec<_>>>()?;
        out.push((name, Tensor::new(shape, data)?));
    }
    Ok(out)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Weights(format!("truncated record at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

impl Model {
    pub fn save_weights(&self, w: impl Write) -> Result<()> {
        write_tensors(w, self.named_tensors())
    }

    /// Loads a snapshot written by [`Model::save_weights`] for the same architecture.
    pub fn load_weights(&mut self, r: impl Read) -> Result<()> {
        let mut stored = read_tensors(r)?;
        let mut targets = self.named_tensors_mut();
        if stored.len() != targets.len() {
            return Err(Error::Weights(format!(
                "snapshot has {} tensors, model has {}",
                stored.len(),
                targets.len()
            )));
        }
        for (name, slot) in targets.iter_mut() {
            let pos = stored
                .iter()
                .position(|(n, _)| n == name)
                .ok_or_else(|| Error::Weights(format!("snapshot lacks {name}")))?;
            let (_, t) = stored.swap_remove(pos);
            if t.shape() != slot.shape() {
                return Err(Error::Weights(format!(
                    "{name}: snapshot shape {:?}, model shape {:?}",
                    t.shape(),
                    slot.shape()
                )));
            }
            **slot = t;
        }
        Ok(())
    }
}
