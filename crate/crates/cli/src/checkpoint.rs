//! Binary checkpoint, all integers little-endian:
//!
//! ```text
//! b"DREN" | version u32 | input c,h,w u32 | layer count u32
//! per layer: kind u8 | kernel u32 | stride u32 | pad u32 | width u32
//! per layer: blob length u64 | blob as f32
//! ```
//!
//! Dropout stores its rate in the width slot as parts per million.

use std::path::Path;

use dren::network::{LayerKind, LayerSpec, Model, ModelSpec};

use crate::error::{io, CliError, Result};

pub const MAGIC: &[u8; 4] = b"DREN";
pub const VERSION: u32 = 1;

pub fn encode(model: &Model<f32>) -> Vec<u8> {
    let spec = model.spec();
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    let put = |out: &mut Vec<u8>, v: u32| out.extend_from_slice(&v.to_le_bytes());
    put(&mut out, VERSION);
    for d in spec.input {
        put(&mut out, d as u32);
    }
    put(&mut out, spec.layers.len() as u32);
    for l in &spec.layers {
        out.push(l.kind.code());
        put(&mut out, l.kernel as u32);
        put(&mut out, l.stride as u32);
        put(&mut out, l.pad as u32);
        let width = if l.kind == LayerKind::Dropout { (l.rate * 1e6).round() as u32 } else { l.width as u32 };
        put(&mut out, width);
    }
    for layer in model.layers() {
        let blob = layer.blob();
        out.extend_from_slice(&(blob.len() as u64).to_le_bytes());
        for v in blob {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| {
            CliError::Checkpoint(format!("truncated at byte {} (wanted {n} more)", self.pos))
        })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

pub fn decode(bytes: &[u8]) -> Result<Model<f32>> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(CliError::Checkpoint("missing DREN magic".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(CliError::Checkpoint(format!("unsupported version {version} (expected {VERSION})")));
    }
    let input = [r.u32()? as usize, r.u32()? as usize, r.u32()? as usize];
    let count = r.u32()? as usize;
    let mut layers = Vec::with_capacity(count.min(1024));
    for i in 0..count {
        let code = r.u8()?;
        let kind = LayerKind::from_code(code).ok_or_else(|| CliError::Checkpoint(format!("layer {i}: unknown kind code {code}")))?;
        let mut l = LayerSpec::new(kind);
        l.kernel = r.u32()? as usize;
        l.stride = r.u32()? as usize;
        l.pad = r.u32()? as usize;
        let width = r.u32()?;
        if kind == LayerKind::Dropout {
            l.rate = width as f64 / 1e6;
        } else {
            l.width = width as usize;
        }
        layers.push(l);
    }
    let mut model = Model::<f32>::build(ModelSpec::new(input, layers), 0)?;
    for (i, layer) in model.layers_mut().iter_mut().enumerate() {
        let len = r.u64()? as usize;
        if len != layer.blob_len() {
            return Err(CliError::Checkpoint(format!("layer {i}: blob has {len} values, expected {}", layer.blob_len())));
        }
        let raw = r.take(len.checked_mul(4).ok_or_else(|| CliError::Checkpoint("blob length overflow".into()))?)?;
        let blob: Vec<f32> = raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes"))).collect();
        layer.set_blob(&blob)?;
    }
    if r.pos != bytes.len() {
        return Err(CliError::Checkpoint(format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    Ok(model)
}

pub fn save(model: &Model<f32>, path: &Path) -> Result<()> {
    std::fs::write(path, encode(model)).map_err(io(path))
}

pub fn load(path: &Path) -> Result<Model<f32>> {
    decode(&std::fs::read(path).map_err(io(path))?)
}
