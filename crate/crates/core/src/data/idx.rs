//! IDX container: big-endian `u32` magic, one big-endian `u32` per
//! dimension, then an unsigned-byte payload.

use std::fs;
use std::path::Path;

use crate::error::{DrenError, Result};
use crate::tensor::Tensor4;

use super::Dataset;

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

fn read_header(bytes: &[u8], magic: u32, dims: usize) -> Result<(Vec<usize>, &[u8])> {
    let header_len = 4 * (dims + 1);
    if bytes.len() < 4 {
        return Err(DrenError::Truncated { expected: header_len, found: bytes.len() });
    }
    let word = |i: usize| u32::from_be_bytes(bytes[4 * i..4 * i + 4].try_into().expect("4 bytes"));
    let found = word(0);
    if found != magic {
        return Err(DrenError::Magic { expected: magic, found });
    }
    if bytes.len() < header_len {
        return Err(DrenError::Truncated { expected: header_len, found: bytes.len() });
    }
    let shape: Vec<usize> = (1..=dims).map(|i| word(i) as usize).collect();
    let payload = shape
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| DrenError::Data(format!("IDX dimensions {shape:?} overflow")))?;
    let body = &bytes[header_len..];
    if body.len() < payload {
        return Err(DrenError::Truncated { expected: payload, found: body.len() });
    }
    Ok((shape, &body[..payload]))
}

/// Decodes an image file into `(n, 1, rows, cols)` with pixels scaled by 1/255.
pub fn load_idx_images(bytes: &[u8]) -> Result<Tensor4<f32>> {
    let (shape, body) = read_header(bytes, IMAGES_MAGIC, 3)?;
    let data = body.iter().map(|&b| b as f32 / 255.0).collect();
    Tensor4::from_vec(shape[0], 1, shape[1], shape[2], data)
}

pub fn load_idx_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    let (_, body) = read_header(bytes, LABELS_MAGIC, 1)?;
    Ok(body.to_vec())
}

/// Encodes `(n, 1, h, w)` images, quantising `[0, 1]` to bytes.
pub fn encode_idx_images(images: &Tensor4<f32>) -> Result<Vec<u8>> {
    if images.c() != 1 {
        return Err(DrenError::Data(format!("IDX images must be single channel, got {}", images.c())));
    }
    let mut out = Vec::with_capacity(16 + images.len());
    for v in [IMAGES_MAGIC, images.n() as u32, images.h() as u32, images.w() as u32] {
        out.extend_from_slice(&v.to_be_bytes());
    }
    out.extend(images.data().iter().map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8));
    Ok(out)
}

pub fn encode_idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

fn io_err(path: &Path, e: std::io::Error) -> DrenError {
    DrenError::Data(format!("{}: {e}", path.display()))
}

pub fn read_idx_dataset(images: &Path, labels: &Path) -> Result<Dataset> {
    let img = load_idx_images(&fs::read(images).map_err(|e| io_err(images, e))?)?;
    let lab = load_idx_labels(&fs::read(labels).map_err(|e| io_err(labels, e))?)?;
    Dataset::new(img, lab)
}

pub fn write_idx_dataset(ds: &Dataset, images: &Path, labels: &Path) -> Result<()> {
    fs::write(images, encode_idx_images(&ds.images)?).map_err(|e| io_err(images, e))?;
    fs::write(labels, encode_idx_labels(&ds.labels)).map_err(|e| io_err(labels, e))
}

/// File names of one split inside a data directory.
pub fn split_files(dir: &Path, split: &str) -> (std::path::PathBuf, std::path::PathBuf) {
    (dir.join(format!("{split}-images.idx")), dir.join(format!("{split}-labels.idx")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decodes_small_image_file() {
        let mut bytes = Vec::new();
        for v in [IMAGES_MAGIC, 2, 2, 2] {
            bytes.extend_from_slice(&v.to_be_bytes());
        }
        bytes.extend(0u8..8);
        let t = load_idx_images(&bytes).unwrap();
        assert_eq!(t.dims(), [2, 1, 2, 2]);
        for (k, &v) in t.data().iter().enumerate() {
            assert_eq!(v, k as f32 / 255.0);
        }
    }

    #[test]
    fn wrong_magic_names_both() {
        let bytes = encode_idx_labels(&[1, 2]);
        let err = load_idx_images(&bytes).unwrap_err();
        assert_eq!(err, DrenError::Magic { expected: IMAGES_MAGIC, found: LABELS_MAGIC });
        assert!(err.to_string().contains("0x00000803") && err.to_string().contains("0x00000801"));
    }

    #[test]
    fn truncated_payload_and_header() {
        let mut bytes = encode_idx_labels(&[1, 2, 3]);
        bytes.pop();
        assert_eq!(load_idx_labels(&bytes).unwrap_err(), DrenError::Truncated { expected: 3, found: 2 });
        assert!(matches!(load_idx_images(&[0, 0]), Err(DrenError::Truncated { .. })));
    }

    #[test]
    fn huge_dimensions_overflow() {
        let mut bytes = Vec::new();
        for v in [IMAGES_MAGIC, u32::MAX, u32::MAX, u32::MAX] {
            bytes.extend_from_slice(&v.to_be_bytes());
        }
        let r = load_idx_images(&bytes);
        assert!(matches!(r, Err(DrenError::Data(_)) | Err(DrenError::Truncated { .. })));
    }
}
