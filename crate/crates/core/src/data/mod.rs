//! Image datasets: IDX container I/O, rotation augmentation, seeded splits
//! and a procedurally drawn glyph corpus that needs no download.

mod augment;
mod glyphs;
mod idx;

pub use augment::*;
pub use glyphs::*;
pub use idx::*;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{DrenError, Result};
use crate::tensor::Tensor4;

pub const CLASSES: usize = 10;

/// Images `(n, 1, h, w)` with values in `[0, 1]` and one label per image.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub images: Tensor4<f32>,
    pub labels: Vec<u8>,
}

impl Dataset {
    pub fn new(images: Tensor4<f32>, labels: Vec<u8>) -> Result<Self> {
        if images.n() != labels.len() {
            return Err(DrenError::Data(format!(
                "{} images but {} labels",
                images.n(),
                labels.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l as usize >= CLASSES) {
            return Err(DrenError::Label { label: bad as usize, classes: CLASSES });
        }
        if images.data().iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(DrenError::Data("pixel values must lie in [0, 1]".into()));
        }
        Ok(Self { images, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn subset(&self, idx: &[usize]) -> Self {
        Self {
            images: self.images.select_batch(idx),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    /// Every image rotated by the same `k` quarter turns.
    pub fn rotated(&self, k: i32) -> Self {
        Self { images: self.images.rotate90(k), labels: self.labels.clone() }
    }

    pub fn image_shape(&self) -> [usize; 3] {
        [self.images.c(), self.images.h(), self.images.w()]
    }
}

/// Seeded disjoint index sets of the requested sizes drawn from `0..n`.
pub fn split_indices(n: usize, sizes: [usize; 3], seed: u64) -> Result<[Vec<usize>; 3]> {
    let total: usize = sizes.iter().sum();
    if total > n {
        return Err(DrenError::Data(format!("split sizes {sizes:?} exceed {n} available items")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (a, rest) = order.split_at(sizes[0]);
    let (b, rest) = rest.split_at(sizes[1]);
    Ok([a.to_vec(), b.to_vec(), rest[..sizes[2]].to_vec()])
}

/// Train, validation and test subsets.
pub fn split(ds: &Dataset, n_train: usize, n_val: usize, n_test: usize, seed: u64) -> Result<(Dataset, Dataset, Dataset)> {
    let [a, b, c] = split_indices(ds.len(), [n_train, n_val, n_test], seed)?;
    Ok((ds.subset(&a), ds.subset(&b), ds.subset(&c)))
}

/// Per-item sub-seed so per-image draws do not depend on processing order.
pub(crate) fn item_seed(seed: u64, item: usize) -> u64 {
    let mut z = seed.wrapping_add((item as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
