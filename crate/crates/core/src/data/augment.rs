use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{item_seed, Dataset};

/// Quarter-turn counts drawn uniformly from `{0, 1, 2, 3}`, one per image.
pub fn exact_rotation_draws(n: usize, seed: u64) -> Vec<u8> {
    (0..n)
        .map(|i| ChaCha8Rng::seed_from_u64(item_seed(seed, i)).random_range(0..4u8))
        .collect()
}

/// Rotates every image by its own uniformly drawn multiple of 90 degrees.
pub fn rotate_dataset_exact(ds: &Dataset, seed: u64) -> Dataset {
    let draws = exact_rotation_draws(ds.len(), seed);
    let mut images = ds.images.clone();
    let [_, c, h, w] = ds.images.dims();
    assert_eq!(h, w, "exact rotation augmentation needs square images");
    for (i, &k) in draws.iter().enumerate() {
        let one = ds.images.select_batch(&[i]).rotate90(k as i32);
        let len = c * h * w;
        images.data_mut()[i * len..(i + 1) * len].copy_from_slice(one.data());
    }
    Dataset { images, labels: ds.labels.clone() }
}

/// Rotation angles in radians, uniform in `[0, 2pi)`, one per image.
pub fn arbitrary_rotation_draws(n: usize, seed: u64) -> Vec<f64> {
    (0..n)
        .map(|i| ChaCha8Rng::seed_from_u64(item_seed(seed, i)).random_range(0.0..std::f64::consts::TAU))
        .collect()
}

pub fn rotate_dataset_arbitrary(ds: &Dataset, seed: u64) -> Dataset {
    let angles = arbitrary_rotation_draws(ds.len(), seed);
    let mut images = ds.images.clone();
    let [n, c, h, w] = ds.images.dims();
    for i in 0..n {
        for ch in 0..c {
            let out = rotate_plane_bilinear(ds.images.plane(i, ch), h, w, angles[i]);
            images.plane_mut(i, ch).copy_from_slice(&out);
        }
    }
    Dataset { images, labels: ds.labels.clone() }
}

fn snap(v: f64) -> f64 {
    let r = v.round();
    if (v - r).abs() < 1e-9 {
        r
    } else {
        v
    }
}

/// Counterclockwise rotation about the image centre with bilinear
/// interpolation; samples falling outside the source read as zero.
pub fn rotate_plane_bilinear(src: &[f32], h: usize, w: usize, angle: f64) -> Vec<f32> {
    let (ci, cj) = ((h as f64 - 1.0) / 2.0, (w as f64 - 1.0) / 2.0);
    let (s, c) = angle.sin_cos();
    let fetch = |i: isize, j: isize| -> f64 {
        if i < 0 || j < 0 || i >= h as isize || j >= w as isize {
            0.0
        } else {
            src[i as usize * w + j as usize] as f64
        }
    };
    let mut out = vec![0.0f32; h * w];
    for i in 0..h {
        for j in 0..w {
            let (di, dj) = (i as f64 - ci, j as f64 - cj);
            let y = snap(ci + di * c + dj * s);
            let x = snap(cj - di * s + dj * c);
            let (y0, x0) = (y.floor(), x.floor());
            let (fy, fx) = (y - y0, x - x0);
            let (y0, x0) = (y0 as isize, x0 as isize);
            let v = fetch(y0, x0) * (1.0 - fy) * (1.0 - fx)
                + fetch(y0, x0 + 1) * (1.0 - fy) * fx
                + fetch(y0 + 1, x0) * fy * (1.0 - fx)
                + fetch(y0 + 1, x0 + 1) * fy * fx;
            out[i * w + j] = v.clamp(0.0, 1.0) as f32;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Tensor4;
    use std::f64::consts::FRAC_PI_2;

    fn ramp(h: usize, w: usize) -> Vec<f32> {
        (0..h * w).map(|k| k as f32 / (h * w) as f32).collect()
    }

    #[test]
    fn quarter_turns_match_exact_rotation() {
        let t = Tensor4::from_vec(1, 1, 5, 5, ramp(5, 5)).unwrap();
        for k in 0..4 {
            let got = rotate_plane_bilinear(t.plane(0, 0), 5, 5, k as f64 * FRAC_PI_2);
            assert_eq!(got, t.rotate90(k).plane(0, 0).to_vec(), "k={k}");
        }
    }

    #[test]
    fn zero_fill_and_range() {
        let src = vec![1.0f32; 36];
        let out = rotate_plane_bilinear(&src, 6, 6, 0.7);
        assert!(out.iter().all(|v| (0.0..=1.0).contains(v)));
        assert!(out[0] < 1.0, "corner should pick up zero fill");
    }

    #[test]
    fn draws_are_uniform_ish_and_order_free() {
        let d = exact_rotation_draws(4000, 11);
        for k in 0..4u8 {
            let frac = d.iter().filter(|&&x| x == k).count() as f64 / 4000.0;
            assert!((frac - 0.25).abs() < 0.03, "k={k} frac={frac}");
        }
        assert_eq!(exact_rotation_draws(10, 11), d[..10].to_vec());
        assert!(arbitrary_rotation_draws(100, 1).iter().all(|a| (0.0..std::f64::consts::TAU).contains(a)));
    }
}
