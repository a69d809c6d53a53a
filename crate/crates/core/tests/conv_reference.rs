//! Correlation against an independent nested-loop reference, adjoint
//! identities and finite differences.

use dren::conv::{correlate2d, correlate2d_backward, max_pool2d, stride_preserves_equivariance, ConvGeometry};
use dren::tensor::{max_rel_diff, Tensor4};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn naive(x: &Tensor4<f64>, w: &Tensor4<f64>, stride: usize, pad: usize) -> Tensor4<f64> {
    let (h, wd, k) = (x.h() as isize, x.w() as isize, w.h());
    let oh = (x.h() + 2 * pad - k) / stride + 1;
    let ow = (x.w() + 2 * pad - w.w()) / stride + 1;
    let mut out = Tensor4::zeros(x.n(), w.n(), oh, ow);
    for n in 0..x.n() {
        for o in 0..w.n() {
            for p in 0..oh {
                for q in 0..ow {
                    let mut s = 0.0;
                    for c in 0..x.c() {
                        for u in 0..k {
                            for v in 0..w.w() {
                                let i = (p * stride + u) as isize - pad as isize;
                                let j = (q * stride + v) as isize - pad as isize;
                                if i >= 0 && j >= 0 && i < h && j < wd {
                                    s += w.at(o, c, u, v) * x.at(n, c, i as usize, j as usize);
                                }
                            }
                        }
                    }
                    out.set(n, o, p, q, s);
                }
            }
        }
    }
    out
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[test]
fn matches_nested_loops() {
    let mut r = rng(11);
    let x = Tensor4::<f64>::random([1, 3, 6, 6], -1.0, 1.0, &mut r);
    let w = Tensor4::<f64>::random([2, 3, 3, 3], -1.0, 1.0, &mut r);
    let got = correlate2d(&x, &w, ConvGeometry::default()).unwrap();
    assert!(max_rel_diff(&got, &naive(&x, &w, 1, 0)) < 1e-14);
    for (s, p) in [(2, 0), (1, 1), (2, 1), (3, 2)] {
        let x = Tensor4::<f64>::random([2, 2, 7, 8], -1.0, 1.0, &mut r);
        let got = correlate2d(&x, &w.gather_channels(&[0, 1]), ConvGeometry::new(s, p)).unwrap();
        assert!(max_rel_diff(&got, &naive(&x, &w.gather_channels(&[0, 1]), s, p)) < 1e-14);
    }
}

#[test]
fn backward_matches_central_differences() {
    let mut r = rng(12);
    let g = ConvGeometry::new(2, 1);
    let x = Tensor4::<f64>::random([2, 2, 5, 5], -1.0, 1.0, &mut r);
    let w = Tensor4::<f64>::random([3, 2, 3, 3], -1.0, 1.0, &mut r);
    let y = correlate2d(&x, &w, g).unwrap();
    let probe = Tensor4::<f64>::random(y.dims(), -1.0, 1.0, &mut r);
    let loss = |x: &Tensor4<f64>, w: &Tensor4<f64>| correlate2d(x, w, g).unwrap().dot(&probe).unwrap();
    let (gx, gw) = correlate2d_backward(&probe, &x, &w, g).unwrap();
    let eps = 1e-5;
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1e-8);
    let mut worst: f64 = 0.0;
    for i in 0..x.len() {
        let (mut xp, mut xm) = (x.clone(), x.clone());
        xp.data_mut()[i] += eps;
        xm.data_mut()[i] -= eps;
        worst = worst.max(rel((loss(&xp, &w) - loss(&xm, &w)) / (2.0 * eps), gx.data()[i]));
    }
    for i in 0..w.len() {
        let (mut wp, mut wm) = (w.clone(), w.clone());
        wp.data_mut()[i] += eps;
        wm.data_mut()[i] -= eps;
        worst = worst.max(rel((loss(&x, &wp) - loss(&x, &wm)) / (2.0 * eps), gw.data()[i]));
    }
    assert!(worst < 1e-6, "max relative error {worst}");
}

#[test]
fn rotation_distributes_over_correlation() {
    let mut r = rng(13);
    for (size, k, stride, pad) in [(6, 3, 1, 0), (7, 3, 2, 0), (8, 2, 2, 0), (5, 3, 1, 1), (9, 3, 3, 0)] {
        let g = ConvGeometry::new(stride, pad);
        assert!(g.preserves_equivariance(size, k));
        let x = Tensor4::<f64>::random([2, 3, size, size], -1.0, 1.0, &mut r);
        let w = Tensor4::<f64>::random([2, 3, k, k], -1.0, 1.0, &mut r);
        let lhs = correlate2d(&x.rotate90(1), &w.rotate90(1), g).unwrap();
        let rhs = correlate2d(&x, &w, g).unwrap().rotate90(1);
        assert!(max_rel_diff(&lhs, &rhs) < 1e-12, "size {size} k {k} stride {stride}");

        let xs = x.cast::<f32>();
        let ws = w.cast::<f32>();
        let lhs = correlate2d(&xs.rotate90(1), &ws.rotate90(1), g).unwrap();
        let rhs = correlate2d(&xs, &ws, g).unwrap().rotate90(1);
        assert!(max_rel_diff(&lhs, &rhs) < 1e-5);
    }
}

#[test]
fn max_pool_commutes_with_rotation_when_tiled() {
    let mut r = rng(14);
    for size in [4, 6, 8] {
        assert!(stride_preserves_equivariance(size, 2, 2));
        let x = Tensor4::<f64>::random([1, 2, size, size], -1.0, 1.0, &mut r);
        assert_eq!(max_pool2d(&x.rotate90(1), 2, 2).unwrap(), max_pool2d(&x, 2, 2).unwrap().rotate90(1));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn adjoint_identity(seed in any::<u64>(), size in 3usize..8, k in 1usize..4, stride in 1usize..3, pad in 0usize..2) {
        prop_assume!(k <= size + 2 * pad);
        let mut r = rng(seed);
        let g = ConvGeometry::new(stride, pad);
        let x = Tensor4::<f64>::random([2, 2, size, size], -1.0, 1.0, &mut r);
        let w = Tensor4::<f64>::random([3, 2, k, k], -1.0, 1.0, &mut r);
        let y = correlate2d(&x, &w, g).unwrap();
        let probe = Tensor4::<f64>::random(y.dims(), -1.0, 1.0, &mut r);
        let (gx, gw) = correlate2d_backward(&probe, &x, &w, g).unwrap();
        let lhs = y.dot(&probe).unwrap();
        let via_x = x.dot(&gx).unwrap();
        let via_w = w.dot(&gw).unwrap();
        let scale = lhs.abs().max(1.0);
        prop_assert!((lhs - via_x).abs() / scale <= 1e-10);
        prop_assert!((lhs - via_w).abs() / scale <= 1e-10);
    }

    #[test]
    fn linear_in_input(seed in any::<u64>(), size in 3usize..8) {
        let mut r = rng(seed);
        let g = ConvGeometry::default();
        let a = Tensor4::<f64>::random([1, 2, size, size], -1.0, 1.0, &mut r);
        let b = Tensor4::<f64>::random([1, 2, size, size], -1.0, 1.0, &mut r);
        let w = Tensor4::<f64>::random([2, 2, 3.min(size), 3.min(size)], -1.0, 1.0, &mut r);
        let lhs = correlate2d(&a.add(&b).unwrap(), &w, g).unwrap();
        let rhs = correlate2d(&a, &w, g).unwrap().add(&correlate2d(&b, &w, g).unwrap()).unwrap();
        prop_assert!(max_rel_diff(&lhs, &rhs) < 1e-13);
    }
}
