//! Equivariance identities of the tied layers, their oracle equivalence and
//! tied-gradient finite-difference checks.

use dren::conv::ConvGeometry;
use dren::eqlayers::{
    diagonal_shift_rotate, shared_bias_add, shift_rotate, BankAxis, CycleParams, DecycleParams, EquivariantParams,
    IsotonicParams, TiedFilter,
};
use dren::oracle::compare_paths;
use dren::tensor::{max_rel_diff, GroupLayout, Tensor4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn rp(x: &Tensor4<f64>) -> Tensor4<f64> {
    let l = GroupLayout::for_channels(x.c()).unwrap();
    x.rotate90(1).cyclic_permute(l, 1).unwrap()
}

#[test]
fn cycle_turns_rotation_into_shift() {
    let mut r = rng(1);
    for _ in 0..30 {
        let (g, k, size) = (r.random_range(1..4), [1, 3][r.random_range(0..2)], r.random_range(4..13));
        let p = CycleParams::<f64>::init(2, g, k, &mut r);
        let x = Tensor4::random([2, 2, size, size], -1.0, 1.0, &mut r);
        let lhs = p.forward(&x.rotate90(1), ConvGeometry::default()).unwrap();
        let rhs = rp(&p.forward(&x, ConvGeometry::default()).unwrap());
        assert!(max_rel_diff(&lhs, &rhs) <= 1e-12);
    }
}

#[test]
fn isotonic_commutes_with_rotate_shift() {
    let mut r = rng(2);
    for _ in 0..30 {
        let (gi, go, k, size) = (r.random_range(1..4), r.random_range(1..4), [1, 3][r.random_range(0..2)], r.random_range(4..13));
        let p = IsotonicParams::<f64>::init(gi, go, k, &mut r);
        let x = Tensor4::random([1, 4 * gi, size, size], -1.0, 1.0, &mut r);
        let lhs = p.forward(&rp(&x), ConvGeometry::default()).unwrap();
        let rhs = rp(&p.forward(&x, ConvGeometry::default()).unwrap());
        assert!(max_rel_diff(&lhs, &rhs) <= 1e-12);

        // with a shared bias inserted after the layer
        let bias: Vec<f64> = (0..go).map(|_| r.random_range(-1.0..1.0)).collect();
        let l = GroupLayout::new(go);
        let lhs = shared_bias_add(&p.forward(&rp(&x), ConvGeometry::default()).unwrap(), l, &bias).unwrap();
        let rhs = rp(&shared_bias_add(&p.forward(&x, ConvGeometry::default()).unwrap(), l, &bias).unwrap());
        assert!(max_rel_diff(&lhs, &rhs) <= 1e-12);
    }
}

#[test]
fn decycle_collapses_shift() {
    let mut r = rng(3);
    for _ in 0..30 {
        let (gi, co, k, size) = (r.random_range(1..4), r.random_range(1..4), [1, 3][r.random_range(0..2)], r.random_range(4..13));
        let p = DecycleParams::<f64>::init(gi, co, k, &mut r);
        let x = Tensor4::random([1, 4 * gi, size, size], -1.0, 1.0, &mut r);
        let lhs = p.forward(&rp(&x), ConvGeometry::default()).unwrap();
        let rhs = p.forward(&x, ConvGeometry::default()).unwrap().rotate90(1);
        assert!(max_rel_diff(&lhs, &rhs) <= 1e-12);
    }
}

#[test]
fn expanded_banks_are_fixed_points() {
    let mut r = rng(4);
    for _ in 0..20 {
        let (a, b, k) = (r.random_range(1..4), r.random_range(1..4), r.random_range(1..5));
        let iso = IsotonicParams::<f64>::init(a, b, k, &mut r).expand();
        assert_eq!(diagonal_shift_rotate(&iso).unwrap(), iso);
        let dec = DecycleParams::<f64>::init(a, b, k, &mut r).expand();
        assert_eq!(shift_rotate(&dec, BankAxis::Input).unwrap(), dec);
        let cyc = CycleParams::<f64>::init(a, b, k, &mut r).expand();
        assert_eq!(shift_rotate(&cyc, BankAxis::Output).unwrap(), cyc);
    }
}

#[test]
fn untied_banks_are_not_fixed_points() {
    let w = Tensor4::<f64>::random([4, 4, 3, 3], -1.0, 1.0, &mut rng(5));
    assert_ne!(diagonal_shift_rotate(&w).unwrap(), w);
}

#[test]
fn oracle_agrees_with_filter_path() {
    let mut r = rng(6);
    for trial in 0..30 {
        let (g, k) = (r.random_range(1..3), [1, 3][trial % 2]);
        let size = [5, 8, 9][trial % 3];
        let x1 = Tensor4::<f64>::random([2, 3, size, size], -1.0, 1.0, &mut r);
        let xg = Tensor4::<f64>::random([2, 4 * g, size, size], -1.0, 1.0, &mut r);
        let layers = [
            (EquivariantParams::Cycle(CycleParams::init(3, g, k, &mut r)), &x1),
            (EquivariantParams::Isotonic(IsotonicParams::init(g, 2, k, &mut r)), &xg),
            (EquivariantParams::Decycle(DecycleParams::init(g, 3, k, &mut r)), &xg),
        ];
        for (p, x) in layers {
            let rep = compare_paths(&p, x, ConvGeometry::default(), 1e-12).unwrap();
            assert!(rep.pass, "{} {rep:?}", p.name());
            let rep32 = compare_paths(
                &match &p {
                    EquivariantParams::Cycle(c) => EquivariantParams::Cycle(CycleParams::new(c.base().cast()).unwrap()),
                    EquivariantParams::Isotonic(c) => EquivariantParams::Isotonic(IsotonicParams::new(c.base().cast()).unwrap()),
                    EquivariantParams::Decycle(c) => EquivariantParams::Decycle(DecycleParams::new(c.base().cast()).unwrap()),
                },
                &x.cast::<f32>(),
                ConvGeometry::default(),
                1e-5,
            )
            .unwrap();
            assert!(rep32.pass, "{} f32 {rep32:?}", p.name());
        }
    }
}

fn fd_check(p: &mut dyn TiedFilter<f64>, x: &Tensor4<f64>, g: ConvGeometry, seed: u64) -> f64 {
    let y = p.forward(x, g).unwrap();
    let probe = Tensor4::<f64>::random(y.dims(), -1.0, 1.0, &mut rng(seed));
    let (_, gb) = p.backward(x, &probe, g).unwrap();
    let eps = 1e-5;
    let mut worst: f64 = 0.0;
    for i in 0..p.base().len() {
        let orig = p.base().data()[i];
        p.base_mut().data_mut()[i] = orig + eps;
        let fp = p.forward(x, g).unwrap().dot(&probe).unwrap();
        p.base_mut().data_mut()[i] = orig - eps;
        let fm = p.forward(x, g).unwrap().dot(&probe).unwrap();
        p.base_mut().data_mut()[i] = orig;
        let fd = (fp - fm) / (2.0 * eps);
        let a = gb.data()[i];
        worst = worst.max((fd - a).abs() / fd.abs().max(a.abs()).max(1e-8));
    }
    worst
}

#[test]
fn tied_gradients_match_finite_differences() {
    let mut r = rng(7);
    let g = ConvGeometry::default();
    let x1 = Tensor4::<f64>::random([2, 2, 6, 6], -1.0, 1.0, &mut r);
    let x8 = Tensor4::<f64>::random([2, 8, 6, 6], -1.0, 1.0, &mut r);
    let mut c = CycleParams::<f64>::init(2, 2, 3, &mut r);
    let mut i = IsotonicParams::<f64>::init(2, 2, 3, &mut r);
    let mut d = DecycleParams::<f64>::init(2, 3, 3, &mut r);
    assert!(fd_check(&mut c, &x1, g, 8) < 1e-6);
    assert!(fd_check(&mut i, &x8, g, 9) < 1e-6);
    assert!(fd_check(&mut d, &x8, g, 10) < 1e-6);
}
