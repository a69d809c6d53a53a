use dren::data::{rotate_dataset_exact, split, synth_glyphs, Dataset};
use dren::network::*;
use dren::eqlayers::{IsotonicParams, TiedFilter};
use dren::tensor::Tensor4;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn glyph_splits(n_train: usize, n_val: usize, n_test: usize, seed: u64) -> (Dataset, Dataset, Dataset) {
    let all = rotate_dataset_exact(&synth_glyphs(n_train + n_val + n_test, 16, seed), seed + 1);
    split(&all, n_train, n_val, n_test, seed + 2).unwrap()
}

fn randomize_biases(m: &mut Model<f64>, seed: u64) {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    for layer in m.layers_mut() {
        if let LayerParams::Bias(b) = &layer.params {
            let fresh: Vec<f64> = b.iter().map(|_| r.random_range(-0.5..0.5)).collect();
            layer.set_blob(&fresh).unwrap();
        }
    }
}

#[test]
fn softmax_gradient_matches_finite_differences() {
    let mut r = ChaCha8Rng::seed_from_u64(1);
    let logits = Tensor4::<f64>::random([3, 5, 1, 1], -3.0, 3.0, &mut r);
    let labels: Vec<usize> = (0..3).map(|_| r.random_range(0..5)).collect();
    let (_, g) = softmax_cross_entropy(&logits, &labels).unwrap();
    for i in 0..logits.len() {
        let f = |v: f64| {
            let mut l = logits.clone();
            l.data_mut()[i] = v;
            softmax_cross_entropy(&l, &labels).unwrap().0
        };
        let numeric = central_difference(f, logits.data()[i], 1e-5);
        let a = g.data()[i];
        assert!((a - numeric).abs() / a.abs().max(1e-6) <= 1e-6, "{a} vs {numeric}");
    }
}

#[test]
fn dren_chain_gradients() {
    let m = Model::<f64>::build(presets::dren_chain([1, 9, 9], 2, 4), 2).unwrap();
    let x = Tensor4::random([3, 1, 9, 9], 0.0, 1.0, &mut ChaCha8Rng::seed_from_u64(3));
    let rep = finite_diff_check(&m, &x, &[0, 3, 1], 1e-5, true).unwrap();
    assert!(rep.checked > 0);
    assert!(rep.max_rel_error < 1e-4, "{rep:?}");
}

#[test]
fn plain_counterpart_gradients() {
    for seed in 0..10 {
        let mut m = Model::<f64>::build(presets::plain_small([1, 16, 16], 3, 4), seed).unwrap();
        randomize_biases(&mut m, seed);
        let x = Tensor4::random([2, 1, 16, 16], 0.0, 1.0, &mut ChaCha8Rng::seed_from_u64(seed));
        let rep = finite_diff_check(&m, &x, &[2, 1], 1e-5, false).unwrap();
        assert!(rep.max_rel_error < 1e-4, "seed {seed}: {rep:?}");
    }
}

#[test]
fn normalised_dropout_model_gradients() {
    let spec = ModelSpec::new(
        [1, 8, 8],
        vec![
            LayerSpec::cycle(2, 3),
            LayerSpec::group_batchnorm(),
            LayerSpec::dropout(0.2),
            LayerSpec::isotonic(1, 3),
            LayerSpec::group_pool_max(),
            LayerSpec::conv(3, 1),
            LayerSpec::batchnorm(),
            LayerSpec::global_avg_pool(),
        ],
    );
    let m = Model::<f64>::build(spec, 5).unwrap();
    let x = Tensor4::random([4, 1, 8, 8], 0.0, 1.0, &mut ChaCha8Rng::seed_from_u64(6));
    let rep = finite_diff_check(&m, &x, &[0, 1, 2, 0], 1e-5, false).unwrap();
    assert!(rep.max_rel_error < 1e-4, "{rep:?}");
}

#[test]
fn training_is_bitwise_deterministic() {
    let (tr, va, _) = glyph_splits(60, 20, 0, 1);
    let run = || {
        let mut m = Model::<f32>::build(presets::dren_small([1, 16, 16], 2, 10), 7).unwrap();
        let cfg = TrainConfig { epochs: 2, batch_size: 16, seed: 3, ..Default::default() };
        let h = train(&mut m, &tr, &va, &cfg).unwrap();
        (h.iter().map(|r| (r.train_loss.to_bits(), r.val_error.to_bits())).collect::<Vec<_>>(), m)
    };
    let (a, ma) = run();
    let (b, mb) = run();
    assert_eq!(a, b);
    assert_eq!(ma, mb);
}

#[test]
fn loss_falls_during_first_epoch() {
    let (tr, _, _) = glyph_splits(400, 0, 0, 2);
    let mut m = Model::<f32>::build(presets::dren_small([1, 16, 16], 3, 10), 1).unwrap();
    let x: Tensor4<f32> = tr.images.clone();
    let y: Vec<usize> = tr.labels.iter().map(|&l| l as usize).collect();
    let before = softmax_cross_entropy(&m.predict(&x).unwrap(), &y).unwrap().0;
    let cfg = TrainConfig { epochs: 1, seed: 1, ..Default::default() };
    train(&mut m, &tr, &Dataset::new(Tensor4::zeros(0, 1, 16, 16), vec![]).unwrap(), &cfg).unwrap();
    let after = softmax_cross_entropy(&m.predict(&x).unwrap(), &y).unwrap().0;
    assert!(after < before, "{before} -> {after}");
}

#[test]
fn rotated_evaluation_is_identical_for_dren() {
    let (_, _, te) = glyph_splits(0, 0, 50, 3);
    let m = Model::<f32>::build(presets::dren_small([1, 16, 16], 3, 10), 4).unwrap();
    let base = predict_labels(&m, &te.images, 16).unwrap();
    let err = evaluate(&m, &te, 16).unwrap();
    for k in 1..4 {
        assert_eq!(predict_labels(&m, &te.images.rotate90(k), 16).unwrap(), base);
        assert_eq!(evaluate(&m, &te.rotated(k), 16).unwrap(), err);
    }
    assert_eq!(rotation_consistency(&m, &te.images, 16).unwrap(), 1.0);
}

#[test]
fn glyphs_are_learnable_in_five_epochs() {
    let (tr, va, te) = glyph_splits(2000, 200, 500, 4);
    let mut m = Model::<f32>::build(presets::dren_small([1, 16, 16], 5, 10), 1).unwrap();
    let cfg = TrainConfig { epochs: 5, seed: 2, ..Default::default() };
    train(&mut m, &tr, &va, &cfg).unwrap();
    let err = evaluate(&m, &te, 64).unwrap();
    assert!(err < 0.15, "test error {err}");
}

#[test]
fn isotonic_is_a_quarter_of_untied_conv() {
    let mut r = ChaCha8Rng::seed_from_u64(9);
    for (gi, go, k) in [(1, 1, 1), (5, 5, 3), (3, 7, 5)] {
        let iso = IsotonicParams::<f32>::init(gi, go, k, &mut r);
        let untied = (4 * go) * (4 * gi) * k * k;
        assert_eq!(4 * iso.param_count(), untied);
        assert_eq!(iso.untied_param_count(), untied);
    }
}

#[test]
fn empty_stack_is_rejected() {
    assert!(Model::<f32>::build(ModelSpec::new([1, 8, 8], vec![]), 0).is_err());
}
