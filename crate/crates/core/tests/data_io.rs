use dren::data::*;
use dren::tensor::Tensor4;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_dataset(n: usize, size: usize, seed: u64) -> Dataset {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..n * size * size).map(|_| r.random_range(0..=255u8) as f32 / 255.0).collect();
    let labels = (0..n).map(|_| r.random_range(0..10u8)).collect();
    Dataset::new(Tensor4::from_vec(n, 1, size, size, data).unwrap(), labels).unwrap()
}

fn round_trip(ds: &Dataset) -> Dataset {
    let img = load_idx_images(&encode_idx_images(&ds.images).unwrap()).unwrap();
    let lab = load_idx_labels(&encode_idx_labels(&ds.labels)).unwrap();
    Dataset::new(img, lab).unwrap()
}

#[test]
fn idx_round_trip_is_bit_exact() {
    let ds = random_dataset(7, 9, 1);
    let back = round_trip(&ds);
    assert_eq!(back.labels, ds.labels);
    let same = back.images.data().iter().zip(ds.images.data()).all(|(a, b)| a.to_bits() == b.to_bits());
    assert!(same);
}

#[test]
fn files_round_trip() {
    let dir = std::env::temp_dir().join(format!("dren-idx-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let ds = random_dataset(3, 5, 2);
    let (i, l) = split_files(&dir, "test");
    write_idx_dataset(&ds, &i, &l).unwrap();
    assert_eq!(read_idx_dataset(&i, &l).unwrap(), ds);
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn exact_rotation_commutes_with_idx_round_trip() {
    let ds = random_dataset(12, 8, 3);
    assert_eq!(round_trip(&rotate_dataset_exact(&ds, 9)), rotate_dataset_exact(&round_trip(&ds), 9));
}

#[test]
fn exact_rotation_permutes_pixels() {
    let ds = random_dataset(20, 6, 4);
    let rot = rotate_dataset_exact(&ds, 5);
    assert_eq!(rot, rotate_dataset_exact(&ds, 5));
    assert_eq!(rot.labels, ds.labels);
    for i in 0..ds.len() {
        let sorted = |t: &Tensor4<f32>| {
            let mut v = t.plane(i, 0).to_vec();
            v.sort_by(f32::total_cmp);
            v
        };
        assert_eq!(sorted(&rot.images), sorted(&ds.images));
    }
}

#[test]
fn quarter_turn_draws_pass_chi_square() {
    let draws = exact_rotation_draws(10_000, 42);
    let mut counts = [0f64; 4];
    for d in draws {
        counts[d as usize] += 1.0;
    }
    let chi2: f64 = counts.iter().map(|c| (c - 2500.0).powi(2) / 2500.0).sum();
    // 3 degrees of freedom, 0.999 quantile
    assert!(chi2 < 16.27, "chi2 = {chi2}");
}

#[test]
fn arbitrary_rotation_boundaries() {
    let ds = random_dataset(1, 7, 6);
    let zero = rotate_plane_bilinear(ds.images.plane(0, 0), 7, 7, 0.0);
    assert_eq!(zero, ds.images.plane(0, 0).to_vec());

    // symmetric odd-sized image: a centred cross
    let mut img = Tensor4::<f32>::zeros(1, 1, 7, 7);
    for t in 0..7 {
        img.set(0, 0, 3, t, 0.5);
        img.set(0, 0, t, 3, 1.0);
    }
    let quarter = rotate_plane_bilinear(img.plane(0, 0), 7, 7, std::f64::consts::FRAC_PI_2);
    assert_eq!(quarter, img.rotate90(1).plane(0, 0).to_vec());

    let rot = rotate_dataset_arbitrary(&random_dataset(10, 8, 7), 8);
    assert!(rot.images.data().iter().all(|v| (0.0..=1.0).contains(v)));
}

#[test]
fn glyph_class_balance() {
    for n in [30, 37] {
        let ds = synth_glyphs(n, 12, 1);
        let counts: Vec<usize> = (0..10).map(|c| ds.labels.iter().filter(|&&l| l == c).count()).collect();
        let (lo, hi) = (*counts.iter().min().unwrap(), *counts.iter().max().unwrap());
        assert!(hi - lo <= 1 && lo == n / 10, "{counts:?}");
    }
}

#[test]
fn split_partitions_dataset() {
    let ds = synth_glyphs(40, 8, 2);
    let (a, b, c) = split(&ds, 20, 5, 10, 3).unwrap();
    assert_eq!((a.len(), b.len(), c.len()), (20, 5, 10));
    assert!(split(&ds, 30, 10, 1, 3).is_err());
}
