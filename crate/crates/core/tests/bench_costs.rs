use dren::bench::{memory_model, LayerGeometry};
use dren::network::Strategy;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn cost_formulas_on_random_geometries() {
    let mut r = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let [n, ci, co, k, w, h] = [0; 6].map(|_| r.random_range(1..200u64));
        let g = LayerGeometry::new(n, ci, co, k, w, h);
        let f = memory_model(g, Strategy::RotateFilters);
        let m = memory_model(g, Strategy::RotateFeatureMaps);

        // expanded filters live in memory; maps are stored once
        assert_eq!(f.filters_cost, 4 * ci * co * k * k);
        assert_eq!(f.feature_map_cost, n * ci * w * h);
        assert_eq!(f.feature_map_gpu_cost, n * ci * w * h * k * k);
        // four rotated copies of every map instead
        assert_eq!(m.filters_cost, ci * co * k * k);
        assert_eq!(m.feature_map_cost, 4 * n * ci * w * h);
        assert_eq!(m.feature_map_gpu_cost, 4 * n * ci * w * h * k * k);

        assert_eq!(m.feature_map_gpu_cost, 4 * f.feature_map_gpu_cost);
        assert_eq!(f.filters_cost, 4 * m.filters_cost);
    }
}
