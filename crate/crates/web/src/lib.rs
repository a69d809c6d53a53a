//! WebAssembly bindings for the static demo page in `www/`.

use dren::bench::{memory_model, LayerGeometry};
use dren::data::{render_glyph, CLASSES};
use dren::network::{presets, Model, Strategy};
use dren::tensor::Tensor4;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wasm_bindgen::prelude::*;

pub const SIZE: usize = 16;
const GROUPS: usize = 2;

/// A randomly initialised equivariant network plus the glyph it is looking at.
#[wasm_bindgen]
pub struct Demo {
    model: Model<f32>,
    image: Tensor4<f32>,
}

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new(seed: u32) -> Demo {
        let model = Model::build(presets::dren_small([1, SIZE, SIZE], GROUPS, CLASSES), seed as u64).expect("preset is valid");
        let mut demo = Demo { model, image: Tensor4::zeros(1, 1, SIZE, SIZE) };
        demo.draw(0, seed);
        demo
    }

    /// Replaces the input with a fresh drawing of glyph `class`.
    pub fn draw(&mut self, class: usize, seed: u32) {
        let pixels = render_glyph(class % CLASSES, SIZE, &mut ChaCha8Rng::seed_from_u64(seed as u64));
        self.image = Tensor4::from_vec(1, 1, SIZE, SIZE, pixels).expect("sizes agree");
    }

    pub fn size(&self) -> usize {
        SIZE
    }

    /// The input after `turns` counterclockwise quarter turns, row-major.
    pub fn input(&self, turns: i32) -> Vec<f32> {
        self.image.rotate90(turns).into_vec()
    }

    /// Side length of each map returned by [`Demo::feature_maps`].
    pub fn map_size(&self) -> usize {
        self.model.layers()[2].out_shape[1]
    }

    /// The `4 * groups` maps after the first layer and its ReLU, for the
    /// rotated input, concatenated channel by channel.
    pub fn feature_maps(&self, turns: i32) -> Vec<f32> {
        self.model
            .forward_prefix(&self.image.rotate90(turns), 3, Strategy::RotateFilters)
            .expect("input matches model")
            .into_vec()
    }

    pub fn map_count(&self) -> usize {
        4 * GROUPS
    }

    /// Class scores for the rotated input; identical for every `turns`.
    pub fn logits(&self, turns: i32) -> Vec<f32> {
        self.model.predict(&self.image.rotate90(turns)).expect("input matches model").into_vec()
    }
}

/// Filter, feature-map and im2col element counts: three numbers for
/// rotating filters followed by three for rotating feature maps.
#[wasm_bindgen]
pub fn memory_costs(n: u32, c_in: u32, c_out: u32, k: u32, w: u32, h: u32) -> Vec<f64> {
    let g = LayerGeometry::new(n as u64, c_in as u64, c_out as u64, k as u64, w as u64, h as u64);
    [Strategy::RotateFilters, Strategy::RotateFeatureMaps]
        .into_iter()
        .flat_map(|s| {
            let c = memory_model(g, s);
            [c.filters_cost as f64, c.feature_map_cost as f64, c.feature_map_gpu_cost as f64]
        })
        .collect()
}

/// `[predicted, measured deviation]`: whether the strided geometry should
/// keep equivariance (1 or 0), and the relative gap between `f(Rx)` and the
/// rotated-and-shifted `f(x)` for a random cycle layer.
#[wasm_bindgen]
pub fn stride_check(size: usize, stride: usize, kernel: usize, seed: u32) -> Vec<f64> {
    if size < kernel || stride == 0 || kernel == 0 {
        return vec![f64::NAN, f64::NAN];
    }
    let predicted = dren::stride_preserves_equivariance(size, stride, kernel);
    let deviation = dren::eqlayers::stride_equivariance_gap(size, stride, kernel, seed as u64).unwrap_or(f64::NAN);
    vec![predicted as u8 as f64, deviation]
}
