//! Ten stroke glyphs drawn with random jitter and noise. No glyph is a
//! quarter-turn of another, so labels survive rotation augmentation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{item_seed, Dataset, CLASSES};
use crate::tensor::Tensor4;

type Seg = [f64; 4];

const BAR: &[Seg] = &[[-0.7, 0.0, 0.7, 0.0]];
const ELL: &[Seg] = &[[-0.5, -0.7, -0.5, 0.6], [-0.5, 0.6, 0.6, 0.6]];
const TEE: &[Seg] = &[[-0.7, -0.6, 0.7, -0.6], [0.0, -0.6, 0.0, 0.7]];
const PLUS: &[Seg] = &[[-0.7, 0.0, 0.7, 0.0], [0.0, -0.7, 0.0, 0.7]];
const RING: &[Seg] = &[
    [-0.6, -0.6, 0.6, -0.6],
    [0.6, -0.6, 0.6, 0.6],
    [0.6, 0.6, -0.6, 0.6],
    [-0.6, 0.6, -0.6, -0.6],
];
const DIAG: &[Seg] = &[[-0.6, -0.6, 0.6, 0.6]];
const ZED: &[Seg] = &[[-0.6, -0.6, 0.6, -0.6], [0.6, -0.6, -0.6, 0.6], [-0.6, 0.6, 0.6, 0.6]];
const TRI: &[Seg] = &[[0.0, -0.65, 0.65, 0.55], [0.65, 0.55, -0.65, 0.55], [-0.65, 0.55, 0.0, -0.65]];
const CROSS: &[Seg] = &[[-0.6, -0.6, 0.6, 0.6], [-0.6, 0.6, 0.6, -0.6]];
const CUP: &[Seg] = &[[-0.55, -0.65, -0.55, 0.6], [-0.55, 0.6, 0.55, 0.6], [0.55, 0.6, 0.55, -0.65]];

const GLYPHS: [&[Seg]; CLASSES] = [BAR, ELL, TEE, PLUS, RING, DIAG, ZED, TRI, CROSS, CUP];

/// Peak of the uniform background noise.
pub const NOISE: f64 = 0.45;
/// Short distractor strokes added to every glyph.
pub const CLUTTER: usize = 2;

pub const GLYPH_NAMES: [&str; CLASSES] = ["bar", "ell", "tee", "plus", "ring", "diag", "zed", "tri", "cross", "cup"];

fn seg_distance(px: f64, py: f64, s: &Seg) -> f64 {
    let (dx, dy) = (s[2] - s[0], s[3] - s[1]);
    let len2 = dx * dx + dy * dy;
    let t = (((px - s[0]) * dx + (py - s[1]) * dy) / len2).clamp(0.0, 1.0);
    let (qx, qy) = (s[0] + t * dx - px, s[1] + t * dy - py);
    (qx * qx + qy * qy).sqrt()
}

/// Renders one glyph on a `size x size` canvas.
pub fn render_glyph<R: Rng + ?Sized>(class: usize, size: usize, rng: &mut R) -> Vec<f32> {
    let half = size as f64 / 2.0;
    let scale = half * rng.random_range(0.8..1.0);
    let tilt: f64 = rng.random_range(-0.15..0.15);
    let (s, c) = tilt.sin_cos();
    let shift = size as f64 / 16.0;
    let (ox, oy) = (rng.random_range(-shift..=shift), rng.random_range(-shift..=shift));
    let width = rng.random_range(0.6..1.2);
    let ink = rng.random_range(0.7..1.0);
    let noise = NOISE;

    let mut strokes: Vec<Seg> = GLYPHS[class].to_vec();
    for _ in 0..CLUTTER {
        let (x, y) = (rng.random_range(-0.9..0.9), rng.random_range(-0.9..0.9));
        let a: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        strokes.push([x, y, x + 0.35 * a.cos(), y + 0.35 * a.sin()]);
    }
    let segs: Vec<Seg> = strokes
        .iter()
        .map(|g| {
            let p = |x: f64, y: f64| (half - 0.5 + ox + scale * (c * x - s * y), half - 0.5 + oy + scale * (s * x + c * y));
            let (a, b) = p(g[0], g[1]);
            let (d, e) = p(g[2], g[3]);
            [a, b, d, e]
        })
        .collect();
    let mut out = vec![0.0f32; size * size];
    for i in 0..size {
        for j in 0..size {
            let d = segs.iter().map(|sg| seg_distance(j as f64, i as f64, sg)).fold(f64::INFINITY, f64::min);
            let v = ink * (1.0 - (d - width).max(0.0)).max(0.0) + rng.random_range(0.0..noise);
            out[i * size + j] = v.clamp(0.0, 1.0) as f32;
        }
    }
    out
}

/// `n` glyph images with labels cycling through the classes, so every class
/// gets `n / 10` or one more.
pub fn synth_glyphs(n: usize, size: usize, seed: u64) -> Dataset {
    let mut data = Vec::with_capacity(n * size * size);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let class = i % CLASSES;
        let mut rng = ChaCha8Rng::seed_from_u64(item_seed(seed, i));
        data.extend(render_glyph(class, size, &mut rng));
        labels.push(class as u8);
    }
    let images = Tensor4::from_vec(n, 1, size, size, data).expect("sizes agree");
    Dataset { images, labels }
}
