//! Analytic memory costs of the two ways to realise the tied layers, and a
//! wall-clock comparison of their forward passes.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{DrenError, Result};
use crate::network::{Model, ModelSpec, Strategy};
use crate::oracle::default_tolerance;
use crate::tensor::{max_rel_diff, Tensor4};

/// Geometry of one convolution: batch, channels, kernel and input size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerGeometry {
    pub n: u64,
    pub c_in: u64,
    pub c_out: u64,
    pub k: u64,
    pub w: u64,
    pub h: u64,
}

impl LayerGeometry {
    pub fn new(n: u64, c_in: u64, c_out: u64, k: u64, w: u64, h: u64) -> Self {
        Self { n, c_in, c_out, k, w, h }
    }
}

/// Element counts held by each strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CostReport {
    pub strategy: Strategy,
    pub filters_cost: u64,
    pub feature_map_cost: u64,
    /// Feature map after the im2col expansion, which copies each input
    /// element `k * k` times.
    pub feature_map_gpu_cost: u64,
}

pub fn memory_model(g: LayerGeometry, strategy: Strategy) -> CostReport {
    let filters = g.c_in * g.c_out * g.k * g.k;
    let map = g.n * g.c_in * g.w * g.h;
    let (fm, mm) = match strategy {
        Strategy::RotateFilters => (4, 1),
        Strategy::RotateFeatureMaps => (1, 4),
    };
    CostReport {
        strategy,
        filters_cost: fm * filters,
        feature_map_cost: mm * map,
        feature_map_gpu_cost: mm * map * g.k * g.k,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingReport {
    pub strategy: Strategy,
    pub model: String,
    pub batch: usize,
    /// Seconds per trial, warmup excluded.
    pub seconds: Vec<f64>,
    pub median: f64,
    pub mean: f64,
    /// This row's median over the rotate-filters median; `NaN` until
    /// [`compare_strategies`] fills it in.
    pub ratio: f64,
}

fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}

fn setup(spec: &ModelSpec, batch: usize, seed: u64) -> Result<(Model<f32>, Tensor4<f32>)> {
    if !spec.layers.iter().any(|l| l.kind.is_tied()) {
        return Err(DrenError::Model("model has no tied layers to compare".into()));
    }
    let model = Model::<f32>::build(spec.clone(), seed)?;
    let [c, h, w] = spec.input;
    let x = Tensor4::random([batch, c, h, w], 0.0, 1.0, &mut ChaCha8Rng::seed_from_u64(seed ^ 0x5eed));
    Ok((model, x))
}

/// Checks that both strategies produce the same output on the timing batch.
pub fn gate(model: &Model<f32>, x: &Tensor4<f32>) -> Result<f64> {
    let a = model.forward_with(x, Strategy::RotateFilters)?;
    let b = model.forward_with(x, Strategy::RotateFeatureMaps)?;
    let diff = max_rel_diff(&b, &a);
    let tol = default_tolerance::<f32>();
    if !(diff <= tol) {
        return Err(DrenError::Gate(format!("strategies differ by {diff:e} (tolerance {tol:e})")));
    }
    Ok(diff)
}

fn time_model(model: &Model<f32>, x: &Tensor4<f32>, name: &str, strategy: Strategy, trials: usize) -> Result<TimingReport> {
    if trials < 3 {
        return Err(DrenError::Model(format!("need at least 3 trials, got {trials}")));
    }
    let mut seconds = Vec::with_capacity(trials);
    for t in 0..=trials {
        let start = Instant::now();
        let y = model.forward_with(x, strategy)?;
        let dt = start.elapsed().as_secs_f64();
        std::hint::black_box(y);
        if t > 0 {
            seconds.push(dt);
        }
    }
    let mean = seconds.iter().sum::<f64>() / trials as f64;
    Ok(TimingReport {
        strategy,
        model: name.to_string(),
        batch: x.n(),
        median: median(&seconds),
        mean,
        seconds,
        ratio: f64::NAN,
    })
}

/// Times one strategy on a fixed random batch after passing the gate.
pub fn time_forward(name: &str, spec: &ModelSpec, strategy: Strategy, batch: usize, trials: usize, seed: u64) -> Result<TimingReport> {
    let (model, x) = setup(spec, batch, seed)?;
    gate(&model, &x)?;
    time_model(&model, &x, name, strategy, trials)
}

/// Both strategies on identical parameters and input, ratios filled in.
pub fn compare_strategies(name: &str, spec: &ModelSpec, batch: usize, trials: usize, seed: u64) -> Result<[TimingReport; 2]> {
    let (model, x) = setup(spec, batch, seed)?;
    gate(&model, &x)?;
    let mut f = time_model(&model, &x, name, Strategy::RotateFilters, trials)?;
    let mut m = time_model(&model, &x, name, Strategy::RotateFeatureMaps, trials)?;
    f.ratio = 1.0;
    m.ratio = m.median / f.median;
    Ok([f, m])
}

pub const CSV_HEADER: &str = "strategy,model,batch,trials,median_s,mean_s,ratio";

pub fn report_csv(reports: &[TimingReport]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in reports {
        out.push_str(&format!(
            "{},{},{},{},{:.6},{:.6},{:.4}\n",
            r.strategy.name(),
            r.model,
            r.batch,
            r.seconds.len(),
            r.median,
            r.mean,
            r.ratio
        ));
    }
    out
}
