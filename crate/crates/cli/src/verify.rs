//! Randomised property suites run by `dren verify`.

use std::fmt;
use std::str::FromStr;

use dren::conv::ConvGeometry;
use dren::eqlayers::{diagonal_shift_rotate, shift_rotate, stride_equivariance_gap, BankAxis, CycleParams, DecycleParams, EquivariantParams, IsotonicParams, TiedFilter};
use dren::network::{finite_diff_check, presets, LayerSpec, Model, ModelSpec, Strategy};
use dren::oracle::{compare_paths, default_tolerance};
use dren::tensor::{max_abs_diff, max_rel_diff, GroupLayout, Tensor4};
use dren::{stride_preserves_equivariance, Scalar};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Layers,
    Oracle,
    Gradients,
    Stride,
    All,
}

impl FromStr for Suite {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "layers" => Suite::Layers,
            "oracle" => Suite::Oracle,
            "gradients" => Suite::Gradients,
            "stride" => Suite::Stride,
            "all" => Suite::All,
            _ => return Err(CliError::Usage(format!("unknown suite `{s}`"))),
        })
    }
}

/// Outcome of one property over all its trials.
#[derive(Debug, Clone, PartialEq)]
pub struct PropertyResult {
    pub name: String,
    pub trials: usize,
    /// Worst deviation seen; for properties that must fail, the smallest.
    pub deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl fmt::Display for PropertyResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<38} trials={:<4} deviation={:.3e} tolerance={:.1e}",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.trials,
            self.deviation,
            self.tolerance
        )
    }
}

struct Tally {
    name: String,
    trials: usize,
    worst: f64,
    tolerance: f64,
}

impl Tally {
    fn new(name: impl Into<String>, tolerance: f64) -> Self {
        Self { name: name.into(), trials: 0, worst: 0.0, tolerance }
    }

    fn record(&mut self, d: f64) {
        self.trials += 1;
        self.worst = if d.is_nan() { f64::INFINITY } else { self.worst.max(d) };
    }

    fn finish(self) -> PropertyResult {
        PropertyResult { pass: self.worst <= self.tolerance, name: self.name, trials: self.trials, deviation: self.worst, tolerance: self.tolerance }
    }
}

fn rotate_shift<T: Scalar>(x: &Tensor4<T>) -> Result<Tensor4<T>> {
    Ok(x.rotate90(1).cyclic_permute(GroupLayout::for_channels(x.c())?, 1)?)
}

fn kernel<R: Rng>(r: &mut R) -> usize {
    [1, 3][r.random_range(0..2)]
}

fn layer_identities<T: Scalar>(trials: usize, r: &mut ChaCha8Rng, out: &mut Vec<PropertyResult>) -> Result<()> {
    let tol = default_tolerance::<T>();
    let suffix = if tol < 1e-10 { "f64" } else { "f32" };
    let g0 = ConvGeometry::default();
    let mut cyc = Tally::new(format!("cycle R -> RP ({suffix})"), tol);
    let mut iso = Tally::new(format!("isotonic RP -> RP ({suffix})"), tol);
    let mut dec = Tally::new(format!("decycle RP -> R ({suffix})"), tol);
    let mut e2e = Tally::new(format!("stack R -> R ({suffix})"), tol);
    for _ in 0..trials {
        let (g, k, size) = (r.random_range(1..4), kernel(r), r.random_range(4..13));
        let c_in = r.random_range(1..3);
        let p = CycleParams::<T>::init(c_in, g, k, r);
        let x = Tensor4::<T>::random([2, c_in, size, size], -1.0, 1.0, r);
        cyc.record(max_rel_diff(&p.forward(&x.rotate90(1), g0)?, &rotate_shift(&p.forward(&x, g0)?)?));

        let go = r.random_range(1..4);
        let p = IsotonicParams::<T>::init(g, go, k, r);
        let h = Tensor4::<T>::random([2, 4 * g, size, size], -1.0, 1.0, r);
        iso.record(max_rel_diff(&p.forward(&rotate_shift(&h)?, g0)?, &rotate_shift(&p.forward(&h, g0)?)?));

        let p = DecycleParams::<T>::init(g, go, k, r);
        dec.record(max_rel_diff(&p.forward(&rotate_shift(&h)?, g0)?, &p.forward(&h, g0)?.rotate90(1)));

        let spec = ModelSpec::new(
            [c_in, size + 2 * (k - 1), size + 2 * (k - 1)],
            vec![
                LayerSpec::cycle(g, k),
                LayerSpec::shared_bias(),
                LayerSpec::relu(),
                LayerSpec::isotonic(go, k),
                LayerSpec::relu(),
                LayerSpec::decycle(3, 1),
            ],
        );
        let m = Model::<T>::build(spec.clone(), r.random())?;
        let [c, hh, ww] = spec.input;
        let x = Tensor4::<T>::random([2, c, hh, ww], -1.0, 1.0, r);
        e2e.record(max_rel_diff(&m.predict(&x.rotate90(1))?, &m.predict(&x)?.rotate90(1)));
    }
    out.extend([cyc.finish(), iso.finish(), dec.finish(), e2e.finish()]);
    Ok(())
}

fn fixed_points(trials: usize, r: &mut ChaCha8Rng, out: &mut Vec<PropertyResult>) -> Result<()> {
    let mut iso = Tally::new("isotonic bank W = D R(W)", 0.0);
    let mut dec = Tally::new("decycle bank W = P R(W)", 0.0);
    for _ in 0..trials {
        let (a, b, k) = (r.random_range(1..4), r.random_range(1..4), r.random_range(1..6));
        let w = IsotonicParams::<f64>::init(a, b, k, r).expand();
        iso.record(max_abs_diff(&diagonal_shift_rotate(&w)?, &w));
        let w = DecycleParams::<f64>::init(a, b, k, r).expand();
        dec.record(max_abs_diff(&shift_rotate(&w, BankAxis::Input)?, &w));
    }
    out.extend([iso.finish(), dec.finish()]);
    Ok(())
}

fn oracle<T: Scalar>(trials: usize, r: &mut ChaCha8Rng, out: &mut Vec<PropertyResult>) -> Result<()> {
    let tol = default_tolerance::<T>();
    let suffix = if tol < 1e-10 { "f64" } else { "f32" };
    let mut tallies = ["cycle", "isotonic", "decycle"].map(|n| Tally::new(format!("oracle {n} ({suffix})"), tol));
    for t in 0..trials {
        let (g, k, size) = (r.random_range(1..3), kernel(r), [5, 8, 9][t % 3]);
        let c_in = r.random_range(1..4);
        let params = [
            EquivariantParams::Cycle(CycleParams::<T>::init(c_in, g, k, r)),
            EquivariantParams::Isotonic(IsotonicParams::init(g, r.random_range(1..3), k, r)),
            EquivariantParams::Decycle(DecycleParams::init(g, r.random_range(1..4), k, r)),
        ];
        for (tally, p) in tallies.iter_mut().zip(&params) {
            let c = if matches!(p, EquivariantParams::Cycle(_)) { c_in } else { 4 * g };
            let x = Tensor4::<T>::random([2, c, size, size], -1.0, 1.0, r);
            tally.record(compare_paths(p, &x, ConvGeometry::default(), tol)?.max_rel_diff);
        }
    }
    out.extend(tallies.map(Tally::finish));
    Ok(())
}

fn gradients(trials: usize, r: &mut ChaCha8Rng, out: &mut Vec<PropertyResult>) -> Result<()> {
    let draws = (trials / 10).max(1);
    let mut tied = Tally::new("tied gradients vs central diff", 1e-4);
    let mut plain = Tally::new("plain gradients vs central diff", 1e-4);
    for _ in 0..draws {
        let labels = [r.random_range(0..4), r.random_range(0..4)];
        let m = Model::<f64>::build(presets::dren_chain([1, 9, 9], 2, 4), r.random())?;
        let x = Tensor4::random([2, 1, 9, 9], 0.0, 1.0, r);
        tied.record(finite_diff_check(&m, &x, &labels, 1e-5, true)?.max_rel_error);

        let m = Model::<f64>::build(presets::plain_chain([1, 9, 9], 8, 4), r.random())?;
        plain.record(finite_diff_check(&m, &x, &labels, 1e-5, false)?.max_rel_error);
    }
    out.extend([tied.finish(), plain.finish()]);
    Ok(())
}

fn stride(trials: usize, r: &mut ChaCha8Rng, out: &mut Vec<PropertyResult>) -> Result<()> {
    let draws = (trials / 20).max(1);
    let mut holds = Tally::new("stride 2: equivariant when allowed", 1e-12);
    let mut breaks = PropertyResult { name: "stride 2: broken otherwise".into(), trials: 0, deviation: f64::INFINITY, tolerance: 1e-3, pass: true };
    for k in [2, 3] {
        for size in 3..=12 {
            for _ in 0..draws {
                let d = stride_equivariance_gap(size, 2, k, r.random())?;
                if stride_preserves_equivariance(size, 2, k) {
                    holds.record(d);
                } else {
                    breaks.trials += 1;
                    breaks.deviation = breaks.deviation.min(d);
                }
            }
        }
    }
    breaks.pass = breaks.deviation > breaks.tolerance;
    out.extend([holds.finish(), breaks]);
    Ok(())
}

pub fn run_suite(suite: Suite, trials: usize, seed: u64) -> Result<Vec<PropertyResult>> {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let all = suite == Suite::All;
    if all || suite == Suite::Layers {
        layer_identities::<f64>(trials, &mut r, &mut out)?;
        layer_identities::<f32>(trials, &mut r, &mut out)?;
        fixed_points(trials, &mut r, &mut out)?;
    }
    if all || suite == Suite::Oracle {
        oracle::<f64>(trials, &mut r, &mut out)?;
        oracle::<f32>(trials, &mut r, &mut out)?;
        let m = Model::<f32>::build(presets::dren_small([1, 16, 16], 2, 4), r.random())?;
        let x = Tensor4::random([2, 1, 16, 16], 0.0, 1.0, &mut r);
        let mut t = Tally::new("model strategies agree (f32)", default_tolerance::<f32>());
        t.record(max_rel_diff(&m.forward_with(&x, Strategy::RotateFeatureMaps)?, &m.forward_with(&x, Strategy::RotateFilters)?));
        out.push(t.finish());
    }
    if all || suite == Suite::Gradients {
        gradients(trials, &mut r, &mut out)?;
    }
    if all || suite == Suite::Stride {
        stride(trials, &mut r, &mut out)?;
    }
    Ok(out)
}
