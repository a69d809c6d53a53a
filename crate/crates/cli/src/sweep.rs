//! Seven-layer stacks in which the first `depth` convolutions are tied.

use dren::network::{LayerSpec, ModelSpec};

pub const SWEEP_LAYERS: usize = 7;

/// 3x3 padded convolutions with max pools after the second and fourth.
/// Depth 1 is a cycle layer followed by a cross-channel mean pool; depth
/// `d >= 2` is cycle, `d - 2` isotonic layers and a decycle layer. Plain
/// layers get `2 * groups` channels.
pub fn sweep_spec(depth: usize, input: [usize; 3], groups: usize, classes: usize) -> ModelSpec {
    assert!((1..=SWEEP_LAYERS).contains(&depth), "depth must be in 1..=7");
    let width = 2 * groups;
    let mut layers = Vec::new();
    for i in 0..SWEEP_LAYERS {
        let last = i + 1 == SWEEP_LAYERS;
        let out = if last { classes } else { width };
        let (conv, grouped) = if i == 0 {
            (LayerSpec::cycle(groups, 3), true)
        } else if i + 1 < depth {
            (LayerSpec::isotonic(groups, 3), true)
        } else if i + 1 == depth {
            (LayerSpec::decycle(out, 3), false)
        } else {
            (LayerSpec::conv(out, 3), false)
        };
        layers.push(conv.with_pad(1));
        if depth == 1 && i == 0 {
            layers.push(LayerSpec::shared_bias());
            layers.push(LayerSpec::relu());
            layers.push(LayerSpec::group_pool_mean());
        } else if last {
            layers.push(LayerSpec::bias());
        } else {
            layers.push(if grouped { LayerSpec::shared_bias() } else { LayerSpec::bias() });
            layers.push(LayerSpec::relu());
        }
        if i == 1 || i == 3 {
            layers.push(LayerSpec::max_pool(2, 2));
        }
    }
    layers.push(LayerSpec::global_avg_pool());
    ModelSpec::new(input, layers)
}

/// Parses `a..b` (inclusive) or a single depth.
pub fn parse_depths(s: &str) -> Option<Vec<usize>> {
    let (lo, hi) = match s.split_once("..") {
        Some((a, b)) => (a.trim().parse().ok()?, b.trim().parse().ok()?),
        None => {
            let d = s.trim().parse().ok()?;
            (d, d)
        }
    };
    (1 <= lo && lo <= hi && hi <= SWEEP_LAYERS).then(|| (lo..=hi).collect())
}
