//! Layer descriptors, stack validation and shape inference.

use std::fmt;
use std::str::FromStr;

use crate::conv::ConvGeometry;
use crate::error::{DrenError, Result};
use crate::tensor::GROUP;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LayerKind {
    Cycle,
    Isotonic,
    Decycle,
    Conv,
    Relu,
    Bias,
    SharedBias,
    BatchNorm,
    GroupBatchNorm,
    Dropout,
    MaxPool,
    GroupPoolMax,
    GroupPoolMean,
    GlobalAvgPool,
}

impl LayerKind {
    pub const ALL: [LayerKind; 14] = [
        LayerKind::Cycle,
        LayerKind::Isotonic,
        LayerKind::Decycle,
        LayerKind::Conv,
        LayerKind::Relu,
        LayerKind::Bias,
        LayerKind::SharedBias,
        LayerKind::BatchNorm,
        LayerKind::GroupBatchNorm,
        LayerKind::Dropout,
        LayerKind::MaxPool,
        LayerKind::GroupPoolMax,
        LayerKind::GroupPoolMean,
        LayerKind::GlobalAvgPool,
    ];

    /// Stable one-byte code used by the checkpoint format.
    pub fn code(self) -> u8 {
        Self::ALL.iter().position(|&k| k == self).expect("listed") as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(code as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            LayerKind::Cycle => "cycle",
            LayerKind::Isotonic => "isotonic",
            LayerKind::Decycle => "decycle",
            LayerKind::Conv => "conv",
            LayerKind::Relu => "relu",
            LayerKind::Bias => "bias",
            LayerKind::SharedBias => "shared_bias",
            LayerKind::BatchNorm => "batchnorm",
            LayerKind::GroupBatchNorm => "group_batchnorm",
            LayerKind::Dropout => "dropout",
            LayerKind::MaxPool => "max_pool",
            LayerKind::GroupPoolMax => "group_pool_max",
            LayerKind::GroupPoolMean => "group_pool_mean",
            LayerKind::GlobalAvgPool => "global_avg_pool",
        }
    }

    pub fn is_tied(self) -> bool {
        matches!(self, LayerKind::Cycle | LayerKind::Isotonic | LayerKind::Decycle)
    }

    pub fn is_trainable(self) -> bool {
        matches!(
            self,
            LayerKind::Cycle
                | LayerKind::Isotonic
                | LayerKind::Decycle
                | LayerKind::Conv
                | LayerKind::Bias
                | LayerKind::SharedBias
                | LayerKind::BatchNorm
                | LayerKind::GroupBatchNorm
        )
    }

    fn has_kernel(self) -> bool {
        matches!(
            self,
            LayerKind::Cycle | LayerKind::Isotonic | LayerKind::Decycle | LayerKind::Conv | LayerKind::MaxPool
        )
    }
}

impl fmt::Display for LayerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LayerKind {
    type Err = DrenError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| DrenError::Model(format!("unknown layer kind `{s}`")))
    }
}

/// One entry of a layer stack.
///
/// `width` is the number of output groups for cycle/isotonic layers and the
/// number of output channels for decycle/conv layers; other kinds ignore it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerSpec {
    pub kind: LayerKind,
    pub kernel: usize,
    pub stride: usize,
    pub pad: usize,
    pub width: usize,
    /// Drop probability, dropout only.
    pub rate: f64,
}

impl LayerSpec {
    pub fn new(kind: LayerKind) -> Self {
        Self { kind, kernel: 0, stride: 1, pad: 0, width: 0, rate: 0.0 }
    }

    fn conv_like(kind: LayerKind, width: usize, kernel: usize) -> Self {
        Self { kernel, width, ..Self::new(kind) }
    }

    pub fn cycle(groups: usize, kernel: usize) -> Self {
        Self::conv_like(LayerKind::Cycle, groups, kernel)
    }
    pub fn isotonic(groups: usize, kernel: usize) -> Self {
        Self::conv_like(LayerKind::Isotonic, groups, kernel)
    }
    pub fn decycle(channels: usize, kernel: usize) -> Self {
        Self::conv_like(LayerKind::Decycle, channels, kernel)
    }
    pub fn conv(channels: usize, kernel: usize) -> Self {
        Self::conv_like(LayerKind::Conv, channels, kernel)
    }
    pub fn relu() -> Self {
        Self::new(LayerKind::Relu)
    }
    pub fn bias() -> Self {
        Self::new(LayerKind::Bias)
    }
    pub fn shared_bias() -> Self {
        Self::new(LayerKind::SharedBias)
    }
    pub fn batchnorm() -> Self {
        Self::new(LayerKind::BatchNorm)
    }
    pub fn group_batchnorm() -> Self {
        Self::new(LayerKind::GroupBatchNorm)
    }
    pub fn dropout(rate: f64) -> Self {
        Self { rate, ..Self::new(LayerKind::Dropout) }
    }
    pub fn max_pool(kernel: usize, stride: usize) -> Self {
        Self { kernel, stride, ..Self::new(LayerKind::MaxPool) }
    }
    pub fn group_pool_max() -> Self {
        Self::new(LayerKind::GroupPoolMax)
    }
    pub fn group_pool_mean() -> Self {
        Self::new(LayerKind::GroupPoolMean)
    }
    pub fn global_avg_pool() -> Self {
        Self::new(LayerKind::GlobalAvgPool)
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.stride = stride;
        self
    }

    pub fn with_pad(mut self, pad: usize) -> Self {
        self.pad = pad;
        self
    }

    pub fn geometry(&self) -> ConvGeometry {
        ConvGeometry::new(self.stride, self.pad)
    }
}

impl fmt::Display for LayerSpec {
    /// Same token syntax accepted by [`LayerSpec::from_str`].
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind)?;
        match self.kind {
            LayerKind::Cycle | LayerKind::Isotonic | LayerKind::Decycle | LayerKind::Conv => {
                write!(f, " w={} k={}", self.width, self.kernel)?;
                if self.stride != 1 {
                    write!(f, " s={}", self.stride)?;
                }
                if self.pad != 0 {
                    write!(f, " p={}", self.pad)?;
                }
            }
            LayerKind::MaxPool => write!(f, " k={} s={}", self.kernel, self.stride)?,
            LayerKind::Dropout => write!(f, " rate={}", self.rate)?,
            _ => {}
        }
        Ok(())
    }
}

impl FromStr for LayerSpec {
    type Err = DrenError;

    /// `kind [w=N] [k=N] [s=N] [p=N] [rate=X]`, e.g. `isotonic w=5 k=3`.
    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.split_whitespace();
        let kind: LayerKind = parts
            .next()
            .ok_or_else(|| DrenError::Model("empty layer token".into()))?
            .parse()?;
        let mut spec = LayerSpec::new(kind);
        if kind == LayerKind::MaxPool {
            spec.kernel = 2;
            spec.stride = 2;
        }
        for part in parts {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| DrenError::Model(format!("expected key=value in `{s}`, got `{part}`")))?;
            let int = || {
                value
                    .parse::<usize>()
                    .map_err(|_| DrenError::Model(format!("bad integer `{value}` for `{key}` in `{s}`")))
            };
            match key {
                "w" => spec.width = int()?,
                "k" => spec.kernel = int()?,
                "s" => spec.stride = int()?,
                "p" => spec.pad = int()?,
                "rate" => {
                    spec.rate = value
                        .parse()
                        .map_err(|_| DrenError::Model(format!("bad rate `{value}` in `{s}`")))?
                }
                _ => return Err(DrenError::Model(format!("unknown layer option `{key}` in `{s}`"))),
            }
        }
        Ok(spec)
    }
}

/// Input shape plus ordered layer stack.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    /// `(channels, height, width)` of one input item.
    pub input: [usize; 3],
    pub layers: Vec<LayerSpec>,
}

/// Layer whose geometry breaks quarter-turn equivariance for the spatial
/// size it receives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StrideWarning {
    pub layer: usize,
    pub input_size: usize,
    pub stride: usize,
    pub kernel: usize,
}

impl fmt::Display for StrideWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "layer {}: input size {} is not k*{} + {}; rotation equivariance is lost",
            self.layer, self.input_size, self.stride, self.kernel
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Region {
    Plain,
    Grouped,
    Collapsed,
}

/// Result of validating a stack: per-layer output shapes and warnings.
#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    pub shapes: Vec<[usize; 3]>,
    pub warnings: Vec<StrideWarning>,
}

impl ModelSpec {
    pub fn new(input: [usize; 3], layers: Vec<LayerSpec>) -> Self {
        Self { input, layers }
    }

    pub fn is_equivariant(&self) -> bool {
        self.layers.iter().any(|l| l.kind.is_tied() || matches!(l.kind, LayerKind::GroupPoolMax | LayerKind::GroupPoolMean))
    }

    /// Checks the ordering rules and infers every layer's output shape.
    ///
    /// Ordering: when any grouped layer is present the first trainable layer
    /// is a cycle layer, isotonic and group-aware layers sit between it and
    /// exactly one decycle or cross-channel pool, and only plain layers
    /// follow.
    pub fn plan(&self) -> Result<Plan> {
        if self.layers.is_empty() {
            return Err(DrenError::Model("empty layer stack".into()));
        }
        let [mut c, mut h, mut w] = self.input;
        if c == 0 || h == 0 || w == 0 {
            return Err(DrenError::Model(format!("invalid input shape {:?}", self.input)));
        }
        let equivariant = self.is_equivariant();
        let mut region = Region::Plain;
        let mut shapes = Vec::with_capacity(self.layers.len());
        let mut warnings = Vec::new();
        let mut seen_trainable = false;
        let err = |i: usize, l: &LayerSpec, msg: &str| DrenError::Model(format!("layer {i} ({}): {msg}", l.kind));

        for (i, l) in self.layers.iter().enumerate() {
            if l.kind.has_kernel() && l.kernel == 0 {
                return Err(err(i, l, "kernel size must be positive"));
            }
            if l.stride == 0 {
                return Err(err(i, l, "stride must be positive"));
            }
            let grouped_only = matches!(
                l.kind,
                LayerKind::Isotonic
                    | LayerKind::Decycle
                    | LayerKind::SharedBias
                    | LayerKind::GroupBatchNorm
                    | LayerKind::GroupPoolMax
                    | LayerKind::GroupPoolMean
            );
            if grouped_only && region != Region::Grouped {
                return Err(err(i, l, "must follow a cycle layer and precede the decycle/cross-channel pool"));
            }
            match l.kind {
                LayerKind::Cycle => {
                    if region != Region::Plain || seen_trainable {
                        return Err(err(i, l, "the cycle layer must be the first trainable layer"));
                    }
                }
                LayerKind::Conv | LayerKind::Bias | LayerKind::BatchNorm => {
                    if region == Region::Grouped {
                        return Err(err(i, l, "untied layer inside the grouped section"));
                    }
                    if equivariant && region == Region::Plain {
                        return Err(err(i, l, "trainable layer before the cycle layer"));
                    }
                }
                _ => {}
            }
            if l.kind.is_tied() || l.kind == LayerKind::Conv {
                if l.width == 0 {
                    return Err(err(i, l, "width must be positive"));
                }
                let g = l.geometry();
                let oh = g.output_size(h, l.kernel).map_err(|e| err(i, l, &e.to_string()))?;
                let ow = g.output_size(w, l.kernel).map_err(|e| err(i, l, &e.to_string()))?;
                if equivariant && region != Region::Collapsed && !g.preserves_equivariance(h, l.kernel) {
                    warnings.push(StrideWarning { layer: i, input_size: h + 2 * l.pad, stride: l.stride, kernel: l.kernel });
                }
                if matches!(l.kind, LayerKind::Isotonic | LayerKind::Decycle) && c % GROUP != 0 {
                    return Err(err(i, l, "input channels not divisible by 4"));
                }
                c = match l.kind {
                    LayerKind::Cycle | LayerKind::Isotonic => l.width * GROUP,
                    _ => l.width,
                };
                h = oh;
                w = ow;
            }
            match l.kind {
                LayerKind::Cycle => region = Region::Grouped,
                LayerKind::Decycle => region = Region::Collapsed,
                LayerKind::GroupPoolMax | LayerKind::GroupPoolMean => {
                    region = Region::Collapsed;
                    c /= GROUP;
                }
                LayerKind::MaxPool => {
                    let g = ConvGeometry::new(l.stride, 0);
                    let oh = g.output_size(h, l.kernel).map_err(|e| err(i, l, &e.to_string()))?;
                    let ow = g.output_size(w, l.kernel).map_err(|e| err(i, l, &e.to_string()))?;
                    if equivariant && region != Region::Collapsed && !g.preserves_equivariance(h, l.kernel) {
                        warnings.push(StrideWarning { layer: i, input_size: h, stride: l.stride, kernel: l.kernel });
                    }
                    h = oh;
                    w = ow;
                }
                LayerKind::GlobalAvgPool => {
                    h = 1;
                    w = 1;
                }
                LayerKind::Dropout => {
                    if !(0.0..1.0).contains(&l.rate) {
                        return Err(err(i, l, "dropout rate must be in [0, 1)"));
                    }
                }
                _ => {}
            }
            seen_trainable |= l.kind.is_trainable();
            shapes.push([c, h, w]);
        }
        if region == Region::Grouped {
            return Err(DrenError::Model(
                "grouped section never collapsed: add a decycle layer or cross-channel pool".into(),
            ));
        }
        Ok(Plan { shapes, warnings })
    }
}

/// Ready-made stacks used by the tests, the CLI and the benchmarks.
pub mod presets {
    use super::{LayerSpec, ModelSpec};

    /// Cycle, two isotonic layers and a decycle layer to `classes` maps,
    /// globally pooled. Expanded width `4 * groups`.
    pub fn dren_small(input: [usize; 3], groups: usize, classes: usize) -> ModelSpec {
        ModelSpec::new(
            input,
            vec![
                LayerSpec::cycle(groups, 3),
                LayerSpec::shared_bias(),
                LayerSpec::relu(),
                LayerSpec::isotonic(groups, 3),
                LayerSpec::shared_bias(),
                LayerSpec::relu(),
                LayerSpec::max_pool(2, 2),
                LayerSpec::isotonic(groups, 3),
                LayerSpec::shared_bias(),
                LayerSpec::relu(),
                LayerSpec::decycle(classes, 3),
                LayerSpec::bias(),
                LayerSpec::global_avg_pool(),
            ],
        )
    }

    /// Cycle, two isotonic layers and a decycle layer with ReLUs between,
    /// globally pooled; no pooling or bias, for gradient checks.
    pub fn dren_chain(input: [usize; 3], groups: usize, classes: usize) -> ModelSpec {
        chain(input, LayerSpec::cycle(groups, 3), LayerSpec::isotonic(groups, 3), LayerSpec::decycle(classes, 3))
    }

    /// [`dren_chain`] with untied convolutions of `width` channels.
    pub fn plain_chain(input: [usize; 3], width: usize, classes: usize) -> ModelSpec {
        chain(input, LayerSpec::conv(width, 3), LayerSpec::conv(width, 3), LayerSpec::conv(classes, 3))
    }

    fn chain(input: [usize; 3], first: LayerSpec, mid: LayerSpec, last: LayerSpec) -> ModelSpec {
        let relu = LayerSpec::relu();
        ModelSpec::new(input, vec![first, relu, mid, relu, mid, relu, last, LayerSpec::global_avg_pool()])
    }

    /// Untied counterpart of [`dren_small`] with the same depth, kernels and
    /// spatial sizes and `width` channels per hidden layer.
    pub fn plain_small(input: [usize; 3], width: usize, classes: usize) -> ModelSpec {
        ModelSpec::new(
            input,
            vec![
                LayerSpec::conv(width, 3),
                LayerSpec::bias(),
                LayerSpec::relu(),
                LayerSpec::conv(width, 3),
                LayerSpec::bias(),
                LayerSpec::relu(),
                LayerSpec::max_pool(2, 2),
                LayerSpec::conv(width, 3),
                LayerSpec::bias(),
                LayerSpec::relu(),
                LayerSpec::conv(classes, 3),
                LayerSpec::bias(),
                LayerSpec::global_avg_pool(),
            ],
        )
    }

    /// Seven-layer plain network on 28x28 inputs: six 3x3 layers of `width`
    /// channels (max pool after the second) and a final 4x4 layer to the
    /// classes; every hidden layer carries bias, ReLU, dropout and batch norm.
    pub fn z2cnn_plain(width: usize, classes: usize) -> ModelSpec {
        let mut layers = Vec::new();
        for i in 0..6 {
            layers.push(LayerSpec::conv(width, 3));
            layers.push(LayerSpec::bias());
            layers.push(LayerSpec::relu());
            layers.push(LayerSpec::dropout(0.3));
            layers.push(LayerSpec::batchnorm());
            if i == 1 {
                layers.push(LayerSpec::max_pool(2, 2));
            }
        }
        layers.push(LayerSpec::conv(classes, 4));
        layers.push(LayerSpec::bias());
        layers.push(LayerSpec::global_avg_pool());
        ModelSpec::new([1, 28, 28], layers)
    }

    /// [`z2cnn_plain`] with the first layer a cycle layer, the middle five
    /// isotonic and the last a decycle layer (`groups` groups per hidden
    /// layer).
    pub fn z2cnn_dren(groups: usize, classes: usize) -> ModelSpec {
        let mut layers = Vec::new();
        for i in 0..6 {
            layers.push(if i == 0 { LayerSpec::cycle(groups, 3) } else { LayerSpec::isotonic(groups, 3) });
            layers.push(LayerSpec::shared_bias());
            layers.push(LayerSpec::relu());
            layers.push(LayerSpec::dropout(0.3));
            layers.push(LayerSpec::group_batchnorm());
            if i == 1 {
                layers.push(LayerSpec::max_pool(2, 2));
            }
        }
        layers.push(LayerSpec::decycle(classes, 4));
        layers.push(LayerSpec::bias());
        layers.push(LayerSpec::global_avg_pool());
        ModelSpec::new([1, 28, 28], layers)
    }

    /// Timing variant of [`z2cnn_dren`]: the last layer is isotonic with
    /// `classes` groups followed by a cross-channel mean pool.
    pub fn z2cnn_dren_meanpool(groups: usize, classes: usize) -> ModelSpec {
        let mut spec = z2cnn_dren(groups, classes);
        let n = spec.layers.len();
        spec.layers[n - 3] = LayerSpec::isotonic(classes, 4);
        spec.layers[n - 2] = LayerSpec::group_pool_mean();
        spec
    }

    /// Reduced network-in-network on 3x32x32 inputs with the first four
    /// convolutions replaced by cycle, two isotonic and a decycle layer.
    pub fn nin_dren(classes: usize) -> ModelSpec {
        ModelSpec::new(
            [3, 32, 32],
            vec![
                LayerSpec::cycle(12, 5),
                LayerSpec::shared_bias(),
                LayerSpec::relu(),
                LayerSpec::isotonic(10, 1),
                LayerSpec::shared_bias(),
                LayerSpec::relu(),
                LayerSpec::isotonic(6, 1),
                LayerSpec::shared_bias(),
                LayerSpec::relu(),
                LayerSpec::max_pool(2, 2),
                LayerSpec::isotonic(12, 5).with_pad(2),
                LayerSpec::shared_bias(),
                LayerSpec::relu(),
                LayerSpec::decycle(48, 1),
                LayerSpec::bias(),
                LayerSpec::relu(),
                LayerSpec::conv(48, 1),
                LayerSpec::bias(),
                LayerSpec::relu(),
                LayerSpec::max_pool(2, 2),
                LayerSpec::conv(48, 3),
                LayerSpec::bias(),
                LayerSpec::relu(),
                LayerSpec::conv(classes, 1),
                LayerSpec::bias(),
                LayerSpec::global_avg_pool(),
            ],
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kind_codes_round_trip() {
        for k in LayerKind::ALL {
            assert_eq!(LayerKind::from_code(k.code()), Some(k));
            assert_eq!(k.name().parse::<LayerKind>().unwrap(), k);
        }
        assert_eq!(LayerKind::from_code(200), None);
    }

    #[test]
    fn layer_tokens_round_trip() {
        for l in [
            LayerSpec::cycle(5, 3),
            LayerSpec::isotonic(2, 3).with_stride(2).with_pad(1),
            LayerSpec::max_pool(2, 2),
            LayerSpec::dropout(0.25),
            LayerSpec::global_avg_pool(),
        ] {
            assert_eq!(l.to_string().parse::<LayerSpec>().unwrap(), l);
        }
        assert!("isotonic w=x".parse::<LayerSpec>().is_err());
        assert!("isotonic q=3".parse::<LayerSpec>().is_err());
        assert!("spiral".parse::<LayerSpec>().is_err());
    }

    #[test]
    fn empty_stack_rejected() {
        assert!(ModelSpec::new([1, 8, 8], vec![]).plan().is_err());
    }

    #[test]
    fn ordering_rules() {
        let bad = [
            vec![LayerSpec::isotonic(2, 3), LayerSpec::decycle(2, 3)],
            vec![LayerSpec::conv(4, 3), LayerSpec::cycle(2, 3), LayerSpec::decycle(2, 3)],
            vec![LayerSpec::cycle(2, 3), LayerSpec::isotonic(2, 3)],
            vec![LayerSpec::cycle(2, 3), LayerSpec::conv(4, 1), LayerSpec::decycle(2, 1)],
            vec![LayerSpec::cycle(2, 3), LayerSpec::decycle(2, 1), LayerSpec::isotonic(1, 1)],
            vec![LayerSpec::cycle(2, 3), LayerSpec::bias(), LayerSpec::decycle(2, 1)],
            vec![LayerSpec::conv(4, 3), LayerSpec::shared_bias()],
        ];
        for layers in bad {
            assert!(ModelSpec::new([1, 9, 9], layers.clone()).plan().is_err(), "{layers:?}");
        }
        let ok = ModelSpec::new(
            [1, 9, 9],
            vec![
                LayerSpec::cycle(2, 3),
                LayerSpec::isotonic(3, 3),
                LayerSpec::group_pool_max(),
                LayerSpec::conv(4, 1),
                LayerSpec::global_avg_pool(),
            ],
        );
        let plan = ok.plan().unwrap();
        assert_eq!(plan.shapes, vec![[8, 7, 7], [12, 5, 5], [3, 5, 5], [4, 5, 5], [4, 1, 1]]);
    }

    #[test]
    fn stride_violations_warn() {
        let spec = ModelSpec::new(
            [1, 8, 8],
            vec![LayerSpec::cycle(1, 3).with_stride(2), LayerSpec::decycle(2, 1), LayerSpec::global_avg_pool()],
        );
        let plan = spec.plan().unwrap();
        assert_eq!(plan.warnings, vec![StrideWarning { layer: 0, input_size: 8, stride: 2, kernel: 3 }]);
        let spec = ModelSpec::new([1, 9, 9], spec.layers);
        assert!(spec.plan().unwrap().warnings.is_empty());
    }

    #[test]
    fn presets_are_valid() {
        use presets::*;
        for spec in [
            dren_small([1, 16, 16], 5, 10),
            plain_small([1, 16, 16], 10, 10),
            z2cnn_plain(20, 10),
            z2cnn_dren(10, 10),
            z2cnn_dren_meanpool(10, 10),
            nin_dren(10),
        ] {
            let plan = spec.plan().unwrap();
            assert_eq!(*plan.shapes.last().unwrap(), [10, 1, 1]);
            assert!(plan.warnings.is_empty(), "{:?}", plan.warnings);
        }
    }
}
