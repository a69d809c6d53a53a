//! Model assembly and the forward/backward passes over a layer stack.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::conv::{correlate2d, correlate2d_backward, max_pool2d_backward, max_pool2d_indexed};
use crate::eqlayers::{
    dropout_mask, global_spatial_avg_pool, global_spatial_avg_pool_backward, group_pool_backward, group_pool_indexed,
    grouped_bias_add, grouped_bias_grad, he_uniform, BatchNormCache, CycleParams, DecycleParams, EquivariantParams,
    GroupBatchNorm, GroupPool, IsotonicParams,
};
use crate::error::{shape_err, DrenError, Result};
use crate::oracle::oracle_forward;
use crate::scalar::Scalar;
use crate::tensor::{Filter4, GroupLayout, Tensor4, GROUP};

use super::spec::{LayerKind, LayerSpec, ModelSpec, StrideWarning};

/// Trainable state of one layer.
#[derive(Debug, Clone, PartialEq)]
pub enum LayerParams<T: Scalar> {
    None,
    /// Tied bases plus the expanded bank, rebuilt after every update.
    Tied { params: EquivariantParams<T>, expanded: Filter4<T> },
    Conv(Filter4<T>),
    /// Per-channel (`Bias`) or per-group (`SharedBias`) offsets.
    Bias(Vec<T>),
    Norm(GroupBatchNorm<T>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer<T: Scalar> {
    pub spec: LayerSpec,
    pub in_shape: [usize; 3],
    pub out_shape: [usize; 3],
    pub params: LayerParams<T>,
}

impl<T: Scalar> Layer<T> {
    /// Trainable tensors in declaration order.
    pub fn tensors(&self) -> Vec<&[T]> {
        match &self.params {
            LayerParams::None => vec![],
            LayerParams::Tied { params, .. } => vec![params.tied().base().data()],
            LayerParams::Conv(w) => vec![w.data()],
            LayerParams::Bias(b) => vec![b],
            LayerParams::Norm(bn) => vec![&bn.gamma, &bn.beta],
        }
    }

    fn tensors_mut(&mut self) -> Vec<&mut [T]> {
        match &mut self.params {
            LayerParams::None => vec![],
            LayerParams::Tied { params, .. } => vec![params.tied_mut().base_mut().data_mut()],
            LayerParams::Conv(w) => vec![w.data_mut()],
            LayerParams::Bias(b) => vec![b.as_mut_slice()],
            LayerParams::Norm(bn) => vec![bn.gamma.as_mut_slice(), bn.beta.as_mut_slice()],
        }
    }

    pub fn param_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    /// Trainable tensors followed by non-trainable state (running statistics).
    pub fn blob(&self) -> Vec<T> {
        let mut out: Vec<T> = self.tensors().concat();
        if let LayerParams::Norm(bn) = &self.params {
            out.extend_from_slice(&bn.running_mean);
            out.extend_from_slice(&bn.running_var);
        }
        out
    }

    pub fn blob_len(&self) -> usize {
        match &self.params {
            LayerParams::Norm(bn) => 4 * bn.units(),
            _ => self.param_count(),
        }
    }

    pub fn set_blob(&mut self, blob: &[T]) -> Result<()> {
        if blob.len() != self.blob_len() {
            return Err(shape_err("layer blob", self.blob_len(), blob.len()));
        }
        let mut rest = blob;
        for t in self.tensors_mut() {
            let (head, tail) = rest.split_at(t.len());
            t.copy_from_slice(head);
            rest = tail;
        }
        if let LayerParams::Norm(bn) = &mut self.params {
            let u = bn.units();
            bn.running_mean.copy_from_slice(&rest[..u]);
            bn.running_var.copy_from_slice(&rest[u..]);
        }
        self.refresh();
        Ok(())
    }

    /// Rebuilds the cached expanded bank of a tied layer.
    pub fn refresh(&mut self) {
        if let LayerParams::Tied { params, expanded } = &mut self.params {
            *expanded = params.tied().expand();
        }
    }
}

/// Forward-pass mode. Training mode uses batch statistics in batch norm and
/// samples dropout masks from `seed`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train { seed: u64 },
    Eval,
}

/// Which implementation of the tied layers a forward pass uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    /// Cached expanded filter banks.
    RotateFilters,
    /// Per-slot feature-map rotation with the unexpanded bases.
    RotateFeatureMaps,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::RotateFilters => "rotate_filters",
            Strategy::RotateFeatureMaps => "rotate_feature_maps",
        }
    }
}

#[derive(Debug, Clone)]
enum Aux<T: Scalar> {
    None,
    Pool(Vec<usize>),
    GroupPool(Vec<u8>),
    Norm(BatchNormCache<T>),
    Mask(Tensor4<T>),
}

/// Per-layer inputs and auxiliaries recorded by [`Model::forward`].
#[derive(Debug, Clone)]
pub struct Cache<T: Scalar> {
    inputs: Vec<Tensor4<T>>,
    aux: Vec<Aux<T>>,
}

/// Gradients shaped like [`Layer::tensors`] for every layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T: Scalar>(pub Vec<Vec<Vec<T>>>);

/// A built layer stack with parameters and momentum buffers.
#[derive(Debug, Clone, PartialEq)]
pub struct Model<T: Scalar = f32> {
    spec: ModelSpec,
    layers: Vec<Layer<T>>,
    velocity: Vec<Vec<Vec<T>>>,
    warnings: Vec<StrideWarning>,
}

fn mix_seed(seed: u64, layer: usize) -> u64 {
    // splitmix64 step
    let mut z = seed ^ (layer as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl<T: Scalar> Model<T> {
    /// Validates `spec` and initialises parameters from `seed`.
    pub fn build(spec: ModelSpec, seed: u64) -> Result<Self> {
        let plan = spec.plan()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layers = Vec::with_capacity(spec.layers.len());
        let mut in_shape = spec.input;
        for (l, &out_shape) in spec.layers.iter().zip(&plan.shapes) {
            let c_in = in_shape[0];
            let k = l.kernel;
            let params = match l.kind {
                LayerKind::Cycle => tied(EquivariantParams::Cycle(CycleParams::init(c_in, l.width, k, &mut rng))),
                LayerKind::Isotonic => {
                    tied(EquivariantParams::Isotonic(IsotonicParams::init(c_in / GROUP, l.width, k, &mut rng)))
                }
                LayerKind::Decycle => {
                    tied(EquivariantParams::Decycle(DecycleParams::init(c_in / GROUP, l.width, k, &mut rng)))
                }
                LayerKind::Conv => LayerParams::Conv(he_uniform([l.width, c_in, k, k], c_in * k * k, &mut rng)),
                LayerKind::Bias => LayerParams::Bias(vec![T::zero(); c_in]),
                LayerKind::SharedBias => LayerParams::Bias(vec![T::zero(); c_in / GROUP]),
                LayerKind::BatchNorm => LayerParams::Norm(GroupBatchNorm::new(c_in, 1)),
                LayerKind::GroupBatchNorm => LayerParams::Norm(GroupBatchNorm::new(c_in / GROUP, GROUP)),
                _ => LayerParams::None,
            };
            layers.push(Layer { spec: *l, in_shape, out_shape, params });
            in_shape = out_shape;
        }
        let velocity = layers.iter().map(|l| l.tensors().iter().map(|t| vec![T::zero(); t.len()]).collect()).collect();
        Ok(Self { spec, layers, velocity, warnings: plan.warnings })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer<T>] {
        &mut self.layers
    }

    pub fn warnings(&self) -> &[StrideWarning] {
        &self.warnings
    }

    /// Free parameters per layer.
    pub fn param_counts(&self) -> Vec<usize> {
        self.layers.iter().map(Layer::param_count).collect()
    }

    pub fn param_count(&self) -> usize {
        self.param_counts().iter().sum()
    }

    pub fn output_shape(&self) -> [usize; 3] {
        self.layers.last().map(|l| l.out_shape).unwrap_or(self.spec.input)
    }

    /// Number of logits when the stack ends at spatial size 1.
    pub fn classes(&self) -> Option<usize> {
        match self.output_shape() {
            [c, 1, 1] => Some(c),
            _ => None,
        }
    }

    /// Same architecture and parameters in another precision.
    pub fn cast<U: Scalar>(&self) -> Model<U> {
        let mut out = Model::<U>::build(self.spec.clone(), 0).expect("spec already validated");
        for (dst, src) in out.layers.iter_mut().zip(&self.layers) {
            let blob: Vec<U> = src.blob().iter().map(|v| U::from_f64_lossy(v.as_f64())).collect();
            dst.set_blob(&blob).expect("same architecture");
        }
        out
    }

    fn check_input(&self, x: &Tensor4<T>) -> Result<()> {
        let [c, h, w] = self.spec.input;
        if [x.c(), x.h(), x.w()] != [c, h, w] {
            return Err(shape_err("model input", format!("{:?}", self.spec.input), format!("{:?}", &x.dims()[1..])));
        }
        Ok(())
    }

    /// Runs the stack, recording what [`Model::backward`] needs.
    pub fn forward(&self, x: &Tensor4<T>, mode: Mode) -> Result<(Tensor4<T>, Cache<T>)> {
        self.check_input(x)?;
        let mut cache = Cache { inputs: Vec::with_capacity(self.layers.len()), aux: Vec::with_capacity(self.layers.len()) };
        let mut cur = x.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            let (next, aux) = self.layer_forward(i, layer, &cur, mode, Strategy::RotateFilters)?;
            cache.inputs.push(cur);
            cache.aux.push(aux);
            cur = next;
        }
        Ok((cur, cache))
    }

    /// Evaluation-mode forward pass without recording a cache.
    pub fn predict(&self, x: &Tensor4<T>) -> Result<Tensor4<T>> {
        self.forward_with(x, Strategy::RotateFilters)
    }

    /// Evaluation-mode forward pass with the chosen tied-layer strategy.
    pub fn forward_with(&self, x: &Tensor4<T>, strategy: Strategy) -> Result<Tensor4<T>> {
        self.forward_prefix(x, self.layers.len(), strategy)
    }

    /// Evaluation-mode output of the first `depth` layers.
    pub fn forward_prefix(&self, x: &Tensor4<T>, depth: usize, strategy: Strategy) -> Result<Tensor4<T>> {
        self.check_input(x)?;
        let mut cur = x.clone();
        for (i, layer) in self.layers.iter().enumerate().take(depth) {
            cur = self.layer_forward(i, layer, &cur, Mode::Eval, strategy)?.0;
        }
        Ok(cur)
    }

    fn layer_forward(
        &self,
        index: usize,
        layer: &Layer<T>,
        x: &Tensor4<T>,
        mode: Mode,
        strategy: Strategy,
    ) -> Result<(Tensor4<T>, Aux<T>)> {
        let l = &layer.spec;
        let train = matches!(mode, Mode::Train { .. });
        Ok(match (&layer.params, l.kind) {
            (LayerParams::Tied { params, expanded }, _) => {
                let y = match strategy {
                    Strategy::RotateFilters => correlate2d(x, expanded, l.geometry())?,
                    Strategy::RotateFeatureMaps => oracle_forward(params, x, l.geometry())?,
                };
                (y, Aux::None)
            }
            (LayerParams::Conv(w), _) => (correlate2d(x, w, l.geometry())?, Aux::None),
            (LayerParams::Bias(b), kind) => {
                let gs = if kind == LayerKind::SharedBias { GROUP } else { 1 };
                (grouped_bias_add(x, b, gs)?, Aux::None)
            }
            (LayerParams::Norm(bn), _) => {
                let (y, c) = bn.forward(x, train)?;
                (y, Aux::Norm(c))
            }
            (LayerParams::None, LayerKind::Relu) => (x.relu(), Aux::None),
            (LayerParams::None, LayerKind::Dropout) => match mode {
                Mode::Train { seed } if l.rate > 0.0 => {
                    let mask = dropout_mask(x.dims(), l.rate, mix_seed(seed, index));
                    let y = x.with_data(x.data().iter().zip(mask.data()).map(|(&a, &m)| a * m).collect());
                    (y, Aux::Mask(mask))
                }
                _ => (x.clone(), Aux::None),
            },
            (LayerParams::None, LayerKind::MaxPool) => {
                let p = max_pool2d_indexed(x, l.kernel, l.stride)?;
                (p.out, Aux::Pool(p.argmax))
            }
            (LayerParams::None, LayerKind::GroupPoolMax | LayerKind::GroupPoolMean) => {
                let mode = if l.kind == LayerKind::GroupPoolMax { GroupPool::Max } else { GroupPool::Mean };
                let (y, winners) = group_pool_indexed(x, GroupLayout::for_channels(x.c())?, mode)?;
                (y, Aux::GroupPool(winners))
            }
            (LayerParams::None, LayerKind::GlobalAvgPool) => (global_spatial_avg_pool(x), Aux::None),
            (p, kind) => return Err(DrenError::Model(format!("layer {index}: {kind} has mismatched params {p:?}"))),
        })
    }

    /// Gradients of every trainable tensor given the gradient at the output.
    pub fn backward(&self, cache: &Cache<T>, grad_out: Tensor4<T>) -> Result<Gradients<T>> {
        if cache.inputs.len() != self.layers.len() {
            return Err(shape_err("backward cache", self.layers.len(), cache.inputs.len()));
        }
        let mut grads: Vec<Vec<Vec<T>>> = vec![Vec::new(); self.layers.len()];
        let mut g = grad_out;
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let x = &cache.inputs[i];
            let l = &layer.spec;
            g = match (&layer.params, &cache.aux[i]) {
                (LayerParams::Tied { params, expanded }, _) => {
                    let (gx, gb) = params.tied().backward_expanded(expanded, x, &g, l.geometry())?;
                    grads[i] = vec![gb.into_vec()];
                    gx
                }
                (LayerParams::Conv(w), _) => {
                    let (gx, gw) = correlate2d_backward(&g, x, w, l.geometry())?;
                    grads[i] = vec![gw.into_vec()];
                    gx
                }
                (LayerParams::Bias(_), _) => {
                    let gs = if l.kind == LayerKind::SharedBias { GROUP } else { 1 };
                    grads[i] = vec![grouped_bias_grad(&g, gs)];
                    g
                }
                (LayerParams::Norm(bn), Aux::Norm(c)) => {
                    let (gx, gg, gb) = bn.backward(&g, c)?;
                    grads[i] = vec![gg, gb];
                    gx
                }
                (LayerParams::None, aux) => match (l.kind, aux) {
                    (LayerKind::Relu, _) => {
                        g.with_data(g.data().iter().zip(x.data()).map(|(&d, &v)| if v > T::zero() { d } else { T::zero() }).collect())
                    }
                    (LayerKind::Dropout, Aux::Mask(m)) => {
                        g.with_data(g.data().iter().zip(m.data()).map(|(&d, &k)| d * k).collect())
                    }
                    (LayerKind::Dropout, _) => g,
                    (LayerKind::MaxPool, Aux::Pool(argmax)) => max_pool2d_backward(&g, argmax, x.dims())?,
                    (LayerKind::GroupPoolMax | LayerKind::GroupPoolMean, Aux::GroupPool(w)) => {
                        let mode = if l.kind == LayerKind::GroupPoolMax { GroupPool::Max } else { GroupPool::Mean };
                        group_pool_backward(&g, GroupLayout::for_channels(x.c())?, mode, w)?
                    }
                    (LayerKind::GlobalAvgPool, _) => global_spatial_avg_pool_backward(&g, x.h(), x.w()),
                    (kind, _) => return Err(DrenError::Model(format!("layer {i}: no backward for {kind}"))),
                },
                (_, _) => return Err(DrenError::Model(format!("layer {i}: cache does not match layer"))),
            };
        }
        Ok(Gradients(grads))
    }

    /// Which side of every ReLU and pooling switch the forward pass took.
    /// Two passes with equal patterns lie in the same linear piece of the
    /// non-smooth layers.
    pub fn switch_pattern(&self, cache: &Cache<T>) -> Vec<usize> {
        let mut out = Vec::new();
        for (layer, (x, aux)) in self.layers.iter().zip(cache.inputs.iter().zip(&cache.aux)) {
            match aux {
                Aux::Pool(a) => out.extend_from_slice(a),
                Aux::GroupPool(w) => out.extend(w.iter().map(|&v| v as usize)),
                _ if layer.spec.kind == LayerKind::Relu => out.extend(x.data().iter().map(|&v| (v > T::zero()) as usize)),
                _ => {}
            }
        }
        out
    }

    /// Folds training-mode batch statistics into the running statistics.
    pub fn apply_batch_stats(&mut self, cache: &Cache<T>) {
        for (layer, aux) in self.layers.iter_mut().zip(&cache.aux) {
            if let (LayerParams::Norm(bn), Aux::Norm(c)) = (&mut layer.params, aux) {
                bn.update_running(c);
            }
        }
    }

    /// SGD with momentum: `v = momentum * v - lr * g; p += v`.
    pub fn sgd_step(&mut self, grads: &Gradients<T>, lr: f64, momentum: f64) -> Result<()> {
        let lr = T::from_f64_lossy(lr);
        let mom = T::from_f64_lossy(momentum);
        for ((layer, vel), g) in self.layers.iter_mut().zip(&mut self.velocity).zip(&grads.0) {
            let mut tensors = layer.tensors_mut();
            if tensors.len() != g.len() {
                return Err(shape_err("sgd_step tensors", tensors.len(), g.len()));
            }
            for ((p, v), g) in tensors.iter_mut().zip(vel.iter_mut()).zip(g) {
                if p.len() != g.len() {
                    return Err(shape_err("sgd_step gradient", p.len(), g.len()));
                }
                for ((p, v), &g) in p.iter_mut().zip(v.iter_mut()).zip(g) {
                    *v = mom * *v - lr * g;
                    *p += *v;
                }
            }
            layer.refresh();
        }
        Ok(())
    }
}

fn tied<T: Scalar>(params: EquivariantParams<T>) -> LayerParams<T> {
    let expanded = params.tied().expand();
    LayerParams::Tied { params, expanded }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::spec::presets;
    use crate::tensor::max_rel_diff;

    #[test]
    fn dren_small_param_count_closed_form() {
        let m = Model::<f32>::build(presets::dren_small([1, 16, 16], 5, 10), 1).unwrap();
        // cycle 5*1*9, two isotonic 5*(5*4)*9, decycle 10*5*9, shared biases 3*5, bias 10
        let want = 45 + 2 * 900 + 450 + 15 + 10;
        assert_eq!(m.param_count(), want);
        let untied_equivalent = 20 * 9 + 2 * 20 * 20 * 9 + 10 * 20 * 9;
        assert_eq!(4 * (45 + 2 * 900 + 450), untied_equivalent);
    }

    #[test]
    fn z2cnn_plain_param_count() {
        let m = Model::<f32>::build(presets::z2cnn_plain(20, 10), 1).unwrap();
        // conv weights + biases + batch-norm scale/shift
        let weights = 20 * 9 + 5 * 20 * 20 * 9 + 20 * 10 * 16;
        assert_eq!(m.param_count(), weights + (6 * 20 + 10) + 6 * 2 * 20);
        assert_eq!(m.param_count(), 21_750);
    }

    #[test]
    fn build_is_seed_deterministic() {
        let spec = presets::dren_small([1, 16, 16], 2, 3);
        assert_eq!(Model::<f32>::build(spec.clone(), 5).unwrap(), Model::<f32>::build(spec.clone(), 5).unwrap());
        assert_ne!(Model::<f32>::build(spec.clone(), 5).unwrap(), Model::<f32>::build(spec, 6).unwrap());
    }

    #[test]
    fn strategies_agree_on_model() {
        let m = Model::<f64>::build(presets::dren_small([1, 16, 16], 2, 3), 3).unwrap();
        let x = Tensor4::random([2, 1, 16, 16], 0.0, 1.0, &mut ChaCha8Rng::seed_from_u64(4));
        let a = m.forward_with(&x, Strategy::RotateFilters).unwrap();
        let b = m.forward_with(&x, Strategy::RotateFeatureMaps).unwrap();
        assert!(max_rel_diff(&b, &a) < 1e-12);
    }

    #[test]
    fn blob_round_trip_restores_model() {
        let spec = presets::z2cnn_dren(2, 4);
        let a = Model::<f32>::build(spec.clone(), 1).unwrap();
        let mut b = Model::<f32>::build(spec, 2).unwrap();
        for (lb, la) in b.layers_mut().iter_mut().zip(a.layers()) {
            lb.set_blob(&la.blob()).unwrap();
        }
        assert_eq!(a.layers(), b.layers());
        assert!(b.layers_mut()[0].set_blob(&[1.0]).is_err());
    }

    #[test]
    fn rejects_wrong_input() {
        let m = Model::<f32>::build(presets::dren_small([1, 16, 16], 2, 3), 3).unwrap();
        assert!(m.predict(&Tensor4::zeros(1, 1, 10, 16)).is_err());
    }
}
