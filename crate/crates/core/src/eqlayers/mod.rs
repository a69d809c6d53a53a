//! Cycle, isotonic and decycle layers.
//!
//! Each layer owns a small stack of *base* filters and expands it into a
//! full filter bank by placing quarter-turn rotated copies of the bases at
//! fixed positions. Forward passes are a single [`correlate2d`] with the
//! expanded bank; gradients are folded back onto the bases by undoing the
//! rotation of every position that references a base filter.
//!
//! With `R` the quarter-turn and `P` the cyclic channel shift:
//!
//! * cycle:    `f(R x) = R P f(x)`
//! * isotonic: `f(R P x) = R P f(x)`
//! * decycle:  `f(R P x) = R f(x)`

mod companions;

pub use companions::*;

use rand::Rng;

use crate::conv::{correlate2d, correlate2d_backward, ConvGeometry};
use crate::error::{shape_err, DrenError, Result};
use crate::scalar::Scalar;
use crate::tensor::{Filter4, Tensor4, GROUP};

/// Rotates one square `k x k` kernel by `times` quarter turns into `dst`.
fn rotate_kernel<T: Scalar>(src: &[T], k: usize, times: i32, dst: &mut [T]) {
    let t = times.rem_euclid(4);
    for i in 0..k {
        for j in 0..k {
            let (si, sj) = match t {
                0 => (i, j),
                1 => (j, k - 1 - i),
                2 => (k - 1 - i, k - 1 - j),
                _ => (k - 1 - j, i),
            };
            dst[i * k + j] = src[si * k + sj];
        }
    }
}

/// Adds the kernel `src` rotated by `times` into `dst`.
fn accumulate_rotated<T: Scalar>(src: &[T], k: usize, times: i32, dst: &mut [T], scratch: &mut [T]) {
    rotate_kernel(src, k, times, scratch);
    for (d, &s) in dst.iter_mut().zip(scratch.iter()) {
        *d += s;
    }
}

fn check_square<T: Scalar>(base: &Filter4<T>, what: &'static str) -> Result<usize> {
    if base.h() != base.w() || base.h() == 0 {
        return Err(shape_err(what, "square kernel", format!("{}x{}", base.h(), base.w())));
    }
    Ok(base.h())
}

/// Uniform draw with variance `2 / fan_in`.
pub(crate) fn he_uniform<T: Scalar, R: Rng + ?Sized>(dims: [usize; 4], fan_in: usize, rng: &mut R) -> Filter4<T> {
    let a = (6.0 / fan_in.max(1) as f64).sqrt();
    Tensor4::random(dims, -a, a, rng)
}

/// Weight tying shared by the three layer types: how base filters expand
/// into a full bank, and how bank gradients fold back onto the bases.
pub trait TiedFilter<T: Scalar> {
    fn base(&self) -> &Filter4<T>;
    fn base_mut(&mut self) -> &mut Filter4<T>;

    /// Full `(c_out, c_in, k, k)` filter bank.
    fn expand(&self) -> Filter4<T>;

    /// Gradient with respect to the base filters given the gradient with
    /// respect to the expanded bank.
    fn fold_gradient(&self, grad_expanded: &Filter4<T>) -> Result<Filter4<T>>;

    fn kernel_size(&self) -> usize {
        self.base().h()
    }

    /// Number of free reals.
    fn param_count(&self) -> usize {
        self.base().len()
    }

    fn forward(&self, x: &Tensor4<T>, g: ConvGeometry) -> Result<Tensor4<T>> {
        correlate2d(x, &self.expand(), g)
    }

    /// `(grad_x, grad_base)`.
    fn backward(&self, x: &Tensor4<T>, grad_out: &Tensor4<T>, g: ConvGeometry) -> Result<(Tensor4<T>, Filter4<T>)> {
        self.backward_expanded(&self.expand(), x, grad_out, g)
    }

    /// Backward pass reusing an already expanded bank.
    fn backward_expanded(
        &self,
        expanded: &Filter4<T>,
        x: &Tensor4<T>,
        grad_out: &Tensor4<T>,
        g: ConvGeometry,
    ) -> Result<(Tensor4<T>, Filter4<T>)> {
        let (gx, gw) = correlate2d_backward(grad_out, x, expanded, g)?;
        Ok((gx, self.fold_gradient(&gw)?))
    }
}

/// First layer: every base filter yields one group of four output channels,
/// channel `i` of the group using the base rotated `i` quarter turns.
///
/// Base layout `(g_out, c_in, k, k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleParams<T: Scalar = f32> {
    base: Filter4<T>,
}

impl<T: Scalar> CycleParams<T> {
    pub fn new(base: Filter4<T>) -> Result<Self> {
        check_square(&base, "CycleParams")?;
        Ok(Self { base })
    }

    pub fn init<R: Rng + ?Sized>(c_in: usize, g_out: usize, k: usize, rng: &mut R) -> Self {
        Self { base: he_uniform([g_out, c_in, k, k], c_in * k * k, rng) }
    }

    pub fn g_out(&self) -> usize {
        self.base.n()
    }

    pub fn c_in(&self) -> usize {
        self.base.c()
    }
}

impl<T: Scalar> TiedFilter<T> for CycleParams<T> {
    fn base(&self) -> &Filter4<T> {
        &self.base
    }

    fn base_mut(&mut self) -> &mut Filter4<T> {
        &mut self.base
    }

    fn expand(&self) -> Filter4<T> {
        let k = self.kernel_size();
        let (g_out, c_in) = (self.g_out(), self.c_in());
        let mut w = Tensor4::zeros(g_out * GROUP, c_in, k, k);
        for a in 0..g_out {
            for i in 0..GROUP {
                for c in 0..c_in {
                    rotate_kernel(self.base.plane(a, c), k, i as i32, w.plane_mut(a * GROUP + i, c));
                }
            }
        }
        w
    }

    fn fold_gradient(&self, ge: &Filter4<T>) -> Result<Filter4<T>> {
        let k = self.kernel_size();
        let (g_out, c_in) = (self.g_out(), self.c_in());
        let want = [g_out * GROUP, c_in, k, k];
        if ge.dims() != want {
            return Err(shape_err("cycle fold_gradient", format!("{want:?}"), format!("{:?}", ge.dims())));
        }
        let mut gb = Tensor4::zeros(g_out, c_in, k, k);
        let mut scratch = vec![T::zero(); k * k];
        for a in 0..g_out {
            for i in 0..GROUP {
                for c in 0..c_in {
                    accumulate_rotated(ge.plane(a * GROUP + i, c), k, -(i as i32), gb.plane_mut(a, c), &mut scratch);
                }
            }
        }
        Ok(gb)
    }
}

/// Middle layer. For output group `a` and input group `b` the 4x4 block of
/// kernels is
///
/// ```text
///   A     B     C     D
///   R D   R A   R B   R C
///   R²C   R²D   R²A   R²B
///   R³B   R³C   R³D   R³A
/// ```
///
/// i.e. row `j` is `R^j` applied to `[A, B, C, D]` cyclically shifted right
/// by `j`. Base layout `(g_out, g_in * 4, k, k)` with channel `b * 4 + m`
/// holding free filter `m` (A..D) of the pair `(a, b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct IsotonicParams<T: Scalar = f32> {
    base: Filter4<T>,
}

impl<T: Scalar> IsotonicParams<T> {
    pub fn new(base: Filter4<T>) -> Result<Self> {
        check_square(&base, "IsotonicParams")?;
        if base.c() % GROUP != 0 {
            return Err(DrenError::Layout { channels: base.c() });
        }
        Ok(Self { base })
    }

    pub fn init<R: Rng + ?Sized>(g_in: usize, g_out: usize, k: usize, rng: &mut R) -> Self {
        Self { base: he_uniform([g_out, g_in * GROUP, k, k], g_in * GROUP * k * k, rng) }
    }

    pub fn g_out(&self) -> usize {
        self.base.n()
    }

    pub fn g_in(&self) -> usize {
        self.base.c() / GROUP
    }

    /// Free filter `m` (0 = A .. 3 = D) for the group pair `(a, b)`.
    pub fn filter(&self, a: usize, m: usize, b: usize) -> &[T] {
        self.base.plane(a, b * GROUP + m)
    }

    /// Free reals of an untied layer with the same expanded channel counts.
    pub fn untied_param_count(&self) -> usize {
        let k = self.kernel_size();
        self.g_out() * GROUP * self.g_in() * GROUP * k * k
    }
}

impl<T: Scalar> TiedFilter<T> for IsotonicParams<T> {
    fn base(&self) -> &Filter4<T> {
        &self.base
    }

    fn base_mut(&mut self) -> &mut Filter4<T> {
        &mut self.base
    }

    fn expand(&self) -> Filter4<T> {
        let k = self.kernel_size();
        let (g_out, g_in) = (self.g_out(), self.g_in());
        let mut w = Tensor4::zeros(g_out * GROUP, g_in * GROUP, k, k);
        for a in 0..g_out {
            for b in 0..g_in {
                for j in 0..GROUP {
                    for i in 0..GROUP {
                        let m = (i + GROUP - j) % GROUP;
                        rotate_kernel(
                            self.filter(a, m, b),
                            k,
                            j as i32,
                            w.plane_mut(a * GROUP + j, b * GROUP + i),
                        );
                    }
                }
            }
        }
        w
    }

    fn fold_gradient(&self, ge: &Filter4<T>) -> Result<Filter4<T>> {
        let k = self.kernel_size();
        let (g_out, g_in) = (self.g_out(), self.g_in());
        let want = [g_out * GROUP, g_in * GROUP, k, k];
        if ge.dims() != want {
            return Err(shape_err("isotonic fold_gradient", format!("{want:?}"), format!("{:?}", ge.dims())));
        }
        let mut gb = Tensor4::zeros(g_out, g_in * GROUP, k, k);
        let mut scratch = vec![T::zero(); k * k];
        for a in 0..g_out {
            for b in 0..g_in {
                for j in 0..GROUP {
                    for i in 0..GROUP {
                        let m = (i + GROUP - j) % GROUP;
                        accumulate_rotated(
                            ge.plane(a * GROUP + j, b * GROUP + i),
                            k,
                            -(j as i32),
                            gb.plane_mut(a, b * GROUP + m),
                            &mut scratch,
                        );
                    }
                }
            }
        }
        Ok(gb)
    }
}

/// Last layer: output channel `o` reads cyclic slot `j` of input group `b`
/// through its base filter rotated `j` quarter turns, collapsing the cyclic
/// shift into a plain rotation of the output.
///
/// Base layout `(c_out, g_in, k, k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecycleParams<T: Scalar = f32> {
    base: Filter4<T>,
}

impl<T: Scalar> DecycleParams<T> {
    pub fn new(base: Filter4<T>) -> Result<Self> {
        check_square(&base, "DecycleParams")?;
        Ok(Self { base })
    }

    pub fn init<R: Rng + ?Sized>(g_in: usize, c_out: usize, k: usize, rng: &mut R) -> Self {
        Self { base: he_uniform([c_out, g_in, k, k], g_in * GROUP * k * k, rng) }
    }

    pub fn c_out(&self) -> usize {
        self.base.n()
    }

    pub fn g_in(&self) -> usize {
        self.base.c()
    }
}

impl<T: Scalar> TiedFilter<T> for DecycleParams<T> {
    fn base(&self) -> &Filter4<T> {
        &self.base
    }

    fn base_mut(&mut self) -> &mut Filter4<T> {
        &mut self.base
    }

    fn expand(&self) -> Filter4<T> {
        let k = self.kernel_size();
        let (c_out, g_in) = (self.c_out(), self.g_in());
        let mut w = Tensor4::zeros(c_out, g_in * GROUP, k, k);
        for o in 0..c_out {
            for b in 0..g_in {
                for j in 0..GROUP {
                    rotate_kernel(self.base.plane(o, b), k, j as i32, w.plane_mut(o, b * GROUP + j));
                }
            }
        }
        w
    }

    fn fold_gradient(&self, ge: &Filter4<T>) -> Result<Filter4<T>> {
        let k = self.kernel_size();
        let (c_out, g_in) = (self.c_out(), self.g_in());
        let want = [c_out, g_in * GROUP, k, k];
        if ge.dims() != want {
            return Err(shape_err("decycle fold_gradient", format!("{want:?}"), format!("{:?}", ge.dims())));
        }
        let mut gb = Tensor4::zeros(c_out, g_in, k, k);
        let mut scratch = vec![T::zero(); k * k];
        for o in 0..c_out {
            for b in 0..g_in {
                for j in 0..GROUP {
                    accumulate_rotated(ge.plane(o, b * GROUP + j), k, -(j as i32), gb.plane_mut(o, b), &mut scratch);
                }
            }
        }
        Ok(gb)
    }
}

/// The three tied layer types behind one value.
#[derive(Debug, Clone, PartialEq)]
pub enum EquivariantParams<T: Scalar = f32> {
    Cycle(CycleParams<T>),
    Isotonic(IsotonicParams<T>),
    Decycle(DecycleParams<T>),
}

impl<T: Scalar> EquivariantParams<T> {
    pub fn tied(&self) -> &dyn TiedFilter<T> {
        match self {
            Self::Cycle(p) => p,
            Self::Isotonic(p) => p,
            Self::Decycle(p) => p,
        }
    }

    pub fn tied_mut(&mut self) -> &mut dyn TiedFilter<T> {
        match self {
            Self::Cycle(p) => p,
            Self::Isotonic(p) => p,
            Self::Decycle(p) => p,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Cycle(_) => "cycle",
            Self::Isotonic(_) => "isotonic",
            Self::Decycle(_) => "decycle",
        }
    }
}

/// Applies `D R` to a bank whose both channel axes are grouped: every
/// kernel is rotated once and moved from `(a*4 + j, b*4 + i)` to
/// `(a*4 + j+1, b*4 + i+1)`. Isotonic banks are fixed points.
pub fn diagonal_shift_rotate<T: Scalar>(w: &Filter4<T>) -> Result<Filter4<T>> {
    if w.n() % GROUP != 0 || w.c() % GROUP != 0 {
        return Err(DrenError::Layout { channels: if w.n() % GROUP != 0 { w.n() } else { w.c() } });
    }
    let k = w.h();
    let mut out = Tensor4::zeros(w.n(), w.c(), w.h(), w.w());
    for o in 0..w.n() {
        for c in 0..w.c() {
            let to = (o / GROUP) * GROUP + (o % GROUP + 1) % GROUP;
            let tc = (c / GROUP) * GROUP + (c % GROUP + 1) % GROUP;
            rotate_kernel(w.plane(o, c), k, 1, out.plane_mut(to, tc));
        }
    }
    Ok(out)
}

/// Which channel axis of a bank a single-axis shift acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BankAxis {
    Output,
    Input,
}

/// Applies `P R` to a bank along one grouped axis: every kernel is rotated
/// once and its cyclic index on `axis` advanced by one. Cycle banks are
/// fixed points on the output axis, decycle banks on the input axis.
pub fn shift_rotate<T: Scalar>(w: &Filter4<T>, axis: BankAxis) -> Result<Filter4<T>> {
    let grouped = match axis {
        BankAxis::Output => w.n(),
        BankAxis::Input => w.c(),
    };
    if grouped % GROUP != 0 {
        return Err(DrenError::Layout { channels: grouped });
    }
    let k = w.h();
    let mut out = Tensor4::zeros(w.n(), w.c(), w.h(), w.w());
    let next = |x: usize| (x / GROUP) * GROUP + (x % GROUP + 1) % GROUP;
    for o in 0..w.n() {
        for c in 0..w.c() {
            let (to, tc) = match axis {
                BankAxis::Output => (next(o), c),
                BankAxis::Input => (o, next(c)),
            };
            rotate_kernel(w.plane(o, c), k, 1, out.plane_mut(to, tc));
        }
    }
    Ok(out)
}

/// Relative gap between `f(Rx)` and `R P f(x)` for a random cycle layer
/// with the given stride on a random `size x size` input. Zero up to
/// rounding exactly when the stride condition holds.
pub fn stride_equivariance_gap(size: usize, stride: usize, kernel: usize, seed: u64) -> Result<f64> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let g = ConvGeometry::new(stride, 0);
    let p = CycleParams::<f64>::init(1, 2, kernel, &mut rng);
    let x = Tensor4::<f64>::random([1, 1, size, size], -1.0, 1.0, &mut rng);
    let y = p.forward(&x, g)?;
    let rp = y.rotate90(1).cyclic_permute(crate::tensor::GroupLayout::for_channels(y.c())?, 1)?;
    Ok(crate::tensor::max_rel_diff(&p.forward(&x.rotate90(1), g)?, &rp))
}
