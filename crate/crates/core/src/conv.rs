//! Multi-channel 2-D cross-correlation lowered to im2col + GEMM, its adjoint,
//! spatial max pooling, and the stride condition under which both commute
//! with quarter-turn rotations.

use crate::error::{shape_err, DrenError, Result};
use crate::scalar::{gemm, MatView, Scalar};
use crate::tensor::{Filter4, Tensor4};

/// Stride and symmetric zero padding of a correlation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ConvGeometry {
    pub stride: usize,
    pub pad: usize,
}

impl Default for ConvGeometry {
    fn default() -> Self {
        Self { stride: 1, pad: 0 }
    }
}

impl ConvGeometry {
    pub fn new(stride: usize, pad: usize) -> Self {
        Self { stride, pad }
    }

    /// `floor((size + 2 pad - kernel) / stride) + 1`.
    pub fn output_size(&self, size: usize, kernel: usize) -> Result<usize> {
        if self.stride == 0 {
            return Err(DrenError::Geometry("stride must be positive".into()));
        }
        if kernel == 0 {
            return Err(DrenError::Geometry("kernel must be positive".into()));
        }
        let padded = size + 2 * self.pad;
        if kernel > padded {
            return Err(DrenError::Geometry(format!(
                "kernel {kernel} larger than padded input {padded}"
            )));
        }
        Ok((padded - kernel) / self.stride + 1)
    }

    /// Whether this geometry keeps quarter-turn equivariance for a square
    /// input of side `size` and a square kernel.
    pub fn preserves_equivariance(&self, size: usize, kernel: usize) -> bool {
        stride_preserves_equivariance(size + 2 * self.pad, self.stride, kernel)
    }
}

/// True iff `input_size = k * stride + kernel_size` for some `k >= 0`, i.e.
/// the strided window grid covers the input edge to edge.
pub fn stride_preserves_equivariance(input_size: usize, stride: usize, kernel_size: usize) -> bool {
    if stride == 0 || input_size < kernel_size {
        return false;
    }
    (input_size - kernel_size) % stride == 0
}

struct Plan {
    c_in: usize,
    kh: usize,
    kw: usize,
    oh: usize,
    ow: usize,
}

impl Plan {
    fn new<T: Scalar>(x: &Tensor4<T>, w: &Filter4<T>, g: ConvGeometry) -> Result<Self> {
        if x.c() != w.c() {
            return Err(shape_err("correlate2d input channels", w.c(), x.c()));
        }
        let oh = g.output_size(x.h(), w.h())?;
        let ow = g.output_size(x.w(), w.w())?;
        Ok(Self { c_in: x.c(), kh: w.h(), kw: w.w(), oh, ow })
    }

    fn rows(&self) -> usize {
        self.c_in * self.kh * self.kw
    }

    fn cols(&self) -> usize {
        self.oh * self.ow
    }
}

/// Patch matrix of one batch item: row `(c, u, v)`, column `(p, q)`.
fn im2col<T: Scalar>(x: &Tensor4<T>, n: usize, plan: &Plan, g: ConvGeometry, cols: &mut [T]) {
    let (h, w) = (x.h() as isize, x.w() as isize);
    let pad = g.pad as isize;
    let s = g.stride as isize;
    let ncols = plan.cols();
    for c in 0..plan.c_in {
        let src = x.plane(n, c);
        for u in 0..plan.kh {
            for v in 0..plan.kw {
                let row = &mut cols[((c * plan.kh + u) * plan.kw + v) * ncols..][..ncols];
                for p in 0..plan.oh {
                    let i = p as isize * s + u as isize - pad;
                    let dst = &mut row[p * plan.ow..(p + 1) * plan.ow];
                    if i < 0 || i >= h {
                        dst.fill(T::zero());
                        continue;
                    }
                    let line = &src[(i * w) as usize..((i + 1) * w) as usize];
                    for (q, d) in dst.iter_mut().enumerate() {
                        let j = q as isize * s + v as isize - pad;
                        *d = if j < 0 || j >= w { T::zero() } else { line[j as usize] };
                    }
                }
            }
        }
    }
}

/// Adjoint of [`im2col`]: scatter-add patch gradients back onto the input.
fn col2im<T: Scalar>(cols: &[T], n: usize, plan: &Plan, g: ConvGeometry, gx: &mut Tensor4<T>) {
    let (h, w) = (gx.h() as isize, gx.w() as isize);
    let pad = g.pad as isize;
    let s = g.stride as isize;
    let ncols = plan.cols();
    for c in 0..plan.c_in {
        let dst = gx.plane_mut(n, c);
        for u in 0..plan.kh {
            for v in 0..plan.kw {
                let row = &cols[((c * plan.kh + u) * plan.kw + v) * ncols..][..ncols];
                for p in 0..plan.oh {
                    let i = p as isize * s + u as isize - pad;
                    if i < 0 || i >= h {
                        continue;
                    }
                    for q in 0..plan.ow {
                        let j = q as isize * s + v as isize - pad;
                        if j >= 0 && j < w {
                            dst[(i * w + j) as usize] += row[p * plan.ow + q];
                        }
                    }
                }
            }
        }
    }
}

/// `out[n, o, p, q] = sum_{c,u,v} w[o, c, u, v] * x_pad[n, c, p*s + u, q*s + v]`.
pub fn correlate2d<T: Scalar>(x: &Tensor4<T>, w: &Filter4<T>, g: ConvGeometry) -> Result<Tensor4<T>> {
    let plan = Plan::new(x, w, g)?;
    let c_out = w.n();
    let mut out = Tensor4::zeros(x.n(), c_out, plan.oh, plan.ow);
    let mut cols = vec![T::zero(); plan.rows() * plan.cols()];
    let per_item = c_out * plan.cols();
    for n in 0..x.n() {
        im2col(x, n, &plan, g, &mut cols);
        let dst = &mut out.data_mut()[n * per_item..(n + 1) * per_item];
        gemm(
            w.data(),
            MatView::new(c_out, plan.rows()),
            &cols,
            MatView::new(plan.rows(), plan.cols()),
            T::zero(),
            dst,
        );
    }
    Ok(out)
}

/// Gradients of a loss with respect to the input and the filter of
/// [`correlate2d`], given the gradient with respect to its output.
pub fn correlate2d_backward<T: Scalar>(
    grad_out: &Tensor4<T>,
    x: &Tensor4<T>,
    w: &Filter4<T>,
    g: ConvGeometry,
) -> Result<(Tensor4<T>, Filter4<T>)> {
    let plan = Plan::new(x, w, g)?;
    let c_out = w.n();
    let want = [x.n(), c_out, plan.oh, plan.ow];
    if grad_out.dims() != want {
        return Err(shape_err("correlate2d_backward", format!("{want:?}"), format!("{:?}", grad_out.dims())));
    }
    let mut gx = Tensor4::zeros(x.n(), x.c(), x.h(), x.w());
    let mut gw = Tensor4::zeros(w.n(), w.c(), w.h(), w.w());
    let mut cols = vec![T::zero(); plan.rows() * plan.cols()];
    let mut gcols = vec![T::zero(); plan.rows() * plan.cols()];
    let per_item = c_out * plan.cols();
    for n in 0..x.n() {
        let go = &grad_out.data()[n * per_item..(n + 1) * per_item];
        im2col(x, n, &plan, g, &mut cols);
        // dW += G * cols^T
        gemm(
            go,
            MatView::new(c_out, plan.cols()),
            &cols,
            MatView::new(plan.rows(), plan.cols()).t(),
            T::one(),
            gw.data_mut(),
        );
        // dcols = W^T * G
        gemm(
            w.data(),
            MatView::new(c_out, plan.rows()).t(),
            go,
            MatView::new(c_out, plan.cols()),
            T::zero(),
            &mut gcols,
        );
        col2im(&gcols, n, &plan, g, &mut gx);
    }
    Ok((gx, gw))
}

/// Spatial max pooling result together with the flat input offset that won
/// each window (first maximum in scan order).
#[derive(Debug, Clone)]
pub struct Pooled<T: Scalar> {
    pub out: Tensor4<T>,
    pub argmax: Vec<usize>,
}

pub fn max_pool2d<T: Scalar>(x: &Tensor4<T>, kernel: usize, stride: usize) -> Result<Tensor4<T>> {
    max_pool2d_indexed(x, kernel, stride).map(|p| p.out)
}

pub fn max_pool2d_indexed<T: Scalar>(x: &Tensor4<T>, kernel: usize, stride: usize) -> Result<Pooled<T>> {
    let g = ConvGeometry::new(stride, 0);
    let oh = g.output_size(x.h(), kernel)?;
    let ow = g.output_size(x.w(), kernel)?;
    let mut out = Tensor4::zeros(x.n(), x.c(), oh, ow);
    let mut argmax = Vec::with_capacity(out.len());
    let mut k = 0;
    for n in 0..x.n() {
        for c in 0..x.c() {
            let base = x.offset(n, c, 0, 0);
            let plane = x.plane(n, c);
            for p in 0..oh {
                for q in 0..ow {
                    let mut best = T::neg_infinity();
                    let mut at = 0;
                    for u in 0..kernel {
                        for v in 0..kernel {
                            let o = (p * stride + u) * x.w() + q * stride + v;
                            if plane[o] > best {
                                best = plane[o];
                                at = o;
                            }
                        }
                    }
                    out.data_mut()[k] = best;
                    argmax.push(base + at);
                    k += 1;
                }
            }
        }
    }
    Ok(Pooled { out, argmax })
}

/// Routes pooled gradients back to the winning input positions.
pub fn max_pool2d_backward<T: Scalar>(grad_out: &Tensor4<T>, argmax: &[usize], input_dims: [usize; 4]) -> Result<Tensor4<T>> {
    if grad_out.len() != argmax.len() {
        return Err(shape_err("max_pool2d_backward", argmax.len(), grad_out.len()));
    }
    let [n, c, h, w] = input_dims;
    let mut gx = Tensor4::zeros(n, c, h, w);
    for (&g, &o) in grad_out.data().iter().zip(argmax) {
        gx.data_mut()[o] += g;
    }
    Ok(gx)
}
