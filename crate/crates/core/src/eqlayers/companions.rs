//! Pooling, bias, normalisation and dropout layers that keep the cyclic
//! group structure intact.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{shape_err, Result};
use crate::scalar::Scalar;
use crate::tensor::{GroupLayout, Tensor4, GROUP};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupPool {
    Max,
    Mean,
}

/// Max or mean over the four cyclic channels of every group.
pub fn group_cross_channel_pool<T: Scalar>(x: &Tensor4<T>, layout: GroupLayout, mode: GroupPool) -> Result<Tensor4<T>> {
    group_pool_indexed(x, layout, mode).map(|(y, _)| y)
}

/// Pooled output and, for max pooling, the winning cyclic index per output
/// element (lowest index on ties).
pub fn group_pool_indexed<T: Scalar>(
    x: &Tensor4<T>,
    layout: GroupLayout,
    mode: GroupPool,
) -> Result<(Tensor4<T>, Vec<u8>)> {
    layout.check(x.c())?;
    let hw = x.h() * x.w();
    let quarter = T::from_f64_lossy(0.25);
    let mut out = Tensor4::zeros(x.n(), layout.groups, x.h(), x.w());
    let mut winners = Vec::new();
    if mode == GroupPool::Max {
        winners.reserve(out.len());
    }
    for n in 0..x.n() {
        for g in 0..layout.groups {
            let planes: Vec<&[T]> = (0..GROUP).map(|i| x.plane(n, layout.channel(g, i))).collect();
            let dst = out.plane_mut(n, g);
            for p in 0..hw {
                dst[p] = match mode {
                    GroupPool::Mean => (planes[0][p] + planes[1][p] + planes[2][p] + planes[3][p]) * quarter,
                    GroupPool::Max => {
                        let mut best = 0;
                        for i in 1..GROUP {
                            if planes[i][p] > planes[best][p] {
                                best = i;
                            }
                        }
                        winners.push(best as u8);
                        planes[best][p]
                    }
                };
            }
        }
    }
    Ok((out, winners))
}

pub fn group_pool_backward<T: Scalar>(
    grad_out: &Tensor4<T>,
    layout: GroupLayout,
    mode: GroupPool,
    winners: &[u8],
) -> Result<Tensor4<T>> {
    if grad_out.c() != layout.groups {
        return Err(shape_err("group_pool_backward", layout.groups, grad_out.c()));
    }
    let hw = grad_out.h() * grad_out.w();
    let quarter = T::from_f64_lossy(0.25);
    let mut gx = Tensor4::zeros(grad_out.n(), layout.channels(), grad_out.h(), grad_out.w());
    let mut k = 0;
    for n in 0..grad_out.n() {
        for g in 0..layout.groups {
            for p in 0..hw {
                let go = grad_out.plane(n, g)[p];
                match mode {
                    GroupPool::Mean => {
                        for i in 0..GROUP {
                            gx.plane_mut(n, layout.channel(g, i))[p] = go * quarter;
                        }
                    }
                    GroupPool::Max => {
                        let i = winners[k] as usize;
                        gx.plane_mut(n, layout.channel(g, i))[p] = go;
                    }
                }
                k += 1;
            }
        }
    }
    Ok(gx)
}

/// Mean over all pixels of every `(n, c)` plane; output is `(n, c, 1, 1)`.
pub fn global_spatial_avg_pool<T: Scalar>(x: &Tensor4<T>) -> Tensor4<T> {
    let hw = x.h() * x.w();
    let scale = T::one() / T::from_usize(hw.max(1)).unwrap_or_else(T::one);
    let mut out = Tensor4::zeros(x.n(), x.c(), 1, 1);
    for n in 0..x.n() {
        for c in 0..x.c() {
            let s: T = x.plane(n, c).iter().copied().sum();
            out.set(n, c, 0, 0, s * scale);
        }
    }
    out
}

pub fn global_spatial_avg_pool_backward<T: Scalar>(grad_out: &Tensor4<T>, h: usize, w: usize) -> Tensor4<T> {
    let scale = T::one() / T::from_usize((h * w).max(1)).unwrap_or_else(T::one);
    Tensor4::from_fn(grad_out.n(), grad_out.c(), h, w, |n, c, _, _| grad_out.at(n, c, 0, 0) * scale)
}

/// Adds `bias[c / group_size]` to every channel `c`. `group_size` 4 gives the
/// shared per-group bias, 1 an ordinary per-channel bias.
pub fn grouped_bias_add<T: Scalar>(x: &Tensor4<T>, bias: &[T], group_size: usize) -> Result<Tensor4<T>> {
    if group_size == 0 || x.c() != bias.len() * group_size {
        return Err(shape_err("bias_add", format!("{} channels", bias.len() * group_size), x.c()));
    }
    let mut y = x.clone();
    for n in 0..x.n() {
        for c in 0..x.c() {
            let b = bias[c / group_size];
            for v in y.plane_mut(n, c) {
                *v += b;
            }
        }
    }
    Ok(y)
}

/// Gradient of [`grouped_bias_add`] with respect to the bias.
pub fn grouped_bias_grad<T: Scalar>(grad_out: &Tensor4<T>, group_size: usize) -> Vec<T> {
    let mut gb = vec![T::zero(); grad_out.c() / group_size];
    for n in 0..grad_out.n() {
        for c in 0..grad_out.c() {
            let s: T = grad_out.plane(n, c).iter().copied().sum();
            gb[c / group_size] += s;
        }
    }
    gb
}

/// One bias value shared by the four channels of each group.
pub fn shared_bias_add<T: Scalar>(x: &Tensor4<T>, layout: GroupLayout, bias: &[T]) -> Result<Tensor4<T>> {
    layout.check(x.c())?;
    if bias.len() != layout.groups {
        return Err(shape_err("shared_bias_add", layout.groups, bias.len()));
    }
    grouped_bias_add(x, bias, GROUP)
}

pub const BATCHNORM_EPS: f64 = 1e-5;
pub const BATCHNORM_MOMENTUM: f64 = 0.1;

/// Batch normalisation whose statistics, scale and shift are shared over
/// `group_size` consecutive channels (4 for cyclic groups, 1 for plain).
#[derive(Debug, Clone, PartialEq)]
pub struct GroupBatchNorm<T: Scalar = f32> {
    pub group_size: usize,
    pub gamma: Vec<T>,
    pub beta: Vec<T>,
    pub running_mean: Vec<T>,
    pub running_var: Vec<T>,
}

/// Per-batch quantities needed by [`GroupBatchNorm::backward`].
#[derive(Debug, Clone)]
pub struct BatchNormCache<T: Scalar> {
    pub normalized: Tensor4<T>,
    pub inv_std: Vec<T>,
    pub batch_mean: Vec<T>,
    pub batch_var: Vec<T>,
    pub train: bool,
}

impl<T: Scalar> GroupBatchNorm<T> {
    pub fn new(units: usize, group_size: usize) -> Self {
        Self {
            group_size,
            gamma: vec![T::one(); units],
            beta: vec![T::zero(); units],
            running_mean: vec![T::zero(); units],
            running_var: vec![T::one(); units],
        }
    }

    pub fn units(&self) -> usize {
        self.gamma.len()
    }

    fn check(&self, x: &Tensor4<T>) -> Result<()> {
        if x.c() != self.units() * self.group_size {
            return Err(shape_err("batchnorm", self.units() * self.group_size, x.c()));
        }
        Ok(())
    }

    fn stats(&self, x: &Tensor4<T>) -> (Vec<T>, Vec<T>) {
        let hw = x.h() * x.w();
        let count = T::from_usize((x.n() * self.group_size * hw).max(1)).unwrap();
        let mut mean = vec![T::zero(); self.units()];
        let mut var = vec![T::zero(); self.units()];
        for n in 0..x.n() {
            for c in 0..x.c() {
                mean[c / self.group_size] += x.plane(n, c).iter().copied().sum();
            }
        }
        for m in &mut mean {
            *m = *m / count;
        }
        for n in 0..x.n() {
            for c in 0..x.c() {
                let m = mean[c / self.group_size];
                var[c / self.group_size] += x.plane(n, c).iter().map(|&v| (v - m) * (v - m)).sum();
            }
        }
        for v in &mut var {
            *v = *v / count;
        }
        (mean, var)
    }

    /// Normalises with batch statistics in training mode and running
    /// statistics otherwise. Running statistics are not updated here; see
    /// [`GroupBatchNorm::update_running`].
    pub fn forward(&self, x: &Tensor4<T>, train: bool) -> Result<(Tensor4<T>, BatchNormCache<T>)> {
        self.check(x)?;
        let eps = T::from_f64_lossy(BATCHNORM_EPS);
        let (mean, var) = if train {
            self.stats(x)
        } else {
            (self.running_mean.clone(), self.running_var.clone())
        };
        let inv_std: Vec<T> = var.iter().map(|&v| T::one() / (v + eps).sqrt()).collect();
        let mut normalized = x.clone();
        let mut y = x.clone();
        for n in 0..x.n() {
            for c in 0..x.c() {
                let u = c / self.group_size;
                let (m, s, g, b) = (mean[u], inv_std[u], self.gamma[u], self.beta[u]);
                for (xh, &v) in normalized.plane_mut(n, c).iter_mut().zip(x.plane(n, c)) {
                    *xh = (v - m) * s;
                }
                for (yv, &xh) in y.plane_mut(n, c).iter_mut().zip(normalized.plane(n, c)) {
                    *yv = g * xh + b;
                }
            }
        }
        Ok((y, BatchNormCache { normalized, inv_std, batch_mean: mean, batch_var: var, train }))
    }

    pub fn update_running(&mut self, cache: &BatchNormCache<T>) {
        if !cache.train {
            return;
        }
        let mom = T::from_f64_lossy(BATCHNORM_MOMENTUM);
        for u in 0..self.units() {
            self.running_mean[u] = (T::one() - mom) * self.running_mean[u] + mom * cache.batch_mean[u];
            self.running_var[u] = (T::one() - mom) * self.running_var[u] + mom * cache.batch_var[u];
        }
    }

    /// `(grad_x, grad_gamma, grad_beta)`.
    pub fn backward(&self, grad_out: &Tensor4<T>, cache: &BatchNormCache<T>) -> Result<(Tensor4<T>, Vec<T>, Vec<T>)> {
        self.check(grad_out)?;
        let units = self.units();
        let mut g_gamma = vec![T::zero(); units];
        let mut g_beta = vec![T::zero(); units];
        for n in 0..grad_out.n() {
            for c in 0..grad_out.c() {
                let u = c / self.group_size;
                for (&go, &xh) in grad_out.plane(n, c).iter().zip(cache.normalized.plane(n, c)) {
                    g_gamma[u] += go * xh;
                    g_beta[u] += go;
                }
            }
        }
        let count = T::from_usize((grad_out.n() * self.group_size * grad_out.h() * grad_out.w()).max(1)).unwrap();
        let mut gx = grad_out.clone();
        for n in 0..grad_out.n() {
            for c in 0..grad_out.c() {
                let u = c / self.group_size;
                let scale = self.gamma[u] * cache.inv_std[u];
                let xh_plane = cache.normalized.plane(n, c).to_vec();
                for (g, xh) in gx.plane_mut(n, c).iter_mut().zip(xh_plane) {
                    *g = if cache.train {
                        scale * (*g - g_beta[u] / count - xh * g_gamma[u] / count)
                    } else {
                        scale * *g
                    };
                }
            }
        }
        Ok((gx, g_gamma, g_beta))
    }
}

/// Group batch norm over cyclic groups: statistics and affine parameters
/// are shared by the four channels of a group.
pub fn group_batchnorm<T: Scalar>(
    x: &Tensor4<T>,
    layout: GroupLayout,
    bn: &GroupBatchNorm<T>,
    train: bool,
) -> Result<Tensor4<T>> {
    layout.check(x.c())?;
    if bn.group_size != GROUP || bn.units() != layout.groups {
        return Err(shape_err("group_batchnorm", layout.groups, bn.units()));
    }
    bn.forward(x, train).map(|(y, _)| y)
}

/// Inverted dropout mask: each element kept with probability `1 - rate` and
/// scaled by `1 / (1 - rate)`. Deterministic in `seed`.
pub fn dropout_mask<T: Scalar>(dims: [usize; 4], rate: f64, seed: u64) -> Tensor4<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let keep = 1.0 - rate;
    let scale = if keep > 0.0 { T::from_f64_lossy(1.0 / keep) } else { T::zero() };
    let [n, c, h, w] = dims;
    Tensor4::from_fn(n, c, h, w, |_, _, _, _| if rng.random::<f64>() < keep { scale } else { T::zero() })
}
