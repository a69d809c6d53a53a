//! Dense rank-4 tensors and the two exact symmetry operators of the layer
//! algebra: the 90° spatial rotation `R` and the cyclic channel shift `P`.
//!
//! Rotation convention (counterclockwise positive): for one quarter turn
//! `out[n, c, i, j] = in[n, c, j, w - 1 - i]`, and the spatial dims swap.
//! Channel shift convention: within every group of four channels the
//! channel at cyclic index `i` moves to cyclic index `i + times (mod 4)`.

use std::fmt;

use rand::Rng;

use crate::error::{shape_err, DrenError, Result};
use crate::scalar::Scalar;

/// Number of channels in one rotation group.
pub const GROUP: usize = 4;

/// Dense `(n, c, h, w)` array, row-major.
#[derive(Clone, PartialEq)]
pub struct Tensor4<T = f32> {
    n: usize,
    c: usize,
    h: usize,
    w: usize,
    data: Vec<T>,
}

/// Convolution weights `(c_out, c_in, kh, kw)`. Same storage as [`Tensor4`];
/// [`Tensor4::rotate90`] on a filter rotates every kernel slice.
pub type Filter4<T = f32> = Tensor4<T>;

impl<T: Scalar> fmt::Debug for Tensor4<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Tensor4{:?}", self.dims())?;
        if self.data.len() <= 32 {
            write!(f, " {:?}", self.data)?;
        }
        Ok(())
    }
}

impl<T: Scalar> Tensor4<T> {
    pub fn zeros(n: usize, c: usize, h: usize, w: usize) -> Self {
        Self::filled(n, c, h, w, T::zero())
    }

    pub fn filled(n: usize, c: usize, h: usize, w: usize, v: T) -> Self {
        Self { n, c, h, w, data: vec![v; n * c * h * w] }
    }

    pub fn from_vec(n: usize, c: usize, h: usize, w: usize, data: Vec<T>) -> Result<Self> {
        let want = n * c * h * w;
        if data.len() != want {
            return Err(shape_err("Tensor4::from_vec", want, data.len()));
        }
        Ok(Self { n, c, h, w, data })
    }

    pub fn from_fn(
        n: usize,
        c: usize,
        h: usize,
        w: usize,
        mut f: impl FnMut(usize, usize, usize, usize) -> T,
    ) -> Self {
        let mut data = Vec::with_capacity(n * c * h * w);
        for a in 0..n {
            for b in 0..c {
                for i in 0..h {
                    for j in 0..w {
                        data.push(f(a, b, i, j));
                    }
                }
            }
        }
        Self { n, c, h, w, data }
    }

    /// Uniform random entries in `[lo, hi)`.
    pub fn random<R: Rng + ?Sized>(dims: [usize; 4], lo: f64, hi: f64, rng: &mut R) -> Self {
        let [n, c, h, w] = dims;
        let data = (0..n * c * h * w)
            .map(|_| T::from_f64_lossy(rng.random_range(lo..hi)))
            .collect();
        Self { n, c, h, w, data }
    }

    #[inline]
    pub fn dims(&self) -> [usize; 4] {
        [self.n, self.c, self.h, self.w]
    }
    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }
    #[inline]
    pub fn c(&self) -> usize {
        self.c
    }
    #[inline]
    pub fn h(&self) -> usize {
        self.h
    }
    #[inline]
    pub fn w(&self) -> usize {
        self.w
    }
    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }
    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
    #[inline]
    pub fn data(&self) -> &[T] {
        &self.data
    }
    #[inline]
    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }
    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn offset(&self, n: usize, c: usize, i: usize, j: usize) -> usize {
        ((n * self.c + c) * self.h + i) * self.w + j
    }
    #[inline]
    pub fn at(&self, n: usize, c: usize, i: usize, j: usize) -> T {
        self.data[self.offset(n, c, i, j)]
    }
    #[inline]
    pub fn set(&mut self, n: usize, c: usize, i: usize, j: usize, v: T) {
        let o = self.offset(n, c, i, j);
        self.data[o] = v;
    }

    /// Contiguous `h * w` plane of one `(n, c)` pair.
    pub fn plane(&self, n: usize, c: usize) -> &[T] {
        let o = self.offset(n, c, 0, 0);
        &self.data[o..o + self.h * self.w]
    }

    pub fn plane_mut(&mut self, n: usize, c: usize) -> &mut [T] {
        let o = self.offset(n, c, 0, 0);
        let len = self.h * self.w;
        &mut self.data[o..o + len]
    }

    /// Same data reinterpreted with new dims of equal element count.
    pub fn reshape(self, n: usize, c: usize, h: usize, w: usize) -> Result<Self> {
        Self::from_vec(n, c, h, w, self.data)
    }

    pub fn cast<U: Scalar>(&self) -> Tensor4<U> {
        Tensor4 {
            n: self.n,
            c: self.c,
            h: self.h,
            w: self.w,
            data: self.data.iter().map(|v| U::from_f64_lossy(v.as_f64())).collect(),
        }
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        self.with_data(self.data.iter().map(|&v| f(v)).collect())
    }

    /// Tensor with the dims of `self` and the given data.
    pub(crate) fn with_data(&self, data: Vec<T>) -> Self {
        debug_assert_eq!(data.len(), self.data.len());
        Self { n: self.n, c: self.c, h: self.h, w: self.w, data }
    }

    fn check_same(&self, other: &Self, op: &'static str) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(shape_err(op, format!("{:?}", self.dims()), format!("{:?}", other.dims())));
        }
        Ok(())
    }

    /// Rotate every `(n, c)` plane by `times` quarter turns counterclockwise.
    /// `times` is taken modulo 4, negative values allowed.
    pub fn rotate90(&self, times: i32) -> Self {
        let t = times.rem_euclid(4);
        let (h, w) = (self.h, self.w);
        let (oh, ow) = if t % 2 == 1 { (w, h) } else { (h, w) };
        let mut out = Vec::with_capacity(self.data.len());
        for plane in self.data.chunks_exact((h * w).max(1)).take(self.n * self.c) {
            for i in 0..oh {
                for j in 0..ow {
                    let (si, sj) = match t {
                        0 => (i, j),
                        1 => (j, w - 1 - i),
                        2 => (h - 1 - i, w - 1 - j),
                        _ => (h - 1 - j, i),
                    };
                    out.push(plane[si * w + sj]);
                }
            }
        }
        Self { n: self.n, c: self.c, h: oh, w: ow, data: out }
    }

    /// Cyclic shift of channels within each group of four: destination
    /// cyclic index = source cyclic index + `times` (mod 4).
    pub fn cyclic_permute(&self, layout: GroupLayout, times: i32) -> Result<Self> {
        layout.check(self.c)?;
        let t = times.rem_euclid(4) as usize;
        let hw = self.h * self.w;
        let mut out = Vec::with_capacity(self.data.len());
        for n in 0..self.n {
            for g in 0..layout.groups {
                for j in 0..GROUP {
                    let src = g * GROUP + (j + GROUP - t) % GROUP;
                    let o = (n * self.c + src) * hw;
                    out.extend_from_slice(&self.data[o..o + hw]);
                }
            }
        }
        Ok(self.with_data(out))
    }

    /// New tensor with channel `k` equal to channel `idx[k]` of `self`.
    pub fn gather_channels(&self, idx: &[usize]) -> Self {
        let hw = self.h * self.w;
        let mut out = Vec::with_capacity(self.n * idx.len() * hw);
        for n in 0..self.n {
            for &c in idx {
                let o = (n * self.c + c) * hw;
                out.extend_from_slice(&self.data[o..o + hw]);
            }
        }
        Self { n: self.n, c: idx.len(), h: self.h, w: self.w, data: out }
    }

    /// Batch items `idx` stacked in order.
    pub fn select_batch(&self, idx: &[usize]) -> Self {
        let item = self.c * self.h * self.w;
        let mut out = Vec::with_capacity(idx.len() * item);
        for &n in idx {
            out.extend_from_slice(&self.data[n * item..(n + 1) * item]);
        }
        Self { n: idx.len(), c: self.c, h: self.h, w: self.w, data: out }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same(other, "add")?;
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| a + b).collect();
        Ok(self.with_data(data))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same(other, "sub")?;
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| a - b).collect();
        Ok(self.with_data(data))
    }

    pub fn add_assign(&mut self, other: &Self) -> Result<()> {
        self.check_same(other, "add_assign")?;
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        Ok(())
    }

    pub fn scale(&self, k: T) -> Self {
        self.map(|v| v * k)
    }

    pub fn relu(&self) -> Self {
        self.map(|v| if v > T::zero() { v } else { T::zero() })
    }

    /// Per `(n, pixel)` maximum over channels `range`, one output channel.
    pub fn channel_max(&self, range: std::ops::Range<usize>) -> Result<Self> {
        self.channel_reduce(range, |vals| vals.fold(T::neg_infinity(), T::max))
    }

    /// Per `(n, pixel)` mean over channels `range`, one output channel.
    pub fn channel_mean(&self, range: std::ops::Range<usize>) -> Result<Self> {
        let k = T::from_usize(range.len()).unwrap_or_else(T::one);
        self.channel_reduce(range, |vals| vals.fold(T::zero(), |a, b| a + b) / k)
    }

    fn channel_reduce(
        &self,
        range: std::ops::Range<usize>,
        f: impl Fn(&mut dyn Iterator<Item = T>) -> T,
    ) -> Result<Self> {
        if range.is_empty() || range.end > self.c {
            return Err(shape_err("channel reduction", format!("range within 0..{}", self.c), format!("{range:?}")));
        }
        let hw = self.h * self.w;
        let mut out = Vec::with_capacity(self.n * hw);
        for n in 0..self.n {
            for p in 0..hw {
                let mut it = range.clone().map(|c| self.data[(n * self.c + c) * hw + p]);
                out.push(f(&mut it));
            }
        }
        Ok(Self { n: self.n, c: 1, h: self.h, w: self.w, data: out })
    }

    pub fn sum(&self) -> T {
        self.data.iter().copied().sum()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Inner product of the flattened tensors.
    pub fn dot(&self, other: &Self) -> Result<T> {
        self.check_same(other, "dot")?;
        Ok(self.data.iter().zip(&other.data).map(|(&a, &b)| a * b).sum())
    }
}

/// Largest elementwise absolute difference. `f64::INFINITY` on a shape mismatch.
pub fn max_abs_diff<T: Scalar>(a: &Tensor4<T>, b: &Tensor4<T>) -> f64 {
    if a.dims() != b.dims() {
        return f64::INFINITY;
    }
    a.data()
        .iter()
        .zip(b.data())
        .fold(0.0, |m, (&x, &y)| f64::max(m, (x.as_f64() - y.as_f64()).abs()))
}

/// Largest absolute difference normalised by the magnitude of `reference`.
pub fn max_rel_diff<T: Scalar>(a: &Tensor4<T>, reference: &Tensor4<T>) -> f64 {
    let scale = reference.max_abs().as_f64().max(f64::MIN_POSITIVE);
    max_abs_diff(a, reference) / scale
}

/// Interpretation of a channel axis as `groups` bundles of four cyclically
/// ordered channels: channel = `group * 4 + cyclic_index`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GroupLayout {
    pub groups: usize,
}

impl GroupLayout {
    pub fn new(groups: usize) -> Self {
        Self { groups }
    }

    pub fn for_channels(channels: usize) -> Result<Self> {
        if channels == 0 || channels % GROUP != 0 {
            return Err(DrenError::Layout { channels });
        }
        Ok(Self { groups: channels / GROUP })
    }

    pub fn channels(&self) -> usize {
        self.groups * GROUP
    }

    #[inline]
    pub fn channel(&self, group: usize, cyclic: usize) -> usize {
        group * GROUP + cyclic
    }

    pub(crate) fn check(&self, channels: usize) -> Result<()> {
        if channels % GROUP != 0 {
            return Err(DrenError::Layout { channels });
        }
        if channels != self.channels() {
            return Err(shape_err("group layout", self.channels(), channels));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(7)
    }

    #[test]
    fn rotate_quarter_turn_small() {
        let t = Tensor4::<f64>::from_vec(1, 1, 2, 2, vec![1., 2., 3., 4.]).unwrap();
        assert_eq!(t.rotate90(1).data(), &[2., 4., 1., 3.]);
        assert_eq!(t.rotate90(-3), t.rotate90(1));
    }

    #[test]
    fn rotate_four_times_is_identity() {
        let t = Tensor4::<f32>::random([2, 3, 4, 5], -1.0, 1.0, &mut rng());
        assert_eq!(t.rotate90(4), t);
        assert_eq!(t.rotate90(0), t);
        assert_eq!(t.rotate90(1).rotate90(1).rotate90(1).rotate90(1), t);
    }

    #[test]
    fn half_turn_matches_index_oracle() {
        let t = Tensor4::<f64>::random([1, 1, 5, 5], -1.0, 1.0, &mut rng());
        let oracle = Tensor4::from_fn(1, 1, 5, 5, |n, c, i, j| t.at(n, c, 4 - i, 4 - j));
        assert_eq!(t.rotate90(2), oracle);
    }

    #[test]
    fn non_square_rotation_swaps_dims() {
        let t = Tensor4::<f64>::random([1, 2, 3, 5], 0.0, 1.0, &mut rng());
        let r = t.rotate90(1);
        assert_eq!(r.dims(), [1, 2, 5, 3]);
        assert_eq!(r.rotate90(-1), t);
    }

    #[test]
    fn cyclic_permute_moves_forward() {
        let t = Tensor4::<f64>::from_vec(1, 4, 1, 1, vec![1., 2., 3., 4.]).unwrap();
        let p = t.cyclic_permute(GroupLayout::new(1), 1).unwrap();
        assert_eq!(p.data(), &[4., 1., 2., 3.]);
        assert_eq!(t.cyclic_permute(GroupLayout::new(1), 4).unwrap(), t);
    }

    #[test]
    fn cyclic_permute_composes() {
        let t = Tensor4::<f64>::random([2, 8, 3, 3], -1.0, 1.0, &mut rng());
        let l = GroupLayout::new(2);
        let thrice = t
            .cyclic_permute(l, 1)
            .and_then(|x| x.cyclic_permute(l, 1))
            .and_then(|x| x.cyclic_permute(l, 1))
            .unwrap();
        assert_eq!(thrice, t.cyclic_permute(l, 3).unwrap());
    }

    #[test]
    fn cyclic_permute_rejects_bad_layout() {
        let t = Tensor4::<f64>::zeros(1, 6, 2, 2);
        assert!(matches!(
            t.cyclic_permute(GroupLayout::new(1), 1),
            Err(DrenError::Layout { channels: 6 })
        ));
        assert!(GroupLayout::for_channels(6).is_err());
    }

    #[test]
    fn elementwise_ops() {
        let t = Tensor4::<f64>::random([1, 2, 3, 3], -1.0, 1.0, &mut rng());
        let z = t.add(&t.scale(-1.0)).unwrap();
        assert!(z.data().iter().all(|&v| v == 0.0));
        let r = Tensor4::<f64>::from_vec(1, 1, 1, 3, vec![-1., 0., 2.]).unwrap().relu();
        assert_eq!(r.data(), &[0., 0., 2.]);
        assert!(t.add(&Tensor4::zeros(1, 2, 3, 4)).is_err());
    }

    #[test]
    fn channel_reductions() {
        let t = Tensor4::<f64>::from_vec(1, 4, 1, 1, vec![1., 2., 3., 4.]).unwrap();
        assert_eq!(t.channel_max(0..4).unwrap().data(), &[4.]);
        assert_eq!(t.channel_mean(0..4).unwrap().data(), &[2.5]);
        assert!(t.channel_mean(2..6).is_err());
    }

    #[test]
    fn rotation_distributes_over_addition() {
        let mut r = rng();
        let a = Tensor4::<f64>::random([2, 3, 6, 6], -1.0, 1.0, &mut r);
        let b = Tensor4::<f64>::random([2, 3, 6, 6], -1.0, 1.0, &mut r);
        for k in 0..4 {
            assert_eq!(a.add(&b).unwrap().rotate90(k), a.rotate90(k).add(&b.rotate90(k)).unwrap());
        }
    }
}
