//! Reference path for the tied layers that rotates *feature maps* instead of
//! filters: every cyclic slot is computed by turning the input back, running
//! a plain correlation with the unrotated base filters, and turning the
//! result forward again. Used to cross-check the filter-rotating path and as
//! the slow strategy in benchmarks.

use crate::conv::{correlate2d, ConvGeometry};
use crate::eqlayers::{CycleParams, DecycleParams, EquivariantParams, IsotonicParams, TiedFilter};
use crate::error::{shape_err, DrenError, Result};
use crate::scalar::Scalar;
use crate::tensor::{max_abs_diff, max_rel_diff, GroupLayout, Tensor4, GROUP};

/// Writes `slot` (channels `a`) into channels `a * 4 + j` of `out`.
fn scatter_slot<T: Scalar>(out: &mut Tensor4<T>, slot: &Tensor4<T>, j: usize) {
    for n in 0..slot.n() {
        for a in 0..slot.c() {
            out.plane_mut(n, a * GROUP + j).copy_from_slice(slot.plane(n, a));
        }
    }
}

pub fn oracle_cycle<T: Scalar>(p: &CycleParams<T>, x: &Tensor4<T>, g: ConvGeometry) -> Result<Tensor4<T>> {
    let mut out: Option<Tensor4<T>> = None;
    for j in 0..GROUP {
        let turned = x.rotate90(-(j as i32));
        let slot = correlate2d(&turned, p.base(), g)?.rotate90(j as i32);
        let o = out.get_or_insert_with(|| Tensor4::zeros(slot.n(), slot.c() * GROUP, slot.h(), slot.w()));
        if o.h() != slot.h() || o.w() != slot.w() {
            return Err(shape_err("oracle_cycle", "square output", format!("{}x{}", slot.h(), slot.w())));
        }
        scatter_slot(o, &slot, j);
    }
    Ok(out.expect("four slots"))
}

/// Output slot `j`: input channels rolled so that slot `m` of each group
/// holds cyclic channel `m + j`, turned back by `j`, correlated with the
/// fixed base stack, turned forward by `j`.
pub fn oracle_isotonic<T: Scalar>(p: &IsotonicParams<T>, x: &Tensor4<T>, g: ConvGeometry) -> Result<Tensor4<T>> {
    let layout = GroupLayout::for_channels(x.c())?;
    if layout.groups != p.g_in() {
        return Err(shape_err("oracle_isotonic input groups", p.g_in(), layout.groups));
    }
    let mut out: Option<Tensor4<T>> = None;
    for j in 0..GROUP {
        let rolled = x.cyclic_permute(layout, -(j as i32))?.rotate90(-(j as i32));
        let slot = correlate2d(&rolled, p.base(), g)?.rotate90(j as i32);
        let o = out.get_or_insert_with(|| Tensor4::zeros(slot.n(), slot.c() * GROUP, slot.h(), slot.w()));
        if o.h() != slot.h() || o.w() != slot.w() {
            return Err(shape_err("oracle_isotonic", "square output", format!("{}x{}", slot.h(), slot.w())));
        }
        scatter_slot(o, &slot, j);
    }
    Ok(out.expect("four slots"))
}

/// Sum over cyclic slots `j` of: slot `j` turned back by `j`, correlated with
/// the base filters, turned forward by `j`.
pub fn oracle_decycle<T: Scalar>(p: &DecycleParams<T>, x: &Tensor4<T>, g: ConvGeometry) -> Result<Tensor4<T>> {
    let layout = GroupLayout::for_channels(x.c())?;
    if layout.groups != p.g_in() {
        return Err(shape_err("oracle_decycle input groups", p.g_in(), layout.groups));
    }
    let mut acc: Option<Tensor4<T>> = None;
    for j in 0..GROUP {
        let idx: Vec<usize> = (0..layout.groups).map(|b| layout.channel(b, j)).collect();
        let turned = x.gather_channels(&idx).rotate90(-(j as i32));
        let part = correlate2d(&turned, p.base(), g)?.rotate90(j as i32);
        match acc.as_mut() {
            None => acc = Some(part),
            Some(a) => a.add_assign(&part)?,
        }
    }
    Ok(acc.expect("four slots"))
}

pub fn oracle_forward<T: Scalar>(p: &EquivariantParams<T>, x: &Tensor4<T>, g: ConvGeometry) -> Result<Tensor4<T>> {
    match p {
        EquivariantParams::Cycle(p) => oracle_cycle(p, x, g),
        EquivariantParams::Isotonic(p) => oracle_isotonic(p, x, g),
        EquivariantParams::Decycle(p) => oracle_decycle(p, x, g),
    }
}

/// Outcome of running both strategies on one input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathReport {
    pub max_abs_diff: f64,
    pub max_rel_diff: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Default agreement tolerance: `1e-12` in double, `1e-5` in single precision.
pub fn default_tolerance<T: Scalar>() -> f64 {
    if T::epsilon().as_f64() < 1e-10 {
        1e-12
    } else {
        1e-5
    }
}

/// Runs the filter-rotating and the map-rotating forward passes and reports
/// their disagreement relative to the filter path's magnitude.
pub fn compare_paths<T: Scalar>(
    p: &EquivariantParams<T>,
    x: &Tensor4<T>,
    g: ConvGeometry,
    tolerance: f64,
) -> Result<PathReport> {
    let fast = p.tied().forward(x, g)?;
    let slow = oracle_forward(p, x, g)?;
    let abs = max_abs_diff(&slow, &fast);
    if !abs.is_finite() {
        return Err(DrenError::Gate(format!("{} paths disagree on output shape", p.name())));
    }
    let rel = max_rel_diff(&slow, &fast);
    Ok(PathReport { max_abs_diff: abs, max_rel_diff: rel, tolerance, pass: rel <= tolerance })
}
