use crate::error::Result;
use crate::tensor::Tensor4;

use super::loss::softmax_cross_entropy;
use super::model::{Mode, Model};

/// Central difference `(f(x + eps) - f(x - eps)) / 2 eps`.
pub fn central_difference(f: impl Fn(f64) -> f64, x: f64, eps: f64) -> f64 {
    (f(x + eps) - f(x - eps)) / (2.0 * eps)
}

/// Floor on the denominator of the relative error, so that gradients which
/// are zero up to rounding do not blow the ratio up.
pub const REL_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub max_abs_error: f64,
    pub checked: usize,
    /// Entries whose `+eps`/`-eps` probes fell on different sides of a ReLU
    /// or pooling switch and were re-measured with a smaller step.
    pub kinks: usize,
    /// Entries still straddling a switch at the smallest step; left out.
    pub skipped: usize,
    /// `(layer, tensor, element)` of the worst entry.
    pub worst: (usize, usize, usize),
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(REL_FLOOR)
}

/// Compares backpropagated gradients of the mean cross-entropy against
/// central differences for every trainable scalar, or only the tied bases
/// when `tied_only` is set. Runs in training mode with a fixed dropout seed.
///
/// A probe pair that crosses a ReLU or pooling switch measures a kink, not
/// the derivative; such entries are retried with steps `eps/10` and
/// `eps/100`.
pub fn finite_diff_check(model: &Model<f64>, x: &Tensor4<f64>, labels: &[usize], eps: f64, tied_only: bool) -> Result<GradCheckReport> {
    let mode = Mode::Train { seed: 0 };
    let (out, cache) = model.forward(x, mode)?;
    let (_, g) = softmax_cross_entropy(&out, labels)?;
    let grads = model.backward(&cache, g)?;

    let loss_of = |m: &Model<f64>| -> Result<(f64, Vec<usize>)> {
        let (out, cache) = m.forward(x, mode)?;
        Ok((softmax_cross_entropy(&out, labels)?.0, m.switch_pattern(&cache)))
    };

    let mut probe = model.clone();
    let mut report = GradCheckReport { max_rel_error: 0.0, max_abs_error: 0.0, checked: 0, kinks: 0, skipped: 0, worst: (0, 0, 0) };
    for (li, layer) in model.layers().iter().enumerate() {
        if tied_only && !layer.spec.kind.is_tied() {
            continue;
        }
        let tensors = layer.tensors();
        let blob = layer.blob();
        let mut offset = 0;
        for (ti, t) in tensors.iter().enumerate() {
            for e in 0..t.len() {
                let at = offset + e;
                let mut eval = |delta: f64| -> Result<(f64, Vec<usize>)> {
                    let mut b = blob.clone();
                    b[at] += delta;
                    probe.layers_mut()[li].set_blob(&b)?;
                    loss_of(&probe)
                };
                let mut numeric = None;
                for step in [eps, eps / 10.0, eps / 100.0] {
                    let (up, pu) = eval(step)?;
                    let (down, pd) = eval(-step)?;
                    if pu == pd {
                        numeric = Some((up - down) / (2.0 * step));
                        break;
                    }
                    if step == eps {
                        report.kinks += 1;
                    }
                }
                let Some(numeric) = numeric else {
                    report.skipped += 1;
                    continue;
                };
                let analytic = grads.0[li][ti][e];
                let r = rel(analytic, numeric);
                report.max_abs_error = report.max_abs_error.max((analytic - numeric).abs());
                if r > report.max_rel_error {
                    report.max_rel_error = r;
                    report.worst = (li, ti, e);
                }
                report.checked += 1;
            }
            offset += t.len();
        }
        probe.layers_mut()[li].set_blob(&blob)?;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_linear_function_is_exact() {
        let d = central_difference(|x| 3.0 * x + 2.0, 0.5, 0.25);
        assert_eq!(d, 3.0);
    }

    #[test]
    fn relative_error_is_floored() {
        assert_eq!(rel(0.0, 1e-12), 1e-12 / REL_FLOOR);
        assert_eq!(rel(2.0, 1.0), 0.5);
    }
}
