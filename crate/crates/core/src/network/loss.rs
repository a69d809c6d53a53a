use crate::error::{shape_err, DrenError, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor4;

/// Mean softmax cross-entropy over the batch and its gradient with respect
/// to the logits. Logits are `(n, classes, 1, 1)`.
pub fn softmax_cross_entropy<T: Scalar>(logits: &Tensor4<T>, labels: &[usize]) -> Result<(f64, Tensor4<T>)> {
    let [n, classes, h, w] = logits.dims();
    if h * w != 1 {
        return Err(shape_err("softmax_cross_entropy", "(n, classes, 1, 1)", format!("{:?}", logits.dims())));
    }
    if labels.len() != n {
        return Err(shape_err("softmax_cross_entropy labels", n, labels.len()));
    }
    if let Some(&label) = labels.iter().find(|&&l| l >= classes) {
        return Err(DrenError::Label { label, classes });
    }
    let mut grad = vec![T::zero(); n * classes];
    let mut total = 0.0;
    for (b, &label) in labels.iter().enumerate() {
        let row: Vec<f64> = logits.data()[b * classes..(b + 1) * classes].iter().map(|v| v.as_f64()).collect();
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = row.iter().map(|v| (v - max).exp()).collect();
        let z: f64 = exps.iter().sum();
        total += z.ln() - (row[label] - max);
        for (k, e) in exps.iter().enumerate() {
            let p = e / z - if k == label { 1.0 } else { 0.0 };
            grad[b * classes + k] = T::from_f64_lossy(p / n as f64);
        }
    }
    let loss = total / n as f64;
    if !loss.is_finite() {
        return Err(DrenError::NonFinite("softmax_cross_entropy"));
    }
    Ok((loss, Tensor4::from_vec(n, classes, 1, 1, grad)?))
}

/// Index of the largest logit per sample; ties go to the lowest index.
pub fn argmax<T: Scalar>(logits: &Tensor4<T>) -> Vec<usize> {
    let [n, c, h, w] = logits.dims();
    let per = c * h * w;
    (0..n)
        .map(|b| {
            let row = &logits.data()[b * per..(b + 1) * per];
            let mut best = 0;
            for (k, v) in row.iter().enumerate() {
                if *v > row[best] {
                    best = k;
                }
            }
            best
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_logits_give_ln_classes() {
        let (l, g) = softmax_cross_entropy(&Tensor4::<f64>::zeros(1, 2, 1, 1), &[0]).unwrap();
        assert!((l - 2f64.ln()).abs() < 1e-15);
        assert_eq!(g.data(), &[-0.5, 0.5]);
    }

    #[test]
    fn confident_correct_logit_gives_zero_loss() {
        let x = Tensor4::<f64>::from_vec(1, 3, 1, 1, vec![1000.0, 0.0, -5.0]).unwrap();
        let (l, _) = softmax_cross_entropy(&x, &[0]).unwrap();
        assert!(l.abs() < 1e-300);
    }

    #[test]
    fn label_range_checked() {
        let x = Tensor4::<f32>::zeros(2, 3, 1, 1);
        assert_eq!(softmax_cross_entropy(&x, &[0, 3]).unwrap_err(), DrenError::Label { label: 3, classes: 3 });
    }

    #[test]
    fn argmax_lowest_on_ties() {
        let x = Tensor4::<f32>::from_vec(2, 3, 1, 1, vec![1.0, 2.0, 2.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(argmax(&x), vec![1, 0]);
    }
}
