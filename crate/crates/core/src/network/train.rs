use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::Dataset;
use crate::error::{DrenError, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor4;

use super::loss::{argmax, softmax_cross_entropy};
use super::model::{Mode, Model};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub lr: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    /// Epoch (0-based) from which the learning rate is multiplied by
    /// `decay`. `None` means two thirds of the way through.
    pub decay_epoch: Option<usize>,
    pub decay: f64,
    /// Keep the parameters with the lowest validation error.
    pub select_best: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 0.02,
            momentum: 0.9,
            batch_size: 32,
            epochs: 10,
            seed: 0,
            decay_epoch: None,
            decay: 0.1,
            select_best: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(DrenError::Model("batch size must be at least 1".into()));
        }
        if !(self.lr.is_finite() && self.lr > 0.0) || !(0.0..1.0).contains(&self.momentum) {
            return Err(DrenError::Model(format!("bad optimiser settings lr={} momentum={}", self.lr, self.momentum)));
        }
        Ok(())
    }

    pub fn lr_at(&self, epoch: usize) -> f64 {
        let step = self.decay_epoch.unwrap_or(2 * self.epochs / 3);
        if epoch >= step && self.epochs > 1 {
            self.lr * self.decay
        } else {
            self.lr
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub train_loss: f64,
    /// `NaN` when no validation set was given.
    pub val_error: f64,
}

fn batch_of<T: Scalar>(ds: &Dataset, idx: &[usize]) -> (Tensor4<T>, Vec<usize>) {
    (ds.images.select_batch(idx).cast(), idx.iter().map(|&i| ds.labels[i] as usize).collect())
}

/// SGD with momentum over shuffled minibatches. The seed fixes data order
/// and dropout masks; the model's initialisation comes from its own seed.
pub fn train<T: Scalar>(model: &mut Model<T>, train: &Dataset, val: &Dataset, cfg: &TrainConfig) -> Result<Vec<EpochRecord>> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(DrenError::Data("empty training set".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, Model<T>)> = None;
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let lr = cfg.lr_at(epoch);
        let mut loss_sum = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let (x, y) = batch_of::<T>(train, chunk);
            let (out, cache) = model.forward(&x, Mode::Train { seed: rng.random() })?;
            let (loss, g) = softmax_cross_entropy(&out, &y)?;
            let grads = model.backward(&cache, g)?;
            model.apply_batch_stats(&cache);
            model.sgd_step(&grads, lr, cfg.momentum)?;
            loss_sum += loss * chunk.len() as f64;
        }
        let val_error = if val.is_empty() { f64::NAN } else { evaluate(model, val, cfg.batch_size)? };
        history.push(EpochRecord { epoch: epoch + 1, train_loss: loss_sum / train.len() as f64, val_error });
        if cfg.select_best && !val.is_empty() && best.as_ref().is_none_or(|(e, _)| val_error < *e) {
            best = Some((val_error, model.clone()));
        }
    }
    if let Some((_, m)) = best {
        *model = m;
    }
    Ok(history)
}

/// Evaluation-mode predictions in batches.
pub fn predict_labels<T: Scalar>(model: &Model<T>, images: &Tensor4<f32>, batch: usize) -> Result<Vec<usize>> {
    let idx: Vec<usize> = (0..images.n()).collect();
    let mut out = Vec::with_capacity(images.n());
    for chunk in idx.chunks(batch.max(1)) {
        let x: Tensor4<T> = images.select_batch(chunk).cast();
        out.extend(argmax(&model.predict(&x)?));
    }
    Ok(out)
}

/// Fraction of misclassified samples.
pub fn evaluate<T: Scalar>(model: &Model<T>, ds: &Dataset, batch: usize) -> Result<f64> {
    if ds.is_empty() {
        return Err(DrenError::Data("cannot evaluate on an empty dataset".into()));
    }
    let pred = predict_labels(model, &ds.images, batch)?;
    let wrong = pred.iter().zip(&ds.labels).filter(|(p, &l)| **p != l as usize).count();
    Ok(wrong as f64 / ds.len() as f64)
}

/// Fraction of images whose predicted label is the same under all four
/// quarter-turns of the input.
pub fn rotation_consistency<T: Scalar>(model: &Model<T>, images: &Tensor4<f32>, batch: usize) -> Result<f64> {
    if images.n() == 0 {
        return Err(DrenError::Data("cannot measure consistency on no images".into()));
    }
    let base = predict_labels(model, images, batch)?;
    let mut same = vec![true; base.len()];
    for k in 1..4 {
        let p = predict_labels(model, &images.rotate90(k), batch)?;
        for ((s, a), b) in same.iter_mut().zip(&base).zip(&p) {
            *s &= a == b;
        }
    }
    Ok(same.iter().filter(|&&s| s).count() as f64 / base.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_decay_schedule() {
        let cfg = TrainConfig { epochs: 9, lr: 1.0, ..Default::default() };
        assert_eq!(cfg.lr_at(5), 1.0);
        assert!((cfg.lr_at(6) - 0.1).abs() < 1e-15);
        assert!(TrainConfig { batch_size: 0, ..Default::default() }.validate().is_err());
    }
}
