//! The training loop: epochs of shuffled minibatches, forward → loss →
//! backward → Adam step, with per-epoch train/validation loss reporting.
//!
//! Everything is derived from one seed: model init uses the seed itself,
//! noise and shuffling use per-purpose derived streams, so a (seed, config)
//! pair reproduces a run bit for bit.

use std::time::Instant;

use crate::data::{add_gaussian_noise, batch_iter, Dataset, NoisyPair};
use crate::error::{Error, Result};
use crate::loss::{self, LossKind};
use crate::model::Model;
use crate::optim::{Adam, AdamConfig};
use crate::rng::Rng;

const STREAM_TRAIN_NOISE: u64 = 1;
const STREAM_SHUFFLE: u64 = 2;
const STREAM_VAL_NOISE: u64 = 3;

const EVAL_BATCH: usize = 256;

/// The stream that corrupts validation images. Shared with standalone
/// evaluation so a checkpoint scores identically there and during training.
pub fn validation_noise_rng(seed: u64) -> Rng {
    Rng::derive(seed, STREAM_VAL_NOISE, 0)
}

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub loss: LossKind,
    pub noise_factor: f32,
    pub seed: u64,
    /// Keep the first epoch's corruption for every epoch instead of drawing
    /// fresh noise each pass.
    pub freeze_noise: bool,
    pub adam: AdamConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 20,
            batch_size: 128,
            loss: LossKind::Bce,
            noise_factor: 0.5,
            seed: 1,
            freeze_noise: false,
            adam: AdamConfig::default(),
        }
    }
}

/// One line of training progress.
#[derive(Debug, Clone)]
pub struct EpochReport {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub seconds: f64,
}

/// Mean loss of the model over all pairs, batched for memory. Pure: no
/// parameter is touched.
pub fn evaluate(model: &mut Model<f32>, pairs: &NoisyPair, kind: LossKind) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::Argument("cannot evaluate an empty dataset".into()));
    }
    let n = pairs.len();
    let per_image: usize = pairs.clean.shape()[1..].iter().product();
    let mut total = 0.0f64;
    let mut start = 0;
    while start < n {
        let end = (start + EVAL_BATCH).min(n);
        let mut shape = pairs.clean.shape().to_vec();
        shape[0] = end - start;
        let noisy = crate::tensor::Tensor::from_vec(
            &shape,
            pairs.noisy.data()[start * per_image..end * per_image].to_vec(),
        )?;
        let clean = crate::tensor::Tensor::from_vec(
            &shape,
            pairs.clean.data()[start * per_image..end * per_image].to_vec(),
        )?;
        let pred = model.forward(&noisy)?;
        let value = loss::compute(kind, &pred, &clean)?.value as f64;
        total += value * (end - start) as f64;
        start = end;
    }
    Ok(total / n as f64)
}

/// Trains for `cfg.epochs` epochs and reports once per epoch.
///
/// Each epoch regenerates the corruption (unless frozen), walks one shuffled
/// pass of minibatches, and then evaluates on the fixed validation pairs.
/// A non-finite loss aborts immediately, naming the epoch and batch.
pub fn fit(
    model: &mut Model<f32>,
    train: &Dataset,
    val: &Dataset,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochReport),
) -> Result<Vec<EpochReport>> {
    if cfg.epochs == 0 {
        return Err(Error::Argument("epochs must be at least 1".into()));
    }
    if cfg.batch_size == 0 {
        return Err(Error::Argument("batch size must be at least 1".into()));
    }
    if train.is_empty() {
        return Err(Error::Argument("training set is empty".into()));
    }
    if train.images().shape()[1..] != *model.input_shape() {
        return Err(Error::shape(
            "fit",
            train.images().shape(),
            model.input_shape(),
        ));
    }

    // Validation corruption is drawn once so epochs stay comparable.
    let mut val_rng = validation_noise_rng(cfg.seed);
    let val_pairs = add_gaussian_noise(val.images(), cfg.noise_factor, &mut val_rng)?;

    let mut optimizer = Adam::new(cfg.adam);
    let mut reports = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let started = Instant::now();
        let noise_epoch = if cfg.freeze_noise { 0 } else { epoch as u64 };
        let mut noise_rng = Rng::derive(cfg.seed, STREAM_TRAIN_NOISE, noise_epoch);
        let pairs = add_gaussian_noise(train.images(), cfg.noise_factor, &mut noise_rng)?;

        let mut shuffle_rng = Rng::derive(cfg.seed, STREAM_SHUFFLE, epoch as u64);
        let mut loss_weighted = 0.0f64;
        for (batch_idx, (noisy, clean)) in
            batch_iter(&pairs, cfg.batch_size, &mut shuffle_rng)?.enumerate()
        {
            let pred = model.forward(&noisy)?;
            let batch_loss = loss::compute(cfg.loss, &pred, &clean)?;
            if !batch_loss.value.is_finite() {
                return Err(Error::NonFiniteLoss {
                    epoch: epoch + 1,
                    batch: batch_idx,
                });
            }
            model.backward(&batch_loss.grad)?;
            optimizer.step_model(model)?;
            loss_weighted += batch_loss.value as f64 * noisy.shape()[0] as f64;
        }

        let report = EpochReport {
            epoch: epoch + 1,
            train_loss: loss_weighted / train.len() as f64,
            val_loss: evaluate(model, &val_pairs, cfg.loss)?,
            seconds: started.elapsed().as_secs_f64(),
        };
        on_epoch(&report);
        reports.push(report);
    }
    Ok(reports)
}
