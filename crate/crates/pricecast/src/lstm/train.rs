//! Seeded mini-batch training with per-epoch loss tracking and
//! best-validation-snapshot selection.
//!
//! Samples within a batch are independent, so their gradients are computed
//! in parallel; per-sample dropout streams are drawn up front from the
//! master stream and the partial gradients are reduced in sample order, so
//! results do not depend on thread scheduling.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use super::adam::{adam_step, AdamState};
use super::backward::backward;
use super::{stack_forward, DropoutMode, LstmStack};
use crate::dataset::WindowedDataset;
use crate::error::{Error, Result};
use crate::sim;

/// Training hyperparameters. Defaults: 50 epochs, batch size 32, Adam with
/// learning rate 0.001, beta1 0.9, beta2 0.999, epsilon 1e-8, shuffling on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
    pub shuffle: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 50,
            batch_size: 32,
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 42,
            shuffle: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Config(
                "epochs and batch_size must be positive".to_string(),
            ));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::Config("adam betas must lie in (0, 1)".to_string()));
        }
        if self.learning_rate <= 0.0 || self.epsilon <= 0.0 {
            return Err(Error::Config(
                "learning rate and epsilon must be positive".to_string(),
            ));
        }
        Ok(())
    }
}

/// Per-epoch loss record. `train_mse` averages the train-mode minibatch
/// losses seen during the epoch; `val_mse` is a full inference-mode pass
/// over the validation set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_mse: f64,
    pub val_mse: f64,
}

/// Mean squared error between two aligned sequences.
pub fn mse_loss(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    if predictions.len() != targets.len() {
        return Err(Error::LengthMismatch {
            left: predictions.len(),
            right: targets.len(),
        });
    }
    if predictions.is_empty() {
        return Err(Error::Empty("loss inputs"));
    }
    let sum: f64 = predictions
        .iter()
        .zip(targets)
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    Ok(sum / predictions.len() as f64)
}

/// Inference-mode MSE of a stack over a windowed dataset.
pub fn dataset_mse(stack: &LstmStack, data: &WindowedDataset) -> Result<f64> {
    let predictions = data
        .inputs
        .par_iter()
        .map(|input| stack.predict(input))
        .collect::<Result<Vec<f64>>>()?;
    mse_loss(&predictions, &data.targets)
}

/// Train a stack by seeded mini-batch gradient descent with Adam, recording
/// train/val MSE per epoch and returning the parameter snapshot with the
/// best validation loss.
pub fn train(
    stack: LstmStack,
    train_set: &WindowedDataset,
    val_set: &WindowedDataset,
    config: &TrainConfig,
) -> Result<(LstmStack, Vec<EpochStats>)> {
    config.validate()?;
    if train_set.is_empty() {
        return Err(Error::Empty("training set"));
    }
    if val_set.is_empty() {
        return Err(Error::Empty("validation set"));
    }

    let mut current = stack;
    let mut shuffle_rng = sim::seeded_rng(sim::derive_seed(config.seed, 1));
    let mut dropout_rng = sim::seeded_rng(sim::derive_seed(config.seed, 2));
    let mut adam = AdamState::new(&current);
    let mut step = 0usize;

    let mut history = Vec::with_capacity(config.epochs);
    let mut best: Option<(f64, LstmStack)> = None;

    let n = train_set.len();
    let mut order: Vec<usize> = (0..n).collect();
    for epoch in 1..=config.epochs {
        if config.shuffle {
            order.shuffle(&mut shuffle_rng);
        }

        let mut squared_error_total = 0.0;
        for batch in order.chunks(config.batch_size) {
            let batch_len = batch.len() as f64;
            // one dropout sub-stream per sample, drawn sequentially
            let sample_seeds: Vec<u64> = batch.iter().map(|_| dropout_rng.random()).collect();

            let results = batch
                .par_iter()
                .zip(sample_seeds)
                .map(|(&idx, sample_seed)| {
                    let input = &train_set.inputs[idx];
                    let target = train_set.targets[idx];
                    let mut rng = sim::seeded_rng(sample_seed);
                    let (pred, cache) =
                        stack_forward(&current, input, DropoutMode::Train, Some(&mut rng))?;
                    let err = pred - target;
                    // d(batch MSE)/dpred for this sample
                    let sample = backward(&current, &cache, 2.0 * err / batch_len)?;
                    Ok((err * err, sample))
                })
                .collect::<Result<Vec<_>>>()?;

            let mut grads = current.zero_gradients();
            for (squared_error, sample) in results {
                squared_error_total += squared_error;
                for (acc, g) in grads.tensors_mut().iter_mut().zip(sample.tensors()) {
                    for (a, b) in acc.iter_mut().zip(g.iter()) {
                        *a += b;
                    }
                }
            }
            step += 1;
            adam_step(&mut current, &grads, &mut adam, config, step)?;
        }

        let train_mse = squared_error_total / n as f64;
        let val_mse = dataset_mse(&current, val_set)?;
        if !train_mse.is_finite() || !val_mse.is_finite() {
            return Err(Error::Divergence {
                epoch,
                detail: format!("train mse {train_mse}, val mse {val_mse}"),
            });
        }
        history.push(EpochStats {
            epoch,
            train_mse,
            val_mse,
        });
        if best.as_ref().map_or(true, |(b, _)| val_mse < *b) {
            best = Some((val_mse, current.clone()));
        }
    }

    let (_, snapshot) = best.expect("at least one epoch ran");
    Ok((snapshot, history))
}
