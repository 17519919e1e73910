use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::optim::{cosine_lr, AdamWParams};
use super::TrainableTagger;
use crate::codec::TaggedExample;
use crate::error::{Error, Result};
use crate::num::Scalar;

/// Fine-tuning hyperparameters. Defaults: AdamW at 2e-5, cosine annealing
/// without warmup, batch size 64, one epoch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    /// Floor of the cosine schedule.
    pub min_learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub adamw: AdamWParams,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 2e-5,
            min_learning_rate: 0.0,
            batch_size: 64,
            epochs: 1,
            seed: 0,
            adamw: AdamWParams::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::Config(format!("learning_rate must be positive, got {}", self.learning_rate)));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        Ok(())
    }

    pub fn batches_per_epoch(&self, examples: usize) -> usize {
        examples.div_ceil(self.batch_size)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchRecord {
    pub epoch: usize,
    pub step: usize,
    pub size: usize,
    pub learning_rate: f64,
    pub loss: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub batches: Vec<BatchRecord>,
}

impl TrainLog {
    pub fn batch_count(&self) -> usize {
        self.batches.len()
    }

    pub fn epochs(&self) -> usize {
        self.batches.last().map_or(0, |b| b.epoch + 1)
    }

    pub fn first_loss(&self) -> Option<f64> {
        self.batches.first().map(|b| b.loss)
    }

    pub fn last_loss(&self) -> Option<f64> {
        self.batches.last().map(|b| b.loss)
    }
}

/// Trains `tagger` on shuffled mini-batches for `config.epochs` passes.
///
/// Shuffling is seeded from `config.seed`; the learning rate follows
/// [`cosine_lr`] over the total number of steps. A non-finite batch loss
/// aborts with [`Error::Diverged`].
pub fn fit_tagger<F, T>(mut tagger: T, examples: &[TaggedExample], config: &TrainConfig) -> Result<(T, TrainLog)>
where
    F: Scalar,
    T: TrainableTagger<F>,
{
    config.validate()?;
    if examples.is_empty() {
        return Err(Error::Config("no training examples".into()));
    }
    let per_epoch = config.batches_per_epoch(examples.len());
    let total = per_epoch * config.epochs;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut log = TrainLog::default();
    tagger.begin_training(config);
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(config.batch_size) {
            let step = log.batches.len();
            let lr = cosine_lr(config.learning_rate, config.min_learning_rate, step, total);
            let batch: Vec<&TaggedExample> = chunk.iter().map(|&i| &examples[i]).collect();
            let loss = tagger.train_step(&batch, F::of(lr))?.as_f64();
            if !loss.is_finite() {
                return Err(Error::Diverged { step, loss });
            }
            log.batches.push(BatchRecord { epoch, step, size: batch.len(), learning_rate: lr, loss });
        }
    }
    Ok((tagger, log))
}
