use std::collections::HashMap;

use crate::codec::{Query, Tag, TagDistribution, TaggedExample};
use crate::error::Result;
use crate::num::Scalar;

/// A label-conditioned BIO tagger: reads the prefixed query and returns one
/// `(B, I, O)` distribution per body token.
pub trait Tagger<F: Scalar> {
    fn predict(&self, query: &Query) -> Result<TagDistribution<F>>;
}

impl<F: Scalar, T: Tagger<F> + ?Sized> Tagger<F> for &T {
    fn predict(&self, query: &Query) -> Result<TagDistribution<F>> {
        (**self).predict(query)
    }
}

/// A tagger that can be fitted by [`fit_tagger`](super::fit_tagger).
pub trait TrainableTagger<F: Scalar>: Tagger<F> {
    /// Called once before the first batch of a training run.
    fn begin_training(&mut self, config: &super::TrainConfig);

    /// One optimizer step on `batch`; returns the mean per-token loss.
    fn train_step(&mut self, batch: &[&TaggedExample], lr: F) -> Result<F>;
}

/// Answers known queries with their stored tags and everything else with all-`O`.
///
/// Handy as a gold oracle: feeding it the training examples derived from a
/// gold dataset reproduces that dataset's annotations.
#[derive(Clone, Debug, Default)]
pub struct LookupTagger {
    table: HashMap<(String, Vec<String>), Vec<Tag>>,
    confidence: f64,
}

impl LookupTagger {
    pub fn new<'a>(examples: impl IntoIterator<Item = &'a TaggedExample>) -> Self {
        let table =
            examples.into_iter().map(|ex| ((ex.label.clone(), ex.body_tokens.clone()), ex.tags.clone())).collect();
        Self { table, confidence: 0.98 }
    }

    /// Probability given to the stored tag (the rest is split evenly).
    pub fn with_confidence(mut self, p: f64) -> Self {
        self.confidence = p;
        self
    }
}

impl<F: Scalar> Tagger<F> for LookupTagger {
    fn predict(&self, query: &Query) -> Result<TagDistribution<F>> {
        let key = (query.label.clone(), query.body_tokens.clone());
        let eps = F::of((1.0 - self.confidence) / 2.0);
        Ok(match self.table.get(&key) {
            Some(tags) => TagDistribution::one_hot(tags, eps),
            None => TagDistribution::one_hot(&vec![Tag::O; query.body_tokens.len()], eps),
        })
    }
}
