//! A small label-conditioned tagger over hashed sparse features.
//!
//! Each body token gets a feature set built from its word and shape, a
//! context window around it, and conjunctions of those with every word of
//! the query label. A single linear layer maps the hashed features to
//! `(B, I, O)` logits. It is a desk-scale stand-in for a pretrained encoder
//! and plugs into the same [`Tagger`] interface.

use serde::{Deserialize, Serialize};

use super::optim::{AdamW, AdamWParams};
use super::{Tagger, TrainConfig, TrainableTagger};
use crate::codec::{Query, TagDistribution, TaggedExample};
use crate::error::{Error, Result};
use crate::num::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToyTaggerConfig {
    /// log2 of the number of feature buckets.
    pub hash_bits: u32,
    /// Context tokens on each side.
    pub window: usize,
}

impl Default for ToyTaggerConfig {
    fn default() -> Self {
        Self { hash_bits: 18, window: 2 }
    }
}

#[derive(Clone, Debug)]
pub struct ToyTagger<F> {
    config: ToyTaggerConfig,
    /// `buckets * 3` feature weights followed by 3 biases.
    weights: Vec<F>,
    optimizer: Option<AdamW<F>>,
}

/// Serializable weights: non-zero feature rows only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToyCheckpoint {
    pub config: ToyTaggerConfig,
    pub bias: [f64; 3],
    pub rows: Vec<(u32, [f64; 3])>,
}

struct FeatureHasher(u64);

impl FeatureHasher {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;

    fn new() -> Self {
        FeatureHasher(Self::OFFSET)
    }

    fn part(mut self, s: &str) -> Self {
        for b in s.bytes().chain(std::iter::once(0x1f)) {
            self.0 ^= u64::from(b);
            self.0 = self.0.wrapping_mul(Self::PRIME);
        }
        self
    }

    fn bucket(self, bits: u32) -> u32 {
        // fold the high bits in; FNV's low bits alone are weak
        let h = self.0 ^ (self.0 >> 29) ^ (self.0 >> 47);
        (h & ((1u64 << bits) - 1)) as u32
    }
}

fn shape(tok: &str) -> &'static str {
    let mut chars = tok.chars();
    let Some(first) = chars.next() else { return "p" };
    if !tok.chars().any(char::is_alphanumeric) {
        "p"
    } else if tok.chars().all(|c| c.is_ascii_digit() || c == '.' || c == ',') {
        "d"
    } else if first.is_uppercase() {
        if tok.chars().count() > 1 && tok.chars().all(|c| !c.is_lowercase()) {
            "XX"
        } else {
            "Xx"
        }
    } else if tok.chars().all(|c| !c.is_uppercase()) {
        "x"
    } else {
        "mix"
    }
}

impl<F: Scalar> ToyTagger<F> {
    pub fn new(config: ToyTaggerConfig) -> Self {
        let size = (1usize << config.hash_bits) * 3 + 3;
        Self { config, weights: vec![F::zero(); size], optimizer: None }
    }

    pub fn config(&self) -> ToyTaggerConfig {
        self.config
    }

    pub fn weights(&self) -> &[F] {
        &self.weights
    }

    fn bias_offset(&self) -> usize {
        self.weights.len() - 3
    }

    /// Hashed feature buckets for each body token of the query.
    pub fn features(&self, query: &Query) -> Vec<Vec<u32>> {
        let bits = self.config.hash_bits;
        let label_words: Vec<String> =
            query.prefix_tokens.iter().filter(|t| t.as_str() != ":").map(|t| t.to_lowercase()).collect();
        let words: Vec<String> = query.body_tokens.iter().map(|t| t.to_lowercase()).collect();
        let shapes: Vec<&str> = query.body_tokens.iter().map(|t| shape(t)).collect();
        let n = words.len();
        let w = self.config.window as isize;
        let word_at = |k: isize| -> &str {
            if k < 0 {
                "<s>"
            } else if k as usize >= n {
                "</s>"
            } else {
                &words[k as usize]
            }
        };
        let shape_at = |k: isize| -> &str {
            if k < 0 || k as usize >= n {
                "edge"
            } else {
                shapes[k as usize]
            }
        };
        let offsets: Vec<String> = (-w..=w).map(|d| format!("w{d}")).collect();
        (0..n as isize)
            .map(|k| {
                let mut feats = Vec::with_capacity(16 + label_words.len() * 10);
                let h = |parts: &[&str]| parts.iter().fold(FeatureHasher::new(), |fh, p| fh.part(p)).bucket(bits);
                let s_prev = shape_at(k - 1);
                let s0 = shape_at(k);
                let s_next = shape_at(k + 1);
                let in_label = label_words.iter().any(|lw| lw == word_at(k));
                for (d, name) in (-w..=w).zip(&offsets) {
                    feats.push(h(&[name, word_at(k + d)]));
                }
                feats.push(h(&["s0", s0]));
                feats.push(h(&["s-1", s_prev]));
                feats.push(h(&["s+1", s_next]));
                feats.push(h(&["s-1s0", s_prev, s0]));
                feats.push(h(&["s0s+1", s0, s_next]));
                if k == 0 {
                    feats.push(h(&["first"]));
                }
                if in_label {
                    feats.push(h(&["inlabel"]));
                }
                for lw in &label_words {
                    feats.push(h(&["lab", lw]));
                    feats.push(h(&[lw, "w0", word_at(k)]));
                    feats.push(h(&[lw, "w-1", word_at(k - 1)]));
                    feats.push(h(&[lw, "w+1", word_at(k + 1)]));
                    feats.push(h(&[lw, "s0", s0]));
                    feats.push(h(&[lw, "s-1s0", s_prev, s0]));
                    feats.push(h(&[lw, "s0s+1", s0, s_next]));
                    if k == 0 {
                        feats.push(h(&[lw, "first", s0]));
                    }
                    if in_label {
                        feats.push(h(&[lw, "inlabel"]));
                    }
                }
                feats
            })
            .collect()
    }

    fn logits(&self, feats: &[u32]) -> [F; 3] {
        let b = self.bias_offset();
        let mut z = [self.weights[b], self.weights[b + 1], self.weights[b + 2]];
        for &f in feats {
            let base = f as usize * 3;
            for (c, zc) in z.iter_mut().enumerate() {
                *zc += self.weights[base + c];
            }
        }
        z
    }

    pub fn to_checkpoint(&self) -> ToyCheckpoint {
        let b = self.bias_offset();
        let rows = self.weights[..b]
            .chunks_exact(3)
            .enumerate()
            .filter(|(_, r)| r.iter().any(|w| *w != F::zero()))
            .map(|(i, r)| (i as u32, [r[0].as_f64(), r[1].as_f64(), r[2].as_f64()]))
            .collect();
        ToyCheckpoint {
            config: self.config,
            bias: [self.weights[b].as_f64(), self.weights[b + 1].as_f64(), self.weights[b + 2].as_f64()],
            rows,
        }
    }

    pub fn from_checkpoint(ckpt: &ToyCheckpoint) -> Result<Self> {
        let mut t = Self::new(ckpt.config);
        let b = t.bias_offset();
        for (i, row) in &ckpt.rows {
            let base = *i as usize * 3;
            if base + 3 > b {
                return Err(Error::Config(format!("checkpoint row {i} exceeds {} buckets", b / 3)));
            }
            for (w, v) in t.weights[base..base + 3].iter_mut().zip(row) {
                *w = F::of(*v);
            }
        }
        for (w, v) in t.weights[b..b + 3].iter_mut().zip(&ckpt.bias) {
            *w = F::of(*v);
        }
        Ok(t)
    }
}

impl<F: Scalar> Default for ToyTagger<F> {
    fn default() -> Self {
        Self::new(ToyTaggerConfig::default())
    }
}

impl<F: Scalar> Tagger<F> for ToyTagger<F> {
    fn predict(&self, query: &Query) -> Result<TagDistribution<F>> {
        let logits: Vec<[F; 3]> = self.features(query).iter().map(|f| self.logits(f)).collect();
        Ok(TagDistribution::from_logits(&logits))
    }
}

impl<F: Scalar> TrainableTagger<F> for ToyTagger<F> {
    fn begin_training(&mut self, config: &TrainConfig) {
        self.optimizer = Some(AdamW::new(self.weights.len(), config.adamw));
    }

    fn train_step(&mut self, batch: &[&TaggedExample], lr: F) -> Result<F> {
        let mut grads = vec![F::zero(); self.weights.len()];
        let bias = self.bias_offset();
        let floor = F::of(crate::codec::PROB_FLOOR);
        let mut loss = F::zero();
        let mut tokens = 0usize;
        for ex in batch {
            if ex.tags.len() != ex.body_tokens.len() {
                return Err(Error::Tagger(format!("example `{}` has mismatched tags", ex.label)));
            }
            let feats = self.features(&ex.query());
            for (f, tag) in feats.iter().zip(&ex.tags) {
                let p = TagDistribution::from_logits(&[self.logits(f)]).rows()[0];
                let gold = tag.index();
                loss -= p[gold].max(floor).ln();
                for c in 0..3 {
                    let g = if c == gold { p[c] - F::one() } else { p[c] };
                    grads[bias + c] += g;
                    for &b in f {
                        grads[b as usize * 3 + c] += g;
                    }
                }
                tokens += 1;
            }
        }
        if tokens == 0 {
            return Ok(F::zero());
        }
        let scale = F::one() / F::of_usize(tokens);
        grads.iter_mut().for_each(|g| *g *= scale);
        let opt = self.optimizer.get_or_insert_with(|| AdamW::new(self.weights.len(), AdamWParams::default()));
        opt.update(&mut self.weights, &grads, lr, |i| i < bias);
        Ok(loss * scale)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::{align_tags, encode_query, Tag};
    use crate::harness::fit_tagger;
    use crate::span::TokenRange;

    fn example(label: &str, words: &[&str], spans: &[(usize, usize)]) -> TaggedExample {
        let spans: Vec<TokenRange> = spans.iter().map(|&(s, e)| TokenRange::new(s, e)).collect();
        align_tags(encode_query(label, words).unwrap(), &spans).unwrap()
    }

    fn small() -> ToyTaggerConfig {
        ToyTaggerConfig { hash_bits: 14, window: 2 }
    }

    fn toy_config(seed: u64) -> TrainConfig {
        TrainConfig { learning_rate: 0.05, batch_size: 8, epochs: 3, seed, ..Default::default() }
    }

    #[test]
    fn shapes() {
        assert_eq!(shape("John"), "Xx");
        assert_eq!(shape("NASA"), "XX");
        assert_eq!(shape("loves"), "x");
        assert_eq!(shape("3.5"), "d");
        assert_eq!(shape(","), "p");
        assert_eq!(shape("iPhone"), "mix");
    }

    #[test]
    fn prediction_is_normalized_and_shaped() {
        let t = ToyTagger::<f32>::new(small());
        let q = encode_query("Person", &["a", "b", "c"]).unwrap();
        let d = t.predict(&q).unwrap();
        assert_eq!(d.len(), 3);
        for row in d.rows() {
            assert!((row.iter().sum::<f32>() - 1.0).abs() < 1e-6);
        }
        let q = encode_query("Person", &[] as &[&str]).unwrap();
        assert!(t.predict(&q).unwrap().is_empty());
    }

    fn separable(n: usize) -> Vec<TaggedExample> {
        let names = ["Alice", "Bruno", "Chen", "Dana", "Emil"];
        let places = ["Oslo", "Lima", "Pune", "Kyiv", "Accra"];
        (0..n)
            .map(|k| {
                let name = names[k % 5];
                let place = places[(k / 5) % 5];
                let words = ["yesterday", name, "visited", place, "again"];
                if k % 2 == 0 {
                    example("Person", &words, &[(1, 2)])
                } else {
                    example("Location", &words, &[(3, 4)])
                }
            })
            .collect()
    }

    #[test]
    fn learns_separable_data() {
        let data = separable(50);
        let (_, log) = fit_tagger(ToyTagger::<f64>::new(small()), &data, &toy_config(1)).unwrap();
        assert!(log.last_loss().unwrap() < log.first_loss().unwrap());
    }

    #[test]
    fn same_seed_same_weights() {
        let data = separable(40);
        let (a, _) = fit_tagger(ToyTagger::<f32>::new(small()), &data, &toy_config(9)).unwrap();
        let (b, _) = fit_tagger(ToyTagger::<f32>::new(small()), &data, &toy_config(9)).unwrap();
        assert_eq!(a.weights(), b.weights());
        let (c, _) = fit_tagger(ToyTagger::<f32>::new(small()), &data, &toy_config(10)).unwrap();
        assert_ne!(a.weights(), c.weights());
    }

    #[test]
    fn memorizes_repeated_example() {
        let ex = example("Person", &["John", "Smith", "loves", "his", "hometown", ",", "Los", "Angeles"], &[(0, 2)]);
        let data = vec![ex.clone(); 50];
        let cfg = TrainConfig { learning_rate: 0.05, batch_size: 64, epochs: 1, ..Default::default() };
        let (t, _) = fit_tagger(ToyTagger::<f64>::new(small()), &data, &cfg).unwrap();
        assert_eq!(t.predict(&ex.query()).unwrap().argmax_tags(), ex.tags);
    }

    #[test]
    fn checkpoint_round_trip() {
        let data = separable(20);
        let (t, _) = fit_tagger(ToyTagger::<f64>::new(small()), &data, &toy_config(2)).unwrap();
        let ckpt = t.to_checkpoint();
        let back = ToyTagger::<f64>::from_checkpoint(&ckpt).unwrap();
        assert_eq!(back.weights(), t.weights());
        let q = data[0].query();
        assert_eq!(back.predict(&q).unwrap(), t.predict(&q).unwrap());
        let json = serde_json::to_string(&ckpt).unwrap();
        let parsed: ToyCheckpoint = serde_json::from_str(&json).unwrap();
        assert_eq!(parsed, ckpt);
    }

    #[test]
    fn mismatched_tags_are_rejected() {
        let mut ex = example("Person", &["a", "b"], &[]);
        ex.tags.push(Tag::O);
        let mut t = ToyTagger::<f64>::new(small());
        t.begin_training(&TrainConfig::default());
        assert!(t.train_step(&[&ex], 0.1).is_err());
    }
}
