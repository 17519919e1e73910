//! Building the label-to-span distillation dataset from raw text.
//!
//! Sentences are the first sentence of each corpus paragraph. Each one is
//! sent to an LLM with the extraction prompt; `- Label: Span` lines in the
//! answer become pairs, multi-span answers are split on conjunctions, and
//! every span is aligned to a token range. Spans that do not occur in the
//! sentence are dropped and counted.

mod llm;
mod parse;
mod pipeline;
mod prompt;
mod stats;

use std::collections::HashSet;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::span::TokenRange;
use crate::text::{detokenize, first_sentence, tokenize};

pub use llm::{LlmClient, LlmError, RetryPolicy, RuleBasedLlm};
pub use parse::{parse_llm_response, split_conjunctions, ParseOutcome, CONJUNCTIONS};
pub use pipeline::{synthesize, SynthConfig, SynthDiagnostics, SynthOutput};
pub use prompt::{build_prompt, sentence_from_prompt, template as prompt_template, PROMPT_VERSION};
pub use stats::{label_stats, LabelCount, LabelStats, NgramBucket};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SourceSentence {
    pub id: String,
    pub text: String,
    pub tokens: Vec<String>,
    /// Corpus name and paragraph offset.
    pub origin: String,
}

impl SourceSentence {
    pub fn new(id: impl Into<String>, text: impl Into<String>, origin: impl Into<String>) -> Self {
        let text = text.into();
        Self { id: id.into(), tokens: tokenize(&text), text, origin: origin.into() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LabelSpanPair {
    pub label: String,
    pub span_text: String,
    pub token_range: Option<TokenRange>,
}

impl LabelSpanPair {
    pub fn unaligned(label: impl Into<String>, span_text: impl Into<String>) -> Self {
        Self { label: label.into(), span_text: span_text.into(), token_range: None }
    }
}

/// One sentence with its LLM annotations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "RecordWire", into = "RecordWire")]
pub struct DistillRecord {
    pub sentence: SourceSentence,
    pub pairs: Vec<LabelSpanPair>,
    pub raw_response: String,
    /// Set when the LLM call failed for good; `pairs` is then empty.
    pub error: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct PairWire {
    label: String,
    span: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    start: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    end: Option<usize>,
}

#[derive(Serialize, Deserialize)]
struct RecordWire {
    id: String,
    text: String,
    tokens: Vec<String>,
    pairs: Vec<PairWire>,
    raw_response: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

impl From<DistillRecord> for RecordWire {
    fn from(r: DistillRecord) -> Self {
        RecordWire {
            id: r.sentence.id,
            text: r.sentence.text,
            tokens: r.sentence.tokens,
            pairs: r
                .pairs
                .into_iter()
                .map(|p| PairWire {
                    label: p.label,
                    span: p.span_text,
                    start: p.token_range.map(|t| t.start),
                    end: p.token_range.map(|t| t.end),
                })
                .collect(),
            raw_response: r.raw_response,
            error: r.error,
        }
    }
}

impl From<RecordWire> for DistillRecord {
    fn from(w: RecordWire) -> Self {
        DistillRecord {
            sentence: SourceSentence { origin: w.id.clone(), id: w.id, text: w.text, tokens: w.tokens },
            pairs: w
                .pairs
                .into_iter()
                .map(|p| LabelSpanPair {
                    label: p.label,
                    span_text: p.span,
                    token_range: p.start.zip(p.end).map(|(s, e)| TokenRange::new(s, e)),
                })
                .collect(),
            raw_response: w.raw_response,
            error: w.error,
        }
    }
}

impl DistillRecord {
    /// Checks the alignment and uniqueness invariants.
    pub fn validate(&self) -> Result<()> {
        let len = self.sentence.tokens.len();
        let mut seen = HashSet::new();
        for p in &self.pairs {
            if let Some(r) = p.token_range {
                if !r.fits(len) {
                    return Err(Error::SpanOutOfRange { start: r.start, end: r.end, len });
                }
                let surface = detokenize(&self.sentence.tokens[r.start..r.end]);
                if surface != p.span_text {
                    return Err(Error::Config(format!(
                        "pair `{}` span `{}` does not match tokens `{surface}`",
                        p.label, p.span_text
                    )));
                }
                if !seen.insert((p.label.as_str(), r)) {
                    return Err(Error::Config(format!("duplicate pair `{}` {r}", p.label)));
                }
            }
        }
        Ok(())
    }
}

/// Sentences drawn from a corpus, and whether the corpus ran out first.
#[derive(Clone, Debug, Default)]
pub struct SampledSentences {
    pub sentences: Vec<SourceSentence>,
    pub exhausted: bool,
}

/// Takes the first sentence of each paragraph, in corpus order, skipping
/// blank paragraphs and exact-text duplicates, until `n` are collected.
pub fn sample_sentences<I, S>(paragraphs: I, n: usize, corpus: &str) -> SampledSentences
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut seen = HashSet::new();
    let mut out = SampledSentences::default();
    if n == 0 {
        return out;
    }
    for (offset, para) in paragraphs.into_iter().enumerate() {
        let text = first_sentence(para.as_ref());
        if text.is_empty() || !seen.insert(text.to_string()) {
            continue;
        }
        let id = format!("{corpus}:{offset:010}");
        let sentence = SourceSentence::new(id.clone(), text, id);
        if sentence.tokens.is_empty() {
            continue;
        }
        out.sentences.push(sentence);
        if out.sentences.len() == n {
            return out;
        }
    }
    out.exhausted = true;
    log::warn!("corpus exhausted after {} of {n} sentences", out.sentences.len());
    out
}

fn find_window(tokens: &[String], needle: &[String], eq: impl Fn(&str, &str) -> bool) -> Option<usize> {
    if needle.is_empty() || needle.len() > tokens.len() {
        return None;
    }
    (0..=tokens.len() - needle.len()).find(|&s| tokens[s..s + needle.len()].iter().zip(needle).all(|(a, b)| eq(a, b)))
}

/// Leftmost token range whose text equals `span_text`, preferring an exact
/// case match over a case-insensitive one.
pub fn align_span(sentence: &SourceSentence, span_text: &str) -> Option<TokenRange> {
    let needle = tokenize(span_text);
    let found = find_window(&sentence.tokens, &needle, |a, b| a == b)
        .or_else(|| find_window(&sentence.tokens, &needle, |a, b| a.to_lowercase() == b.to_lowercase()))?;
    Some(TokenRange::new(found, found + needle.len()))
}

/// Uniform sample of `k` records without replacement, kept in input order.
pub fn subsample<T: Clone>(records: &[T], k: usize, seed: u64) -> Result<Vec<T>> {
    if k > records.len() {
        return Err(Error::SampleTooLarge { requested: k, available: records.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = index::sample(&mut rng, records.len(), k).into_vec();
    picked.sort_unstable();
    Ok(picked.into_iter().map(|i| records[i].clone()).collect())
}
