//! Prefix+BIO encoding of label-to-span queries.
//!
//! A query is the label rendered as a prefix (`"<label> :"`) followed by the
//! sentence tokens. Only body tokens are tagged; the prefix is never part of
//! the loss or of decoding. Decoding turns maximal `B I*` runs into spans,
//! scores them with the mean log-probability of their assigned tags, and a
//! greedy pass removes cross-label overlaps.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Scalar;
use crate::span::TokenRange;
use crate::text::{detokenize, normalize_whitespace, tokenize};

/// Probability floor applied before taking logarithms.
pub const PROB_FLOOR: f64 = 1e-12;
/// Tolerance on the per-token probability sum of a [`TagDistribution`].
pub const NORM_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Tag {
    B,
    I,
    O,
}

impl Tag {
    pub const ALL: [Tag; 3] = [Tag::B, Tag::I, Tag::O];

    /// Column of this tag in a [`TagDistribution`] row.
    pub fn index(self) -> usize {
        match self {
            Tag::B => 0,
            Tag::I => 1,
            Tag::O => 2,
        }
    }

    pub fn from_index(i: usize) -> Tag {
        Tag::ALL[i]
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tag::B => "B",
            Tag::I => "I",
            Tag::O => "O",
        };
        f.write_str(s)
    }
}

/// An untagged query: label prefix plus sentence body.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Query {
    pub label: String,
    pub prefix_tokens: Vec<String>,
    pub body_tokens: Vec<String>,
}

/// A query with one BIO tag per body token.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "TaggedWire", into = "TaggedWire")]
pub struct TaggedExample {
    pub label: String,
    pub prefix_tokens: Vec<String>,
    pub body_tokens: Vec<String>,
    pub tags: Vec<Tag>,
}

/// JSON-lines form: `{"label", "tokens", "tags"}`; the prefix is rebuilt from the label.
#[derive(Serialize, Deserialize)]
struct TaggedWire {
    label: String,
    tokens: Vec<String>,
    tags: Vec<Tag>,
}

impl From<TaggedExample> for TaggedWire {
    fn from(ex: TaggedExample) -> Self {
        TaggedWire { label: ex.label, tokens: ex.body_tokens, tags: ex.tags }
    }
}

impl TryFrom<TaggedWire> for TaggedExample {
    type Error = String;

    fn try_from(w: TaggedWire) -> Result<Self, String> {
        if w.tokens.len() != w.tags.len() {
            return Err(format!("{} tokens but {} tags", w.tokens.len(), w.tags.len()));
        }
        let query = encode_query(&w.label, &w.tokens).map_err(|e| e.to_string())?;
        Ok(query.with_tags(w.tags))
    }
}

impl Query {
    fn with_tags(self, tags: Vec<Tag>) -> TaggedExample {
        TaggedExample { label: self.label, prefix_tokens: self.prefix_tokens, body_tokens: self.body_tokens, tags }
    }

    /// Prefix followed by body, the sequence a tagger actually reads.
    pub fn input_tokens(&self) -> impl Iterator<Item = &str> {
        self.prefix_tokens.iter().chain(&self.body_tokens).map(String::as_str)
    }
}

impl TaggedExample {
    pub fn query(&self) -> Query {
        Query {
            label: self.label.clone(),
            prefix_tokens: self.prefix_tokens.clone(),
            body_tokens: self.body_tokens.clone(),
        }
    }

    pub fn spans(&self) -> Vec<TokenRange> {
        decode_spans(&self.tags)
    }

    /// True when every `I` continues a `B` or another `I`.
    pub fn is_valid_bio(&self) -> bool {
        self.tags.len() == self.body_tokens.len()
            && self.tags.iter().enumerate().all(|(k, t)| *t != Tag::I || (k > 0 && self.tags[k - 1] != Tag::O))
    }
}

/// Builds the untagged query for `label` over the given sentence tokens.
pub fn encode_query<S: AsRef<str>>(label: &str, body_tokens: &[S]) -> Result<Query> {
    let label = normalize_whitespace(label);
    if label.is_empty() {
        return Err(Error::EmptyLabel);
    }
    let mut prefix_tokens = tokenize(&label);
    prefix_tokens.push(":".to_string());
    Ok(Query { label, prefix_tokens, body_tokens: body_tokens.iter().map(|t| t.as_ref().to_string()).collect() })
}

/// Tags the first token of each span `B`, the rest of the span `I`, everything else `O`.
///
/// Spans must be non-empty, sorted, pairwise disjoint and inside the body.
pub fn align_tags(query: Query, spans: &[TokenRange]) -> Result<TaggedExample> {
    let len = query.body_tokens.len();
    let mut tags = vec![Tag::O; len];
    let mut prev: Option<TokenRange> = None;
    for span in spans {
        if !span.fits(len) {
            return Err(Error::SpanOutOfRange { start: span.start, end: span.end, len });
        }
        if let Some(p) = prev {
            if span.start < p.end {
                return Err(Error::OverlappingSpans(p.start, p.end, span.start, span.end));
            }
        }
        tags[span.start] = Tag::B;
        for t in &mut tags[span.start + 1..span.end] {
            *t = Tag::I;
        }
        prev = Some(*span);
    }
    Ok(query.with_tags(tags))
}

/// Maximal `B I*` runs as spans. A stray `I` (at position 0 or after `O`)
/// opens a new span as if it were `B`.
pub fn decode_spans(tags: &[Tag]) -> Vec<TokenRange> {
    let mut spans = Vec::new();
    let mut open: Option<usize> = None;
    for (k, tag) in tags.iter().enumerate() {
        match tag {
            Tag::B => {
                if let Some(s) = open.replace(k) {
                    spans.push(TokenRange::new(s, k));
                }
            }
            Tag::I => {
                if open.is_none() {
                    open = Some(k);
                }
            }
            Tag::O => {
                if let Some(s) = open.take() {
                    spans.push(TokenRange::new(s, k));
                }
            }
        }
    }
    if let Some(s) = open {
        spans.push(TokenRange::new(s, tags.len()));
    }
    spans
}

/// Per-body-token probabilities over `(B, I, O)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TagDistribution<F> {
    rows: Vec<[F; 3]>,
}

impl<F: Scalar> TagDistribution<F> {
    /// Validates that each row is a probability vector.
    pub fn new(rows: Vec<[F; 3]>) -> Result<Self> {
        let tol = F::of(NORM_TOLERANCE);
        for (k, row) in rows.iter().enumerate() {
            let sum: F = row.iter().copied().sum();
            let in_range = row.iter().all(|p| *p >= F::zero() && *p <= F::one());
            if !in_range || (sum - F::one()).abs() > tol {
                return Err(Error::Tagger(format!("row {k} is not a distribution: {row:?}")));
            }
        }
        Ok(Self { rows })
    }

    /// Row-wise softmax of raw scores.
    pub fn from_logits(logits: &[[F; 3]]) -> Self {
        let rows = logits.iter().map(softmax3).collect();
        Self { rows }
    }

    /// A distribution putting probability `1 - 2ε` on each given tag.
    pub fn one_hot(tags: &[Tag], eps: F) -> Self {
        let rows = tags
            .iter()
            .map(|t| {
                let mut row = [eps; 3];
                row[t.index()] = F::one() - eps - eps;
                row
            })
            .collect();
        Self { rows }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[[F; 3]] {
        &self.rows
    }

    pub fn prob(&self, token: usize, tag: Tag) -> F {
        self.rows[token][tag.index()]
    }

    /// Most probable tag per token; ties prefer `O`, then `B`, then `I`.
    pub fn argmax_tags(&self) -> Vec<Tag> {
        self.rows
            .iter()
            .map(|row| {
                let mut best = Tag::O;
                for tag in [Tag::B, Tag::I] {
                    if row[tag.index()] > row[best.index()] {
                        best = tag;
                    }
                }
                best
            })
            .collect()
    }
}

fn softmax3<F: Scalar>(z: &[F; 3]) -> [F; 3] {
    let m = z[0].max(z[1]).max(z[2]);
    let e = [(z[0] - m).exp(), (z[1] - m).exp(), (z[2] - m).exp()];
    let s = e[0] + e[1] + e[2];
    [e[0] / s, e[1] / s, e[2] / s]
}

/// A decoded span with its confidence.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoredSpan<F> {
    pub label: String,
    pub range: TokenRange,
    pub score: F,
}

/// Mean log-probability of the tags a span implies: `B` on its first token
/// and `I` on the rest. Probabilities are floored at [`PROB_FLOOR`].
pub fn bi_sequence_score<F: Scalar>(dist: &TagDistribution<F>, span: TokenRange) -> Result<F> {
    if !span.fits(dist.len()) {
        return Err(Error::SpanOutOfRange { start: span.start, end: span.end, len: dist.len() });
    }
    let floor = F::of(PROB_FLOOR);
    let total: F = (span.start..span.end)
        .map(|k| {
            let tag = if k == span.start { Tag::B } else { Tag::I };
            dist.prob(k, tag).max(floor).ln()
        })
        .sum();
    Ok(total / F::of_usize(span.len()))
}

fn selection_order<F: Scalar>(a: &ScoredSpan<F>, b: &ScoredSpan<F>) -> Ordering {
    b.score
        .partial_cmp(&a.score)
        .unwrap_or(Ordering::Equal)
        .then(a.range.start.cmp(&b.range.start))
        .then(a.range.len().cmp(&b.range.len()))
        .then_with(|| a.label.cmp(&b.label))
}

/// Greedy overlap removal: visits candidates by descending score (ties:
/// earlier start, shorter span, smaller label) and keeps each one that
/// overlaps nothing kept so far. Output is sorted by start.
pub fn resolve_conflicts<F: Scalar>(mut candidates: Vec<ScoredSpan<F>>) -> Vec<ScoredSpan<F>> {
    candidates.sort_by(selection_order);
    let mut kept: Vec<ScoredSpan<F>> = Vec::with_capacity(candidates.len());
    for cand in candidates {
        if kept.iter().all(|k| !k.range.overlaps(&cand.range)) {
            kept.push(cand);
        }
    }
    kept.sort_by_key(|s| s.range.start);
    kept
}

/// Argmax tagging, span decoding and scoring in one step.
pub fn decode_with_probs<F: Scalar>(dist: &TagDistribution<F>, label: &str) -> Vec<ScoredSpan<F>> {
    decode_spans(&dist.argmax_tags())
        .into_iter()
        .map(|range| ScoredSpan {
            label: label.to_string(),
            range,
            score: bi_sequence_score(dist, range).expect("decoded spans lie inside the distribution"),
        })
        .collect()
}

/// Surface text of a span.
pub fn span_text<S: AsRef<str>>(tokens: &[S], range: TokenRange) -> String {
    detokenize(&tokens[range.start..range.end])
}
