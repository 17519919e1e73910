//! Text-to-text renderings of tagged examples for encoder-decoder and
//! decoder-only students.
//!
//! Seq2seq: input `"<label>: <sentence>"`, target the span texts joined by
//! `"; "` in sentence order, or `NONE`. Causal: `"<sentence>\n<label>: <target><eot>"`
//! with the loss restricted to the target and end marker.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::codec::TaggedExample;

pub const SPAN_JOINER: &str = "; ";
pub const NO_SPANS: &str = "NONE";
pub const END_OF_TEXT: &str = "<eot>";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Seq2SeqPair {
    pub input: String,
    pub target: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CausalSample {
    pub text: String,
    /// Byte range of `text` that carries loss: the target and end marker.
    pub loss_range: Range<usize>,
}

fn target_of(example: &TaggedExample) -> String {
    let spans: Vec<String> =
        example.spans().into_iter().map(|r| example.body_tokens[r.start..r.end].join(" ")).collect();
    if spans.is_empty() {
        NO_SPANS.to_string()
    } else {
        spans.join(SPAN_JOINER)
    }
}

pub fn convert_seq2seq(example: &TaggedExample) -> Seq2SeqPair {
    Seq2SeqPair { input: format!("{}: {}", example.label, example.body_tokens.join(" ")), target: target_of(example) }
}

pub fn convert_causal(example: &TaggedExample) -> CausalSample {
    let mut text = example.body_tokens.join(" ");
    text.push('\n');
    text.push_str(&example.label);
    text.push_str(": ");
    let start = text.len();
    text.push_str(&target_of(example));
    text.push_str(END_OF_TEXT);
    CausalSample { loss_range: start..text.len(), text }
}

/// A label and its span texts, as recovered from generated text.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParsedExtraction {
    pub label: String,
    pub spans: Vec<String>,
}

fn split_target(target: &str) -> Vec<String> {
    let target = target.trim();
    if target == NO_SPANS || target.is_empty() {
        return Vec::new();
    }
    target.split(SPAN_JOINER).map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()
}

/// Inverse of [`convert_seq2seq`]; the label is everything before the first `": "`.
pub fn parse_seq2seq(input: &str, target: &str) -> Option<ParsedExtraction> {
    let (label, _) = input.split_once(": ")?;
    Some(ParsedExtraction { label: label.to_string(), spans: split_target(target) })
}

/// Inverse of [`convert_causal`]. A missing end marker is tolerated.
pub fn parse_causal(text: &str) -> Option<ParsedExtraction> {
    let text = text.strip_suffix(END_OF_TEXT).unwrap_or(text);
    let (_, answer) = text.rsplit_once('\n')?;
    let (label, target) = answer.split_once(": ").or_else(|| answer.strip_suffix(':').map(|l| (l, "")))?;
    Some(ParsedExtraction { label: label.to_string(), spans: split_target(target) })
}
