//! The extraction prompt, shipped as a versioned asset.

use super::SourceSentence;

/// Identifier recorded alongside every dataset built with [`build_prompt`].
pub const PROMPT_VERSION: &str = "extract-important-info/v1";

const TEMPLATE: &str = include_str!("../../assets/extract_prompt_v1.txt");
const SLOT: &str = "{sentence}";
const SENTENCE_MARKER: &str = "Sentence: ";

/// The raw template text, with a `{sentence}` slot.
pub fn template() -> &'static str {
    TEMPLATE
}

/// Instruction asking for every important `(label, span)` pair in the
/// sentence as `- <Label>: <Span>` lines. The sentence is embedded verbatim.
pub fn build_prompt(sentence: &SourceSentence) -> String {
    let (head, tail) = TEMPLATE.split_once(SLOT).expect("prompt template has a sentence slot");
    let mut out = String::with_capacity(TEMPLATE.len() + sentence.text.len());
    out.push_str(head);
    out.push_str(&sentence.text);
    out.push_str(tail);
    out
}

/// Recovers the embedded sentence from a prompt built by [`build_prompt`].
pub fn sentence_from_prompt(prompt: &str) -> Option<&str> {
    prompt.lines().rev().find_map(|line| line.strip_prefix(SENTENCE_MARKER))
}
