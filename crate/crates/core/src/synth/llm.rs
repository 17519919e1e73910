//! LLM client abstraction, retry policy and an offline rule-based client.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::thread;
use std::time::Duration;

use thiserror::Error;

use super::prompt::sentence_from_prompt;
use crate::text::{detokenize, tokenize};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum LlmError {
    /// Worth retrying (rate limits, timeouts, 5xx).
    #[error("transient LLM failure: {0}")]
    Transient(String),
    #[error("permanent LLM failure: {0}")]
    Permanent(String),
}

/// Anything that maps a prompt to a completion.
pub trait LlmClient: Send + Sync {
    fn complete(&self, prompt: &str) -> Result<String, LlmError>;
}

impl<T: LlmClient + ?Sized> LlmClient for &T {
    fn complete(&self, prompt: &str) -> Result<String, LlmError> {
        (**self).complete(prompt)
    }
}

impl<T: LlmClient + ?Sized> LlmClient for Box<T> {
    fn complete(&self, prompt: &str) -> Result<String, LlmError> {
        (**self).complete(prompt)
    }
}

/// Bounded exponential backoff for transient failures.
#[derive(Clone, Debug, PartialEq)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base_delay: Duration,
    pub max_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self { max_retries: 3, base_delay: Duration::from_millis(500), max_delay: Duration::from_secs(8) }
    }
}

impl RetryPolicy {
    pub fn no_delay(max_retries: u32) -> Self {
        Self { max_retries, base_delay: Duration::ZERO, max_delay: Duration::ZERO }
    }

    pub fn delay(&self, attempt: u32) -> Duration {
        let factor = 1u32.checked_shl(attempt).unwrap_or(u32::MAX);
        self.base_delay.saturating_mul(factor).min(self.max_delay)
    }

    /// Calls the client, retrying transient errors. Returns the result and
    /// the number of retries spent.
    pub fn call<C: LlmClient + ?Sized>(&self, client: &C, prompt: &str) -> (Result<String, LlmError>, u32) {
        let mut attempt = 0;
        loop {
            match client.complete(prompt) {
                Err(LlmError::Transient(msg)) => {
                    if attempt >= self.max_retries {
                        return (Err(LlmError::Transient(msg)), attempt);
                    }
                    thread::sleep(self.delay(attempt));
                    attempt += 1;
                }
                other => return (other, attempt),
            }
        }
    }
}

/// Deterministic offline stand-in for a real LLM.
///
/// Finds lexicon phrases in the sentence embedded in the prompt and answers
/// with one `- Label: span, span` line per label, in order of first
/// appearance. With heuristics enabled, capitalized runs not covered by the
/// lexicon are reported as `Name` and numerals as `Number`.
#[derive(Debug, Default)]
pub struct RuleBasedLlm {
    lexicon: Vec<(String, Vec<String>)>,
    heuristics: bool,
    calls: AtomicUsize,
}

impl RuleBasedLlm {
    pub fn new<L, P>(entries: impl IntoIterator<Item = (L, P)>) -> Self
    where
        L: Into<String>,
        P: AsRef<str>,
    {
        let mut lexicon: Vec<(String, Vec<String>)> = entries
            .into_iter()
            .map(|(label, phrase)| (label.into(), tokenize(phrase.as_ref())))
            .filter(|(_, toks)| !toks.is_empty())
            .collect();
        // longest phrases first so "New York City" wins over "New York"
        lexicon.sort_by_key(|e| std::cmp::Reverse(e.1.len()));
        Self { lexicon, heuristics: false, calls: AtomicUsize::new(0) }
    }

    pub fn heuristic() -> Self {
        Self::new(std::iter::empty::<(String, String)>()).with_heuristics(true)
    }

    pub fn with_heuristics(mut self, on: bool) -> Self {
        self.heuristics = on;
        self
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::Relaxed)
    }

    fn annotate(&self, sentence: &str) -> String {
        let tokens = tokenize(sentence);
        let mut taken = vec![false; tokens.len()];
        let mut found: Vec<(usize, String, String)> = Vec::new();
        for (label, phrase) in &self.lexicon {
            let n = phrase.len();
            if n > tokens.len() {
                continue;
            }
            for start in 0..=tokens.len() - n {
                if taken[start..start + n].iter().any(|t| *t) {
                    continue;
                }
                if tokens[start..start + n] == phrase[..] {
                    taken[start..start + n].iter_mut().for_each(|t| *t = true);
                    found.push((start, label.clone(), detokenize(phrase)));
                }
            }
        }
        if self.heuristics {
            let mut k = 0;
            while k < tokens.len() {
                let tok = &tokens[k];
                if taken[k] {
                    k += 1;
                } else if tok.chars().all(|c| c.is_ascii_digit() || c == ',' || c == '.')
                    && tok.chars().any(|c| c.is_ascii_digit())
                {
                    found.push((k, "Number".into(), tok.clone()));
                    k += 1;
                } else if k > 0 && tok.chars().next().is_some_and(char::is_uppercase) {
                    let start = k;
                    while k < tokens.len() && !taken[k] && tokens[k].chars().next().is_some_and(char::is_uppercase) {
                        k += 1;
                    }
                    found.push((start, "Name".into(), detokenize(&tokens[start..k])));
                } else {
                    k += 1;
                }
            }
        }
        found.sort_by_key(|(start, _, _)| *start);
        let mut grouped: BTreeMap<usize, (String, Vec<String>)> = BTreeMap::new();
        let mut first_seen: Vec<(String, usize)> = Vec::new();
        for (start, label, span) in found {
            let key = match first_seen.iter().find(|(l, _)| *l == label) {
                Some((_, k)) => *k,
                None => {
                    first_seen.push((label.clone(), start));
                    start
                }
            };
            grouped.entry(key).or_insert_with(|| (label, Vec::new())).1.push(span);
        }
        grouped.into_values().map(|(label, spans)| format!("- {label}: {}\n", spans.join(", "))).collect()
    }
}

impl LlmClient for RuleBasedLlm {
    fn complete(&self, prompt: &str) -> Result<String, LlmError> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        let sentence =
            sentence_from_prompt(prompt).ok_or_else(|| LlmError::Permanent("prompt carries no sentence".into()))?;
        Ok(self.annotate(sentence))
    }
}
