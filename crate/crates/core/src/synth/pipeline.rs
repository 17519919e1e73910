use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{align_span, build_prompt, parse_llm_response, sample_sentences, DistillRecord, LabelSpanPair};
use super::{LlmClient, RetryPolicy, SourceSentence};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct SynthConfig {
    pub n: usize,
    pub parallelism: usize,
    pub retry: RetryPolicy,
    /// Corpus name used in sentence ids.
    pub corpus: String,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self { n: 100, parallelism: 4, retry: RetryPolicy::default(), corpus: "corpus".into() }
    }
}

/// Counters collected while synthesizing.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthDiagnostics {
    pub sentences: usize,
    pub corpus_exhausted: bool,
    pub failed_requests: usize,
    pub retries: usize,
    pub unparsed_lines: usize,
    pub pairs_parsed: usize,
    pub pairs_kept: usize,
    pub pairs_unaligned: usize,
    pub pairs_duplicate: usize,
}

impl SynthDiagnostics {
    /// Fraction of parsed pairs dropped because they could not be aligned.
    pub fn drop_rate(&self) -> f64 {
        if self.pairs_parsed == 0 {
            0.0
        } else {
            self.pairs_unaligned as f64 / self.pairs_parsed as f64
        }
    }

    fn absorb(&mut self, other: &SynthDiagnostics) {
        self.sentences += other.sentences;
        self.failed_requests += other.failed_requests;
        self.retries += other.retries;
        self.unparsed_lines += other.unparsed_lines;
        self.pairs_parsed += other.pairs_parsed;
        self.pairs_kept += other.pairs_kept;
        self.pairs_unaligned += other.pairs_unaligned;
        self.pairs_duplicate += other.pairs_duplicate;
    }
}

#[derive(Clone, Debug)]
pub struct SynthOutput {
    /// Sorted by sentence id.
    pub records: Vec<DistillRecord>,
    pub diagnostics: SynthDiagnostics,
}

fn annotate<C: LlmClient + ?Sized>(
    sentence: SourceSentence,
    client: &C,
    retry: &RetryPolicy,
) -> (DistillRecord, SynthDiagnostics) {
    let mut diag = SynthDiagnostics { sentences: 1, ..Default::default() };
    let prompt = build_prompt(&sentence);
    let (result, retries) = retry.call(client, &prompt);
    diag.retries = retries as usize;
    let response = match result {
        Ok(r) => r,
        Err(e) => {
            diag.failed_requests = 1;
            let record =
                DistillRecord { sentence, pairs: Vec::new(), raw_response: String::new(), error: Some(e.to_string()) };
            return (record, diag);
        }
    };
    let parsed = parse_llm_response(&response);
    diag.unparsed_lines = parsed.unparsed_lines;
    diag.pairs_parsed = parsed.pairs.len();
    let mut seen = HashSet::new();
    let mut pairs = Vec::new();
    for pair in parsed.pairs {
        let Some(range) = align_span(&sentence, &pair.span_text) else {
            diag.pairs_unaligned += 1;
            continue;
        };
        if !seen.insert((pair.label.clone(), range)) {
            diag.pairs_duplicate += 1;
            continue;
        }
        pairs.push(LabelSpanPair {
            label: pair.label,
            span_text: crate::codec::span_text(&sentence.tokens, range),
            token_range: Some(range),
        });
    }
    diag.pairs_kept = pairs.len();
    (DistillRecord { sentence, pairs, raw_response: response, error: None }, diag)
}

/// Runs the whole annotation pipeline over a paragraph stream.
///
/// Requests run on up to `parallelism` threads; the result is sorted by
/// sentence id, so completion order never shows in the output.
pub fn synthesize<I, S, C>(paragraphs: I, client: &C, config: &SynthConfig) -> Result<SynthOutput>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
    C: LlmClient + ?Sized,
{
    let sampled = sample_sentences(paragraphs, config.n, &config.corpus);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.parallelism.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let mut annotated: Vec<(DistillRecord, SynthDiagnostics)> =
        pool.install(|| sampled.sentences.into_par_iter().map(|s| annotate(s, client, &config.retry)).collect());
    annotated.sort_by(|a, b| a.0.sentence.id.cmp(&b.0.sentence.id));
    let mut diagnostics = SynthDiagnostics { corpus_exhausted: sampled.exhausted, ..Default::default() };
    let mut records = Vec::with_capacity(annotated.len());
    for (rec, d) in annotated {
        diagnostics.absorb(&d);
        records.push(rec);
    }
    Ok(SynthOutput { records, diagnostics })
}
