use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::codec::{align_tags, encode_query, TaggedExample};
use crate::span::TokenRange;
use crate::synth::DistillRecord;

/// Keeps a non-overlapping subset of ranges, scanning by start and
/// preferring the longer range at equal starts.
fn disjoint(mut ranges: Vec<TokenRange>) -> Vec<TokenRange> {
    ranges.sort_by(|a, b| a.start.cmp(&b.start).then(b.end.cmp(&a.end)));
    ranges.dedup();
    let mut out: Vec<TokenRange> = Vec::new();
    for r in ranges {
        if out.last().is_none_or(|last| last.end <= r.start) {
            out.push(r);
        }
    }
    out
}

/// Turns distillation records into prefix+BIO training examples.
///
/// Every distinct label of a record yields one example tagging all of that
/// label's aligned spans. Each record additionally gets
/// `negatives_per_record` all-`O` examples whose labels are drawn from the
/// labels of the whole dataset that do not occur in the record. Records
/// carrying an LLM error are skipped.
pub fn distill_to_training(records: &[DistillRecord], negatives_per_record: usize, seed: u64) -> Vec<TaggedExample> {
    let pool: Vec<&str> = records
        .iter()
        .flat_map(|r| r.pairs.iter().map(|p| p.label.as_str()))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for rec in records.iter().filter(|r| r.error.is_none()) {
        let tokens = &rec.sentence.tokens;
        let mut labels: Vec<&str> = Vec::new();
        for p in &rec.pairs {
            if !labels.contains(&p.label.as_str()) {
                labels.push(&p.label);
            }
        }
        for label in &labels {
            let ranges = rec
                .pairs
                .iter()
                .filter(|p| p.label == *label)
                .filter_map(|p| p.token_range)
                .filter(|r| r.fits(tokens.len()))
                .collect();
            let Ok(query) = encode_query(label, tokens) else { continue };
            let example = align_tags(query, &disjoint(ranges)).expect("disjoint ranges always align");
            out.push(example);
        }
        let candidates: Vec<&str> = pool.iter().copied().filter(|l| !labels.contains(l)).collect();
        for label in candidates.choose_multiple(&mut rng, negatives_per_record) {
            let query = encode_query(label, tokens).expect("pool labels are non-empty");
            out.push(align_tags(query, &[]).expect("no spans"));
        }
    }
    out
}
