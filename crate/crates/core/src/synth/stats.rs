//! Label frequency statistics grouped by label length in words.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::DistillRecord;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelCount {
    pub label: String,
    pub count: usize,
    pub relative_frequency: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NgramBucket {
    /// `"1"` .. `"4"`, or `">=5"`.
    pub name: String,
    /// Total label occurrences in the bucket, before truncation.
    pub count: usize,
    pub entries: Vec<LabelCount>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelStats {
    pub buckets: Vec<NgramBucket>,
}

impl LabelStats {
    pub fn total(&self) -> usize {
        self.buckets.iter().map(|b| b.count).sum()
    }

    /// Aligned text table, one bucket per row group.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for b in &self.buckets {
            out.push_str(&format!("{}-gram ({})\n", b.name, b.count));
            for e in &b.entries {
                out.push_str(&format!("  {:<40} {:>8}  {:>8.3}%\n", e.label, e.count, e.relative_frequency * 100.0));
            }
        }
        out
    }
}

pub const BUCKET_NAMES: [&str; 5] = ["1", "2", "3", "4", ">=5"];

fn bucket_of(label: &str) -> usize {
    label.split_whitespace().count().clamp(1, 5) - 1
}

/// Counts label occurrences per word-count bucket; each bucket keeps its
/// `top_k` most frequent labels (ties by label text).
pub fn label_stats<'a, I>(records: I, top_k: usize) -> LabelStats
where
    I: IntoIterator<Item = &'a DistillRecord>,
{
    let mut counts: [HashMap<&str, usize>; 5] = Default::default();
    for rec in records {
        for pair in &rec.pairs {
            *counts[bucket_of(&pair.label)].entry(pair.label.as_str()).or_default() += 1;
        }
    }
    let buckets = counts
        .iter()
        .zip(BUCKET_NAMES)
        .map(|(map, name)| {
            let total: usize = map.values().sum();
            let mut entries: Vec<LabelCount> = map
                .iter()
                .map(|(label, &count)| LabelCount {
                    label: label.to_string(),
                    count,
                    relative_frequency: count as f64 / total as f64,
                })
                .collect();
            entries.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.label.cmp(&b.label)));
            entries.truncate(top_k);
            NgramBucket { name: name.to_string(), count: total, entries }
        })
        .collect();
    LabelStats { buckets }
}
