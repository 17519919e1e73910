//! Few-shot subset selection for fine-tuning.

use std::collections::BTreeMap;

use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{TaskItem, TaskKind, TaskTuple};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum FewShotRule {
    /// `k` sentences per label, each containing that label.
    PerLabel { k: usize },
    /// `ceil(p * N)` sentences.
    Fraction { p: f64 },
    /// `m` sentences.
    Absolute { m: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FewShotSpec {
    pub task: TaskKind,
    #[serde(flatten)]
    pub rule: FewShotRule,
    pub seed: u64,
}

impl FewShotSpec {
    pub fn new(task: TaskKind, rule: FewShotRule, seed: u64) -> Result<Self> {
        let ok = match rule {
            FewShotRule::PerLabel { k } => k > 0,
            FewShotRule::Fraction { p } => p > 0.0 && p <= 1.0,
            FewShotRule::Absolute { m } => m > 0,
        };
        if !ok {
            return Err(Error::Config(format!("invalid few-shot rule {rule:?}")));
        }
        Ok(Self { task, rule, seed })
    }

    /// The usual protocol per task: 5 per label for NER/RE/ABSA/ASTE
    /// (entity type, relation type, polarity), 5% for EE, 50 for SRL.
    pub fn standard(task: TaskKind, seed: u64) -> Self {
        let rule = match task {
            TaskKind::Ee => FewShotRule::Fraction { p: 0.05 },
            TaskKind::Srl => FewShotRule::Absolute { m: 50 },
            _ => FewShotRule::PerLabel { k: 5 },
        };
        Self { task, rule, seed }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct FewShotSample {
    /// Indices into the dataset, ascending.
    pub indices: Vec<usize>,
    pub warnings: Vec<String>,
}

impl FewShotSample {
    pub fn items<'a>(&self, dataset: &'a [TaskItem]) -> Vec<&'a TaskItem> {
        self.indices.iter().map(|&i| &dataset[i]).collect()
    }
}

/// Labels a sentence "contains" for per-label sampling.
pub fn sampling_labels(task: TaskKind, item: &TaskItem) -> Vec<&str> {
    item.tuples
        .iter()
        .filter(|t| match task {
            TaskKind::Ner => matches!(t, TaskTuple::Entity { .. }),
            TaskKind::Re => matches!(t, TaskTuple::Relation { .. }),
            TaskKind::Ee => matches!(t, TaskTuple::Trigger { .. }),
            TaskKind::Srl => matches!(t, TaskTuple::Role { .. }),
            TaskKind::Absa => matches!(t, TaskTuple::Sentiment { .. }),
            TaskKind::Aste => matches!(t, TaskTuple::Triplet { .. }),
        })
        .map(TaskTuple::label)
        .collect()
}

/// `ceil(p * n)`, ignoring floating-point noise below 1e-9.
fn fraction_count(p: f64, n: usize) -> usize {
    let exact = p * n as f64;
    let rounded = (exact * 1e9).round() / 1e9;
    (rounded.ceil() as usize).min(n)
}

/// Draws the few-shot training subset. Deterministic per seed; never
/// returns an index twice.
pub fn fewshot_sample(dataset: &[TaskItem], spec: &FewShotSpec) -> Result<FewShotSample> {
    if dataset.is_empty() {
        return Err(Error::Config("cannot sample from an empty dataset".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = FewShotSample::default();
    let n = dataset.len();
    let mut picked: Vec<usize> = match spec.rule {
        FewShotRule::PerLabel { k } => {
            let mut by_label: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
            for (i, item) in dataset.iter().enumerate() {
                let mut labels = sampling_labels(spec.task, item);
                labels.sort_unstable();
                labels.dedup();
                for l in labels {
                    by_label.entry(l).or_default().push(i);
                }
            }
            let mut all = Vec::new();
            for (label, candidates) in &by_label {
                if candidates.len() < k {
                    out.warnings.push(format!("label `{label}` has only {} of {k} sentences", candidates.len()));
                }
                all.extend(candidates.choose_multiple(&mut rng, k).copied());
            }
            all
        }
        FewShotRule::Fraction { p } => index::sample(&mut rng, n, fraction_count(p, n)).into_vec(),
        FewShotRule::Absolute { m } => {
            if m > n {
                out.warnings.push(format!("requested {m} sentences but only {n} exist"));
            }
            index::sample(&mut rng, n, m.min(n)).into_vec()
        }
    };
    picked.sort_unstable();
    picked.dedup();
    for w in &out.warnings {
        log::warn!("{w}");
    }
    out.indices = picked;
    Ok(out)
}
