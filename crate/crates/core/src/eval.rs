//! Micro precision/recall/F1 over task tuples.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::Tagger;
use crate::num::Scalar;
use crate::tasks::{predict_task, TaskItem, TaskKind, TaskSchema, TaskTuple};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvalMode {
    /// Tuples as predicted, matched with multiplicity.
    Full,
    /// Entities only, each unique entity counted once.
    ReEntity,
    /// Relation triples only.
    ReRelation,
    /// Triggers with the event type dropped.
    EeTriggerUnlabeled,
    /// `(trigger, argument)` pairs with the role dropped.
    EeArgumentUnlabeled,
}

impl EvalMode {
    pub const ALL: [EvalMode; 5] = [
        EvalMode::Full,
        EvalMode::ReEntity,
        EvalMode::ReRelation,
        EvalMode::EeTriggerUnlabeled,
        EvalMode::EeArgumentUnlabeled,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EvalMode::Full => "full",
            EvalMode::ReEntity => "re-entity",
            EvalMode::ReRelation => "re-relation",
            EvalMode::EeTriggerUnlabeled => "ee-trigger-unlabeled",
            EvalMode::EeArgumentUnlabeled => "ee-argument-unlabeled",
        }
    }

    /// Whether the mode applies to `task`.
    pub fn supports(self, task: TaskKind) -> bool {
        match self {
            EvalMode::Full => true,
            EvalMode::ReEntity | EvalMode::ReRelation => task == TaskKind::Re,
            EvalMode::EeTriggerUnlabeled | EvalMode::EeArgumentUnlabeled => task == TaskKind::Ee,
        }
    }

    fn mismatch(self, t: &TaskTuple) -> Error {
        Error::ModeMismatch { mode: self.name().into(), tuple: t.to_string() }
    }

    /// Projects `t` for scoring. `Ok(None)` drops tuples the mode ignores;
    /// tuples from another task are an error.
    pub fn project(self, t: &TaskTuple) -> Result<Option<TaskTuple>> {
        Ok(match (self, t) {
            (EvalMode::Full, _) => Some(t.clone()),
            (EvalMode::ReEntity, TaskTuple::Entity { .. }) => Some(t.clone()),
            (EvalMode::ReRelation, TaskTuple::Relation { .. }) => Some(t.clone()),
            (EvalMode::ReEntity, TaskTuple::Relation { .. }) | (EvalMode::ReRelation, TaskTuple::Entity { .. }) => None,
            (EvalMode::EeTriggerUnlabeled, TaskTuple::Trigger { trigger, .. }) => {
                Some(TaskTuple::Trigger { kind: None, trigger: *trigger })
            }
            (EvalMode::EeArgumentUnlabeled, TaskTuple::Argument { trigger, argument, .. }) => {
                Some(TaskTuple::Argument { trigger: *trigger, role: None, argument: *argument })
            }
            (EvalMode::EeTriggerUnlabeled, TaskTuple::Argument { .. })
            | (EvalMode::EeArgumentUnlabeled, TaskTuple::Trigger { .. }) => None,
            _ => return Err(self.mismatch(t)),
        })
    }

    /// Projected modes count each distinct tuple once.
    fn unique(self) -> bool {
        matches!(self, EvalMode::ReEntity | EvalMode::EeTriggerUnlabeled | EvalMode::EeArgumentUnlabeled)
    }
}

impl fmt::Display for EvalMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for EvalMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EvalMode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown evaluation mode `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Counts {
    fn add(&mut self, o: Counts) {
        self.tp += o.tp;
        self.fp += o.fp;
        self.fn_ += o.fn_;
    }
}

/// Precision, recall and F1 with 0/0 taken as 0.
pub fn prf<F: Scalar>(c: Counts) -> (F, F, F) {
    let ratio = |a: usize, b: usize| if b == 0 { F::zero() } else { F::of_usize(a) / F::of_usize(b) };
    let p = ratio(c.tp, c.tp + c.fp);
    let r = ratio(c.tp, c.tp + c.fn_);
    let f1 = if p + r == F::zero() { F::zero() } else { F::of(2.0) * p * r / (p + r) };
    (p, r, f1)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scores<F> {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: F,
    pub recall: F,
    pub f1: F,
}

impl<F: Scalar> From<Counts> for Scores<F> {
    fn from(c: Counts) -> Self {
        let (precision, recall, f1) = prf(c);
        Scores { tp: c.tp, fp: c.fp, fn_: c.fn_, precision, recall, f1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport<F> {
    pub mode: EvalMode,
    #[serde(flatten)]
    pub overall: Scores<F>,
    pub per_label: BTreeMap<String, Scores<F>>,
}

impl<F: Scalar> EvalReport<F> {
    pub fn precision(&self) -> F {
        self.overall.precision
    }

    pub fn recall(&self) -> F {
        self.overall.recall
    }

    pub fn f1(&self) -> F {
        self.overall.f1
    }

    fn rows(&self) -> Vec<(&str, &Scores<F>)> {
        let mut rows: Vec<_> = self.per_label.iter().map(|(l, s)| (l.as_str(), s)).collect();
        rows.push(("micro", &self.overall));
        rows
    }

    /// Aligned plain-text table, one row per label plus a micro row.
    pub fn render_table(&self) -> String {
        let rows = self.rows();
        let w = rows.iter().map(|(l, _)| l.chars().count()).max().unwrap_or(0).max(5);
        let mut out = format!("mode: {}\n", self.mode);
        let _ = writeln!(
            out,
            "{:<w$}  {:>6}  {:>6}  {:>6}  {:>9}  {:>9}  {:>9}",
            "label", "tp", "fp", "fn", "precision", "recall", "f1"
        );
        for (label, s) in rows {
            let _ = writeln!(
                out,
                "{label:<w$}  {:>6}  {:>6}  {:>6}  {:>9.4}  {:>9.4}  {:>9.4}",
                s.tp,
                s.fp,
                s.fn_,
                s.precision.as_f64(),
                s.recall.as_f64(),
                s.f1.as_f64()
            );
        }
        out
    }

    /// CSV with a header row; `run` is written in the first column so
    /// reports from several runs can be concatenated.
    pub fn to_csv(&self, run: &str, with_header: bool) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        if with_header {
            w.write_record(["run", "mode", "label", "tp", "fp", "fn", "precision", "recall", "f1"])
                .expect("in-memory write");
        }
        for (label, s) in self.rows() {
            w.write_record([
                run.to_string(),
                self.mode.to_string(),
                label.to_string(),
                s.tp.to_string(),
                s.fp.to_string(),
                s.fn_.to_string(),
                s.precision.to_string(),
                s.recall.to_string(),
                s.f1.to_string(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
    }
}

/// Pools tp/fp/fn over sentences. Tuples only match within their own sentence.
#[derive(Clone, Debug)]
pub struct EvalAccumulator {
    mode: EvalMode,
    overall: Counts,
    per_label: BTreeMap<String, Counts>,
}

impl EvalAccumulator {
    pub fn new(mode: EvalMode) -> Self {
        Self { mode, overall: Counts::default(), per_label: BTreeMap::new() }
    }

    fn multiset(&self, tuples: &[TaskTuple]) -> Result<BTreeMap<TaskTuple, usize>> {
        let mut m = BTreeMap::new();
        for t in tuples {
            if let Some(p) = self.mode.project(t)? {
                *m.entry(p).or_insert(0) += 1;
            }
        }
        if self.mode.unique() {
            m.values_mut().for_each(|c| *c = 1);
        }
        Ok(m)
    }

    /// Adds one sentence's predictions and golds.
    pub fn add(&mut self, preds: &[TaskTuple], golds: &[TaskTuple]) -> Result<()> {
        let p = self.multiset(preds)?;
        let g = self.multiset(golds)?;
        let keys: BTreeSet<&TaskTuple> = p.keys().chain(g.keys()).collect();
        for t in keys {
            let np = p.get(t).copied().unwrap_or(0);
            let ng = g.get(t).copied().unwrap_or(0);
            let tp = np.min(ng);
            let c = Counts { tp, fp: np - tp, fn_: ng - tp };
            self.overall.add(c);
            self.per_label.entry(t.label().to_string()).or_default().add(c);
        }
        Ok(())
    }

    pub fn merge(&mut self, other: &EvalAccumulator) {
        self.overall.add(other.overall);
        for (l, c) in &other.per_label {
            self.per_label.entry(l.clone()).or_default().add(*c);
        }
    }

    pub fn counts(&self) -> Counts {
        self.overall
    }

    pub fn report<F: Scalar>(&self) -> EvalReport<F> {
        EvalReport {
            mode: self.mode,
            overall: self.overall.into(),
            per_label: self.per_label.iter().map(|(l, c)| (l.clone(), (*c).into())).collect(),
        }
    }
}

/// Micro P/R/F1 of one pool of predicted and gold tuples (one sentence, or
/// tuples already made unique across sentences).
pub fn micro_f1<F: Scalar>(preds: &[TaskTuple], golds: &[TaskTuple], mode: EvalMode) -> Result<EvalReport<F>> {
    let mut acc = EvalAccumulator::new(mode);
    acc.add(preds, golds)?;
    Ok(acc.report())
}

/// Scores per-sentence predictions against `items`, in order.
pub fn score_dataset<F: Scalar>(items: &[TaskItem], preds: &[Vec<TaskTuple>], mode: EvalMode) -> Result<EvalReport<F>> {
    if items.len() != preds.len() {
        return Err(Error::Config(format!("{} predictions for {} sentences", preds.len(), items.len())));
    }
    let mut acc = EvalAccumulator::new(mode);
    for (item, p) in items.iter().zip(preds) {
        acc.add(p, &item.tuples)?;
    }
    Ok(acc.report())
}

/// Runs `tagger` over every sentence in parallel. Output order follows `items`.
pub fn predict_dataset<F, T>(schema: &TaskSchema, tagger: &T, items: &[TaskItem]) -> Result<Vec<Vec<TaskTuple>>>
where
    F: Scalar,
    T: Tagger<F> + Sync + ?Sized,
{
    items.par_iter().map(|item| predict_task::<F, T, String>(schema, &item.tokens, tagger).map(|p| p.tuples)).collect()
}

pub fn evaluate_run<F, T>(schema: &TaskSchema, tagger: &T, items: &[TaskItem], mode: EvalMode) -> Result<EvalReport<F>>
where
    F: Scalar,
    T: Tagger<F> + Sync + ?Sized,
{
    if !mode.supports(schema.task) {
        return Err(Error::Config(format!("mode `{mode}` does not apply to task `{}`", schema.task)));
    }
    let preds = predict_dataset::<F, T>(schema, tagger, items)?;
    score_dataset(items, &preds, mode)
}
