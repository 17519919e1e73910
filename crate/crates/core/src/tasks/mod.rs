//! Casting IE tasks as label-to-span extraction.
//!
//! A [`TaskSchema`] lists the queries of each stage. Gold tuples are turned
//! into per-query span answers for training, and predicted answers are
//! assembled back into tuples.

mod fewshot;
mod schema;
mod tuple;

use std::collections::{BTreeMap, BTreeSet};

use crate::codec::{align_tags, decode_with_probs, encode_query, resolve_conflicts, ScoredSpan, TaggedExample};
use crate::error::Result;
use crate::harness::Tagger;
use crate::num::Scalar;
use crate::span::TokenRange;

pub use fewshot::{fewshot_sample, sampling_labels, FewShotRule, FewShotSample, FewShotSpec};
pub use schema::{binding, Binding, QuerySpec, RelationSpec, StageQuery, StageSpec, TaskConfig, TaskKind, TaskSchema};
pub use tuple::{TaskItem, TaskTuple};

/// Spans one query extracts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StageAnswer {
    pub query: StageQuery,
    pub spans: Vec<TokenRange>,
}

fn tag_or_label(q: &StageQuery) -> String {
    q.tag.clone().unwrap_or_else(|| q.label.clone())
}

/// The tuple a span answering `q` stands for, if any. SRL predicates and
/// ASTE opinions only become tuples through their stage-2 answers.
fn tuple_for(task: TaskKind, stage: usize, q: &StageQuery, span: TokenRange) -> Option<TaskTuple> {
    let bound = q.binding.as_ref().map(|b| b.range);
    Some(match (task, stage) {
        (TaskKind::Ner | TaskKind::Re, 0) => TaskTuple::Entity { kind: tag_or_label(q), span },
        (TaskKind::Re, _) => TaskTuple::Relation { head: bound?, relation: tag_or_label(q), tail: span },
        (TaskKind::Ee, 0) => TaskTuple::Trigger { kind: q.tag.clone(), trigger: span },
        (TaskKind::Ee, _) => TaskTuple::Argument { trigger: bound?, role: q.tag.clone(), argument: span },
        (TaskKind::Srl, 0) | (TaskKind::Aste, 0) => return None,
        (TaskKind::Srl, _) => TaskTuple::Role { predicate: bound?, role: tag_or_label(q), argument: span },
        (TaskKind::Absa, _) => TaskTuple::Sentiment { polarity: tag_or_label(q), term: span },
        (TaskKind::Aste, _) => {
            let b = q.binding.as_ref()?;
            TaskTuple::Triplet { aspect: span, opinion: b.range, polarity: b.tag.clone().unwrap_or_default() }
        }
        (TaskKind::Ner, _) => return None,
    })
}

/// Gold spans for one query: the spans of `tuples` the query should extract.
fn gold_spans(task: TaskKind, stage: usize, q: &StageQuery, tuples: &[TaskTuple]) -> Vec<TokenRange> {
    let tag = tag_or_label(q);
    let bound = q.binding.as_ref();
    let on = |r: &TokenRange| bound.is_some_and(|b| b.range == *r);
    let spans: BTreeSet<TokenRange> = tuples
        .iter()
        .filter_map(|t| match (task, stage, t) {
            (TaskKind::Ner | TaskKind::Re, 0, TaskTuple::Entity { kind, span }) if *kind == tag => Some(*span),
            (TaskKind::Re, 1, TaskTuple::Relation { head, relation, tail }) if on(head) && *relation == tag => {
                Some(*tail)
            }
            (TaskKind::Ee, 0, TaskTuple::Trigger { kind, trigger }) if q.tag.is_none() || *kind == q.tag => {
                Some(*trigger)
            }
            (TaskKind::Ee, 1, TaskTuple::Argument { trigger, role, argument })
                if on(trigger) && (q.tag.is_none() || *role == q.tag) =>
            {
                Some(*argument)
            }
            (TaskKind::Srl, 0, TaskTuple::Role { predicate, .. }) => Some(*predicate),
            (TaskKind::Srl, 1, TaskTuple::Role { predicate, role, argument }) if on(predicate) && *role == tag => {
                Some(*argument)
            }
            (TaskKind::Absa, 0, TaskTuple::Sentiment { polarity, term }) if *polarity == tag => Some(*term),
            (TaskKind::Aste, 0, TaskTuple::Triplet { opinion, polarity, .. }) if *polarity == tag => Some(*opinion),
            (TaskKind::Aste, 1, TaskTuple::Triplet { aspect, opinion, polarity })
                if on(opinion) && bound.and_then(|b| b.tag.as_ref()) == Some(polarity) =>
            {
                Some(*aspect)
            }
            _ => None,
        })
        .collect();
    spans.into_iter().collect()
}

/// Bindings for the stage after the one `answers` belong to.
fn next_bindings<S: AsRef<str>>(tokens: &[S], answers: &[StageAnswer]) -> Vec<Binding> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for a in answers {
        for &r in &a.spans {
            if seen.insert((r, a.query.tag.clone())) {
                out.push(binding(tokens, r, a.query.tag.clone()));
            }
        }
    }
    out.sort_by(|a, b| a.range.cmp(&b.range).then_with(|| a.tag.cmp(&b.tag)));
    out
}

/// Turns per-stage answers into tuples, sorted and deduplicated.
pub fn assemble(schema: &TaskSchema, answers: &[Vec<StageAnswer>]) -> Vec<TaskTuple> {
    let set: BTreeSet<TaskTuple> = answers
        .iter()
        .enumerate()
        .flat_map(|(stage, stage_answers)| {
            stage_answers
                .iter()
                .flat_map(move |a| a.spans.iter().filter_map(move |&s| tuple_for(schema.task, stage, &a.query, s)))
        })
        .collect();
    set.into_iter().collect()
}

/// Gold answers for every query of every stage, with later stages
/// instantiated from the gold spans of earlier ones.
pub fn gold_stage_answers(schema: &TaskSchema, item: &TaskItem) -> Result<Vec<Vec<StageAnswer>>> {
    let mut stages: Vec<Vec<StageAnswer>> = Vec::with_capacity(schema.stages.len());
    let mut prior: Vec<Vec<Binding>> = Vec::new();
    for stage in 0..schema.stages.len() {
        let answers: Vec<StageAnswer> = schema
            .build_queries(&item.tokens, stage, &prior)?
            .into_iter()
            .map(|query| {
                let spans = gold_spans(schema.task, stage, &query, &item.tuples);
                StageAnswer { query, spans }
            })
            .collect();
        prior.push(next_bindings(&item.tokens, &answers));
        stages.push(answers);
    }
    Ok(stages)
}

/// A gold query that could not become a training example.
#[derive(Clone, Debug, PartialEq)]
pub struct SkippedQuery {
    pub item_id: String,
    pub label: String,
    pub reason: String,
}

#[derive(Clone, Debug, Default)]
pub struct TrainingSet {
    pub examples: Vec<TaggedExample>,
    /// Queries with overlapping gold spans, which BIO cannot encode.
    pub skipped: Vec<SkippedQuery>,
    /// Gold tuples no query reaches (e.g. a relation whose head is not an
    /// annotated entity).
    pub unreachable: usize,
}

/// One tagged example per query of every stage, including queries with no
/// gold span (all-`O` negatives).
pub fn to_training_examples(schema: &TaskSchema, items: &[TaskItem]) -> Result<TrainingSet> {
    let mut out = TrainingSet::default();
    for item in items {
        let answers = gold_stage_answers(schema, item)?;
        let reached: BTreeSet<TaskTuple> = assemble(schema, &answers).into_iter().collect();
        out.unreachable += item.tuples.iter().collect::<BTreeSet<_>>().iter().filter(|t| !reached.contains(t)).count();
        for a in answers.into_iter().flatten() {
            let query = encode_query(&a.query.label, &item.tokens)?;
            match align_tags(query, &a.spans) {
                Ok(ex) => out.examples.push(ex),
                Err(e) => out.skipped.push(SkippedQuery {
                    item_id: item.id.clone(),
                    label: a.query.label,
                    reason: e.to_string(),
                }),
            }
        }
    }
    if !out.skipped.is_empty() || out.unreachable > 0 {
        log::warn!("{} queries skipped, {} gold tuples unreachable", out.skipped.len(), out.unreachable);
    }
    Ok(out)
}

/// Tuples predicted for one sentence plus the per-stage answers behind them.
#[derive(Clone, Debug)]
pub struct Prediction<F> {
    pub tuples: Vec<TaskTuple>,
    pub answers: Vec<Vec<StageAnswer>>,
    /// Spans kept after conflict resolution, per stage.
    pub scored: Vec<Vec<ScoredSpan<F>>>,
}

/// Candidates compete within one bound span (`None` in the first stage).
type GroupKey = Option<(TokenRange, Option<String>)>;

/// Runs every stage of `schema` on `tokens`.
///
/// Spans from the queries of one stage compete for tokens: overlaps are
/// removed greedily by score. Later stages compete per bound span, so two
/// heads may share a tail.
pub fn predict_task<F: Scalar, T: Tagger<F> + ?Sized, S: AsRef<str>>(
    schema: &TaskSchema,
    tokens: &[S],
    tagger: &T,
) -> Result<Prediction<F>> {
    let mut prior: Vec<Vec<Binding>> = Vec::new();
    let mut answers_all = Vec::new();
    let mut scored_all = Vec::new();
    for stage in 0..schema.stages.len() {
        let queries = schema.build_queries(tokens, stage, &prior)?;
        let mut groups: BTreeMap<GroupKey, Vec<(usize, ScoredSpan<F>)>> = BTreeMap::new();
        for (qi, q) in queries.iter().enumerate() {
            let encoded = encode_query(&q.label, tokens)?;
            let dist = tagger.predict(&encoded)?;
            let key = q.binding.as_ref().map(|b| (b.range, b.tag.clone()));
            let group = groups.entry(key).or_default();
            for s in decode_with_probs(&dist, &q.label) {
                group.push((qi, s));
            }
        }
        let mut spans_by_query: Vec<Vec<TokenRange>> = vec![Vec::new(); queries.len()];
        let mut kept_stage = Vec::new();
        for (_, cands) in groups {
            let (owners, spans): (Vec<usize>, Vec<ScoredSpan<F>>) = cands.into_iter().unzip();
            // The query index rides in the label so ties still break by label text.
            let tagged: Vec<ScoredSpan<F>> = spans
                .into_iter()
                .zip(&owners)
                .map(|(s, &qi)| ScoredSpan { label: format!("{}\u{0}{qi:08}", s.label), ..s })
                .collect();
            for k in resolve_conflicts(tagged) {
                let (label, qi) = k.label.rsplit_once('\u{0}').expect("tagged label");
                let qi: usize = qi.parse().expect("query index");
                spans_by_query[qi].push(k.range);
                kept_stage.push(ScoredSpan { label: label.to_string(), ..k });
            }
        }
        kept_stage.sort_by(|a, b| a.range.cmp(&b.range).then_with(|| a.label.cmp(&b.label)));
        let answers: Vec<StageAnswer> = queries
            .into_iter()
            .zip(spans_by_query)
            .map(|(query, mut spans)| {
                spans.sort();
                StageAnswer { query, spans }
            })
            .collect();
        prior.push(next_bindings(tokens, &answers));
        answers_all.push(answers);
        scored_all.push(kept_stage);
    }
    Ok(Prediction { tuples: assemble(schema, &answers_all), answers: answers_all, scored: scored_all })
}
