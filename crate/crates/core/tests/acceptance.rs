//! Acceptance suite. Each test prints one `PASS`/`FAIL` line for its
//! criterion (to stderr, so it survives output capture) and then asserts.
//!
//! Oracles here are written independently of the library: brute-force
//! enumeration, hand-counted multisets and hand-encoded fixtures.

use std::collections::BTreeMap;
use std::io::Write;
use std::time::{Duration, Instant};

use labelspan::codec::{align_tags, decode_spans, encode_query, resolve_conflicts, ScoredSpan, Tag, TaggedExample};
use labelspan::eval::{evaluate_run, micro_f1, EvalMode, EvalReport};
use labelspan::harness::{
    convert_causal, convert_seq2seq, distill_to_training, fit_tagger, parse_causal, parse_seq2seq, ToyTagger,
    TrainConfig,
};
use labelspan::synth::{parse_llm_response, synthesize, SynthConfig};
use labelspan::synthetic::{ToyWorld, NER_TYPES};
use labelspan::tasks::{
    assemble, binding, fewshot_sample, to_training_examples, FewShotRule, FewShotSpec, StageAnswer, TaskConfig,
    TaskItem, TaskKind, TaskSchema, TaskTuple,
};
use labelspan::TokenRange;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

/// Pinned limits. Times are wall-clock budgets for an unoptimized test build.
mod limits {
    use std::time::Duration;

    pub const CODEC_CASES: usize = 1000;
    pub const CODEC_TIME: Duration = Duration::from_secs(5);
    pub const CONFLICT_CASES: usize = 500;
    pub const CONFLICT_MAX_SPANS: usize = 8;
    pub const CONFLICT_TIME: Duration = Duration::from_secs(10);
    pub const F1_CASES: usize = 500;
    pub const F1_MAX_TUPLES: usize = 30;
    pub const F1_TOLERANCE: f64 = 1e-12;
    pub const F1_TIME: Duration = Duration::from_secs(5);
    pub const PARSER_CASES: usize = 50;
    pub const TRANSFER_SEEDS: u64 = 5;
    pub const TRANSFER_MIN_RECORDS: usize = 1000;
    pub const TRANSFER_MIN_GAP: f64 = 0.05;
    pub const TRANSFER_TIME: Duration = Duration::from_secs(300);
    pub const CONVERTER_CASES: usize = 1000;
}

fn verdict(id: u8, name: &str, ok: bool, detail: &str) {
    let status = if ok { "PASS" } else { "FAIL" };
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "{status} criterion {id} ({name}): {detail}");
    assert!(ok, "criterion {id} ({name}) failed: {detail}");
}

fn within(elapsed: Duration, budget: Duration) -> bool {
    elapsed < budget
}

const WORDS: [&str; 16] = [
    "John", "Smith", "loves", "his", "hometown", ",", "Los", "Angeles", "the", "bank", "-", ":", "'s", "2020",
    "Zürich", ".",
];

fn random_tokens(rng: &mut ChaCha8Rng, len: usize) -> Vec<String> {
    (0..len).map(|_| WORDS.choose(rng).unwrap().to_string()).collect()
}

/// Sorted, disjoint, non-empty spans inside `len` tokens.
fn random_spans(rng: &mut ChaCha8Rng, len: usize) -> Vec<TokenRange> {
    let mut spans = Vec::new();
    let mut k = 0;
    while k < len {
        k += rng.gen_range(0..4);
        if k >= len || rng.gen_bool(0.3) {
            break;
        }
        let end = (k + rng.gen_range(1..=4)).min(len);
        spans.push(TokenRange::new(k, end));
        k = end;
    }
    spans
}

#[test]
fn criterion_1_codec_round_trip() {
    let labels = ["Person", "Time period", "Argument for Trigger 'loves'", "John Smith births in", "A1"];
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let t0 = Instant::now();
    let mut ok = 0;
    for _ in 0..limits::CODEC_CASES {
        let len = rng.gen_range(1..=40);
        let tokens = random_tokens(&mut rng, len);
        let spans = random_spans(&mut rng, tokens.len());
        let label = labels.choose(&mut rng).unwrap();
        let query = encode_query(label, &tokens).unwrap();
        let ex = align_tags(query, &spans).unwrap();
        let b_count = ex.tags.iter().filter(|t| **t == Tag::B).count();
        if decode_spans(&ex.tags) == spans
            && ex.prefix_tokens.last().map(String::as_str) == Some(":")
            && ex.body_tokens == tokens
            && b_count == spans.len()
        {
            ok += 1;
        }
    }
    let elapsed = t0.elapsed();
    verdict(
        1,
        "codec round-trip",
        ok == limits::CODEC_CASES && within(elapsed, limits::CODEC_TIME),
        &format!("{ok}/{} recovered in {elapsed:.2?}", limits::CODEC_CASES),
    );
}

/// Priority order the greedy pass documents: higher score, then earlier
/// start, then shorter span, then smaller label.
fn rank_order(c: &[ScoredSpan<f64>]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..c.len()).collect();
    idx.sort_by(|&a, &b| {
        let (x, y) = (&c[a], &c[b]);
        y.score
            .total_cmp(&x.score)
            .then(x.range.start.cmp(&y.range.start))
            .then((x.range.end - x.range.start).cmp(&(y.range.end - y.range.start)))
            .then(x.label.cmp(&y.label))
    });
    let mut rank = vec![0; c.len()];
    for (r, &i) in idx.iter().enumerate() {
        rank[i] = r;
    }
    rank
}

fn disjoint(a: TokenRange, b: TokenRange) -> bool {
    a.end <= b.start || b.end <= a.start
}

/// Brute force over all subsets: the non-overlapping subset whose ascending
/// rank list is best, where a smaller rank at the first difference wins and
/// a strict extension beats its prefix.
fn brute_force_selection(c: &[ScoredSpan<f64>]) -> Vec<usize> {
    let rank = rank_order(c);
    let mut best: Option<Vec<usize>> = None;
    for mask in 0u32..(1 << c.len()) {
        let members: Vec<usize> = (0..c.len()).filter(|i| mask & (1 << i) != 0).collect();
        let independent = members
            .iter()
            .enumerate()
            .all(|(k, &i)| members[k + 1..].iter().all(|&j| disjoint(c[i].range, c[j].range)));
        if !independent {
            continue;
        }
        let mut ranks: Vec<usize> = members.iter().map(|&i| rank[i]).collect();
        ranks.sort_unstable();
        let better = match &best {
            None => true,
            Some(b) => match ranks.iter().zip(b).find(|(x, y)| x != y) {
                Some((x, y)) => x < y,
                None => ranks.len() > b.len(),
            },
        };
        if better {
            best = Some(ranks);
        }
    }
    let by_rank: BTreeMap<usize, usize> = rank.iter().enumerate().map(|(i, &r)| (r, i)).collect();
    best.unwrap_or_default().into_iter().map(|r| by_rank[&r]).collect()
}

#[test]
fn criterion_2_conflict_resolution_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let scores = [-0.1, -0.5, -0.5, -1.0, -2.0];
    let t0 = Instant::now();
    let mut agree = 0;
    for _ in 0..limits::CONFLICT_CASES {
        let n = rng.gen_range(1..=limits::CONFLICT_MAX_SPANS);
        let mut cands: Vec<ScoredSpan<f64>> = Vec::new();
        while cands.len() < n {
            let start = rng.gen_range(0..12);
            let end = (start + rng.gen_range(1..=4)).min(12);
            let label = ["A", "B", "C"].choose(&mut rng).unwrap().to_string();
            // Repeated scores exercise every tie-break.
            let score = if rng.gen_bool(0.6) { *scores.choose(&mut rng).unwrap() } else { -rng.gen::<f64>() * 3.0 };
            let range = TokenRange::new(start, end);
            if !cands.iter().any(|c| c.range == range && c.label == label) {
                cands.push(ScoredSpan { label, range, score });
            }
        }
        let out = resolve_conflicts(cands.clone());

        let non_overlapping = out.windows(2).all(|w| w[0].range.end <= w[1].range.start);
        let top = cands.iter().map(|c| c.score).fold(f64::NEG_INFINITY, f64::max);
        let has_top = out.iter().any(|s| s.score == top);
        let maximal = cands.iter().all(|c| out.contains(c) || out.iter().any(|k| !disjoint(k.range, c.range)));

        let mut expected: Vec<ScoredSpan<f64>> =
            brute_force_selection(&cands).into_iter().map(|i| cands[i].clone()).collect();
        expected.sort_by_key(|s| s.range.start);
        if non_overlapping && has_top && maximal && out == expected {
            agree += 1;
        }
    }
    let elapsed = t0.elapsed();
    verdict(
        2,
        "conflict resolution oracle",
        agree == limits::CONFLICT_CASES && within(elapsed, limits::CONFLICT_TIME),
        &format!("{agree}/{} agree with subset enumeration in {elapsed:.2?}", limits::CONFLICT_CASES),
    );
}

fn random_tuple(rng: &mut ChaCha8Rng) -> TaskTuple {
    let r = |rng: &mut ChaCha8Rng| {
        let s = rng.gen_range(0..4);
        TokenRange::new(s, s + rng.gen_range(1..3))
    };
    if rng.gen_bool(0.7) {
        TaskTuple::Entity { kind: ["Person", "Location", "Org"].choose(rng).unwrap().to_string(), span: r(rng) }
    } else {
        TaskTuple::Relation {
            head: r(rng),
            relation: ["born_in", "works_for"].choose(rng).unwrap().to_string(),
            tail: r(rng),
        }
    }
}

/// Counts by hand: for every distinct tuple, matches are the smaller of its
/// two multiplicities.
fn brute_counts(preds: &[TaskTuple], golds: &[TaskTuple], label: Option<&str>) -> (usize, usize, usize) {
    let keep = |t: &&TaskTuple| label.is_none_or(|l| t.label() == l);
    let mut distinct: Vec<&TaskTuple> = preds.iter().chain(golds).filter(keep).collect();
    distinct.sort();
    distinct.dedup();
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    for t in distinct {
        let p = preds.iter().filter(|x| *x == t).count();
        let g = golds.iter().filter(|x| *x == t).count();
        let m = p.min(g);
        tp += m;
        fp += p - m;
        fn_ += g - m;
    }
    (tp, fp, fn_)
}

fn brute_prf(tp: usize, fp: usize, fn_: usize) -> (f64, f64, f64) {
    let p = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
    let r = if tp + fn_ == 0 { 0.0 } else { tp as f64 / (tp + fn_) as f64 };
    let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    (p, r, f)
}

#[test]
fn criterion_3_micro_f1_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let close = |a: f64, b: f64| (a - b).abs() <= limits::F1_TOLERANCE;
    let t0 = Instant::now();
    let mut agree = 0;
    for _ in 0..limits::F1_CASES {
        let preds: Vec<TaskTuple> =
            (0..rng.gen_range(0..=limits::F1_MAX_TUPLES)).map(|_| random_tuple(&mut rng)).collect();
        let golds: Vec<TaskTuple> =
            (0..rng.gen_range(0..=limits::F1_MAX_TUPLES)).map(|_| random_tuple(&mut rng)).collect();
        let report: EvalReport<f64> = micro_f1(&preds, &golds, EvalMode::Full).unwrap();

        let (tp, fp, fn_) = brute_counts(&preds, &golds, None);
        let (p, r, f) = brute_prf(tp, fp, fn_);
        let mut ok = (report.overall.tp, report.overall.fp, report.overall.fn_) == (tp, fp, fn_)
            && close(report.precision(), p)
            && close(report.recall(), r)
            && close(report.f1(), f);

        let mut labels: Vec<&str> = preds.iter().chain(&golds).map(TaskTuple::label).collect();
        labels.sort_unstable();
        labels.dedup();
        ok &= report.per_label.len() == labels.len();
        for l in labels {
            let (tp, fp, fn_) = brute_counts(&preds, &golds, Some(l));
            let (p, r, f) = brute_prf(tp, fp, fn_);
            ok &= report.per_label.get(l).is_some_and(|s| {
                (s.tp, s.fp, s.fn_) == (tp, fp, fn_) && close(s.precision, p) && close(s.recall, r) && close(s.f1, f)
            });
        }
        if ok {
            agree += 1;
        }
    }
    let elapsed = t0.elapsed();
    verdict(
        3,
        "micro-F1 oracle equivalence",
        agree == limits::F1_CASES && within(elapsed, limits::F1_TIME),
        &format!(
            "{agree}/{} match the brute-force counter (tol {:e}) in {elapsed:.2?}",
            limits::F1_CASES,
            limits::F1_TOLERANCE
        ),
    );
}

#[derive(Deserialize)]
struct WorkedFixture {
    sentence: String,
    tasks: Vec<WorkedTask>,
}

#[derive(Deserialize)]
struct WorkedTask {
    name: String,
    config: TaskConfig,
    queries: Vec<WorkedQuery>,
    tuples: Vec<TaskTuple>,
}

#[derive(Deserialize)]
struct WorkedQuery {
    label: String,
    tagged: String,
}

fn parse_tagged(line: &str) -> (Vec<String>, Vec<Tag>) {
    line.split(' ')
        .map(|pair| {
            let (tok, tag) = pair.rsplit_once('/').expect("token/tag");
            let tag = match tag {
                "B" => Tag::B,
                "I" => Tag::I,
                "O" => Tag::O,
                other => panic!("bad tag {other}"),
            };
            (tok.to_string(), tag)
        })
        .unzip()
}

/// Runs the stages the way inference does, but answers each query by
/// decoding the tags of the training example with the same label.
fn decode_and_assemble(schema: &TaskSchema, tokens: &[String], examples: &[TaggedExample]) -> Option<Vec<TaskTuple>> {
    let mut bindings = Vec::new();
    let mut answers: Vec<Vec<StageAnswer>> = Vec::new();
    for stage in 0..schema.stages.len() {
        let queries = schema.build_queries(tokens, stage, &bindings).ok()?;
        let mut stage_answers = Vec::new();
        for q in queries {
            let ex = examples.iter().find(|e| e.label == q.label)?;
            stage_answers.push(StageAnswer { query: q, spans: decode_spans(&ex.tags) });
        }
        let next: Vec<_> = stage_answers
            .iter()
            .flat_map(|a| a.spans.iter().map(|&r| binding(tokens, r, a.query.tag.clone())))
            .collect();
        bindings.push(next);
        answers.push(stage_answers);
    }
    Some(assemble(schema, &answers))
}

#[test]
fn criterion_4_worked_examples() {
    let fixture: WorkedFixture =
        serde_json::from_str(include_str!("fixtures/worked_examples.json")).expect("worked-example fixture");
    let tokens: Vec<String> = fixture.sentence.split(' ').map(str::to_string).collect();
    let mut passed = Vec::new();
    let mut failed = Vec::new();
    for task in &fixture.tasks {
        let schema = task.config.clone().build().unwrap();
        let item = TaskItem { id: task.name.clone(), tokens: tokens.clone(), tuples: task.tuples.clone() };
        let set = to_training_examples(&schema, std::slice::from_ref(&item)).unwrap();

        let produced: Vec<(String, Vec<Tag>)> =
            set.examples.iter().map(|e| (e.label.clone(), e.tags.clone())).collect();
        let expected: Vec<(String, Vec<Tag>)> = task
            .queries
            .iter()
            .map(|q| {
                let (toks, tags) = parse_tagged(&q.tagged);
                assert_eq!(toks, tokens, "{}: fixture tokens", task.name);
                (q.label.clone(), tags)
            })
            .collect();

        let mut want = task.tuples.clone();
        want.sort();
        let ok = produced == expected && decode_and_assemble(&schema, &tokens, &set.examples) == Some(want);
        if ok { &mut passed } else { &mut failed }.push(task.name.as_str());
    }
    verdict(
        4,
        "worked-example fidelity",
        failed.is_empty() && passed.len() == 6,
        &format!("{}/{} tasks round-trip {:?}; failed {:?}", passed.len(), fixture.tasks.len(), passed, failed),
    );
}

fn synthetic_items(
    rng: &mut ChaCha8Rng,
    n: usize,
    make: impl Fn(&mut ChaCha8Rng) -> Option<TaskTuple>,
) -> Vec<TaskItem> {
    let tokens: Vec<String> = "a b c d e f g h i j".split(' ').map(str::to_string).collect();
    (0..n)
        .map(|i| TaskItem {
            id: format!("s{i}"),
            tokens: tokens.clone(),
            tuples: (0..rng.gen_range(0..=3)).filter_map(|_| make(rng)).collect(),
        })
        .collect()
}

/// Labels with skewed frequencies; the last one is rare.
fn skewed<'a>(rng: &mut ChaCha8Rng, labels: &[&'a str]) -> &'a str {
    let x: f64 = rng.gen();
    let k = if x < 0.015 { labels.len() - 1 } else { ((x * 7.0) as usize) % (labels.len() - 1) };
    labels[k]
}

fn sample_bytes(items: &[TaskItem], spec: &FewShotSpec) -> (Vec<u8>, Vec<usize>) {
    let s = fewshot_sample(items, spec).unwrap();
    let mut out = Vec::new();
    for i in &s.indices {
        serde_json::to_writer(&mut out, &items[*i]).unwrap();
        out.push(b'\n');
    }
    (out, s.indices)
}

#[test]
fn criterion_5_fewshot_protocol() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let r = TokenRange::new;
    let mut problems: Vec<String> = Vec::new();
    let mut checked = Vec::new();

    type Gen = Box<dyn Fn(&mut ChaCha8Rng) -> Option<TaskTuple>>;
    type LabelOf = fn(&TaskTuple) -> Option<&str>;
    let per_label: Vec<(TaskKind, Gen, LabelOf)> = vec![
        (
            TaskKind::Ner,
            Box::new(move |g| {
                Some(TaskTuple::Entity { kind: skewed(g, &["PER", "LOC", "ORG", "MISC"]).into(), span: r(0, 1) })
            }),
            |t| matches!(t, TaskTuple::Entity { .. }).then(|| t.label()),
        ),
        (
            TaskKind::Re,
            Box::new(move |g| {
                Some(if g.gen_bool(0.5) {
                    TaskTuple::Entity { kind: "PER".into(), span: r(0, 1) }
                } else {
                    TaskTuple::Relation {
                        head: r(0, 1),
                        relation: skewed(g, &["born_in", "works_for", "lives_in"]).into(),
                        tail: r(2, 3),
                    }
                })
            }),
            |t| matches!(t, TaskTuple::Relation { .. }).then(|| t.label()),
        ),
        (
            TaskKind::Absa,
            Box::new(move |g| {
                Some(TaskTuple::Sentiment { polarity: skewed(g, &["POS", "NEG", "NEU"]).into(), term: r(1, 2) })
            }),
            |t| matches!(t, TaskTuple::Sentiment { .. }).then(|| t.label()),
        ),
        (
            TaskKind::Aste,
            Box::new(move |g| {
                Some(TaskTuple::Triplet {
                    aspect: r(1, 2),
                    opinion: r(3, 4),
                    polarity: skewed(g, &["POS", "NEG", "NEU"]).into(),
                })
            }),
            |t| matches!(t, TaskTuple::Triplet { .. }).then(|| t.label()),
        ),
    ];

    for (task, gen, label_of) in &per_label {
        let items = synthetic_items(&mut rng, 300, gen);
        let spec = FewShotSpec::standard(*task, 11);
        assert_eq!(spec.rule, FewShotRule::PerLabel { k: 5 });
        let (a, idx) = sample_bytes(&items, &spec);
        let (b, _) = sample_bytes(&items, &spec);
        if a != b {
            problems.push(format!("{task}: not byte-identical"));
        }
        let mut available: BTreeMap<&str, usize> = BTreeMap::new();
        for it in &items {
            let mut ls: Vec<&str> = it.tuples.iter().filter_map(label_of).collect();
            ls.sort_unstable();
            ls.dedup();
            for l in ls {
                *available.entry(l).or_default() += 1;
            }
        }
        for (label, avail) in &available {
            let got = idx.iter().filter(|&&i| items[i].tuples.iter().filter_map(label_of).any(|l| l == *label)).count();
            if got < 5.min(*avail) {
                problems.push(format!("{task}: label {label} has {got} of {avail} (want >= 5)"));
            }
        }
        if idx.len() > 5 * available.len() || idx.windows(2).any(|w| w[0] >= w[1]) {
            problems.push(format!("{task}: {} indices for {} labels", idx.len(), available.len()));
        }
        checked.push(format!("{task}:{}", idx.len()));
    }

    for n in [1usize, 19, 20, 21, 200, 333, 1000] {
        let items =
            synthetic_items(&mut rng, n, |_| Some(TaskTuple::Trigger { kind: None, trigger: TokenRange::new(2, 3) }));
        let spec = FewShotSpec::standard(TaskKind::Ee, 11);
        let (a, idx) = sample_bytes(&items, &spec);
        let (b, _) = sample_bytes(&items, &spec);
        let want = (5 * n).div_ceil(100);
        if a != b || idx.len() != want {
            problems.push(format!("ee n={n}: {} sampled, want {want}", idx.len()));
        }
        checked.push(format!("ee{n}:{}", idx.len()));
    }

    for n in [300usize, 50, 40] {
        let items = synthetic_items(&mut rng, n, |_| None);
        let spec = FewShotSpec::standard(TaskKind::Srl, 11);
        let (a, idx) = sample_bytes(&items, &spec);
        let (b, _) = sample_bytes(&items, &spec);
        let want = n.min(50);
        if a != b || idx.len() != want {
            problems.push(format!("srl n={n}: {} sampled, want {want}", idx.len()));
        }
        checked.push(format!("srl{n}:{}", idx.len()));
    }

    verdict(
        5,
        "few-shot protocol",
        problems.is_empty(),
        &format!("sizes {}; problems {:?}", checked.join(" "), problems),
    );
}

#[derive(Deserialize)]
struct ResponseCase {
    name: String,
    class: String,
    response: String,
    expected: Vec<(String, String)>,
}

#[test]
fn criterion_6_parser_totality_and_fidelity() {
    let cases: Vec<ResponseCase> =
        serde_json::from_str(include_str!("fixtures/llm_responses.json")).expect("response fixture");
    let mut panics = Vec::new();
    let mut mismatches = Vec::new();
    for case in &cases {
        let response = case.response.clone();
        match std::panic::catch_unwind(move || parse_llm_response(&response)) {
            Err(_) => panics.push(case.name.clone()),
            Ok(out) => {
                let got: Vec<(String, String)> = out.pairs.into_iter().map(|p| (p.label, p.span_text)).collect();
                if got != case.expected {
                    mismatches.push(format!("{} [{}]: {got:?}", case.name, case.class));
                }
            }
        }
    }
    let place = cases
        .iter()
        .any(|c| c.response == "- Place: New York" && c.expected == [("Place".to_string(), "New York".to_string())]);
    verdict(
        6,
        "parser totality and fidelity",
        cases.len() == limits::PARSER_CASES && panics.is_empty() && mismatches.is_empty() && place,
        &format!("{} cases, {} panics, {} mismatches {:?}", cases.len(), panics.len(), mismatches.len(), mismatches),
    );
}

/// Fine-tuning protocol for both arms: same data, steps and learning rate.
fn finetune_config(seed: u64) -> TrainConfig {
    TrainConfig { learning_rate: 0.05, batch_size: 8, epochs: 20, seed, ..TrainConfig::default() }
}

#[test]
fn criterion_7_transfer_gain() {
    let t0 = Instant::now();
    let schema = TaskSchema::ner(&NER_TYPES);
    let mut gaps = Vec::new();
    let mut lines = Vec::new();
    let mut min_records = usize::MAX;
    for seed in 0..limits::TRANSFER_SEEDS {
        let world = ToyWorld::new(seed, 60);
        let synth = SynthConfig { n: 1200, parallelism: 4, ..SynthConfig::default() };
        let records = synthesize(world.corpus(1500, seed), &world.mock_llm(), &synth).unwrap().records;
        min_records = min_records.min(records.len());

        let pretrain_examples = distill_to_training(&records, 1, seed);
        let pretrain = TrainConfig { learning_rate: 0.05, seed, ..TrainConfig::default() };
        let (pretrained, _) = fit_tagger(ToyTagger::<f64>::default(), &pretrain_examples, &pretrain).unwrap();

        let pool = world.ner_dataset(300, seed + 100, "pool");
        let test = world.ner_dataset(200, seed + 200, "test");
        let shots = fewshot_sample(&pool, &FewShotSpec::standard(TaskKind::Ner, seed)).unwrap();
        let shot_items: Vec<TaskItem> = shots.items(&pool).into_iter().cloned().collect();
        let train = to_training_examples(&schema, &shot_items).unwrap().examples;

        let ft = finetune_config(seed);
        let (scratch, _) = fit_tagger(ToyTagger::<f64>::default(), &train, &ft).unwrap();
        let (tuned, _) = fit_tagger(pretrained, &train, &ft).unwrap();
        let f_scratch = evaluate_run::<f64, _>(&schema, &scratch, &test, EvalMode::Full).unwrap().f1();
        let f_tuned = evaluate_run::<f64, _>(&schema, &tuned, &test, EvalMode::Full).unwrap().f1();
        gaps.push(f_tuned - f_scratch);
        lines.push(format!("seed {seed}: scratch {f_scratch:.3} pretrained {f_tuned:.3}"));
    }
    let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
    let elapsed = t0.elapsed();
    verdict(
        7,
        "distillation transfer",
        mean > limits::TRANSFER_MIN_GAP
            && min_records >= limits::TRANSFER_MIN_RECORDS
            && within(elapsed, limits::TRANSFER_TIME),
        &format!(
            "mean gap {mean:+.3} (need > {}), >= {min_records} records per seed, {elapsed:.1?}; {}",
            limits::TRANSFER_MIN_GAP,
            lines.join("; ")
        ),
    );
}

fn random_example(rng: &mut ChaCha8Rng, len: usize) -> TaggedExample {
    let tokens = random_tokens(rng, len);
    let spans = random_spans(rng, len);
    align_tags(encode_query("Person", &tokens).unwrap(), &spans).unwrap()
}

#[test]
fn criterion_8_training_protocol() {
    let defaults = TrainConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut problems = Vec::new();
    let mut sizes = Vec::new();
    for n in [1usize, 63, 64, 65, 128, 129, 500] {
        let examples: Vec<TaggedExample> = (0..n).map(|_| random_example(&mut rng, 6)).collect();
        let (_, log) = fit_tagger(ToyTagger::<f64>::default(), &examples, &defaults).unwrap();
        // Spelled out rather than div_ceil, which the trainer itself uses.
        #[allow(clippy::manual_div_ceil)]
        let want = (n + 63) / 64;
        let all_full = log.batches.iter().rev().skip(1).all(|b| b.size == 64);
        let total: usize = log.batches.iter().map(|b| b.size).sum();
        if log.batch_count() != want
            || log.epochs() != 1
            || log.batches.iter().any(|b| b.epoch != 0)
            || !all_full
            || total != n
        {
            problems.push(format!(
                "n={n}: {} batches over {} epochs, {total} examples",
                log.batch_count(),
                log.epochs()
            ));
        }
        sizes.push(format!("{n}->{}", log.batch_count()));
    }
    let ok = problems.is_empty() && defaults.batch_size == 64 && defaults.epochs == 1 && defaults.learning_rate == 2e-5;
    verdict(8, "training protocol", ok, &format!("batches {}; problems {:?}", sizes.join(" "), problems));
}

#[test]
fn criterion_9_converter_inverse() {
    let labels = ["Person", "Time period", "Argument for Trigger 'loves'", "A1 Argument for Verb 'is'"];
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut ok = 0;
    for _ in 0..limits::CONVERTER_CASES {
        let len = rng.gen_range(1..=30);
        let tokens = random_tokens(&mut rng, len);
        let spans = random_spans(&mut rng, tokens.len());
        let label = labels.choose(&mut rng).unwrap();
        let ex = align_tags(encode_query(label, &tokens).unwrap(), &spans).unwrap();
        let want: Vec<String> = spans.iter().map(|r| tokens[r.start..r.end].join(" ")).collect();

        let pair = convert_seq2seq(&ex);
        let causal = convert_causal(&ex);
        let s2s = parse_seq2seq(&pair.input, &pair.target);
        let clm = parse_causal(&causal.text);
        let good = |p: Option<_>| {
            p.is_some_and(|p: labelspan::harness::ParsedExtraction| p.label == *label && p.spans == want)
        };
        if good(s2s) && good(clm) {
            ok += 1;
        }
    }
    verdict(
        9,
        "seq2seq and causal converters",
        ok == limits::CONVERTER_CASES,
        &format!("{ok}/{} recovered by both inverse parsers", limits::CONVERTER_CASES),
    );
}
