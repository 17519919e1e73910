use std::collections::BTreeSet;
use std::fmt;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::span::TokenRange;
use crate::text::detokenize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Ner,
    Re,
    Ee,
    Srl,
    Absa,
    Aste,
}

impl TaskKind {
    pub const ALL: [TaskKind; 6] =
        [TaskKind::Ner, TaskKind::Re, TaskKind::Ee, TaskKind::Srl, TaskKind::Absa, TaskKind::Aste];

    fn stage_count(self) -> usize {
        match self {
            TaskKind::Ner | TaskKind::Absa => 1,
            _ => 2,
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TaskKind::Ner => "ner",
            TaskKind::Re => "re",
            TaskKind::Ee => "ee",
            TaskKind::Srl => "srl",
            TaskKind::Absa => "absa",
            TaskKind::Aste => "aste",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for TaskKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TaskKind::ALL
            .into_iter()
            .find(|k| k.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown task `{s}`")))
    }
}

/// A label template and the schema value it stands for (entity type,
/// relation name, role, polarity; `None` when the query is unlabeled).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuerySpec {
    pub template: String,
    pub tag: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageSpec {
    /// Placeholder name later stages use to refer to this stage's spans.
    pub produces: String,
    pub queries: Vec<QuerySpec>,
}

/// A prior-stage span a later query is instantiated with.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Binding {
    pub range: TokenRange,
    pub text: String,
    /// Tag of the query that produced the span.
    pub tag: Option<String>,
}

/// A fully instantiated query of one stage.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StageQuery {
    pub label: String,
    pub tag: Option<String>,
    pub binding: Option<Binding>,
}

static PLACEHOLDER: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\{([A-Za-z_][A-Za-z0-9_]*)\}").unwrap());

fn placeholders(template: &str) -> BTreeSet<String> {
    PLACEHOLDER.captures_iter(template).map(|c| c[1].to_string()).collect()
}

/// Declarative description of one task in label-to-span form.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawSchema")]
pub struct TaskSchema {
    pub task: TaskKind,
    pub stages: Vec<StageSpec>,
    /// Placeholder bound by each stage (`None` for the first).
    #[serde(skip)]
    binds: Vec<Option<(String, usize)>>,
}

#[derive(Deserialize)]
struct RawSchema {
    task: TaskKind,
    stages: Vec<StageSpec>,
}

impl TryFrom<RawSchema> for TaskSchema {
    type Error = Error;

    fn try_from(raw: RawSchema) -> Result<Self> {
        TaskSchema::new(raw.task, raw.stages)
    }
}

impl TaskSchema {
    /// Validates stage structure: the task's stage count, at least one query
    /// per stage, and at most one placeholder per stage naming an earlier
    /// stage's output.
    pub fn new(task: TaskKind, stages: Vec<StageSpec>) -> Result<Self> {
        if stages.len() != task.stage_count() {
            return Err(Error::Config(format!("{task} needs {} stage(s), got {}", task.stage_count(), stages.len())));
        }
        let mut binds = Vec::with_capacity(stages.len());
        for (k, stage) in stages.iter().enumerate() {
            if stage.queries.is_empty() {
                return Err(Error::Config(format!("stage {k} has no queries")));
            }
            let names: BTreeSet<String> = stage.queries.iter().flat_map(|q| placeholders(&q.template)).collect();
            let bind = match names.len() {
                0 => None,
                1 => {
                    let name = names.into_iter().next().unwrap();
                    let source = stages[..k].iter().position(|s| s.produces == name).ok_or_else(|| {
                        let t = stage.queries.iter().find(|q| q.template.contains(&name)).unwrap();
                        Error::UnresolvedPlaceholder(name.clone(), t.template.clone())
                    })?;
                    Some((name, source))
                }
                _ => return Err(Error::Config(format!("stage {k} mixes placeholders {names:?}"))),
            };
            if k > 0 && bind.is_none() {
                return Err(Error::Config(format!("stage {k} does not refer to an earlier stage")));
            }
            if let Some((_, src)) = &bind {
                if *src != k - 1 {
                    return Err(Error::Config(format!("stage {k} must bind the stage right before it")));
                }
            }
            binds.push(bind);
        }
        Ok(Self { task, stages, binds })
    }

    pub fn ner<S: AsRef<str>>(entity_types: &[S]) -> Self {
        TaskConfig::Ner { entity_types: owned(entity_types) }.build().expect("valid NER schema")
    }

    /// `relations` are `(name, verbalization)`; stage-2 labels read `"<head> <verbalization>"`.
    pub fn re<S: AsRef<str>>(entity_types: &[S], relations: &[(S, S)]) -> Self {
        TaskConfig::Re {
            entity_types: owned(entity_types),
            relations: relations
                .iter()
                .map(|(n, v)| RelationSpec { name: n.as_ref().into(), verbalization: v.as_ref().into() })
                .collect(),
        }
        .build()
        .expect("valid RE schema")
    }

    /// Unlabeled trigger and argument extraction.
    pub fn ee_unlabeled() -> Self {
        TaskConfig::Ee { trigger_types: vec![], argument_roles: vec![] }.build().expect("valid EE schema")
    }

    pub fn srl<S: AsRef<str>>(roles: &[S]) -> Self {
        TaskConfig::Srl { roles: owned(roles) }.build().expect("valid SRL schema")
    }

    pub fn absa<S: AsRef<str>>(polarities: &[S]) -> Self {
        TaskConfig::Absa { polarities: owned(polarities) }.build().expect("valid ABSA schema")
    }

    pub fn aste<S: AsRef<str>>(polarities: &[S]) -> Self {
        TaskConfig::Aste { polarities: owned(polarities) }.build().expect("valid ASTE schema")
    }

    /// Queries of `stage` for one sentence. Later stages are instantiated
    /// once per span of the stage they bind, taken from `prior[stage - 1]`.
    pub fn build_queries<S: AsRef<str>>(
        &self,
        tokens: &[S],
        stage: usize,
        prior: &[Vec<Binding>],
    ) -> Result<Vec<StageQuery>> {
        let spec = self.stages.get(stage).ok_or(Error::NoSuchStage(stage))?;
        let Some((name, source)) = &self.binds[stage] else {
            return Ok(spec
                .queries
                .iter()
                .map(|q| StageQuery { label: q.template.clone(), tag: q.tag.clone(), binding: None })
                .collect());
        };
        let bindings = prior
            .get(*source)
            .ok_or_else(|| Error::UnresolvedPlaceholder(name.clone(), spec.queries[0].template.clone()))?;
        let slot = format!("{{{name}}}");
        let mut out = Vec::new();
        for b in bindings {
            if !b.range.fits(tokens.len()) {
                return Err(Error::SpanOutOfRange { start: b.range.start, end: b.range.end, len: tokens.len() });
            }
            for q in &spec.queries {
                out.push(StageQuery {
                    label: q.template.replace(&slot, &b.text),
                    tag: q.tag.clone(),
                    binding: Some(b.clone()),
                });
            }
        }
        Ok(out)
    }

    /// All stage-1 labels (static queries).
    pub fn static_labels(&self) -> Vec<&str> {
        self.stages[0].queries.iter().map(|q| q.template.as_str()).collect()
    }
}

/// Makes a binding from a span of `tokens`.
pub fn binding<S: AsRef<str>>(tokens: &[S], range: TokenRange, tag: Option<String>) -> Binding {
    Binding { range, text: detokenize(&tokens[range.start..range.end]), tag }
}

fn owned<S: AsRef<str>>(v: &[S]) -> Vec<String> {
    v.iter().map(|s| s.as_ref().to_string()).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationSpec {
    pub name: String,
    pub verbalization: String,
}

/// Task configuration file contents: label sets plus optional template overrides.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "lowercase")]
pub enum TaskConfig {
    Ner {
        entity_types: Vec<String>,
    },
    Re {
        entity_types: Vec<String>,
        relations: Vec<RelationSpec>,
    },
    Ee {
        /// Empty for a single unlabeled `Trigger` query.
        #[serde(default)]
        trigger_types: Vec<String>,
        /// Empty for a single unlabeled argument query.
        #[serde(default)]
        argument_roles: Vec<String>,
    },
    Srl {
        roles: Vec<String>,
    },
    Absa {
        polarities: Vec<String>,
    },
    Aste {
        polarities: Vec<String>,
    },
    /// Explicit stages, for templates the presets do not cover.
    Custom {
        kind: TaskKind,
        stages: Vec<StageSpec>,
    },
}

fn q(template: String, tag: Option<String>) -> QuerySpec {
    QuerySpec { template, tag }
}

fn stage(produces: &str, queries: Vec<QuerySpec>) -> StageSpec {
    StageSpec { produces: produces.into(), queries }
}

impl TaskConfig {
    pub fn build(self) -> Result<TaskSchema> {
        let (task, stages) = match self {
            TaskConfig::Ner { entity_types } => {
                let s0 = entity_types.into_iter().map(|t| q(t.clone(), Some(t))).collect();
                (TaskKind::Ner, vec![stage("entity", s0)])
            }
            TaskConfig::Re { entity_types, relations } => {
                let s0 = entity_types.into_iter().map(|t| q(t.clone(), Some(t))).collect();
                let s1 =
                    relations.into_iter().map(|r| q(format!("{{head}} {}", r.verbalization), Some(r.name))).collect();
                (TaskKind::Re, vec![stage("head", s0), stage("head_arg", s1)])
            }
            TaskConfig::Ee { trigger_types, argument_roles } => {
                let s0 = if trigger_types.is_empty() {
                    vec![q("Trigger".into(), None)]
                } else {
                    trigger_types.into_iter().map(|t| q(t.clone(), Some(t))).collect()
                };
                let s1 = if argument_roles.is_empty() {
                    vec![q("Argument for Trigger '{trigger}'".into(), None)]
                } else {
                    argument_roles
                        .into_iter()
                        .map(|r| q(format!("{r} Argument for Trigger '{{trigger}}'"), Some(r)))
                        .collect()
                };
                (TaskKind::Ee, vec![stage("trigger", s0), stage("argument", s1)])
            }
            TaskConfig::Srl { roles } => {
                let s1 =
                    roles.into_iter().map(|r| q(format!("{r} Argument for Verb '{{predicate}}'"), Some(r))).collect();
                (TaskKind::Srl, vec![stage("predicate", vec![q("Verb".into(), None)]), stage("argument", s1)])
            }
            TaskConfig::Absa { polarities } => {
                let s0 = polarities.into_iter().map(|p| q(format!("{p} Term"), Some(p))).collect();
                (TaskKind::Absa, vec![stage("term", s0)])
            }
            TaskConfig::Aste { polarities } => {
                let s0 = polarities.into_iter().map(|p| q(format!("{p} Opinion"), Some(p))).collect();
                let s1 = vec![q("Aspect for Opinion '{opinion}'".into(), None)];
                (TaskKind::Aste, vec![stage("opinion", s0), stage("aspect", s1)])
            }
            TaskConfig::Custom { kind, stages } => (kind, stages),
        };
        TaskSchema::new(task, stages)
    }
}
