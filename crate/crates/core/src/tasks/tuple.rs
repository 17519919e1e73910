use std::fmt;

use serde::{Deserialize, Serialize};

use crate::span::TokenRange;
use crate::text::detokenize;

/// A structured extraction result. Spans are token ranges into the
/// sentence the tuple belongs to.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TaskTuple {
    /// NER, and the entity stage of RE.
    Entity {
        #[serde(rename = "type")]
        kind: String,
        span: TokenRange,
    },
    Relation {
        head: TokenRange,
        relation: String,
        tail: TokenRange,
    },
    /// EE trigger; `kind` is `None` for unlabeled triggers.
    Trigger {
        #[serde(rename = "type", default)]
        kind: Option<String>,
        trigger: TokenRange,
    },
    /// EE argument; `role` is `None` for unlabeled arguments.
    Argument {
        trigger: TokenRange,
        #[serde(default)]
        role: Option<String>,
        argument: TokenRange,
    },
    /// SRL predicate-argument pair.
    Role {
        predicate: TokenRange,
        role: String,
        argument: TokenRange,
    },
    /// ABSA aspect term with its polarity.
    Sentiment {
        polarity: String,
        term: TokenRange,
    },
    /// ASTE aspect-opinion-polarity triplet.
    Triplet {
        aspect: TokenRange,
        opinion: TokenRange,
        polarity: String,
    },
}

impl TaskTuple {
    pub fn ranges(&self) -> Vec<TokenRange> {
        match self {
            TaskTuple::Entity { span, .. } => vec![*span],
            TaskTuple::Relation { head, tail, .. } => vec![*head, *tail],
            TaskTuple::Trigger { trigger, .. } => vec![*trigger],
            TaskTuple::Argument { trigger, argument, .. } => vec![*trigger, *argument],
            TaskTuple::Role { predicate, argument, .. } => vec![*predicate, *argument],
            TaskTuple::Sentiment { term, .. } => vec![*term],
            TaskTuple::Triplet { aspect, opinion, .. } => vec![*aspect, *opinion],
        }
    }

    /// Label the tuple is counted under in per-label breakdowns.
    pub fn label(&self) -> &str {
        match self {
            TaskTuple::Entity { kind, .. } => kind,
            TaskTuple::Relation { relation, .. } => relation,
            TaskTuple::Trigger { kind, .. } => kind.as_deref().unwrap_or("trigger"),
            TaskTuple::Argument { role, .. } => role.as_deref().unwrap_or("argument"),
            TaskTuple::Role { role, .. } => role,
            TaskTuple::Sentiment { polarity, .. } => polarity,
            TaskTuple::Triplet { polarity, .. } => polarity,
        }
    }

    pub fn fits(&self, len: usize) -> bool {
        self.ranges().iter().all(|r| r.fits(len))
    }

    /// Human-readable form with span texts.
    pub fn render<S: AsRef<str>>(&self, tokens: &[S]) -> String {
        let t = |r: &TokenRange| {
            if r.fits(tokens.len()) {
                detokenize(&tokens[r.start..r.end])
            } else {
                r.to_string()
            }
        };
        match self {
            TaskTuple::Entity { kind, span } => format!("({kind}, {})", t(span)),
            TaskTuple::Relation { head, relation, tail } => format!("({}, {relation}, {})", t(head), t(tail)),
            TaskTuple::Trigger { kind, trigger } => match kind {
                Some(k) => format!("({k}, {})", t(trigger)),
                None => format!("({})", t(trigger)),
            },
            TaskTuple::Argument { trigger, role, argument } => match role {
                Some(r) => format!("({}, {r}, {})", t(trigger), t(argument)),
                None => format!("({}, {})", t(trigger), t(argument)),
            },
            TaskTuple::Role { predicate, role, argument } => format!("({}, {role}, {})", t(predicate), t(argument)),
            TaskTuple::Sentiment { polarity, term } => format!("({polarity}, {})", t(term)),
            TaskTuple::Triplet { aspect, opinion, polarity } => format!("({}, {}, {polarity})", t(aspect), t(opinion)),
        }
    }
}

impl fmt::Display for TaskTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render::<&str>(&[]))
    }
}

/// One gold-annotated sentence of a task dataset.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskItem {
    pub id: String,
    pub tokens: Vec<String>,
    pub tuples: Vec<TaskTuple>,
}
