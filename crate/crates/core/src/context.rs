//! Discourse parameters consulted by construction preconditions.

use std::collections::BTreeMap;
use std::fmt;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::message::MessageSet;
use crate::ontology::{overlaps, Category, Term};

/// Relations a construction's context field may constrain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContextRelation {
    PreviousUtterance,
    PreviousSentence,
    CurrentQuestion,
    CurrentDomain,
    CurrentApplication,
    CurrentDiscourse,
    Topic,
    Speaker,
    Hearer,
    DefaultValue,
    Language,
}

impl ContextRelation {
    pub fn as_str(self) -> &'static str {
        match self {
            ContextRelation::PreviousUtterance => "previous_utterance",
            ContextRelation::PreviousSentence => "previous_sentence",
            ContextRelation::CurrentQuestion => "current_question",
            ContextRelation::CurrentDomain => "current_domain",
            ContextRelation::CurrentApplication => "current_application",
            ContextRelation::CurrentDiscourse => "current_discourse",
            ContextRelation::Topic => "topic",
            ContextRelation::Speaker => "speaker",
            ContextRelation::Hearer => "hearer",
            ContextRelation::DefaultValue => "default_value",
            ContextRelation::Language => "language",
        }
    }

    /// Relations whose patterns are grammar categories (checked against the
    /// category alphabet at load time).
    pub fn is_categorial(self) -> bool {
        matches!(
            self,
            ContextRelation::PreviousUtterance
                | ContextRelation::PreviousSentence
                | ContextRelation::CurrentQuestion
                | ContextRelation::Topic
        )
    }
}

impl fmt::Display for ContextRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ContextConstraint {
    pub relation: ContextRelation,
    pub pattern: Category,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreviousUtterance {
    pub text: String,
    pub construction_name: Option<Category>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreviousSentence {
    pub construction_name: Option<Category>,
    pub truth_value: Option<i64>,
    pub content: Option<MessageSet>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextState {
    pub previous_utterance: Option<PreviousUtterance>,
    pub previous_sentence: Option<PreviousSentence>,
    pub current_question: Option<Category>,
    pub current_domain: Option<String>,
    pub current_application: Option<String>,
    pub current_discourse: Vec<String>,
    pub defaults: BTreeMap<String, String>,
    pub language: Option<String>,
    pub topic: Option<Category>,
    pub speaker: Option<String>,
    pub hearer: Option<String>,
    /// Anchor for resolving weekdays, relative days and missing years.
    pub today: Option<NaiveDate>,
}

impl ContextState {
    /// The calendar application's standing context.
    pub fn calendar() -> Self {
        ContextState {
            current_domain: Some("calendar".into()),
            current_application: Some("xdiary".into()),
            language: Some("english".into()),
            ..Default::default()
        }
    }

    pub fn with_question(mut self, q: Category) -> Self {
        self.current_question = Some(q);
        self
    }

    pub fn mention(&mut self, entity: impl Into<String>) {
        let e = entity.into();
        if !self.current_discourse.contains(&e) {
            self.current_discourse.push(e);
        }
    }
}

fn symbol_matches(pattern: &Category, value: Option<&str>) -> bool {
    match (pattern.functor.as_str(), value) {
        (_, None) => false,
        (p, Some(v)) => pattern.args.is_empty() && p == v,
    }
}

impl ContextConstraint {
    pub fn holds(&self, ctx: &ContextState) -> bool {
        let p = &self.pattern;
        match self.relation {
            ContextRelation::PreviousUtterance => ctx
                .previous_utterance
                .as_ref()
                .and_then(|u| u.construction_name.as_ref())
                .is_some_and(|n| overlaps(p, n)),
            ContextRelation::PreviousSentence => ctx
                .previous_sentence
                .as_ref()
                .and_then(|s| s.construction_name.as_ref())
                .is_some_and(|n| overlaps(p, n)),
            ContextRelation::CurrentQuestion => {
                ctx.current_question.as_ref().is_some_and(|q| overlaps(p, q))
            }
            ContextRelation::Topic => ctx.topic.as_ref().is_some_and(|t| overlaps(p, t)),
            ContextRelation::CurrentDomain => symbol_matches(p, ctx.current_domain.as_deref()),
            ContextRelation::CurrentApplication => {
                symbol_matches(p, ctx.current_application.as_deref())
            }
            ContextRelation::Language => symbol_matches(p, ctx.language.as_deref()),
            ContextRelation::Speaker => symbol_matches(p, ctx.speaker.as_deref()),
            ContextRelation::Hearer => symbol_matches(p, ctx.hearer.as_deref()),
            ContextRelation::CurrentDiscourse => match (p.functor.as_str(), p.arg(0)) {
                ("not", Some(inner)) if inner.functor == "nil" => !ctx.current_discourse.is_empty(),
                ("nil", None) => ctx.current_discourse.is_empty(),
                (entity, None) => ctx.current_discourse.iter().any(|e| e == entity),
                _ => false,
            },
            ContextRelation::DefaultValue => {
                let Some(value) = ctx.defaults.get(&p.functor) else {
                    return false;
                };
                match p.args.first() {
                    None | Some(Term::Var(_)) => true,
                    Some(Term::Cat(c)) => c.args.is_empty() && c.functor == *value,
                }
            }
        }
    }
}

impl fmt::Display for ContextConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.relation, self.pattern)
    }
}
