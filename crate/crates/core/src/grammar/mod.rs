//! Constructions and grammars.
//!
//! A construction pairs a name (N), context preconditions (C), a vehicle of
//! form constraints (V) and a message template (M). Words are constructions
//! too: a lexical entry is a construction whose vehicle holds only literals.

mod lint;
mod load;
pub mod template;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::context::{ContextConstraint, ContextState};
use crate::ontology::{subsumes, Category, Term};

pub use lint::{validate_grammar, Diagnostic, Severity};
pub use load::{load_grammar, LoadError};
pub use template::{MessageTemplate, SlotEnv, SlotValue, TemplateItem, ValueExpr};

/// The calendar grammar shipped with the crate.
pub const CALENDAR_GRAMMAR: &str = include_str!("../../grammars/calendar.jsonl");

/// Horizontal classification of constructions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstructionType {
    SentenceType,
    Constituency,
    Valency,
    Substitution,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum VehicleElement {
    Literal(String),
    Slot { var: String, pattern: Category },
}

impl VehicleElement {
    /// `"on"` is a literal; `"N:np(time(day))"` binds slot N.
    pub fn parse(s: &str) -> Result<VehicleElement, String> {
        if let Some((var, pat)) = s.split_once(':') {
            if crate::ontology::is_variable_name(var) {
                let pattern = Category::parse(pat).map_err(|e| e.to_string())?;
                return Ok(VehicleElement::Slot {
                    var: var.to_string(),
                    pattern,
                });
            }
        }
        if s.is_empty() || s.chars().any(char::is_whitespace) {
            return Err(format!("invalid literal `{s}`"));
        }
        Ok(VehicleElement::Literal(s.to_lowercase()))
    }
}

impl fmt::Display for VehicleElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VehicleElement::Literal(s) => f.write_str(s),
            VehicleElement::Slot { var, pattern } => write!(f, "{var}:{pattern}"),
        }
    }
}

/// Form predicates checked once a vehicle is complete.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SideCondition {
    /// The numeric denotation of a slot lies in `lo..=hi`.
    Range { var: String, lo: i64, hi: i64 },
    /// A numeral slot and a suffix slot form a correct English ordinal.
    OrdinalSuffix { number: String, suffix: String },
    /// Subcategorization frame: grammatical function to variable.
    Subcat(Vec<(String, String)>),
}

impl SideCondition {
    pub fn parse(s: &str) -> Result<SideCondition, String> {
        let term = Category::parse(s).map_err(|e| e.to_string())?;
        let var = |t: &Term| match t {
            Term::Var(v) if v != "_" => Ok(v.clone()),
            other => Err(format!("expected a variable, found `{other}` in `{s}`")),
        };
        let num = |t: &Term| match t {
            Term::Cat(c) if c.args.is_empty() => c
                .functor
                .parse::<i64>()
                .map_err(|_| format!("expected a number, found `{c}` in `{s}`")),
            other => Err(format!("expected a number, found `{other}` in `{s}`")),
        };
        match (term.functor.as_str(), term.args.as_slice()) {
            ("range", [v, lo, hi]) => Ok(SideCondition::Range {
                var: var(v)?,
                lo: num(lo)?,
                hi: num(hi)?,
            }),
            ("ordinal_suffix", [n, suf]) => Ok(SideCondition::OrdinalSuffix {
                number: var(n)?,
                suffix: var(suf)?,
            }),
            ("subcat", frame) => frame
                .iter()
                .map(|t| match t {
                    Term::Cat(c) => match c.args.as_slice() {
                        [v] => Ok((c.functor.clone(), var(v)?)),
                        _ => Err(format!("malformed subcat element `{c}`")),
                    },
                    Term::Var(v) => Err(format!("malformed subcat element `{v}`")),
                })
                .collect::<Result<_, _>>()
                .map(SideCondition::Subcat),
            _ => Err(format!("unknown side condition `{s}`")),
        }
    }

    pub fn variables(&self) -> Vec<&str> {
        match self {
            SideCondition::Range { var, .. } => vec![var],
            SideCondition::OrdinalSuffix { number, suffix } => vec![number, suffix],
            SideCondition::Subcat(frame) => frame.iter().map(|(_, v)| v.as_str()).collect(),
        }
    }

    /// Evaluate against the completed slots. Conditions over unbound slots
    /// hold vacuously.
    pub fn holds(&self, env: &SlotEnv) -> bool {
        let den_num = |v: &str| {
            env.get(v)
                .and_then(|s| s.message.get("den"))
                .and_then(|d| d.as_num())
        };
        match self {
            SideCondition::Range { var, lo, hi } => match env.get(var) {
                None => true,
                Some(_) => den_num(var).is_some_and(|n| (*lo..=*hi).contains(&n)),
            },
            SideCondition::OrdinalSuffix { number, suffix } => {
                let (Some(n), Some(s)) = (
                    den_num(number),
                    env.get(suffix)
                        .and_then(|s| s.message.get("den"))
                        .and_then(|d| d.as_sym()),
                ) else {
                    return false;
                };
                u32::try_from(n).is_ok_and(|n| crate::lexicon::ordinal_suffix_matches(n, s))
            }
            SideCondition::Subcat(_) => true,
        }
    }
}

impl fmt::Display for SideCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SideCondition::Range { var, lo, hi } => write!(f, "range({var},{lo},{hi})"),
            SideCondition::OrdinalSuffix { number, suffix } => {
                write!(f, "ordinal_suffix({number},{suffix})")
            }
            SideCondition::Subcat(frame) => {
                f.write_str("subcat(")?;
                for (i, (func, v)) in frame.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{func}({v})")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Vehicle {
    pub sequence: Vec<VehicleElement>,
    pub side_conditions: Vec<SideCondition>,
}

impl Vehicle {
    pub fn is_lexical(&self) -> bool {
        self.sequence
            .iter()
            .all(|e| matches!(e, VehicleElement::Literal(_)))
    }

    pub fn variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for e in &self.sequence {
            if let VehicleElement::Slot { var, pattern } = e {
                out.insert(var.clone());
                out.extend(pattern.variables());
            }
        }
        for sc in &self.side_conditions {
            out.extend(sc.variables().into_iter().map(String::from));
        }
        out.remove("_");
        out
    }

    pub fn subcat(&self) -> Option<&[(String, String)]> {
        self.side_conditions.iter().find_map(|sc| match sc {
            SideCondition::Subcat(frame) => Some(frame.as_slice()),
            _ => None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Construction {
    pub name: Category,
    pub ctype: ConstructionType,
    pub context: Vec<ContextConstraint>,
    pub vehicle: Vehicle,
    pub message: MessageTemplate,
    /// Opaque context tags recorded but not interpreted.
    pub tags: Vec<String>,
    /// 1-based line of the document in the grammar source.
    pub line: usize,
}

impl Construction {
    pub fn is_lexical(&self) -> bool {
        self.vehicle.is_lexical()
    }

    /// True iff every context precondition holds.
    pub fn triggers(&self, ctx: &ContextState) -> bool {
        self.context.iter().all(|c| c.holds(ctx))
    }

    /// Verb class for `verb(Class(word))` names.
    pub fn verb_class(&self) -> Option<&str> {
        if self.name.functor != "verb" {
            return None;
        }
        self.name.arg(0).map(|c| c.functor.as_str())
    }
}

/// A domain- or application-specific pruning rule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Filter {
    pub name: String,
    #[serde(default)]
    pub applicability: Vec<ContextConstraint>,
    pub predicate: FilterPredicate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FilterPredicate {
    /// Reject messages whose `attribute` carries a modifier of one of `types`.
    ModifierType { attribute: String, types: Vec<String> },
    /// Reject messages with a `minute` value off the `step` grid.
    MinuteGrid { step: i64 },
}

impl Filter {
    pub fn applies(&self, ctx: &ContextState) -> bool {
        self.applicability.iter().all(|c| c.holds(ctx))
    }

    pub fn rejects(&self, message: &crate::message::Message) -> bool {
        use crate::message::Value;
        match &self.predicate {
            FilterPredicate::ModifierType { attribute, types } => {
                message.0.iter().any(|(a, v)| {
                    if a != attribute {
                        return false;
                    }
                    let Value::List(inner) = v else { return false };
                    let mut hit = false;
                    inner.walk(&mut |attr, val| {
                        if attr == "type" && val.as_sym().is_some_and(|t| types.iter().any(|x| x == t)) {
                            hit = true;
                        }
                    });
                    hit
                })
            }
            FilterPredicate::MinuteGrid { step } => {
                let mut hit = false;
                message.walk(&mut |attr, val| {
                    if attr == "minute" && val.as_num().is_some_and(|m| m.rem_euclid(*step) != 0) {
                        hit = true;
                    }
                });
                hit
            }
        }
    }
}

/// Semantic-role defaults per verb class: grammatical function to role.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct VerbDefaults {
    pub classes: BTreeMap<String, Vec<(String, String)>>,
    /// Class every non-stative verb inherits from.
    pub base: Option<String>,
    /// Class exempt from all defaults.
    pub stative: Option<String>,
}

impl VerbDefaults {
    /// Most specific class first, then the base class unless stative.
    pub fn chain(&self, class: &str) -> Vec<&[(String, String)]> {
        if self.stative.as_deref() == Some(class) {
            return Vec::new();
        }
        let mut out = Vec::new();
        if let Some(roles) = self.classes.get(class) {
            out.push(roles.as_slice());
        }
        if let Some(base) = &self.base {
            if base != class {
                if let Some(roles) = self.classes.get(base) {
                    out.push(roles.as_slice());
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Default)]
pub struct Grammar {
    pub constructions: Vec<Construction>,
    pub alphabet: BTreeSet<String>,
    pub meaning_types: Vec<(Category, String)>,
    pub filters: Vec<Filter>,
    pub verb_defaults: VerbDefaults,
    /// Functors of categories that count as complete readings.
    pub roots: BTreeSet<String>,
    /// Attributes whose values are lifted into separate messages.
    pub carriers: BTreeSet<String>,
    resolved: Vec<OnceLock<Construction>>,
    by_first_literal: HashMap<String, Vec<usize>>,
    by_first_functor: HashMap<String, Vec<usize>>,
    literals: BTreeSet<String>,
}

impl Grammar {
    pub(crate) fn from_parts(
        constructions: Vec<Construction>,
        alphabet: BTreeSet<String>,
        meaning_types: Vec<(Category, String)>,
        filters: Vec<Filter>,
        verb_defaults: VerbDefaults,
        roots: BTreeSet<String>,
        carriers: BTreeSet<String>,
    ) -> Grammar {
        let mut g = Grammar {
            constructions,
            alphabet,
            meaning_types,
            filters,
            verb_defaults,
            roots,
            carriers,
            ..Default::default()
        };
        g.reindex();
        g
    }

    fn reindex(&mut self) {
        self.resolved = (0..self.constructions.len()).map(|_| OnceLock::new()).collect();
        self.by_first_literal.clear();
        self.by_first_functor.clear();
        self.literals.clear();
        for (i, c) in self.constructions.iter().enumerate() {
            for e in &c.vehicle.sequence {
                if let VehicleElement::Literal(l) = e {
                    self.literals.insert(l.clone());
                }
            }
            match c.vehicle.sequence.first() {
                Some(VehicleElement::Literal(l)) => {
                    self.by_first_literal.entry(l.clone()).or_default().push(i)
                }
                Some(VehicleElement::Slot { pattern, .. }) => self
                    .by_first_functor
                    .entry(pattern.functor.clone())
                    .or_default()
                    .push(i),
                None => {}
            }
        }
    }

    /// The shipped calendar grammar.
    pub fn calendar() -> Grammar {
        load_grammar(CALENDAR_GRAMMAR).expect("shipped calendar grammar loads")
    }

    pub fn len(&self) -> usize {
        self.constructions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constructions.is_empty()
    }

    pub fn lexical_count(&self) -> usize {
        self.constructions.iter().filter(|c| c.is_lexical()).count()
    }

    pub fn phrasal_count(&self) -> usize {
        self.len() - self.lexical_count()
    }

    /// Constructions whose vehicle starts with the literal `token`.
    pub fn starting_with_literal(&self, token: &str) -> &[usize] {
        self.by_first_literal.get(token).map_or(&[], Vec::as_slice)
    }

    /// Constructions whose first slot pattern has the given functor.
    pub fn starting_with_functor(&self, functor: &str) -> &[usize] {
        self.by_first_functor.get(functor).map_or(&[], Vec::as_slice)
    }

    /// Whether any construction mentions `token` as a literal.
    pub fn knows_literal(&self, token: &str) -> bool {
        self.literals.contains(token)
    }

    pub fn find(&self, name: &str) -> Vec<&Construction> {
        let Ok(cat) = Category::parse(name) else {
            return Vec::new();
        };
        self.constructions.iter().filter(|c| c.name == cat).collect()
    }

    /// The construction with verb-class defaults filled in, computed once.
    pub fn resolved(&self, idx: usize) -> &Construction {
        self.resolved[idx].get_or_init(|| resolve_defaults(&self.constructions[idx], self))
    }

    /// Meaning type registered for the most specific table entry subsuming
    /// `cat`.
    pub fn meaning_type_of(&self, cat: &Category) -> Option<String> {
        self.meaning_types
            .iter()
            .filter(|(pat, _)| subsumes(pat, cat))
            .max_by_key(|(pat, _)| pat.depth())
            .map(|(_, t)| t.clone())
    }

    /// A copy of this grammar without the named filter.
    pub fn without_filter(&self, name: &str) -> Grammar {
        let mut g = self.clone();
        g.filters.retain(|f| f.name != name);
        g
    }

    /// A copy of this grammar with `extra` constructions appended.
    pub fn extended(&self, extra: impl IntoIterator<Item = Construction>) -> Grammar {
        let mut g = self.clone();
        g.constructions.extend(extra);
        g.reindex();
        g
    }
}

/// Fill unspecified semantic roles from the verb-class defaults. A default
/// is skipped when the message already names the role or already assigns the
/// function's variable to some role.
pub fn resolve_defaults(c: &Construction, g: &Grammar) -> Construction {
    let (Some(class), Some(frame)) = (c.verb_class(), c.vehicle.subcat()) else {
        return c.clone();
    };
    let mut out = c.clone();
    for roles in g.verb_defaults.chain(class) {
        for (function, role) in roles {
            let Some((_, var)) = frame.iter().find(|(f, _)| f == function) else {
                continue;
            };
            let role_taken = out.message.attributes().contains(role.as_str());
            let var_taken = out.message.variables().contains(var);
            if !role_taken && !var_taken {
                out.message
                    .0
                    .push(TemplateItem::Pair(role.clone(), ValueExpr::Meaning(var.clone())));
            }
        }
    }
    out
}
