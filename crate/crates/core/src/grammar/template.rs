//! Message templates: the M field of a construction.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::message::{Message, Value};
use crate::ontology::{Category, Term};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ArithOp {
    Add,
    Sub,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ValueExpr {
    Lit(String),
    Num(i64),
    /// `m(X)`: the whole meaning of sub-construction X.
    Meaning(String),
    /// `attr(X)`: the value of `attr` in X's meaning, e.g. `den(N)`.
    Attr(String, String),
    /// `meaning_type(X)`: the meaning type registered for X's category.
    MeaningType(String),
    Arith(ArithOp, Box<ValueExpr>, Box<ValueExpr>),
    List(Vec<TemplateItem>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TemplateItem {
    Pair(String, ValueExpr),
    /// A bare `m(X)` item: X's pairs are spliced into the enclosing list.
    Splice(String),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct MessageTemplate(pub Vec<TemplateItem>);

/// What a completed sub-construction contributes during instantiation.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SlotValue {
    pub cat: Category,
    pub message: Message,
}

pub type SlotEnv = BTreeMap<String, SlotValue>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateError(pub String);

impl fmt::Display for TemplateError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

fn parse_number(s: &str) -> Option<i64> {
    let digits = s.strip_prefix('-').unwrap_or(s);
    if !digits.is_empty() && digits.chars().all(|c| c.is_ascii_digit()) {
        s.parse().ok()
    } else {
        None
    }
}

fn single_var(c: &Category) -> Option<&str> {
    match c.args.as_slice() {
        [Term::Var(v)] if v != "_" => Some(v),
        _ => None,
    }
}

fn term_to_expr(t: &Term) -> Result<ValueExpr, TemplateError> {
    match t {
        Term::Var(v) => Err(TemplateError(format!(
            "bare variable `{v}` in message; use m({v}) or an attribute such as den({v})"
        ))),
        Term::Cat(c) => Ok(category_to_expr(c)),
    }
}

fn category_to_expr(c: &Category) -> ValueExpr {
    if c.args.is_empty() {
        if let Some(n) = parse_number(&c.functor) {
            return ValueExpr::Num(n);
        }
    }
    match (c.functor.as_str(), single_var(c)) {
        ("m", Some(v)) => return ValueExpr::Meaning(v.to_string()),
        ("meaning_type", Some(v)) => return ValueExpr::MeaningType(v.to_string()),
        (attr, Some(v)) => return ValueExpr::Attr(attr.to_string(), v.to_string()),
        _ => {}
    }
    if let ("add" | "sub", [a, b]) = (c.functor.as_str(), c.args.as_slice()) {
        if let (Ok(a), Ok(b)) = (term_to_expr(a), term_to_expr(b)) {
            let op = if c.functor == "add" { ArithOp::Add } else { ArithOp::Sub };
            return ValueExpr::Arith(op, Box::new(a), Box::new(b));
        }
    }
    ValueExpr::Lit(c.to_string())
}

impl ValueExpr {
    pub fn parse_str(s: &str) -> Result<ValueExpr, TemplateError> {
        match Term::parse(s) {
            Ok(t) => term_to_expr(&t),
            Err(_) => Ok(ValueExpr::Lit(s.to_string())),
        }
    }

    fn from_json(v: &serde_json::Value) -> Result<ValueExpr, TemplateError> {
        match v {
            serde_json::Value::String(s) => ValueExpr::parse_str(s),
            serde_json::Value::Number(n) => n
                .as_i64()
                .map(ValueExpr::Num)
                .ok_or_else(|| TemplateError(format!("non-integer number {n} in message"))),
            serde_json::Value::Array(items) => Ok(ValueExpr::List(items_from_json(items)?)),
            other => Err(TemplateError(format!("unsupported message value {other}"))),
        }
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            ValueExpr::Meaning(v) | ValueExpr::Attr(_, v) | ValueExpr::MeaningType(v) => {
                out.insert(v.clone());
            }
            ValueExpr::Arith(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            ValueExpr::List(items) => items.iter().for_each(|i| i.collect_vars(out)),
            ValueExpr::Lit(_) | ValueExpr::Num(_) => {}
        }
    }

    /// `None` when a referenced slot is unbound or lacks the attribute.
    fn eval(&self, env: &SlotEnv, meaning_type: &dyn Fn(&Category) -> Option<String>) -> Option<Value> {
        match self {
            ValueExpr::Lit(s) => Some(Value::Sym(s.clone())),
            ValueExpr::Num(n) => Some(Value::Num(*n)),
            ValueExpr::Meaning(v) => {
                let m = &env.get(v)?.message;
                Some(m.as_bare_den().cloned().unwrap_or_else(|| Value::List(m.clone())))
            }
            ValueExpr::Attr(a, v) => env.get(v)?.message.get(a).cloned(),
            ValueExpr::MeaningType(v) => meaning_type(&env.get(v)?.cat).map(Value::Sym),
            ValueExpr::Arith(op, a, b) => {
                let a = a.eval(env, meaning_type)?.as_num()?;
                let b = b.eval(env, meaning_type)?.as_num()?;
                Some(Value::Num(match op {
                    ArithOp::Add => a + b,
                    ArithOp::Sub => a - b,
                }))
            }
            ValueExpr::List(items) => Some(Value::List(instantiate_items(items, env, meaning_type))),
        }
    }
}

impl TemplateItem {
    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            TemplateItem::Pair(_, v) => v.collect_vars(out),
            TemplateItem::Splice(v) => {
                out.insert(v.clone());
            }
        }
    }
}

fn items_from_json(items: &[serde_json::Value]) -> Result<Vec<TemplateItem>, TemplateError> {
    items
        .iter()
        .map(|item| match item {
            serde_json::Value::String(s) => match ValueExpr::parse_str(s)? {
                ValueExpr::Meaning(v) => Ok(TemplateItem::Splice(v)),
                _ => Err(TemplateError(format!(
                    "message item `{s}` must be an [attribute, value] pair or m(X)"
                ))),
            },
            serde_json::Value::Array(pair) => match pair.as_slice() {
                [serde_json::Value::String(attr), value] => {
                    Ok(TemplateItem::Pair(attr.clone(), ValueExpr::from_json(value)?))
                }
                _ => Err(TemplateError(format!("malformed message pair {item}"))),
            },
            other => Err(TemplateError(format!("malformed message item {other}"))),
        })
        .collect()
}

fn instantiate_items(
    items: &[TemplateItem],
    env: &SlotEnv,
    meaning_type: &dyn Fn(&Category) -> Option<String>,
) -> Message {
    let mut out = Message::new();
    for item in items {
        match item {
            TemplateItem::Pair(attr, expr) => {
                if let Some(v) = expr.eval(env, meaning_type) {
                    out.push(attr.clone(), v);
                }
            }
            TemplateItem::Splice(var) => {
                if let Some(slot) = env.get(var) {
                    out.0.extend(slot.message.0.iter().cloned());
                }
            }
        }
    }
    out
}

impl MessageTemplate {
    pub fn from_json(v: &serde_json::Value) -> Result<Self, TemplateError> {
        match v {
            serde_json::Value::Array(items) => Ok(MessageTemplate(items_from_json(items)?)),
            serde_json::Value::Null => Ok(MessageTemplate::default()),
            other => Err(TemplateError(format!("message must be a list, got {other}"))),
        }
    }

    pub fn variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.0.iter().for_each(|i| i.collect_vars(&mut out));
        out
    }

    /// Attribute names used at the top level.
    pub fn attributes(&self) -> BTreeSet<&str> {
        self.0
            .iter()
            .filter_map(|i| match i {
                TemplateItem::Pair(a, _) => Some(a.as_str()),
                TemplateItem::Splice(_) => None,
            })
            .collect()
    }

    /// Fill the template from the sub-construction meanings. Pairs whose
    /// value refers to something unbound are omitted.
    pub fn instantiate(
        &self,
        env: &SlotEnv,
        meaning_type: &dyn Fn(&Category) -> Option<String>,
    ) -> Message {
        instantiate_items(&self.0, env, meaning_type)
    }
}

impl fmt::Display for ValueExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValueExpr::Lit(s) => f.write_str(s),
            ValueExpr::Num(n) => write!(f, "{n}"),
            ValueExpr::Meaning(v) => write!(f, "m({v})"),
            ValueExpr::Attr(a, v) => write!(f, "{a}({v})"),
            ValueExpr::MeaningType(v) => write!(f, "meaning_type({v})"),
            ValueExpr::Arith(op, a, b) => {
                let name = match op {
                    ArithOp::Add => "add",
                    ArithOp::Sub => "sub",
                };
                write!(f, "{name}({a},{b})")
            }
            ValueExpr::List(items) => write_items(f, items),
        }
    }
}

fn write_items(f: &mut fmt::Formatter<'_>, items: &[TemplateItem]) -> fmt::Result {
    f.write_str("[")?;
    for (i, item) in items.iter().enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        match item {
            TemplateItem::Pair(a, v) => write!(f, "[{a},{v}]")?,
            TemplateItem::Splice(v) => write!(f, "m({v})")?,
        }
    }
    f.write_str("]")
}

impl fmt::Display for MessageTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_items(f, &self.0)
    }
}
