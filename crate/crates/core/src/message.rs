//! Flat attribute-value meanings produced by the parser.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Maximum nesting of attribute-value lists in a returned message.
pub const MAX_MESSAGE_DEPTH: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Num(i64),
    Sym(String),
    List(Message),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Message(pub Vec<(String, Value)>);

impl Value {
    pub fn sym(s: impl Into<String>) -> Value {
        Value::Sym(s.into())
    }

    pub fn as_num(&self) -> Option<i64> {
        match self {
            Value::Num(n) => Some(*n),
            Value::Sym(s) => s.parse().ok(),
            Value::List(_) => None,
        }
    }

    pub fn as_sym(&self) -> Option<&str> {
        match self {
            Value::Sym(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_list(&self) -> Option<&Message> {
        match self {
            Value::List(m) => Some(m),
            _ => None,
        }
    }

    fn depth(&self) -> usize {
        match self {
            Value::List(m) => m.depth(),
            _ => 0,
        }
    }
}

impl Message {
    pub fn new() -> Self {
        Message(Vec::new())
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn push(&mut self, attr: impl Into<String>, value: Value) {
        self.0.push((attr.into(), value));
    }

    pub fn with(mut self, attr: impl Into<String>, value: Value) -> Self {
        self.push(attr, value);
        self
    }

    /// First value of `attr`.
    pub fn get(&self, attr: &str) -> Option<&Value> {
        self.0.iter().find(|(a, _)| a == attr).map(|(_, v)| v)
    }

    pub fn type_name(&self) -> Option<&str> {
        self.get("type").and_then(Value::as_sym)
    }

    /// `[[a,b]]` has depth 1, `[[a,[[b,c]]]]` depth 2.
    pub fn depth(&self) -> usize {
        1 + self.0.iter().map(|(_, v)| v.depth()).max().unwrap_or(0)
    }

    pub fn is_flat(&self) -> bool {
        self.depth() <= MAX_MESSAGE_DEPTH
    }

    /// Visit every pair at every depth.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a str, &'a Value)) {
        for (a, v) in &self.0 {
            f(a, v);
            if let Value::List(m) = v {
                m.walk(f);
            }
        }
    }

    /// A message that carries only a denotation collapses to that value when
    /// it is embedded under another attribute.
    pub fn as_bare_den(&self) -> Option<&Value> {
        match self.0.as_slice() {
            [(a, v)] if a == "den" => Some(v),
            _ => None,
        }
    }

    /// Lift every carrier pair (at any depth) out into its own message.
    ///
    /// `[[pp_msg,[[type,partner],[den,bob]]],[pp_msg,M]]` becomes the two
    /// messages `[[type,partner],[den,bob]]` and `M`. Non-carrier pairs stay
    /// in the base message, which is emitted first when non-empty.
    pub fn flatten(&self, carriers: &BTreeSet<String>) -> Vec<Message> {
        let mut lifted = Vec::new();
        let base = strip_carriers(self, carriers, &mut lifted);
        let mut out = Vec::new();
        if !base.is_empty() {
            out.push(base);
        }
        out.extend(lifted);
        out
    }

    /// Top-level pair order is irrelevant; order inside nested lists is kept.
    pub fn canonical(&self) -> Message {
        let mut pairs = self.0.clone();
        pairs.sort();
        Message(pairs)
    }
}

fn strip_carriers(msg: &Message, carriers: &BTreeSet<String>, lifted: &mut Vec<Message>) -> Message {
    let mut base = Message::new();
    for (a, v) in &msg.0 {
        if carriers.contains(a) {
            if let Value::List(inner) = v {
                let rest = strip_carriers(inner, carriers, lifted);
                if !rest.is_empty() {
                    lifted.push(rest);
                }
            }
            continue;
        }
        match v {
            Value::List(inner) => {
                let stripped = strip_carriers(inner, carriers, lifted);
                if !stripped.is_empty() || inner.is_empty() {
                    base.push(a.clone(), Value::List(stripped));
                }
            }
            _ => base.push(a.clone(), v.clone()),
        }
    }
    base
}

/// The meaning of one reading: a set of flat messages.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MessageSet(pub Vec<Message>);

impl MessageSet {
    /// Canonical key for parse deduplication.
    pub fn canonical(&self) -> Vec<Message> {
        let mut v: Vec<Message> = self.0.iter().map(Message::canonical).collect();
        v.sort();
        v
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Num(n) => write!(f, "{n}"),
            Value::Sym(s) => f.write_str(s),
            Value::List(m) => m.fmt(f),
        }
    }
}

impl fmt::Display for Message {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, (a, v)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "[{a},{v}]")?;
        }
        f.write_str("]")
    }
}

impl fmt::Display for MessageSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, m) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{m}")?;
        }
        f.write_str("}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn time_msg() -> Message {
        Message::new().with("type", Value::sym("event_time")).with(
            "den",
            Value::List(
                Message::new()
                    .with("month", Value::Num(11))
                    .with("day", Value::Num(11)),
            ),
        )
    }

    #[test]
    fn renders_like_the_chart_trace() {
        assert_eq!(
            time_msg().to_string(),
            "[[type,event_time],[den,[[month,11],[day,11]]]]"
        );
        assert_eq!(time_msg().depth(), 2);
    }

    #[test]
    fn flatten_lifts_nested_carriers() {
        let partner = Message::new()
            .with("type", Value::sym("partner"))
            .with("den", Value::sym("martin"));
        let msg = Message::new()
            .with("pp_msg", Value::List(partner.clone()))
            .with("pp_msg", Value::List(time_msg()));
        let carriers: BTreeSet<String> = ["pp_msg".to_string()].into();
        assert_eq!(msg.flatten(&carriers), vec![partner, time_msg()]);

        let obj = Message::new()
            .with("type", Value::sym("event"))
            .with("pp_msg", Value::List(time_msg()));
        let sent = Message::new().with("object", Value::List(obj));
        let flat = sent.flatten(&carriers);
        assert_eq!(flat.len(), 2);
        assert_eq!(flat[0].to_string(), "[[object,[[type,event]]]]");
    }

    #[test]
    fn canonical_ignores_top_level_order_only() {
        let a = Message::new().with("x", Value::Num(1)).with("y", Value::Num(2));
        let b = Message::new().with("y", Value::Num(2)).with("x", Value::Num(1));
        assert_eq!(a.canonical(), b.canonical());
        let la = Message::new().with("den", Value::List(a.clone()));
        let lb = Message::new().with("den", Value::List(b));
        assert_ne!(la.canonical(), lb.canonical());
    }
}
