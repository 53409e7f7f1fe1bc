//! Category terms with embedded ontology.
//!
//! A category such as `np(time(month))` is a first-order term. Nesting encodes
//! the is-a ordering: `np` subsumes `np(time)`, which subsumes
//! `np(time(month))`. Variables (`X`, `_`) may appear in patterns; ground
//! categories contain none.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Default bound on term nesting.
pub const MAX_DEPTH: usize = 6;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TermError {
    #[error("unexpected end of term `{0}`")]
    UnexpectedEnd(String),
    #[error("unexpected `{found}` at offset {offset} in `{input}`")]
    Unexpected {
        input: String,
        offset: usize,
        found: char,
    },
    #[error("term `{input}` nests deeper than {max}")]
    TooDeep { input: String, max: usize },
    #[error("trailing input after term `{0}`")]
    Trailing(String),
    #[error("`{0}` is a variable, expected a category")]
    BareVariable(String),
}

/// An argument position: either a nested category or a variable.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(String),
    Cat(Category),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Category {
    pub functor: String,
    pub args: Vec<Term>,
}

/// Map from variable id to the ground category it was bound to.
pub type Bindings = BTreeMap<String, Category>;

pub fn is_variable_name(s: &str) -> bool {
    s == "_"
        || (s.starts_with(|c: char| c.is_ascii_uppercase())
            && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_'))
}

fn is_symbol_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '\'' | '-')
}

impl Term {
    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::Cat(c) => c.is_ground(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Term::Var(_) => 1,
            Term::Cat(c) => c.depth(),
        }
    }

    /// Parse a term that may be a bare variable.
    pub fn parse(input: &str) -> Result<Term, TermError> {
        parse_term(input, MAX_DEPTH)
    }
}

impl Category {
    pub fn atom(functor: impl Into<String>) -> Self {
        Category {
            functor: functor.into(),
            args: Vec::new(),
        }
    }

    pub fn new(functor: impl Into<String>, args: Vec<Term>) -> Self {
        Category {
            functor: functor.into(),
            args,
        }
    }

    pub fn parse(input: &str) -> Result<Category, TermError> {
        Self::parse_with_depth(input, MAX_DEPTH)
    }

    pub fn parse_with_depth(input: &str, max_depth: usize) -> Result<Category, TermError> {
        match parse_term(input, max_depth)? {
            Term::Cat(c) => Ok(c),
            Term::Var(v) => Err(TermError::BareVariable(v)),
        }
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(Term::is_ground)
    }

    /// `np` has depth 1, `np(time(month))` depth 3.
    pub fn depth(&self) -> usize {
        1 + self.args.iter().map(Term::depth).max().unwrap_or(0)
    }

    /// The first argument as a category, if present.
    pub fn arg(&self, i: usize) -> Option<&Category> {
        match self.args.get(i) {
            Some(Term::Cat(c)) => Some(c),
            _ => None,
        }
    }

    pub fn variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        for a in &self.args {
            match a {
                Term::Var(v) if v != "_" => {
                    out.insert(v.clone());
                }
                Term::Var(_) => {}
                Term::Cat(c) => c.collect_vars(out),
            }
        }
    }

    /// Count of variable occurrences, anonymous ones included.
    pub fn variable_count(&self) -> usize {
        self.args
            .iter()
            .map(|a| match a {
                Term::Var(_) => 1,
                Term::Cat(c) => c.variable_count(),
            })
            .sum()
    }

    pub fn functors(&self) -> Vec<&str> {
        let mut out = vec![self.functor.as_str()];
        for a in &self.args {
            if let Term::Cat(c) = a {
                out.extend(c.functors());
            }
        }
        out
    }

    /// Substitute bound variables. Unbound variables are left in place.
    pub fn apply(&self, bindings: &Bindings) -> Category {
        Category {
            functor: self.functor.clone(),
            args: self
                .args
                .iter()
                .map(|a| match a {
                    Term::Var(v) => match bindings.get(v) {
                        Some(c) => Term::Cat(c.clone()),
                        None => Term::Var(v.clone()),
                    },
                    Term::Cat(c) => Term::Cat(c.apply(bindings)),
                })
                .collect(),
        }
    }
}

/// True iff `specific` lies at or below `general` in the tree induced by
/// nesting. A category subsumes any category with the same functor whose
/// argument list extends its own, argument-wise.
pub fn subsumes(general: &Category, specific: &Category) -> bool {
    general.functor == specific.functor
        && general.args.len() <= specific.args.len()
        && general
            .args
            .iter()
            .zip(&specific.args)
            .all(|(g, s)| match (g, s) {
                (Term::Cat(g), Term::Cat(s)) => subsumes(g, s),
                // Ground arguments only; a variable never sits under a ground term.
                (Term::Var(_), _) | (_, Term::Var(_)) => g == s,
            })
}

/// Match a pattern against a ground category. On success, applying the
/// returned bindings to `pattern` gives a category subsuming `ground`.
pub fn unify(pattern: &Category, ground: &Category) -> Option<Bindings> {
    let mut b = Bindings::new();
    unify_into(pattern, ground, &mut b).then_some(b)
}

/// Like [`unify`], extending existing bindings.
pub fn unify_into(pattern: &Category, ground: &Category, b: &mut Bindings) -> bool {
    if pattern.functor != ground.functor || pattern.args.len() > ground.args.len() {
        return false;
    }
    for (p, g) in pattern.args.iter().zip(&ground.args) {
        if matches!(p, Term::Var(v) if v == "_") {
            continue;
        }
        // An anonymous argument left open in a construction name.
        let Term::Cat(g) = g else {
            if matches!(p, Term::Var(_)) {
                continue;
            }
            return false;
        };
        match p {
            Term::Var(v) => match b.get(v) {
                Some(bound) if bound != g => return false,
                Some(_) => {}
                None => {
                    b.insert(v.clone(), g.clone());
                }
            },
            Term::Cat(p) => {
                if !unify_into(p, g, b) {
                    return false;
                }
            }
        }
    }
    true
}

/// Whether two patterns can describe a common category. Variables on either
/// side match anything; a shorter argument list matches any extension.
pub fn overlaps(a: &Category, b: &Category) -> bool {
    a.functor == b.functor
        && a.args.iter().zip(&b.args).all(|(x, y)| match (x, y) {
            (Term::Var(_), _) | (_, Term::Var(_)) => true,
            (Term::Cat(x), Term::Cat(y)) => overlaps(x, y),
        })
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => f.write_str(v),
            Term::Cat(c) => c.fmt(f),
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.functor)?;
        if !self.args.is_empty() {
            f.write_str("(")?;
            for (i, a) in self.args.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{a}")?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

impl FromStr for Category {
    type Err = TermError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Category::parse(s)
    }
}

impl Serialize for Category {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Category {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Category::parse(&s).map_err(serde::de::Error::custom)
    }
}

struct TermParser<'a> {
    input: &'a str,
    chars: Vec<(usize, char)>,
    pos: usize,
    max_depth: usize,
}

fn parse_term(input: &str, max_depth: usize) -> Result<Term, TermError> {
    let mut p = TermParser {
        input,
        chars: input.char_indices().collect(),
        pos: 0,
        max_depth,
    };
    let t = p.term(1)?;
    p.skip_ws();
    if p.pos < p.chars.len() {
        return Err(TermError::Trailing(input.to_string()));
    }
    Ok(t)
}

impl TermParser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].1.is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<(usize, char)> {
        self.chars.get(self.pos).copied()
    }

    fn unexpected(&self) -> TermError {
        match self.peek() {
            Some((offset, found)) => TermError::Unexpected {
                input: self.input.to_string(),
                offset,
                found,
            },
            None => TermError::UnexpectedEnd(self.input.to_string()),
        }
    }

    fn term(&mut self, depth: usize) -> Result<Term, TermError> {
        if depth > self.max_depth {
            return Err(TermError::TooDeep {
                input: self.input.to_string(),
                max: self.max_depth,
            });
        }
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.chars.len() && is_symbol_char(self.chars[self.pos].1) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.unexpected());
        }
        let name: String = self.chars[start..self.pos].iter().map(|(_, c)| c).collect();
        self.skip_ws();
        if is_variable_name(&name) {
            return Ok(Term::Var(name));
        }
        let mut args = Vec::new();
        if let Some((_, '(')) = self.peek() {
            self.pos += 1;
            loop {
                args.push(self.term(depth + 1)?);
                self.skip_ws();
                match self.peek() {
                    Some((_, ',')) => self.pos += 1,
                    Some((_, ')')) => {
                        self.pos += 1;
                        break;
                    }
                    _ => return Err(self.unexpected()),
                }
            }
        }
        Ok(Term::Cat(Category::new(name, args)))
    }
}
