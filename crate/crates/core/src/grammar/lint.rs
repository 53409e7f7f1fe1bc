use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::Serialize;

use super::template::{TemplateItem, ValueExpr};
use super::{Construction, Grammar, SideCondition, VehicleElement};
use crate::ontology::{Category, Term};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
    /// Indices into `Grammar::constructions`.
    pub constructions: Vec<usize>,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "{tag}: {}", self.message)
    }
}

/// Renames variables to V0, V1, ... in order of first appearance so that
/// alpha-equivalent constructions render identically.
#[derive(Default)]
struct Renamer(BTreeMap<String, String>);

impl Renamer {
    fn var(&mut self, v: &str) -> String {
        if v == "_" {
            return "_".into();
        }
        let n = self.0.len();
        self.0.entry(v.to_string()).or_insert_with(|| format!("V{n}")).clone()
    }

    fn cat(&mut self, c: &Category) -> Category {
        Category {
            functor: c.functor.clone(),
            args: c
                .args
                .iter()
                .map(|a| match a {
                    Term::Var(v) => Term::Var(self.var(v)),
                    Term::Cat(c) => Term::Cat(self.cat(c)),
                })
                .collect(),
        }
    }

    fn expr(&mut self, e: &ValueExpr) -> String {
        match e {
            ValueExpr::Meaning(v) => format!("m({})", self.var(v)),
            ValueExpr::Attr(a, v) => format!("{a}({})", self.var(v)),
            ValueExpr::MeaningType(v) => format!("meaning_type({})", self.var(v)),
            ValueExpr::Arith(op, a, b) => format!("{op:?}({},{})", self.expr(a), self.expr(b)),
            ValueExpr::List(items) => self.items(items),
            ValueExpr::Lit(_) | ValueExpr::Num(_) => e.to_string(),
        }
    }

    fn items(&mut self, items: &[TemplateItem]) -> String {
        let parts: Vec<String> = items
            .iter()
            .map(|i| match i {
                TemplateItem::Pair(a, v) => format!("[{a},{}]", self.expr(v)),
                TemplateItem::Splice(v) => format!("m({})", self.var(v)),
            })
            .collect();
        format!("[{}]", parts.join(","))
    }
}

struct Shape {
    vehicle: String,
    context: String,
    message: String,
}

fn shape(c: &Construction) -> Shape {
    let mut r = Renamer::default();
    let seq: Vec<String> = c
        .vehicle
        .sequence
        .iter()
        .map(|e| match e {
            VehicleElement::Literal(l) => l.clone(),
            VehicleElement::Slot { var, pattern } => format!("{}:{}", r.var(var), r.cat(pattern)),
        })
        .collect();
    let sides: Vec<String> = c
        .vehicle
        .side_conditions
        .iter()
        .map(|sc| match sc {
            SideCondition::Range { var, lo, hi } => format!("range({},{lo},{hi})", r.var(var)),
            SideCondition::OrdinalSuffix { number, suffix } => {
                format!("ordinal_suffix({},{})", r.var(number), r.var(suffix))
            }
            SideCondition::Subcat(frame) => {
                let parts: Vec<String> =
                    frame.iter().map(|(f, v)| format!("{f}({})", r.var(v))).collect();
                format!("subcat({})", parts.join(","))
            }
        })
        .collect();
    let mut ctx: Vec<String> = c
        .context
        .iter()
        .map(|cc| format!("{}({})", cc.relation, r.cat(&cc.pattern)))
        .collect();
    ctx.sort();
    Shape {
        vehicle: format!("{}|{}", seq.join(" "), sides.join(" ")),
        context: ctx.join(" "),
        message: r.items(&c.message.0),
    }
}

/// Lint a loaded grammar. Errors are invariant violations; a warning flags
/// two constructions sharing form and context but differing in meaning.
pub fn validate_grammar(g: &Grammar) -> Vec<Diagnostic> {
    let mut out = Vec::new();

    for (i, c) in g.constructions.iter().enumerate() {
        if c.vehicle.sequence.is_empty() {
            out.push(Diagnostic {
                severity: Severity::Error,
                message: format!("line {}: `{}` has an empty vehicle", c.line, c.name),
                constructions: vec![i],
            });
        }
        let mut known = c.vehicle.variables();
        known.extend(c.name.variables());
        for v in c.message.variables() {
            if !known.contains(&v) {
                out.push(Diagnostic {
                    severity: Severity::Error,
                    message: format!(
                        "line {}: message of `{}` uses {v}, which its vehicle does not bind",
                        c.line, c.name
                    ),
                    constructions: vec![i],
                });
            }
        }
        let mut cats = vec![&c.name];
        cats.extend(c.vehicle.sequence.iter().filter_map(|e| match e {
            VehicleElement::Slot { pattern, .. } => Some(pattern),
            VehicleElement::Literal(_) => None,
        }));
        for cat in cats {
            if let Some(sym) = cat.functors().into_iter().find(|f| !g.alphabet.contains(*f)) {
                out.push(Diagnostic {
                    severity: Severity::Error,
                    message: format!("line {}: unknown category symbol `{sym}` in `{cat}`", c.line),
                    constructions: vec![i],
                });
            }
        }
    }

    let shapes: Vec<Shape> = g.constructions.iter().map(shape).collect();
    let mut by_form: HashMap<(&str, &str), Vec<usize>> = HashMap::new();
    for (i, s) in shapes.iter().enumerate() {
        by_form.entry((&s.vehicle, &s.context)).or_default().push(i);
    }
    let mut groups: Vec<&Vec<usize>> = by_form.values().filter(|v| v.len() > 1).collect();
    groups.sort();
    for group in groups {
        for (k, &a) in group.iter().enumerate() {
            for &b in &group[k + 1..] {
                let (ca, cb) = (&g.constructions[a], &g.constructions[b]);
                if ca.name == cb.name {
                    out.push(Diagnostic {
                        severity: Severity::Error,
                        message: format!(
                            "lines {} and {}: duplicate construction `{}` with the same vehicle",
                            ca.line, cb.line, ca.name
                        ),
                        constructions: vec![a, b],
                    });
                } else if shapes[a].message != shapes[b].message {
                    out.push(Diagnostic {
                        severity: Severity::Warning,
                        message: format!(
                            "lines {} and {}: `{}` and `{}` share vehicle and context but differ in meaning",
                            ca.line, cb.line, ca.name, cb.name
                        ),
                        constructions: vec![a, b],
                    });
                }
            }
        }
    }
    out
}
