use std::collections::BTreeSet;

use serde::Deserialize;
use serde_json::Value as Json;
use thiserror::Error;

use super::template::MessageTemplate;
use super::{
    Construction, ConstructionType, Filter, Grammar, SideCondition, Vehicle, VehicleElement,
    VerbDefaults,
};
use crate::context::ContextConstraint;
use crate::ontology::Category;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LoadError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("line {line}: unknown category symbol `{symbol}` in `{term}`")]
    UnknownCategory {
        line: usize,
        symbol: String,
        term: String,
    },
    #[error("line {line}: variable {var} used in {field} of `{construction}` but absent from its vehicle and name")]
    UnboundVariable {
        line: usize,
        var: String,
        field: &'static str,
        construction: String,
    },
    #[error("line {line}: {message}")]
    Invalid { line: usize, message: String },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawHeader {
    #[serde(default)]
    categories: Vec<String>,
    #[serde(default)]
    meaning_types: Vec<(Category, String)>,
    #[serde(default)]
    roots: Vec<String>,
    #[serde(default)]
    carriers: Vec<String>,
    #[serde(default)]
    filters: Vec<Filter>,
    #[serde(default)]
    verb_defaults: VerbDefaults,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVehicle {
    sequence: Vec<String>,
    #[serde(default)]
    side_conditions: Vec<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConstruction {
    name: Category,
    ctype: ConstructionType,
    #[serde(default)]
    context: Vec<ContextConstraint>,
    vehicle: RawVehicle,
    #[serde(default)]
    message: Json,
    #[serde(default)]
    tags: Vec<String>,
}

fn line_of(text: &str, offset: usize) -> usize {
    1 + text.as_bytes()[..offset.min(text.len())]
        .iter()
        .filter(|&&b| b == b'\n')
        .count()
}

/// Blank out `#` comment lines so JSON offsets keep their line numbers.
fn strip_comments(source: &str) -> String {
    source
        .lines()
        .map(|l| if l.trim_start().starts_with('#') { "" } else { l })
        .collect::<Vec<_>>()
        .join("\n")
}

/// Parse and validate a grammar file: a stream of JSON documents, an
/// optional header first, then one construction per document.
pub fn load_grammar(source: &str) -> Result<Grammar, LoadError> {
    let text = strip_comments(source);
    let mut stream = serde_json::Deserializer::from_str(&text).into_iter::<Json>();
    let mut header: Option<RawHeader> = None;
    let mut constructions = Vec::new();

    loop {
        let start = {
            let off = stream.byte_offset();
            off + text[off..].len() - text[off..].trim_start().len()
        };
        let Some(doc) = stream.next() else { break };
        let doc = doc.map_err(|e| LoadError::Syntax {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        let line = line_of(&text, start);
        let invalid = |message: String| LoadError::Invalid { line, message };

        if let Some(h) = doc.get("header") {
            if header.is_some() || !constructions.is_empty() {
                return Err(invalid("the header must be the first document and appear once".into()));
            }
            header = Some(RawHeader::deserialize(h).map_err(|e| invalid(format!("header: {e}")))?);
            continue;
        }
        let raw = RawConstruction::deserialize(&doc).map_err(|e| invalid(e.to_string()))?;
        constructions.push(convert(raw, line)?);
    }

    let header = header.unwrap_or(RawHeader {
        categories: Vec::new(),
        meaning_types: Vec::new(),
        roots: Vec::new(),
        carriers: Vec::new(),
        filters: Vec::new(),
        verb_defaults: VerbDefaults::default(),
    });
    let alphabet: BTreeSet<String> = header.categories.into_iter().collect();

    let check = |cat: &Category, line: usize| -> Result<(), LoadError> {
        match cat.functors().into_iter().find(|f| !alphabet.contains(*f)) {
            Some(sym) => Err(LoadError::UnknownCategory {
                line,
                symbol: sym.to_string(),
                term: cat.to_string(),
            }),
            None => Ok(()),
        }
    };
    for (pat, _) in &header.meaning_types {
        check(pat, 1)?;
    }
    for c in &constructions {
        check(&c.name, c.line)?;
        for e in &c.vehicle.sequence {
            if let VehicleElement::Slot { pattern, .. } = e {
                check(pattern, c.line)?;
            }
        }
        for cc in &c.context {
            if cc.relation.is_categorial() {
                check(&cc.pattern, c.line)?;
            }
        }
    }

    Ok(Grammar::from_parts(
        constructions,
        alphabet,
        header.meaning_types,
        header.filters,
        header.verb_defaults,
        header.roots.into_iter().collect(),
        header.carriers.into_iter().collect(),
    ))
}

fn convert(raw: RawConstruction, line: usize) -> Result<Construction, LoadError> {
    let invalid = |message: String| LoadError::Invalid { line, message };
    if raw.vehicle.sequence.is_empty() {
        return Err(invalid(format!("`{}` has an empty vehicle", raw.name)));
    }
    let sequence = raw
        .vehicle
        .sequence
        .iter()
        .map(|s| VehicleElement::parse(s))
        .collect::<Result<Vec<_>, _>>()
        .map_err(invalid)?;
    let side_conditions = raw
        .vehicle
        .side_conditions
        .iter()
        .map(|s| SideCondition::parse(s))
        .collect::<Result<Vec<_>, _>>()
        .map_err(invalid)?;
    let message = MessageTemplate::from_json(&raw.message)
        .map_err(|e| invalid(format!("message of `{}`: {e}", raw.name)))?;
    let vehicle = Vehicle {
        sequence,
        side_conditions,
    };

    let mut slot_vars = BTreeSet::new();
    for e in &vehicle.sequence {
        if let VehicleElement::Slot { var, .. } = e {
            if var != "_" && !slot_vars.insert(var.clone()) {
                return Err(invalid(format!("slot {var} bound twice in `{}`", raw.name)));
            }
        }
    }

    let mut known = vehicle.variables();
    known.extend(raw.name.variables());
    for var in message.variables() {
        if !known.contains(&var) {
            return Err(LoadError::UnboundVariable {
                line,
                var,
                field: "message",
                construction: raw.name.to_string(),
            });
        }
    }
    for cc in &raw.context {
        for var in cc.pattern.variables() {
            if !known.contains(&var) {
                return Err(LoadError::UnboundVariable {
                    line,
                    var,
                    field: "context",
                    construction: raw.name.to_string(),
                });
            }
        }
    }

    Ok(Construction {
        name: raw.name,
        ctype: raw.ctype,
        context: raw.context,
        vehicle,
        message,
        tags: raw.tags,
        line,
    })
}
