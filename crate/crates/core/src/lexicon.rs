//! Tokenization, lexical lookup and closed-class form rules.

use serde::{Deserialize, Serialize};

use crate::context::ContextState;
use crate::grammar::{Construction, Grammar};
use crate::message::{Message, Value};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    pub position: usize,
}

pub const ORDINAL_SUFFIXES: [&str; 4] = ["st", "nd", "rd", "th"];

/// The English suffix for `n`: 1st, 2nd, 3rd, 4th ... 11th, 12th, 13th,
/// 21st, 22nd, 23rd ...
pub fn ordinal_suffix(n: u32) -> &'static str {
    match (n % 10, n % 100) {
        (_, 11..=13) => "th",
        (1, _) => "st",
        (2, _) => "nd",
        (3, _) => "rd",
        _ => "th",
    }
}

pub fn ordinal_suffix_matches(n: u32, suffix: &str) -> bool {
    n > 0 && ordinal_suffix(n) == suffix
}

/// Combine a numeral token with its suffix. `(3, "th")` fails.
pub fn form_ordinal(numeral: &str, suffix: &str) -> Option<Message> {
    let n: u32 = numeral.parse().ok()?;
    ordinal_suffix_matches(n, suffix).then(|| Message::new().with("den", Value::Num(n.into())))
}

pub fn is_numeral(s: &str) -> bool {
    !s.is_empty() && s.len() <= 9 && s.bytes().all(|b| b.is_ascii_digit())
}

/// `10:30` or `8.00`.
pub fn parse_clock(s: &str) -> Option<(i64, i64)> {
    let (h, m) = s.split_once([':', '.'])?;
    if h.is_empty() || h.len() > 2 || m.len() != 2 || !is_numeral(h) || !is_numeral(m) {
        return None;
    }
    Some((h.parse().ok()?, m.parse().ok()?))
}

fn split_ordinal(word: &str) -> Option<(&str, &str)> {
    let digits = word.bytes().take_while(u8::is_ascii_digit).count();
    let (num, rest) = word.split_at(digits);
    (digits > 0 && ORDINAL_SUFFIXES.contains(&rest)).then_some((num, rest))
}

fn is_edge_punct(c: char) -> bool {
    !(c.is_alphanumeric() || c == '\'' || c == '-' || c == '_')
}

/// Lowercase, strip surrounding punctuation, and split ordinal suffixes from
/// their numerals (`11th` becomes `11`, `th`). Internal `:`/`.` in times and
/// apostrophes in words are kept.
pub fn tokenize(utterance: &str) -> Vec<Token> {
    let mut out = Vec::new();
    for raw in utterance.split_whitespace() {
        let lower = raw.to_lowercase();
        let word = lower.trim_matches(|c| is_edge_punct(c) || c == '\'');
        if word.is_empty() {
            continue;
        }
        let mut push = |s: &str| {
            out.push(Token {
                surface: s.to_string(),
                position: out.len(),
            })
        };
        match split_ordinal(word) {
            Some((n, suf)) => {
                push(n);
                push(suf);
            }
            None => push(word),
        }
    }
    out
}

pub fn surfaces(tokens: &[Token]) -> Vec<&str> {
    tokens.iter().map(|t| t.surface.as_str()).collect()
}

/// Lexical constructions whose first literal is `t` and whose context holds
/// in `ctx`. Entries spanning several words ("set up") are returned as partial
/// matches for the parser to complete.
pub fn lookup<'g>(t: &Token, ctx: &ContextState, g: &'g Grammar) -> Vec<&'g Construction> {
    g.starting_with_literal(&t.surface)
        .iter()
        .map(|&i| &g.constructions[i])
        .filter(|c| c.is_lexical() && c.triggers(ctx))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn words(s: &str) -> Vec<String> {
        tokenize(s).into_iter().map(|t| t.surface).collect()
    }

    #[test]
    fn tokenizes_traces() {
        assert_eq!(
            words("on November 11th with Martin."),
            ["on", "november", "11", "th", "with", "martin"]
        );
        assert_eq!(
            words("I want to set up an appointment on November 11."),
            ["i", "want", "to", "set", "up", "an", "appointment", "on", "november", "11"]
        );
        assert!(words("").is_empty());
        assert_eq!(words("8."), ["8"]);
        assert_eq!(words("at 8.00, or 10:30?"), ["at", "8.00", "or", "10:30"]);
        assert_eq!(words("No, but I'll \"send\" it"), ["no", "but", "i'll", "send", "it"]);
    }

    #[test]
    fn positions_are_sequential() {
        let t = tokenize("the 2nd of May");
        assert_eq!(t.iter().map(|t| t.position).collect::<Vec<_>>(), [0, 1, 2, 3, 4]);
    }

    #[test]
    fn ordinal_table() {
        assert!(form_ordinal("11", "th").is_some());
        assert!(form_ordinal("3", "th").is_none());
        assert_eq!(form_ordinal("21", "st").unwrap().to_string(), "[[den,21]]");
        assert_eq!(ordinal_suffix(112), "th");
        assert_eq!(ordinal_suffix(102), "nd");
        assert!(form_ordinal("0", "th").is_none());
        assert!(form_ordinal("x", "th").is_none());
    }

    #[test]
    fn clocks() {
        assert_eq!(parse_clock("10:30"), Some((10, 30)));
        assert_eq!(parse_clock("8.00"), Some((8, 0)));
        assert_eq!(parse_clock("8.0"), None);
        assert_eq!(parse_clock("a.m"), None);
    }
}
