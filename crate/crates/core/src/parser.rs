//! Agenda-driven bottom-up chart parser over constructions.
//!
//! Inactive edges are seeded from the tokens (built-in numerals and clock
//! times, plus every triggered construction whose vehicle starts with the
//! token as a literal) and combined by the fundamental rule. Constructions
//! whose context does not hold are never started, which keeps the chart small.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt::Write as _;

use serde::Serialize;

use crate::context::ContextState;
use crate::grammar::{Construction, Grammar, SlotEnv, SlotValue, VehicleElement};
use crate::lexicon::{is_numeral, parse_clock, Token};
use crate::message::{Message, MessageSet, Value};
use crate::ontology::{unify_into, Bindings, Category};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParseOptions {
    /// Check construction contexts before starting them. Turning this off
    /// parses as if every construction were licensed.
    pub gating: bool,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions { gating: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Child {
    Edge(usize),
    Token(usize),
}

/// A completed (inactive) edge.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Edge {
    pub id: usize,
    pub from: usize,
    pub to: usize,
    pub cat: Category,
    /// Index into the grammar; `None` for built-in numerals and clock times.
    pub construction: Option<usize>,
    pub children: Vec<Child>,
    pub message: Message,
}

/// A partially matched construction.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ActiveEdge {
    pub construction: usize,
    pub from: usize,
    pub to: usize,
    /// Number of vehicle elements matched so far.
    pub dot: usize,
    pub bindings: Bindings,
    pub env: SlotEnv,
    pub children: Vec<Child>,
}

impl ActiveEdge {
    pub fn start(construction: usize, at: usize) -> ActiveEdge {
        ActiveEdge {
            construction,
            from: at,
            to: at,
            dot: 0,
            bindings: Bindings::new(),
            env: SlotEnv::new(),
            children: Vec::new(),
        }
    }

    fn next<'g>(&self, g: &'g Grammar) -> Option<&'g VehicleElement> {
        g.constructions[self.construction].vehicle.sequence.get(self.dot)
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Chart {
    pub edges: Vec<Edge>,
}

impl Chart {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn spanning(&self, n: usize) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(move |e| e.from == 0 && e.to == n)
    }

    /// The edge header: `* 1,4,[november,11,th] : np(time(day)) -> [np(time(month)),ordinal]`.
    pub fn header(&self, e: &Edge, tokens: &[Token]) -> String {
        let span: Vec<&str> = tokens[e.from..e.to].iter().map(|t| t.surface.as_str()).collect();
        let kids: Vec<String> = e
            .children
            .iter()
            .map(|c| match c {
                Child::Edge(i) => self.edges[*i].cat.to_string(),
                Child::Token(i) => tokens[*i].surface.clone(),
            })
            .collect();
        format!(
            "* {},{},[{}] : {} -> [{}]",
            e.from,
            e.to,
            span.join(","),
            e.cat,
            kids.join(",")
        )
    }

    /// One header per inactive edge in creation order, each followed by an
    /// indented message line when the message is non-empty.
    pub fn trace_lines(&self, tokens: &[Token]) -> Vec<String> {
        let mut out = Vec::new();
        for e in &self.edges {
            out.push(self.header(e, tokens));
            if !e.message.is_empty() {
                out.push(format!("  {}", e.message));
            }
        }
        out
    }

    pub fn trace(&self, tokens: &[Token]) -> String {
        let mut s = String::from("  Chart results: INACTIVE EDGES\n");
        for line in self.trace_lines(tokens) {
            let _ = writeln!(s, "{line}");
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FilterFiring {
    pub filter: String,
    pub edge: usize,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ParseDiagnostics {
    pub chart: Chart,
    pub unknown_tokens: Vec<String>,
    pub fired_filters: Vec<FilterFiring>,
}

/// One distinct meaning of the whole input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Reading {
    pub category: Category,
    pub messages: MessageSet,
    /// Spanning edges that produced this message set, first one first.
    pub edges: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ParseResult {
    pub tokens: Vec<Token>,
    pub readings: Vec<Reading>,
    pub diagnostics: ParseDiagnostics,
}

impl ParseResult {
    pub fn message_sets(&self) -> Vec<&MessageSet> {
        self.readings.iter().map(|r| &r.messages).collect()
    }

    pub fn trace(&self) -> String {
        self.diagnostics.chart.trace(&self.tokens)
    }

    pub fn trace_lines(&self) -> Vec<String> {
        self.diagnostics.chart.trace_lines(&self.tokens)
    }
}

/// Every context precondition of `c` holds in `ctx`.
pub fn trigger(c: &Construction, ctx: &ContextState) -> bool {
    c.triggers(ctx)
}

/// The fundamental rule: extend `active` by the next slot of its vehicle
/// with `inactive`. Literals are not consumed here.
pub fn combine(active: &ActiveEdge, inactive: &Edge, g: &Grammar) -> Option<ActiveEdge> {
    if active.to != inactive.from {
        return None;
    }
    let VehicleElement::Slot { var, pattern } = active.next(g)? else {
        return None;
    };
    let mut bindings = active.bindings.clone();
    if !unify_into(pattern, &inactive.cat, &mut bindings) {
        return None;
    }
    let mut next = ActiveEdge {
        bindings,
        to: inactive.to,
        dot: active.dot + 1,
        ..active.clone()
    };
    if var != "_" {
        next.env.insert(
            var.clone(),
            SlotValue {
                cat: inactive.cat.clone(),
                message: inactive.message.clone(),
            },
        );
    }
    next.children.push(Child::Edge(inactive.id));
    Some(next)
}

/// Check side conditions and instantiate the name and message of a fully
/// matched construction.
pub fn complete(active: &ActiveEdge, g: &Grammar) -> Option<(Category, Message)> {
    let c = g.resolved(active.construction);
    if !c.vehicle.side_conditions.iter().all(|sc| sc.holds(&active.env)) {
        return None;
    }
    let meaning_type = |cat: &Category| g.meaning_type_of(cat);
    let message = c.message.instantiate(&active.env, &meaning_type);
    Some((c.name.apply(&active.bindings), message))
}

/// The filters applicable in `ctx` that reject `message`.
pub fn rejecting_filters<'g>(message: &Message, ctx: &ContextState, g: &'g Grammar) -> Vec<&'g str> {
    g.filters
        .iter()
        .filter(|f| f.applies(ctx) && f.rejects(message))
        .map(|f| f.name.as_str())
        .collect()
}

/// Drop candidates rejected by an applicable filter.
pub fn apply_filters<'e>(candidates: Vec<&'e Edge>, ctx: &ContextState, g: &Grammar) -> Vec<&'e Edge> {
    candidates
        .into_iter()
        .filter(|e| rejecting_filters(&e.message, ctx, g).is_empty())
        .collect()
}

pub fn parse(tokens: &[Token], ctx: &ContextState, g: &Grammar) -> ParseResult {
    parse_with(tokens, ctx, g, ParseOptions::default())
}

pub fn parse_with(tokens: &[Token], ctx: &ContextState, g: &Grammar, opts: ParseOptions) -> ParseResult {
    let mut p = ChartParser::new(tokens, ctx, g, opts);
    p.run();
    let n = tokens.len();
    let chart = Chart { edges: p.edges };

    let mut fired = Vec::new();
    let mut readings: Vec<Reading> = Vec::new();
    let mut seen: HashMap<Vec<Message>, usize> = HashMap::new();
    if n > 0 {
        for e in chart.spanning(n) {
            if !g.roots.is_empty() && !g.roots.contains(&e.cat.functor) {
                continue;
            }
            let rejected = rejecting_filters(&e.message, ctx, g);
            if !rejected.is_empty() {
                fired.extend(rejected.into_iter().map(|f| FilterFiring {
                    filter: f.to_string(),
                    edge: e.id,
                }));
                continue;
            }
            let set = MessageSet(e.message.flatten(&g.carriers));
            match seen.get(&set.canonical()) {
                Some(&i) => readings[i].edges.push(e.id),
                None => {
                    seen.insert(set.canonical(), readings.len());
                    readings.push(Reading {
                        category: e.cat.clone(),
                        messages: set,
                        edges: vec![e.id],
                    });
                }
            }
        }
    }

    let unknown_tokens = tokens
        .iter()
        .filter(|t| !is_numeral(&t.surface) && parse_clock(&t.surface).is_none() && !g.knows_literal(&t.surface))
        .map(|t| t.surface.clone())
        .collect();
    ParseResult {
        tokens: tokens.to_vec(),
        readings,
        diagnostics: ParseDiagnostics {
            chart,
            unknown_tokens,
            fired_filters: fired,
        },
    }
}

struct ChartParser<'a> {
    tokens: &'a [Token],
    g: &'a Grammar,
    enabled: Vec<bool>,
    edges: Vec<Edge>,
    edge_keys: HashSet<(usize, usize, Category, Message)>,
    starting_at: Vec<Vec<usize>>,
    actives: Vec<ActiveEdge>,
    active_keys: HashSet<ActiveEdge>,
    ending_at: Vec<Vec<usize>>,
    agenda: VecDeque<usize>,
}

impl<'a> ChartParser<'a> {
    fn new(tokens: &'a [Token], ctx: &ContextState, g: &'a Grammar, opts: ParseOptions) -> Self {
        let n = tokens.len();
        ChartParser {
            tokens,
            g,
            enabled: g
                .constructions
                .iter()
                .map(|c| !opts.gating || trigger(c, ctx))
                .collect(),
            edges: Vec::new(),
            edge_keys: HashSet::new(),
            starting_at: vec![Vec::new(); n + 1],
            actives: Vec::new(),
            active_keys: HashSet::new(),
            ending_at: vec![Vec::new(); n + 1],
            agenda: VecDeque::new(),
        }
    }

    fn run(&mut self) {
        for (i, t) in self.tokens.iter().enumerate() {
            if is_numeral(&t.surface) {
                if let Ok(n) = t.surface.parse::<i64>() {
                    self.add_builtin(i, "numeral", Message::new().with("den", Value::Num(n)));
                }
            }
            if let Some((h, m)) = parse_clock(&t.surface).filter(|&(h, m)| h < 24 && m < 60) {
                let msg = Message::new()
                    .with("hour", Value::Num(h))
                    .with("minute", Value::Num(m));
                self.add_builtin(i, "clock", msg);
            }
            for &idx in self.g.starting_with_literal(&t.surface) {
                if self.enabled[idx] {
                    self.advance(ActiveEdge::start(idx, i));
                }
            }
        }
        while let Some(id) = self.agenda.pop_front() {
            self.process(id);
        }
    }

    fn add_builtin(&mut self, at: usize, cat: &str, message: Message) {
        self.add_edge(at, at + 1, Category::atom(cat), None, vec![Child::Token(at)], message);
    }

    fn add_edge(
        &mut self,
        from: usize,
        to: usize,
        cat: Category,
        construction: Option<usize>,
        children: Vec<Child>,
        message: Message,
    ) {
        if !self.edge_keys.insert((from, to, cat.clone(), message.clone())) {
            return;
        }
        let id = self.edges.len();
        self.edges.push(Edge {
            id,
            from,
            to,
            cat,
            construction,
            children,
            message,
        });
        self.agenda.push_back(id);
    }

    fn process(&mut self, id: usize) {
        let from = self.edges[id].from;
        let functor = self.edges[id].cat.functor.clone();
        for &idx in self.g.starting_with_functor(&functor) {
            if self.enabled[idx] {
                if let Some(next) = combine(&ActiveEdge::start(idx, from), &self.edges[id], self.g) {
                    self.advance(next);
                }
            }
        }
        for k in 0..self.ending_at[from].len() {
            let a = self.ending_at[from][k];
            if let Some(next) = combine(&self.actives[a], &self.edges[id], self.g) {
                self.advance(next);
            }
        }
        self.starting_at[from].push(id);
    }

    /// Consume literals after the dot, then complete or wait for edges.
    fn advance(&mut self, mut a: ActiveEdge) {
        while let Some(VehicleElement::Literal(l)) = a.next(self.g) {
            match self.tokens.get(a.to) {
                Some(t) if t.surface == *l => {
                    a.children.push(Child::Token(a.to));
                    a.to += 1;
                    a.dot += 1;
                }
                _ => return,
            }
        }
        if a.next(self.g).is_none() {
            if let Some((cat, message)) = complete(&a, self.g) {
                self.add_edge(a.from, a.to, cat, Some(a.construction), a.children, message);
            }
            return;
        }
        if !self.active_keys.insert(a.clone()) {
            return;
        }
        let to = a.to;
        let idx = self.actives.len();
        self.actives.push(a);
        self.ending_at[to].push(idx);
        for k in 0..self.starting_at[to].len() {
            let e = self.starting_at[to][k];
            if let Some(next) = combine(&self.actives[idx], &self.edges[e], self.g) {
                self.advance(next);
            }
        }
    }
}
