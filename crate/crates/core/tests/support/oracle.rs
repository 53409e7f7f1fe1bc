//! Exhaustive span enumeration over a small grammar with attachment
//! ambiguity, recursion, a unary chain and a gated fragment. Used as an
//! independent reference for the chart parser.

use std::collections::{BTreeMap, BTreeSet};

use construe::grammar::{load_grammar, SlotEnv, SlotValue, VehicleElement};
use construe::lexicon::{is_numeral, tokenize, Token};
use construe::ontology::{unify_into, Bindings};
use construe::parser::parse;
use construe::{Category, ContextState, Grammar, Message, MessageSet, Value};

pub const TEST_GRAMMAR: &str = r#"{"header": {"categories": ["n","np","person","pp","pp_list","with","on","time","ordinal","numeral","sent","imp","frag"], "meaning_types": [["np(person)","partner"]], "roots": ["sent","frag","pp_list"], "carriers": ["pp_msg"]}}
{"name": "n(person)", "ctype": "constituency", "vehicle": {"sequence": ["bob"]}, "message": [["type","person"],["den","bob"]]}
{"name": "np(person)", "ctype": "constituency", "vehicle": {"sequence": ["N:n(person)"]}, "message": ["m(N)"]}
{"name": "np(person)", "ctype": "constituency", "vehicle": {"sequence": ["N:np(person)","L:pp_list"]}, "message": ["m(N)","m(L)"]}
{"name": "pp(with,person)", "ctype": "constituency", "vehicle": {"sequence": ["with","N:np(person)"]}, "message": [["type","meaning_type(N)"],["den","den(N)"]]}
{"name": "ordinal", "ctype": "constituency", "vehicle": {"sequence": ["N:numeral","th"]}, "message": [["den","den(N)"]]}
{"name": "pp(on,time)", "ctype": "constituency", "vehicle": {"sequence": ["on","O:ordinal"]}, "message": [["type","event_time"],["den",[["day","den(O)"]]]]}
{"name": "pp_list(P,T)", "ctype": "constituency", "vehicle": {"sequence": ["X:pp(P,T)"]}, "message": [["pp_msg","m(X)"]]}
{"name": "pp_list(P,T)", "ctype": "constituency", "vehicle": {"sequence": ["X:pp","L:pp_list(P,T)"]}, "message": ["m(L)",["pp_msg","m(X)"]]}
{"name": "sent(imp)", "ctype": "sentence_type", "vehicle": {"sequence": ["meet","N:np(person)"]}, "message": [["action","meet"],["object","m(N)"]]}
{"name": "frag(person)", "ctype": "constituency", "context": [{"relation": "current_question", "pattern": "person"}], "vehicle": {"sequence": ["N:np(person)"]}, "message": [["type","partner"],["den","den(N)"]]}
"#;

pub fn grammar() -> Grammar {
    load_grammar(TEST_GRAMMAR).expect("test grammar loads")
}

pub const VOCAB: [&str; 7] = ["meet", "bob", "with", "on", "11", "th", "3"];

type Item = (Category, Message);

/// All (category, message) pairs derivable over each span, by trying every
/// construction against every split of the span.
struct Enumerator<'a> {
    g: &'a Grammar,
    ctx: &'a ContextState,
    tokens: &'a [Token],
    table: BTreeMap<(usize, usize), Vec<Item>>,
}

impl<'a> Enumerator<'a> {
    fn run(g: &'a Grammar, ctx: &'a ContextState, tokens: &'a [Token]) -> BTreeMap<(usize, usize), Vec<Item>> {
        let mut e = Enumerator {
            g,
            ctx,
            tokens,
            table: BTreeMap::new(),
        };
        let n = tokens.len();
        for len in 1..=n {
            for i in 0..=n - len {
                e.fill(i, i + len);
            }
        }
        e.table
    }

    fn fill(&mut self, i: usize, j: usize) {
        let mut items: Vec<Item> = Vec::new();
        if j == i + 1 && is_numeral(&self.tokens[i].surface) {
            let n: i64 = self.tokens[i].surface.parse().unwrap();
            items.push((
                Category::parse("numeral").unwrap(),
                Message::new().with("den", Value::Num(n)),
            ));
        }
        // Unary rules make a span depend on itself; iterate to a fixpoint.
        loop {
            self.table.insert((i, j), items.clone());
            let mut found = Vec::new();
            for idx in 0..self.g.constructions.len() {
                let c = self.g.resolved(idx);
                if !c.triggers(self.ctx) {
                    continue;
                }
                self.matches(idx, 0, i, j, Bindings::new(), SlotEnv::new(), &mut found);
            }
            let before = items.len();
            for f in found {
                if !items.contains(&f) {
                    items.push(f);
                }
            }
            if items.len() == before {
                break;
            }
        }
        self.table.insert((i, j), items);
    }

    #[allow(clippy::too_many_arguments)]
    fn matches(&self, idx: usize, k: usize, pos: usize, end: usize, b: Bindings, env: SlotEnv, out: &mut Vec<Item>) {
        let c = self.g.resolved(idx);
        let seq = &c.vehicle.sequence;
        if k == seq.len() {
            if pos == end && c.vehicle.side_conditions.iter().all(|sc| sc.holds(&env)) {
                let msg = c.message.instantiate(&env, &|cat| self.g.meaning_type_of(cat));
                out.push((c.name.apply(&b), msg));
            }
            return;
        }
        if pos >= end {
            return;
        }
        match &seq[k] {
            VehicleElement::Literal(w) => {
                if self.tokens[pos].surface == *w {
                    self.matches(idx, k + 1, pos + 1, end, b, env, out);
                }
            }
            VehicleElement::Slot { var, pattern } => {
                for mid in pos + 1..=end {
                    let Some(sub) = self.table.get(&(pos, mid)) else { continue };
                    for (cat, msg) in sub {
                        let mut b2 = b.clone();
                        if !unify_into(pattern, cat, &mut b2) {
                            continue;
                        }
                        let mut env2 = env.clone();
                        if var != "_" {
                            env2.insert(
                                var.clone(),
                                SlotValue {
                                    cat: cat.clone(),
                                    message: msg.clone(),
                                },
                            );
                        }
                        self.matches(idx, k + 1, mid, end, b2, env2, out);
                    }
                }
            }
        }
    }
}

pub fn render(set: &MessageSet) -> String {
    set.canonical().iter().map(|m| m.to_string()).collect::<Vec<_>>().join(" ")
}

pub fn oracle_readings(g: &Grammar, ctx: &ContextState, tokens: &[Token]) -> BTreeSet<String> {
    if tokens.is_empty() {
        return BTreeSet::new();
    }
    let table = Enumerator::run(g, ctx, tokens);
    table[&(0, tokens.len())]
        .iter()
        .filter(|(cat, _)| g.roots.contains(&cat.functor))
        .map(|(_, m)| render(&MessageSet(m.flatten(&g.carriers))))
        .collect()
}

pub fn oracle_edges(g: &Grammar, ctx: &ContextState, tokens: &[Token]) -> BTreeSet<String> {
    Enumerator::run(g, ctx, tokens)
        .into_iter()
        .flat_map(|((i, j), items)| items.into_iter().map(move |(c, m)| format!("{i},{j} {c} {m}")))
        .collect()
}

pub fn check(g: &Grammar, ctx: &ContextState, words: &[&str]) -> Result<(), String> {
    let tokens = tokenize(&words.join(" "));
    let r = parse(&tokens, ctx, g);
    let chart_readings: BTreeSet<String> = r.readings.iter().map(|rd| render(&rd.messages)).collect();
    if r.readings.len() != chart_readings.len() {
        return Err(format!("{words:?}: duplicate readings"));
    }
    let expected = oracle_readings(g, ctx, &tokens);
    if chart_readings != expected {
        return Err(format!("{words:?}: chart {chart_readings:?} oracle {expected:?}"));
    }
    let chart_edges: BTreeSet<String> = r
        .diagnostics
        .chart
        .edges
        .iter()
        .map(|e| format!("{},{} {} {}", e.from, e.to, e.cat, e.message))
        .collect();
    let expected = oracle_edges(g, ctx, &tokens);
    if chart_edges != expected {
        return Err(format!("{words:?}: edge sets differ"));
    }
    Ok(())
}

pub fn contexts() -> [ContextState; 2] {
    [
        ContextState::default(),
        ContextState::default().with_question(Category::parse("person").unwrap()),
    ]
}

pub fn all_strings(max: usize) -> Vec<Vec<&'static str>> {
    let mut out = vec![vec![]];
    let mut frontier = vec![vec![]];
    for _ in 0..max {
        let mut next = Vec::new();
        for s in &frontier {
            for w in VOCAB {
                let mut t: Vec<&str> = s.clone();
                t.push(w);
                next.push(t);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

