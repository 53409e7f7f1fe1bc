use std::sync::Arc;

use chrono::NaiveDate;
use construe::calendar::{Calendar, Start};
use construe::dialogue::{ActKind, Session, SessionConfig};
use construe::grammar::{load_grammar, resolve_defaults, TemplateItem, VehicleElement};
use construe::lexicon::{lookup, surfaces, tokenize};
use construe::ontology::{subsumes, unify, Term};
use construe::semantics::{merge_slots, normalize_time, Action, EventTime, SlotSet};
use construe::{Category, ContextState, Grammar, Message, Value};
use proptest::prelude::*;

fn category(depth: u32) -> BoxedStrategy<Category> {
    let functor = prop::sample::select(vec!["a", "b", "c", "d"]).prop_map(String::from);
    if depth == 0 {
        return functor.prop_map(|f| Category { functor: f, args: vec![] }).boxed();
    }
    (functor, prop::collection::vec(category(depth - 1), 0..3))
        .prop_map(|(f, args)| Category {
            functor: f,
            args: args.into_iter().map(Term::Cat).collect(),
        })
        .boxed()
}

/// Replace some arguments by fresh variables and drop some trailing ones.
fn generalize(c: &Category, bits: &mut impl Iterator<Item = u8>, fresh: &mut usize) -> Category {
    let keep = match bits.next().unwrap_or(0) % 4 {
        0 => c.args.len().saturating_sub(1),
        _ => c.args.len(),
    };
    let args = c.args[..keep]
        .iter()
        .map(|a| match (a, bits.next().unwrap_or(0) % 3) {
            (Term::Cat(_), 0) => {
                *fresh += 1;
                Term::Var(format!("X{fresh}"))
            }
            (Term::Cat(inner), _) => Term::Cat(generalize(inner, bits, fresh)),
            (v, _) => v.clone(),
        })
        .collect();
    Category {
        functor: c.functor.clone(),
        args,
    }
}

proptest! {
    #[test]
    fn subsumption_is_reflexive_and_follows_generalization(c in category(3), bits in prop::collection::vec(any::<u8>(), 32)) {
        prop_assert!(subsumes(&c, &c));
        let g = generalize(&c, &mut bits.into_iter(), &mut 0);
        let b = unify(&g, &c);
        prop_assert!(b.is_some(), "{} should unify with {}", g, c);
        let applied = g.apply(&b.unwrap());
        prop_assert!(subsumes(&applied, &c), "{} !<= {}", applied, c);
        let bare = Category { functor: c.functor.clone(), args: vec![] };
        prop_assert!(subsumes(&bare, &c));
    }

    #[test]
    fn subsumption_is_transitive(a in category(2), b in category(2), c in category(2)) {
        if subsumes(&a, &b) && subsumes(&b, &c) {
            prop_assert!(subsumes(&a, &c));
        }
    }

    #[test]
    fn unify_round_trips_through_display(c in category(3), bits in prop::collection::vec(any::<u8>(), 32)) {
        let g = generalize(&c, &mut bits.into_iter(), &mut 0);
        let reparsed = Category::parse(&g.to_string()).unwrap();
        prop_assert_eq!(&reparsed, &g);
        prop_assert_eq!(unify(&reparsed, &c), unify(&g, &c));
    }

    #[test]
    fn tokenize_is_idempotent(s in "[a-zA-Z0-9 :.,'!?\\-]{0,40}") {
        let once = tokenize(&s);
        let again = tokenize(&surfaces(&once).join(" "));
        prop_assert_eq!(surfaces(&once), surfaces(&again));
    }

    #[test]
    fn normalize_rejects_out_of_range_dates(month in 0i64..16, day in 0i64..36) {
        let raw = Message::new().with("month", Value::Num(month)).with("day", Value::Num(day));
        let ok = normalize_time(&raw, &ContextState::calendar()).is_ok();
        let valid = (1..=12).contains(&month)
            && NaiveDate::from_ymd_opt(2028, month as u32, day as u32).is_some();
        prop_assert_eq!(ok, valid, "month {} day {}", month, day);
    }

    #[test]
    fn normalize_rejects_out_of_range_times(hour in 0i64..30, minute in 0i64..70) {
        let raw = Message::new().with("hour", Value::Num(hour)).with("minute", Value::Num(minute));
        let r = normalize_time(&raw, &ContextState::calendar());
        let valid = hour < 24 && minute < 60 && minute % 5 == 0;
        prop_assert_eq!(r.is_ok(), valid, "{}:{}", hour, minute);
        if let Ok((t, _)) = r {
            prop_assert_eq!(t.minute, Some(minute));
        }
    }
}

fn slot_set() -> impl Strategy<Value = SlotSet> {
    let time = (
        prop::option::of(0i64..60),
        prop::option::of(13i64..24),
        prop::option::of(1i64..29),
        prop::option::of(1i64..13),
    )
        .prop_map(|(minute, hour, day, month)| EventTime {
            minute,
            hour,
            day,
            month,
            ..Default::default()
        });
    (
        prop::option::of(prop::sample::select(vec![Action::Schedule, Action::Cancel, Action::Move])),
        prop::option::of(prop::sample::select(vec!["meeting".to_string(), "lunch".to_string()])),
        prop::option::of(time),
        prop::collection::vec(prop::sample::select(vec!["bob".to_string(), "ann".to_string(), "tom".to_string()]), 0..3),
        prop::option::of(prop::sample::select(vec!["office".to_string(), "cafe".to_string()])),
    )
        .prop_map(|(action_name, event_name, event_time, mut partners, event_place)| {
            partners.dedup();
            SlotSet {
                action_name,
                event_name,
                event_time,
                event_partner: partners,
                event_place,
                ..Default::default()
            }
        })
}

fn without_corrections(mut s: SlotSet) -> SlotSet {
    s.corrections.clear();
    s
}

proptest! {
    #[test]
    fn merge_has_an_identity(s in slot_set()) {
        let empty = SlotSet::default();
        prop_assert_eq!(&merge_slots(&empty, &s), &s);
        prop_assert_eq!(&merge_slots(&s, &empty), &s);
    }

    #[test]
    fn merge_is_associative(a in slot_set(), b in slot_set(), c in slot_set()) {
        let left = merge_slots(&merge_slots(&a, &b), &c);
        let right = merge_slots(&a, &merge_slots(&b, &c));
        prop_assert_eq!(without_corrections(left), without_corrections(right));
    }
}

fn schedule(month: i64, day: i64, hour: i64, minute: i64, partner: &str) -> SlotSet {
    SlotSet {
        action_name: Some(Action::Schedule),
        event_name: Some("meeting".into()),
        event_time: Some(EventTime {
            minute: Some(minute),
            hour: Some(hour),
            day: Some(day),
            month: Some(month),
            year: Some(2027),
            ..Default::default()
        }),
        event_partner: vec![partner.into()],
        ..Default::default()
    }
}

fn starts() -> impl Strategy<Value = Vec<(i64, i64, i64, i64)>> {
    prop::collection::vec((1i64..13, 1i64..29, 0i64..24, (0i64..12).prop_map(|m| m * 5)), 0..6)
}

fn today() -> NaiveDate {
    NaiveDate::from_ymd_opt(2026, 10, 15).unwrap()
}

fn filled(times: &[(i64, i64, i64, i64)]) -> Calendar {
    let mut cal = Calendar::new();
    for &(mo, d, h, mi) in times {
        let _ = cal.apply(&schedule(mo, d, h, mi, "ann"), today());
    }
    cal
}

proptest! {
    #[test]
    fn cancel_undoes_schedule(others in starts(), (mo, d, h, mi) in (1i64..13, 1i64..29, 0i64..24, (0i64..12).prop_map(|m| m * 5))) {
        let mut cal = filled(&others);
        let start = Start { year: 2027, month: mo as u32, day: d as u32, hour: h as u32, minute: mi as u32 };
        prop_assume!(cal.events.iter().all(|e| e.start != start));
        let before = cal.events.clone();
        cal.apply(&schedule(mo, d, h, mi, "bob"), today()).unwrap();
        let mut cancel = schedule(mo, d, h, mi, "bob");
        cancel.action_name = Some(Action::Cancel);
        cal.apply(&cancel, today()).unwrap();
        prop_assert_eq!(cal.events, before);
    }

    #[test]
    fn store_round_trips(times in starts()) {
        let cal = filled(&times);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("events.jsonl");
        cal.save(&path).unwrap();
        let loaded = Calendar::load(&path).unwrap();
        prop_assert_eq!(loaded.events, cal.events);
    }
}

const FUNCTIONS: [&str; 3] = ["subj", "obj", "comp"];
const ROLES: [&str; 5] = ["agent", "target", "movable", "perceiver", "manip"];

fn defaults_grammar(
    table: &[(usize, Vec<(usize, usize)>)],
    class: usize,
    frame: &[usize],
    own: &[(usize, usize)],
) -> Grammar {
    let classes = ["action", "affect", "motion", "stative"];
    let body: Vec<String> = table
        .iter()
        .map(|(c, pairs)| {
            let pairs: Vec<String> = pairs
                .iter()
                .map(|(f, r)| format!("[\"{}\",\"{}\"]", FUNCTIONS[*f], ROLES[*r]))
                .collect();
            format!("\"{}\": [{}]", classes[*c], pairs.join(","))
        })
        .collect();
    let frame_str: Vec<String> = frame.iter().map(|f| format!("{}(V{f})", FUNCTIONS[*f])).collect();
    let mut seen = std::collections::BTreeSet::new();
    let own_str: Vec<String> = own
        .iter()
        .filter(|(f, r)| frame.contains(f) && seen.insert(*r))
        .map(|(f, r)| format!("[\"{}\",\"m(V{f})\"]", ROLES[*r]))
        .collect();
    let header = format!(
        r#"{{"header": {{"categories": ["verb","action","affect","motion","stative","go"], "verb_defaults": {{"base": "action", "stative": "stative", "classes": {{{}}}}}}}}}"#,
        body.join(",")
    );
    let side = if frame.is_empty() {
        String::new()
    } else {
        format!(r#", "side_conditions": ["subcat({})"]"#, frame_str.join(","))
    };
    let c = format!(
        r#"{{"name": "verb({}(go))", "ctype": "valency", "vehicle": {{"sequence": ["go"]{side}}}, "message": [{}]}}"#,
        classes[class],
        own_str.join(",")
    );
    load_grammar(&format!("{header}\n{c}")).unwrap()
}

fn table() -> impl Strategy<Value = Vec<(usize, Vec<(usize, usize)>)>> {
    prop::collection::btree_map(0usize..4, prop::collection::vec((0usize..3, 0usize..5), 0..3), 0..4)
        .prop_map(|m| m.into_iter().collect())
}

proptest! {
    #[test]
    fn defaults_only_add_frame_roles(
        table in table(),
        class in 0usize..4,
        frame in prop::collection::btree_set(0usize..3, 0..4),
        own in prop::collection::vec((0usize..3, 0usize..5), 0..3),
    ) {
        let frame: Vec<usize> = frame.into_iter().collect();
        let g = defaults_grammar(&table, class, &frame, &own);
        let original = &g.constructions[0];
        let resolved = resolve_defaults(original, &g);
        prop_assert_eq!(&resolve_defaults(&resolved, &g), &resolved);
        prop_assert_eq!(&resolved.message.0[..original.message.0.len()], &original.message.0[..]);
        if class == 3 {
            prop_assert_eq!(&resolved, original);
        }
        let mut roles = std::collections::BTreeSet::new();
        for item in &resolved.message.0 {
            if let TemplateItem::Pair(role, _) = item {
                prop_assert!(roles.insert(role.clone()), "role {} twice", role);
            }
        }
        for item in &resolved.message.0[original.message.0.len()..] {
            let TemplateItem::Pair(role, _) = item else { panic!("defaults add pairs") };
            let declared = table.iter().any(|(c, pairs)| (*c == class || *c == 0)
                && pairs.iter().any(|(f, r)| ROLES[*r] == role && frame.contains(f)));
            prop_assert!(declared, "role {} not from the class chain", role);
        }
    }
}

fn first_literal(c: &construe::grammar::Construction) -> Option<&str> {
    match c.vehicle.sequence.first()? {
        VehicleElement::Literal(w) => Some(w),
        VehicleElement::Slot { .. } => None,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn lookup_is_sound_and_complete(pick in any::<prop::sample::Index>(), q in 0usize..4, mention in any::<bool>()) {
        let g = Grammar::calendar();
        let words: Vec<&str> = g.constructions.iter().filter_map(first_literal).collect();
        let word = pick.get(&words);
        let mut ctx = ContextState::calendar();
        if let Some(q) = ["time(_)", "day_part", "choice"].get(q) {
            ctx = ctx.with_question(Category::parse(q).unwrap());
        }
        if mention {
            ctx.mention("bob");
        }
        let token = tokenize(word).into_iter().next().unwrap();
        let found = lookup(&token, &ctx, &g);
        for c in &found {
            prop_assert!(c.is_lexical());
            prop_assert_eq!(first_literal(c), Some(token.surface.as_str()));
            prop_assert!(c.triggers(&ctx));
        }
        let expected = g.constructions.iter()
            .filter(|c| c.is_lexical() && first_literal(c) == Some(token.surface.as_str()) && c.triggers(&ctx))
            .count();
        prop_assert_eq!(found.len(), expected);
    }
}

const POOL: [&str; 14] = [
    "Schedule a meeting with Bob.",
    "On August 30th.",
    "8.",
    "In the evening.",
    "at 10 am",
    "tomorrow",
    "Cancel the meeting with Bob.",
    "Move the meeting with Bob.",
    "to 3 pm",
    "the 2nd",
    "asdf qwerty",
    "No, but I'll send it tomorrow.",
    "Schedule lunch with Ann on Friday at noon.",
    "in the morning",
];

fn session() -> Session {
    Session::new(
        Arc::new(Grammar::calendar()),
        Calendar::new(),
        SessionConfig {
            today: Some(today()),
            ..Default::default()
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]
    #[test]
    fn question_state_tracks_the_last_act(script in prop::collection::vec(0..POOL.len(), 1..9)) {
        let mut s = session();
        let mut replies = Vec::new();
        for &i in &script {
            let r = s.run_turn(POOL[i]);
            prop_assert_eq!(&s.ctx.current_question, &r.reply.question);
            match r.reply.kind {
                ActKind::Ask | ActKind::Clarify => prop_assert!(s.ctx.current_question.is_some()),
                ActKind::Execute | ActKind::Inform | ActKind::Confirm => prop_assert!(s.ctx.current_question.is_none()),
                ActKind::Fail => {}
            }
            if r.reply.kind == ActKind::Execute && r.slots.action_name == Some(Action::Schedule) {
                let t = r.slots.event_time.as_ref().unwrap();
                prop_assert!(t.day.is_some() && t.month.is_some() && t.hour.is_some());
                prop_assert!(r.slots.event_time_ambiguity.is_none());
            }
            replies.push((r.reply.clone(), r.slots.clone()));
        }
        let mut replay = session();
        for (&i, expected) in script.iter().zip(&replies) {
            let r = replay.run_turn(POOL[i]);
            prop_assert_eq!(&(r.reply, r.slots), expected);
        }
    }
}
