use std::sync::Arc;

use chrono::NaiveDate;
use construe::calendar::Calendar;
use construe::dialogue::{ActKind, Session, SessionConfig, ASK_DAY_PART, ASK_TIME, ASK_TIME_AND_DATE};
use construe::Grammar;

fn session(calendar: Calendar) -> Session {
    Session::new(
        Arc::new(Grammar::calendar()),
        calendar,
        SessionConfig {
            today: NaiveDate::from_ymd_opt(2026, 10, 15),
            ..Default::default()
        },
    )
}

#[test]
fn golden_dialog() {
    let mut s = session(Calendar::new());
    let r = s.run_turn("Schedule a meeting with Bob.");
    assert_eq!(r.reply.text, ASK_TIME_AND_DATE);
    let r = s.run_turn("On August 30th.");
    assert_eq!(r.reply.text, ASK_TIME);
    let r = s.run_turn("8.");
    assert_eq!(r.reply.text, ASK_DAY_PART);
    let r = s.run_turn("In the evening.");
    assert_eq!(r.reply.kind, ActKind::Execute);
    assert_eq!(
        r.slots.compact(),
        "[[action_name schedule],[event_name meeting],[event_time [[minute 0],[hour 20],[day 30],[month 8]]],[event_partner [bob]]]"
    );
    assert_eq!(s.calendar.len(), 1);
    let e = &s.calendar.events[0];
    assert_eq!((e.start.year, e.start.month, e.start.day, e.start.hour), (2027, 8, 30, 20));
    let t = s.transcript_text();
    assert!(t.starts_with("U: Schedule a meeting with Bob.\nS: At what time and date?\n"));
    assert!(t.contains("***Slots:"));
}

#[test]
fn new_action_after_execute_resets() {
    let mut s = session(Calendar::new());
    for u in ["Schedule a meeting with Bob.", "On August 30th.", "8.", "In the evening."] {
        s.run_turn(u);
    }
    let r = s.run_turn("Cancel the meeting with Bob.");
    assert_eq!(r.reply.kind, ActKind::Execute, "{}", r.reply.text);
    assert!(s.calendar.is_empty());
    assert!(r.slots.event_time.is_none());
}

#[test]
fn move_asks_for_the_new_time() {
    let mut s = session(Calendar::new());
    let r = s.run_turn("Schedule an interview with Alice on November 3rd at 10 am.");
    assert_eq!(r.reply.kind, ActKind::Execute, "{}", r.reply.text);
    let r = s.run_turn("Move the interview.");
    assert_eq!(r.reply.kind, ActKind::Ask, "{}", r.reply.text);
    let r = s.run_turn("On November 4th at 3 pm.");
    assert_eq!(r.reply.kind, ActKind::Execute, "{}", r.reply.text);
    let e = &s.calendar.events[0];
    assert_eq!((e.start.month, e.start.day, e.start.hour), (11, 4, 15));
}

#[test]
fn postpone_with_target_and_new_day() {
    let mut s = session(Calendar::new());
    s.run_turn("Schedule an interview with Alice on November 3rd at 10 am.");
    let r = s.run_turn("Postpone the interview at 10 to Monday.");
    assert_eq!(r.reply.kind, ActKind::Execute, "{}", r.reply.text);
    let e = &s.calendar.events[0];
    assert_eq!((e.start.month, e.start.day, e.start.hour), (10, 19, 10));
}

#[test]
fn never_asks_for_a_filled_slot() {
    let turns = ["Schedule a meeting with Bob.", "On August 30th.", "8.", "In the evening."];
    for n in 1..=turns.len() {
        let mut s = session(Calendar::new());
        for u in &turns[..n] {
            let r = s.run_turn(u);
            let t = s.acc.event_time.clone().unwrap_or_default();
            match r.reply.text.as_str() {
                ASK_TIME_AND_DATE => assert!(!t.has_date() && t.hour.is_none()),
                ASK_TIME => assert!(t.hour.is_none()),
                ASK_DAY_PART => assert!(s.acc.event_time_ambiguity.is_some()),
                _ => {}
            }
        }
    }
}

#[test]
fn unique_store_match_is_moved() {
    let mut cal = Calendar::new();
    let mut setup = session(Calendar::new());
    setup.run_turn("Schedule an interview on November 3rd at 10 am.");
    cal.events = setup.calendar.events.clone();
    let mut s = session(cal);
    assert!(s.ctx.current_discourse.iter().any(|e| e == "interview"));
    let r = s.run_turn("Postpone the interview at 10 to Monday.");
    assert_eq!(r.reply.kind, ActKind::Execute, "{}", r.reply.text);
    assert_eq!(r.slots.action_name, Some(construe::semantics::Action::Move));
}
