//! The discourse module: context updates, question choice and the turn loop.

use std::fmt;
use std::path::PathBuf;
use std::sync::Arc;

use chrono::{Local, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::calendar::{Calendar, CalendarError, CalendarEvent, Outcome};
use crate::context::{ContextState, PreviousSentence, PreviousUtterance};
use crate::grammar::Grammar;
use crate::lexicon::tokenize;
use crate::message::MessageSet;
use crate::ontology::Category;
use crate::parser::{parse, ParseResult};
use crate::semantics::{interpret, merge_slots, Action, Ambiguity, DomainMapping, EventTime, SlotSet};

pub const ASK_REQUEST: &str = "What would you like to do?";
pub const ASK_TIME_AND_DATE: &str = "At what time and date?";
pub const ASK_TIME: &str = "At what time?";
pub const ASK_DATE: &str = "On what date?";
pub const ASK_DAY_PART: &str = "Morning or afternoon?";
pub const ASK_NEW_TIME: &str = "To what time and date?";
pub const ASK_WHICH_EVENT: &str = "Which event?";
pub const NOT_UNDERSTOOD: &str = "Sorry, I did not understand.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActKind {
    Ask,
    Clarify,
    Confirm,
    Execute,
    Inform,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DialogAct {
    pub kind: ActKind,
    /// The category an answer is expected to fit, when the act asks.
    pub question: Option<Category>,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slots: Option<SlotSet>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub alternatives: Vec<String>,
}

fn cat(s: &str) -> Category {
    Category::parse(s).expect("well-formed category")
}

impl DialogAct {
    fn ask(text: &str, question: &str) -> DialogAct {
        DialogAct {
            kind: ActKind::Ask,
            question: Some(cat(question)),
            text: text.to_string(),
            slots: None,
            alternatives: Vec::new(),
        }
    }

    fn clarify(alternatives: Vec<String>) -> DialogAct {
        let listed: Vec<String> = alternatives
            .iter()
            .enumerate()
            .map(|(i, a)| format!("({}) {a}", i + 1))
            .collect();
        DialogAct {
            kind: ActKind::Clarify,
            question: Some(cat("choice")),
            text: format!("Did you mean: {}?", listed.join(" or ")),
            slots: None,
            alternatives,
        }
    }

    fn execute(slots: SlotSet) -> DialogAct {
        DialogAct {
            kind: ActKind::Execute,
            question: None,
            text: String::new(),
            slots: Some(slots),
            alternatives: Vec::new(),
        }
    }

    fn fail(text: String, reprompt: Option<(&str, Category)>) -> DialogAct {
        match reprompt {
            Some((q, c)) => DialogAct {
                kind: ActKind::Fail,
                question: Some(c),
                text: format!("{text} {q}"),
                slots: None,
                alternatives: Vec::new(),
            },
            None => DialogAct {
                kind: ActKind::Fail,
                question: None,
                text,
                slots: None,
                alternatives: Vec::new(),
            },
        }
    }

    /// Construction name recorded as the system's utterance, so that user
    /// constructions can condition on having been asked something.
    pub fn construction_name(&self) -> Category {
        match self.question.as_ref().map(|q| q.functor.as_str()) {
            Some("choice") => cat("sent(ques,alt(choice))"),
            Some("day_part") => cat("sent(ques,alt(day_part))"),
            Some(q) => cat(&format!("sent(ques,wh({q}))")),
            None => cat("sent(assert,inform)"),
        }
    }
}

impl fmt::Display for DialogAct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

fn time_missing(t: Option<&EventTime>) -> (bool, bool) {
    let date = t.is_some_and(EventTime::has_date);
    let hour = t.is_some_and(|t| t.hour.is_some());
    (!date, !hour)
}

fn describe_target(acc: &SlotSet) -> bool {
    acc.event_name.is_some() || acc.event_time.is_some() || !acc.event_partner.is_empty() || acc.event_place.is_some()
}

/// Choose the system's next move for the accumulated slots.
pub fn next_action(_ctx: &ContextState, acc: &SlotSet, store: &Calendar) -> DialogAct {
    match acc.action_name {
        None => DialogAct::ask(ASK_REQUEST, "request"),
        Some(Action::Schedule) => match time_missing(acc.event_time.as_ref()) {
            (true, true) => DialogAct::ask(ASK_TIME_AND_DATE, "time(_)"),
            (false, true) => DialogAct::ask(ASK_TIME, "time(_)"),
            (true, false) => DialogAct::ask(ASK_DATE, "time(_)"),
            (false, false) if acc.event_time_ambiguity == Some(Ambiguity::AmPmUnknown) => {
                DialogAct::ask(ASK_DAY_PART, "day_part")
            }
            (false, false) => DialogAct::execute(acc.clone()),
        },
        Some(action) => {
            if !describe_target(acc) {
                return DialogAct::ask(ASK_WHICH_EVENT, "event");
            }
            let target = SlotSet {
                action_name: None,
                new_event_time: None,
                new_event_place: None,
                ..acc.clone()
            };
            let hits = store.query(&target);
            match hits.as_slice() {
                [] => DialogAct::fail("I could not find a matching event.".into(), None),
                [_] if action == Action::Move && acc.new_event_time.is_none() && acc.new_event_place.is_none() => {
                    DialogAct::ask(ASK_NEW_TIME, "time(_)")
                }
                [_] => DialogAct::execute(acc.clone()),
                many => DialogAct::clarify(many.iter().map(|e| e.to_string()).collect()),
            }
        }
    }
}

/// What the user said in a turn, as far as the context cares.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UserTurn {
    pub text: String,
    pub construction_name: Option<Category>,
    pub reading: Option<MessageSet>,
    pub slots: SlotSet,
}

/// Compute the context for the next turn.
pub fn update_context(ctx: &ContextState, act: &DialogAct, turn: &UserTurn) -> ContextState {
    let mut next = ctx.clone();
    if turn.construction_name.is_some() {
        next.previous_sentence = Some(PreviousSentence {
            construction_name: turn.construction_name.clone(),
            truth_value: turn.slots.truth_value,
            content: turn.reading.clone(),
        });
    }
    next.previous_utterance = Some(PreviousUtterance {
        text: act.text.clone(),
        construction_name: Some(act.construction_name()),
    });
    next.current_question = act.question.clone();
    if let Some(e) = &turn.slots.event_name {
        next.mention(e.clone());
    }
    for p in &turn.slots.event_partner {
        next.mention(p.clone());
    }
    if let Some(p) = &turn.slots.event_place {
        next.mention(p.clone());
    }
    next
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Speaker {
    #[serde(rename = "U")]
    User,
    #[serde(rename = "S")]
    System,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptLine {
    pub speaker: Speaker,
    pub text: String,
}

impl fmt::Display for TranscriptLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let who = match self.speaker {
            Speaker::User => "U",
            Speaker::System => "S",
        };
        write!(f, "{who}: {}", self.text)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TurnResult {
    pub reply: DialogAct,
    pub slots: SlotSet,
    pub readings: usize,
    #[serde(skip)]
    pub parse: ParseResult,
}

impl TurnResult {
    pub fn trace(&self) -> String {
        self.parse.trace()
    }
}

#[derive(Debug, Clone, Default)]
enum Pending {
    #[default]
    Nothing,
    Readings(Vec<SlotSet>),
    Events(Vec<CalendarEvent>),
    NewTime,
}

#[derive(Debug, Clone)]
pub struct SessionConfig {
    pub today: Option<NaiveDate>,
    pub store_path: Option<PathBuf>,
    pub check_conflicts: bool,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            today: None,
            store_path: None,
            check_conflicts: true,
        }
    }
}

/// One user's conversation: context, accumulated slots and calendar.
#[derive(Debug, Clone)]
pub struct Session {
    pub grammar: Arc<Grammar>,
    pub domain: DomainMapping,
    pub ctx: ContextState,
    pub acc: SlotSet,
    pub calendar: Calendar,
    pub transcript: Vec<TranscriptLine>,
    store_path: Option<PathBuf>,
    pending: Pending,
    finished: bool,
}

impl Session {
    pub fn new(grammar: Arc<Grammar>, calendar: Calendar, config: SessionConfig) -> Session {
        let mut ctx = ContextState::calendar();
        ctx.today = Some(config.today.unwrap_or_else(|| Local::now().date_naive()));
        for e in &calendar.events {
            ctx.mention(e.name.clone());
            for p in &e.partners {
                ctx.mention(p.clone());
            }
        }
        let mut calendar = calendar;
        calendar.check_conflicts = config.check_conflicts;
        Session {
            grammar,
            domain: DomainMapping::calendar(),
            ctx,
            acc: SlotSet::default(),
            calendar,
            transcript: Vec::new(),
            store_path: config.store_path,
            pending: Pending::Nothing,
            finished: false,
        }
    }

    /// Load the store from `config.store_path` when given.
    pub fn open(grammar: Arc<Grammar>, config: SessionConfig) -> Result<Session, CalendarError> {
        let calendar = match &config.store_path {
            Some(p) => Calendar::load(p)?,
            None => Calendar::new(),
        };
        Ok(Session::new(grammar, calendar, config))
    }

    pub fn today(&self) -> NaiveDate {
        self.ctx.today.expect("session has a today")
    }

    fn pending_question(&self) -> Option<(&'static str, Category)> {
        let q = self.ctx.current_question.clone()?;
        let said = self.ctx.previous_utterance.as_ref()?.text.as_str();
        let text = [ASK_TIME_AND_DATE, ASK_TIME, ASK_DATE, ASK_DAY_PART, ASK_NEW_TIME, ASK_WHICH_EVENT, ASK_REQUEST]
            .into_iter()
            .find(|a| said.ends_with(a))?;
        Some((text, q))
    }

    /// Process one user utterance.
    pub fn run_turn(&mut self, utterance: &str) -> TurnResult {
        if self.finished {
            self.acc = SlotSet::default();
            self.finished = false;
        }
        let tokens = tokenize(utterance);
        let parsed = parse(&tokens, &self.ctx, &self.grammar);

        let mut interpretations: Vec<(SlotSet, &crate::parser::Reading)> = Vec::new();
        for r in &parsed.readings {
            match interpret(&r.messages.0, &self.ctx, &self.domain) {
                Ok(s) if !interpretations.iter().any(|(x, _)| *x == s) => interpretations.push((s, r)),
                Ok(_) => {}
                Err(e) => log::debug!("reading {} rejected: {e}", r.category),
            }
        }

        let (act, turn) = match interpretations.as_slice() {
            [] => {
                let act = DialogAct::fail(NOT_UNDERSTOOD.into(), self.pending_question());
                let turn = UserTurn {
                    text: utterance.into(),
                    construction_name: None,
                    reading: None,
                    slots: SlotSet::default(),
                };
                (act, turn)
            }
            [(slots, reading)] => {
                let turn = UserTurn {
                    text: utterance.into(),
                    construction_name: Some(reading.category.clone()),
                    reading: Some(reading.messages.clone()),
                    slots: slots.clone(),
                };
                (self.advance(slots.clone()), turn)
            }
            many => {
                let alts: Vec<SlotSet> = many.iter().map(|(s, _)| s.clone()).collect();
                let act = DialogAct::clarify(alts.iter().map(SlotSet::compact).collect());
                self.pending = Pending::Readings(alts);
                let turn = UserTurn {
                    text: utterance.into(),
                    construction_name: Some(many[0].1.category.clone()),
                    reading: None,
                    slots: SlotSet::default(),
                };
                (act, turn)
            }
        };

        self.ctx = update_context(&self.ctx, &act, &turn);
        self.transcript.push(TranscriptLine {
            speaker: Speaker::User,
            text: utterance.to_string(),
        });
        self.transcript.push(TranscriptLine {
            speaker: Speaker::System,
            text: act.text.clone(),
        });
        TurnResult {
            slots: self.acc.clone(),
            readings: parsed.readings.len(),
            reply: act,
            parse: parsed,
        }
    }

    /// Merge a single interpretation and decide what to do.
    fn advance(&mut self, mut new: SlotSet) -> DialogAct {
        match std::mem::take(&mut self.pending) {
            Pending::Readings(alts) => {
                if let Some(s) = new.choice.and_then(|c| pick(&alts, c)) {
                    new = s.clone();
                }
            }
            Pending::Events(events) => {
                if let Some(e) = new.choice.and_then(|c| pick(&events, c)) {
                    let pinned = SlotSet {
                        event_name: Some(e.name.clone()),
                        event_time: Some(EventTime {
                            minute: Some(e.start.minute.into()),
                            hour: Some(e.start.hour.into()),
                            day: Some(e.start.day.into()),
                            month: Some(e.start.month.into()),
                            year: Some(e.start.year.into()),
                            ..Default::default()
                        }),
                        ..Default::default()
                    };
                    self.acc.event_time_ambiguity = None;
                    self.acc.event_time = None;
                    new = pinned;
                }
            }
            Pending::NewTime => {
                if new.new_event_time.is_none() && new.event_time.is_some() {
                    new.new_event_time = new.event_time.take();
                    new.event_time_ambiguity = None;
                }
            }
            Pending::Nothing => {}
        }
        new.choice = None;
        self.acc = merge_slots(&self.acc, &new);

        let mut act = next_action(&self.ctx, &self.acc, &self.calendar);
        match act.kind {
            ActKind::Execute => act = self.execute(),
            ActKind::Clarify => {
                let target = SlotSet {
                    action_name: None,
                    new_event_time: None,
                    new_event_place: None,
                    ..self.acc.clone()
                };
                let events = self.calendar.query(&target).into_iter().cloned().collect();
                self.pending = Pending::Events(events);
            }
            ActKind::Ask if act.text == ASK_NEW_TIME => self.pending = Pending::NewTime,
            ActKind::Fail => self.finished = true,
            _ => {}
        }
        act
    }

    fn execute(&mut self) -> DialogAct {
        let today = self.today();
        match self.calendar.apply(&self.acc, today) {
            Ok(outcome) => {
                if let Some(p) = &self.store_path {
                    if let Err(e) = self.calendar.save(p) {
                        log::warn!("could not save calendar: {e}");
                    }
                }
                if let Outcome::Scheduled(e) | Outcome::Moved { after: e, .. } = &outcome {
                    self.ctx.mention(e.name.clone());
                }
                self.finished = true;
                DialogAct {
                    kind: ActKind::Execute,
                    question: None,
                    text: outcome.to_string(),
                    slots: Some(self.acc.clone()),
                    alternatives: Vec::new(),
                }
            }
            Err(CalendarError::Conflict(other)) => {
                self.acc.event_time = None;
                self.acc.event_time_ambiguity = None;
                DialogAct::fail(
                    format!("That time is taken by {other}."),
                    Some((ASK_TIME_AND_DATE, cat("time(_)"))),
                )
            }
            Err(CalendarError::Ambiguous(events)) => {
                let act = DialogAct::clarify(events.iter().map(|e| e.to_string()).collect());
                self.pending = Pending::Events(events);
                act
            }
            Err(e) => {
                self.finished = true;
                DialogAct::fail(format!("I could not do that: {e}."), None)
            }
        }
    }

    pub fn transcript_text(&self) -> String {
        let mut s: String = self.transcript.iter().map(|l| format!("{l}\n")).collect();
        s.push_str(&self.acc.block());
        s
    }
}

fn pick<T>(items: &[T], choice: i64) -> Option<&T> {
    usize::try_from(choice).ok()?.checked_sub(1).and_then(|i| items.get(i))
}
