//! From parser messages to calendar slots.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use chrono::{Datelike, Duration, Local, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::context::ContextState;
use crate::message::{Message, Value};

/// Calendar granularity in minutes.
pub const MINUTE_STEP: i64 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Schedule,
    Cancel,
    Move,
}

impl Action {
    pub fn as_str(self) -> &'static str {
        match self {
            Action::Schedule => "schedule",
            Action::Cancel => "cancel",
            Action::Move => "move",
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ambiguity {
    AmPmUnknown,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EventTime {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub minute: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hour: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub day: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub month: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub year: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub end_minute: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub end_hour: Option<i64>,
    /// Kept only while no hour is known to apply it to.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub day_part: Option<String>,
}

impl EventTime {
    pub fn is_empty(&self) -> bool {
        *self == EventTime::default()
    }

    pub fn has_date(&self) -> bool {
        self.day.is_some() && self.month.is_some()
    }

    /// Fields in print order.
    fn fields(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        let nums = [
            ("minute", self.minute),
            ("hour", self.hour),
            ("day", self.day),
            ("month", self.month),
            ("year", self.year),
            ("end_minute", self.end_minute),
            ("end_hour", self.end_hour),
        ];
        for (k, v) in nums {
            if let Some(v) = v {
                out.push((k, v.to_string()));
            }
        }
        if let Some(p) = &self.day_part {
            out.push(("day_part", p.clone()));
        }
        out
    }

    fn slot_mut(&mut self, field: &str) -> Option<&mut Option<i64>> {
        Some(match field {
            "minute" => &mut self.minute,
            "hour" => &mut self.hour,
            "day" => &mut self.day,
            "month" => &mut self.month,
            "year" => &mut self.year,
            "end_minute" => &mut self.end_minute,
            "end_hour" => &mut self.end_hour,
            _ => return None,
        })
    }
}

impl fmt::Display for EventTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.fields().into_iter().map(|(k, v)| format!("[{k} {v}]")).collect();
        write!(f, "[{}]", parts.join(","))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SlotSet {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub action_name: Option<Action>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub event_name: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub event_time: Option<EventTime>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub event_time_ambiguity: Option<Ambiguity>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub event_partner: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub event_place: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub new_event_time: Option<EventTime>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub new_event_place: Option<String>,
    /// Answer polarity from yes/no constructions.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truth_value: Option<i64>,
    /// Answer to a numbered clarification question.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub choice: Option<i64>,
    /// Slots overwritten by a later restatement.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub corrections: Vec<String>,
}

impl SlotSet {
    pub fn is_empty(&self) -> bool {
        *self == SlotSet::default()
    }

    /// Slot pairs in canonical order.
    fn fields(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        if let Some(a) = self.action_name {
            out.push(("action_name", a.to_string()));
        }
        if let Some(e) = &self.event_name {
            out.push(("event_name", e.clone()));
        }
        if let Some(t) = &self.event_time {
            out.push(("event_time", t.to_string()));
        }
        if self.event_time_ambiguity.is_some() {
            out.push(("event_time_ambiguity", "am_pm_unknown".into()));
        }
        if !self.event_partner.is_empty() {
            out.push(("event_partner", format!("[{}]", self.event_partner.join(","))));
        }
        if let Some(p) = &self.event_place {
            out.push(("event_place", p.clone()));
        }
        if let Some(t) = &self.new_event_time {
            out.push(("new_event_time", t.to_string()));
        }
        if let Some(p) = &self.new_event_place {
            out.push(("new_event_place", p.clone()));
        }
        out
    }

    /// `[[action_name schedule],[event_name meeting],...]`
    pub fn compact(&self) -> String {
        let parts: Vec<String> = self.fields().into_iter().map(|(k, v)| format!("[{k} {v}]")).collect();
        format!("[{}]", parts.join(","))
    }

    /// The multi-line `***Slots:` block.
    pub fn block(&self) -> String {
        let fields = self.fields();
        let mut s = String::from("***Slots:\n");
        if fields.is_empty() {
            s.push_str("[]\n");
            return s;
        }
        for (i, (k, v)) in fields.iter().enumerate() {
            let lead = if i == 0 { "[  " } else { "   " };
            let tail = if i + 1 == fields.len() { "]" } else { "" };
            s.push_str(&format!("{lead}[  {k} {v}]{tail}\n"));
        }
        s
    }
}

impl fmt::Display for SlotSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.compact())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SemanticError {
    #[error("conflicting values for {slot} in one reading")]
    Conflict { slot: String },
    #[error("{field} {value} is out of range")]
    Range { field: String, value: String },
}

/// Application knowledge: which words mean which calendar operation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainMapping {
    pub actions: BTreeMap<String, Action>,
    /// Action verbs the grammar knows that have no calendar effect.
    pub inert_verbs: BTreeSet<String>,
    pub event_names: BTreeMap<String, String>,
}

impl DomainMapping {
    pub fn calendar() -> DomainMapping {
        let mut actions = BTreeMap::new();
        let table: [(&[&str], Action); 3] = [
            (
                &["schedule", "set_up", "arrange", "book", "plan", "organize", "add", "put"],
                Action::Schedule,
            ),
            (&["cancel", "delete", "remove", "call_off"], Action::Cancel),
            (
                &["move", "postpone", "reschedule", "shift", "change", "push_back"],
                Action::Move,
            ),
        ];
        for (verbs, action) in table {
            for v in verbs {
                actions.insert(v.to_string(), action);
            }
        }
        DomainMapping {
            actions,
            inert_verbs: ["send", "walk", "hit", "see", "know"].iter().map(|s| s.to_string()).collect(),
            event_names: [("appointment", "meeting"), ("appointments", "meeting")]
                .iter()
                .map(|(a, b)| (a.to_string(), b.to_string()))
                .collect(),
        }
    }

    pub fn action_for(&self, verb: &str) -> Option<Action> {
        self.actions.get(verb).copied()
    }

    pub fn event_name(&self, noun: &str) -> String {
        self.event_names.get(noun).cloned().unwrap_or_else(|| noun.to_string())
    }
}

impl Default for DomainMapping {
    fn default() -> Self {
        DomainMapping::calendar()
    }
}

fn today(ctx: &ContextState) -> NaiveDate {
    ctx.today.unwrap_or_else(|| Local::now().date_naive())
}

fn weekday_from(name: &str) -> Option<Weekday> {
    name.parse().ok()
}

fn days_in_month(month: i64, year: Option<i64>) -> i64 {
    match month {
        2 => match year {
            Some(y) if NaiveDate::from_ymd_opt(y as i32, 2, 29).is_none() => 28,
            _ => 29,
        },
        4 | 6 | 9 | 11 => 30,
        _ => 31,
    }
}

fn range_err(field: &str, value: impl fmt::Display) -> SemanticError {
    SemanticError::Range {
        field: field.into(),
        value: value.to_string(),
    }
}

/// Shift a 1..12 hour by a part of the day.
fn apply_day_part(hour: i64, part: &str) -> i64 {
    match part {
        "afternoon" | "evening" if (1..12).contains(&hour) => hour + 12,
        "night" if (6..12).contains(&hour) => hour + 12,
        "night" if hour == 12 => 0,
        _ => hour,
    }
}

/// Turn a raw time denotation (`[[month,8],[day,30]]`, `[[hour,8]]`, ...)
/// into an event time. Weekdays and relative days resolve against the
/// context's today; a bare hour 1..12 is flagged `am_pm_unknown`.
pub fn normalize_time(
    raw: &Message,
    ctx: &ContextState,
) -> Result<(EventTime, Option<Ambiguity>), SemanticError> {
    let mut t = EventTime::default();
    let mut meridiem = None;
    let mut date = None;
    for (attr, value) in &raw.0 {
        match attr.as_str() {
            "meridiem" => meridiem = value.as_sym().map(str::to_string),
            "day_part" => t.day_part = value.as_sym().map(str::to_string),
            "weekday" => {
                let wd = value.as_sym().and_then(weekday_from).ok_or_else(|| range_err("weekday", value))?;
                let base = today(ctx);
                let ahead = (wd.num_days_from_monday() + 7 - base.weekday().num_days_from_monday()) % 7;
                let ahead = if ahead == 0 { 7 } else { ahead };
                date = Some(base + Duration::days(ahead.into()));
            }
            "relative_day" => {
                let n = value.as_num().ok_or_else(|| range_err("relative_day", value))?;
                date = Some(today(ctx) + Duration::days(n));
            }
            field => {
                if let (Some(slot), Some(n)) = (t.slot_mut(field), value.as_num()) {
                    *slot = Some(n);
                }
            }
        }
    }
    if let Some(d) = date {
        t.day = Some(d.day().into());
        t.month = Some(d.month().into());
        t.year = Some(d.year().into());
    }

    if let Some(m) = t.month {
        if !(1..=12).contains(&m) {
            return Err(range_err("month", m));
        }
    }
    if let Some(d) = t.day {
        let max = t.month.map_or(31, |m| days_in_month(m, t.year));
        if !(1..=max).contains(&d) {
            return Err(range_err("day", d));
        }
    }
    for (field, v, hi) in [("hour", t.hour, 23), ("end_hour", t.end_hour, 23), ("minute", t.minute, 59), ("end_minute", t.end_minute, 59)] {
        if let Some(v) = v {
            if !(0..=hi).contains(&v) {
                return Err(range_err(field, v));
            }
        }
    }
    for (field, v) in [("minute", t.minute), ("end_minute", t.end_minute)] {
        if let Some(v) = v {
            if v % MINUTE_STEP != 0 {
                return Err(range_err(field, v));
            }
        }
    }

    let mut ambiguity = None;
    if let Some(h) = t.hour {
        t.minute.get_or_insert(0);
        let shifted = match (meridiem.as_deref(), t.day_part.as_deref()) {
            (Some("pm"), _) if h < 12 => h + 12,
            (Some("am"), _) if h == 12 => 0,
            (Some(_), _) => h,
            (None, Some(part)) => apply_day_part(h, part),
            (None, None) => {
                if (1..=12).contains(&h) {
                    ambiguity = Some(Ambiguity::AmPmUnknown);
                }
                h
            }
        };
        if meridiem.is_some() && !(1..=12).contains(&h) {
            return Err(range_err("hour", h));
        }
        if let Some(e) = t.end_hour.as_mut() {
            if shifted != h && *e < 12 {
                *e += 12;
            }
        }
        t.hour = Some(shifted);
        if ambiguity.is_none() {
            t.day_part = None;
        }
    }
    if t.end_hour.is_some() {
        t.end_minute.get_or_insert(0);
    }
    Ok((t, ambiguity))
}

/// Collects raw time fields across the messages of one reading.
#[derive(Default)]
struct RawTime(Message);

impl RawTime {
    fn absorb(&mut self, den: &Value, slot: &str) -> Result<(), SemanticError> {
        let Value::List(fields) = den else {
            return Ok(());
        };
        for (attr, value) in &fields.0 {
            match self.0.get(attr) {
                Some(existing) if existing != value => {
                    return Err(SemanticError::Conflict {
                        slot: format!("{slot}.{attr}"),
                    })
                }
                Some(_) => {}
                None => self.0.push(attr.clone(), value.clone()),
            }
        }
        Ok(())
    }
}

fn den_symbol(v: &Value) -> Option<&str> {
    match v {
        Value::Sym(s) => Some(s),
        Value::List(m) => m.get("den").and_then(Value::as_sym),
        Value::Num(_) => None,
    }
}

fn set_once<T: PartialEq>(slot: &mut Option<T>, value: T, name: &str) -> Result<(), SemanticError> {
    match slot {
        Some(existing) if *existing != value => Err(SemanticError::Conflict { slot: name.into() }),
        _ => {
            *slot = Some(value);
            Ok(())
        }
    }
}

/// Map one reading to slots.
pub fn interpret(messages: &[Message], ctx: &ContextState, dm: &DomainMapping) -> Result<SlotSet, SemanticError> {
    let mut s = SlotSet::default();
    let mut time = RawTime::default();
    let mut new_time = RawTime::default();

    let event = |s: &mut SlotSet, m: &Message| -> Result<(), SemanticError> {
        match m.get("den").and_then(Value::as_sym) {
            Some("ref") | None => Ok(()),
            Some(noun) => set_once(&mut s.event_name, dm.event_name(noun), "event_name"),
        }
    };

    for m in messages {
        if let Some(verb) = m.get("action").and_then(den_symbol) {
            match dm.action_for(verb) {
                Some(a) => set_once(&mut s.action_name, a, "action_name")?,
                None => log::debug!("verb `{verb}` has no calendar action"),
            }
        }
        if let Some(Value::List(obj)) = m.get("object") {
            if obj.type_name() == Some("event") {
                event(&mut s, obj)?;
            }
        }
        if let Some(tv) = m.get("truth_value").and_then(Value::as_num) {
            set_once(&mut s.truth_value, tv, "truth_value")?;
        }
        if let Some(c) = m.get("choice").and_then(Value::as_num) {
            set_once(&mut s.choice, c, "choice")?;
        }
        let den = m.get("den");
        match (m.type_name(), den) {
            (Some("event"), _) => event(&mut s, m)?,
            (Some("event_time"), Some(d)) => time.absorb(d, "event_time")?,
            (Some("new_event_time"), Some(d)) => new_time.absorb(d, "new_event_time")?,
            (Some("partner" | "person"), Some(d)) => {
                if let Some(name) = den_symbol(d) {
                    if !s.event_partner.iter().any(|p| p == name) {
                        s.event_partner.push(name.to_string());
                    }
                }
            }
            (Some("place"), Some(d)) => {
                if let Some(p) = den_symbol(d) {
                    set_once(&mut s.event_place, p.to_string(), "event_place")?;
                }
            }
            (Some("new_place"), Some(d)) => {
                if let Some(p) = den_symbol(d) {
                    set_once(&mut s.new_event_place, p.to_string(), "new_event_place")?;
                }
            }
            _ => {}
        }
    }
    if !time.0.is_empty() {
        let (t, amb) = normalize_time(&time.0, ctx)?;
        s.event_time = Some(t);
        s.event_time_ambiguity = amb;
    }
    if !new_time.0.is_empty() {
        let (t, _) = normalize_time(&new_time.0, ctx)?;
        s.new_event_time = Some(t);
    }
    Ok(s)
}

fn merge_time(
    acc: Option<EventTime>,
    acc_amb: Option<Ambiguity>,
    new: Option<EventTime>,
    new_amb: Option<Ambiguity>,
    slot: &str,
    corrections: &mut Vec<String>,
) -> (Option<EventTime>, Option<Ambiguity>) {
    let Some(new) = new else { return (acc, acc_amb) };
    let Some(mut t) = acc else { return (Some(new), new_amb) };
    let mut amb = acc_amb;
    let fields = ["minute", "hour", "day", "month", "year", "end_minute", "end_hour"];
    for f in fields {
        let incoming = *new.clone().slot_mut(f).expect("known field");
        let Some(v) = incoming else { continue };
        let cur = t.slot_mut(f).expect("known field");
        if cur.is_some_and(|c| c != v) {
            corrections.push(format!("{slot}.{f}"));
        }
        *cur = Some(v);
    }
    if new.hour.is_some() {
        amb = new_amb;
    }
    if new.day_part.is_some() {
        t.day_part = new.day_part.clone();
    }
    // A part of the day settles a bare hour, whichever turn brought which.
    if let (Some(Ambiguity::AmPmUnknown), Some(part), Some(h)) = (amb, t.day_part.clone(), t.hour) {
        let shifted = apply_day_part(h, &part);
        if let Some(e) = t.end_hour.as_mut() {
            if shifted != h && *e < 12 {
                *e += 12;
            }
        }
        t.hour = Some(shifted);
        t.day_part = None;
        amb = None;
    }
    corrections.dedup();
    (Some(t), amb)
}

fn merge_value<T: PartialEq>(acc: Option<T>, new: Option<T>, slot: &str, corrections: &mut Vec<String>) -> Option<T> {
    match (acc, new) {
        (Some(a), Some(n)) => {
            if a != n {
                corrections.push(slot.to_string());
            }
            Some(n)
        }
        (a, None) => a,
        (None, n) => n,
    }
}

/// Fold a turn's slots into the accumulator. New values fill gaps, a
/// differing restatement wins and is recorded as a correction, partners
/// accumulate.
pub fn merge_slots(acc: &SlotSet, new: &SlotSet) -> SlotSet {
    let mut corrections = acc.corrections.clone();
    let action_name = merge_value(acc.action_name, new.action_name, "action_name", &mut corrections);
    let event_name = merge_value(acc.event_name.clone(), new.event_name.clone(), "event_name", &mut corrections);
    let (event_time, event_time_ambiguity) = merge_time(
        acc.event_time.clone(),
        acc.event_time_ambiguity,
        new.event_time.clone(),
        new.event_time_ambiguity,
        "event_time",
        &mut corrections,
    );
    let (new_event_time, _) = merge_time(
        acc.new_event_time.clone(),
        None,
        new.new_event_time.clone(),
        None,
        "new_event_time",
        &mut corrections,
    );
    let mut event_partner = acc.event_partner.clone();
    for p in &new.event_partner {
        if !event_partner.contains(p) {
            event_partner.push(p.clone());
        }
    }
    let event_place = merge_value(acc.event_place.clone(), new.event_place.clone(), "event_place", &mut corrections);
    let new_event_place = merge_value(
        acc.new_event_place.clone(),
        new.new_event_place.clone(),
        "new_event_place",
        &mut corrections,
    );
    for c in &new.corrections {
        if !corrections.contains(c) {
            corrections.push(c.clone());
        }
    }
    SlotSet {
        action_name,
        event_name,
        event_time,
        event_time_ambiguity,
        event_partner,
        event_place,
        new_event_time,
        new_event_place,
        truth_value: new.truth_value.or(acc.truth_value),
        choice: new.choice.or(acc.choice),
        corrections,
    }
}
