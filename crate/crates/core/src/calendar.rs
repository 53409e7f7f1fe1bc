//! Event store: schedule, cancel and move, with JSONL persistence.

use std::fmt;
use std::fs;
use std::io::{self, BufRead, Write};
use std::path::Path;

use chrono::{Datelike, Duration, NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::semantics::{Action, Ambiguity, EventTime, SlotSet};

pub const DEFAULT_DURATION_MINUTES: i64 = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Start {
    pub year: i32,
    pub month: u32,
    pub day: u32,
    pub hour: u32,
    pub minute: u32,
}

impl Start {
    pub fn datetime(&self) -> Option<NaiveDateTime> {
        NaiveDate::from_ymd_opt(self.year, self.month, self.day)?.and_hms_opt(self.hour, self.minute, 0)
    }

    fn from_datetime(dt: NaiveDateTime) -> Start {
        use chrono::Timelike;
        Start {
            year: dt.year(),
            month: dt.month(),
            day: dt.day(),
            hour: dt.hour(),
            minute: dt.minute(),
        }
    }
}

impl fmt::Display for Start {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.datetime() {
            Some(dt) => write!(f, "{}", dt.format("%b %-d %Y at %H:%M")),
            None => write!(f, "{}-{:02}-{:02} {:02}:{:02}", self.year, self.month, self.day, self.hour, self.minute),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CalendarEvent {
    pub id: String,
    pub name: String,
    pub start: Start,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration_minutes: Option<i64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub partners: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub place: Option<String>,
}

impl CalendarEvent {
    pub fn duration(&self) -> i64 {
        self.duration_minutes.unwrap_or(DEFAULT_DURATION_MINUTES)
    }
}

impl fmt::Display for CalendarEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)?;
        if !self.partners.is_empty() {
            write!(f, " with {}", self.partners.join(" and "))?;
        }
        write!(f, " on {}", self.start)?;
        if let Some(p) = &self.place {
            write!(f, " in {p}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum CalendarError {
    #[error("that time is taken by {0}")]
    Conflict(Box<CalendarEvent>),
    #[error("no matching event")]
    NotFound,
    #[error("{} events match", .0.len())]
    Ambiguous(Vec<CalendarEvent>),
    #[error("cannot {action} without {missing}")]
    Incomplete { action: Action, missing: &'static str },
    #[error("no such date")]
    InvalidDate,
    #[error("store line {line}: {source}")]
    Parse { line: usize, source: serde_json::Error },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Scheduled(CalendarEvent),
    Cancelled(CalendarEvent),
    Moved { before: CalendarEvent, after: CalendarEvent },
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Scheduled(e) => write!(f, "Scheduled: {e}."),
            Outcome::Cancelled(e) => write!(f, "Cancelled: {e}."),
            Outcome::Moved { after, .. } => write!(f, "Moved: {after}."),
        }
    }
}

/// Fill in the year of a partial date: the first occurrence of the date and
/// time at or after `today`.
pub fn resolve_start(t: &EventTime, today: NaiveDate) -> Option<Start> {
    let (month, day, hour) = (t.month?, t.day?, t.hour?);
    let minute = t.minute.unwrap_or(0);
    let at = |year: i64| -> Option<NaiveDateTime> {
        NaiveDate::from_ymd_opt(year as i32, month as u32, day as u32)?.and_hms_opt(hour as u32, minute as u32, 0)
    };
    let dt = match t.year {
        Some(y) => at(y)?,
        None => (0..8)
            .filter_map(|k| at(i64::from(today.year()) + k))
            .find(|dt| dt.date() >= today)?,
    };
    Some(Start::from_datetime(dt))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Calendar {
    pub events: Vec<CalendarEvent>,
    /// Reject scheduling at a start time that is already taken.
    #[serde(skip, default = "yes")]
    pub check_conflicts: bool,
}

fn yes() -> bool {
    true
}

impl Default for Calendar {
    fn default() -> Self {
        Calendar {
            events: Vec::new(),
            check_conflicts: true,
        }
    }
}

fn hour_matches(want: i64, ambiguous: bool, have: u32) -> bool {
    let have = i64::from(have);
    have == want || (ambiguous && (1..12).contains(&want) && have == want + 12)
}

impl Calendar {
    pub fn new() -> Calendar {
        Calendar::default()
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    fn next_id(&self) -> String {
        let max = self
            .events
            .iter()
            .filter_map(|e| e.id.strip_prefix("evt-").and_then(|n| n.parse::<u64>().ok()))
            .max()
            .unwrap_or(0);
        format!("evt-{:04}", max + 1)
    }

    /// Events consistent with every field given in `d`. An hour flagged
    /// am/pm-unknown matches either half of the day.
    pub fn query(&self, d: &SlotSet) -> Vec<&CalendarEvent> {
        let ambiguous = d.event_time_ambiguity == Some(Ambiguity::AmPmUnknown);
        self.events
            .iter()
            .filter(|e| d.event_name.as_ref().is_none_or(|n| *n == e.name))
            .filter(|e| d.event_partner.iter().all(|p| e.partners.contains(p)))
            .filter(|e| d.event_place.as_ref().is_none_or(|p| e.place.as_ref() == Some(p)))
            .filter(|e| {
                let Some(t) = &d.event_time else { return true };
                t.year.is_none_or(|y| y == i64::from(e.start.year))
                    && t.month.is_none_or(|m| m == i64::from(e.start.month))
                    && t.day.is_none_or(|x| x == i64::from(e.start.day))
                    && t.hour.is_none_or(|h| hour_matches(h, ambiguous, e.start.hour))
                    && (t.hour.is_some() || t.minute.is_none_or(|m| m == i64::from(e.start.minute)))
                    && (t.hour.is_none() || t.minute.is_none_or(|m| m == 0 || m == i64::from(e.start.minute)))
            })
            .collect()
    }

    /// The description part of an action: what identifies the target event.
    fn target_of(action: &SlotSet) -> SlotSet {
        SlotSet {
            event_name: action.event_name.clone(),
            event_time: action.event_time.clone(),
            event_time_ambiguity: action.event_time_ambiguity,
            event_partner: action.event_partner.clone(),
            event_place: action.event_place.clone(),
            ..Default::default()
        }
    }

    fn unique(&self, d: &SlotSet) -> Result<usize, CalendarError> {
        let hits = self.query(d);
        match hits.as_slice() {
            [] => Err(CalendarError::NotFound),
            [one] => Ok(self.events.iter().position(|e| e.id == one.id).expect("hit is in store")),
            many => Err(CalendarError::Ambiguous(many.iter().map(|e| (*e).clone()).collect())),
        }
    }

    fn conflict(&self, start: &Start, except: Option<&str>) -> Option<&CalendarEvent> {
        if !self.check_conflicts {
            return None;
        }
        self.events
            .iter()
            .find(|e| e.start == *start && Some(e.id.as_str()) != except)
    }

    /// Carry out a complete action. On error the store is unchanged.
    pub fn apply(&mut self, action: &SlotSet, today: NaiveDate) -> Result<Outcome, CalendarError> {
        match action.action_name {
            None => Err(CalendarError::NotFound),
            Some(Action::Schedule) => {
                let t = action.event_time.as_ref().ok_or(CalendarError::Incomplete {
                    action: Action::Schedule,
                    missing: "a time",
                })?;
                let start = resolve_start(t, today).ok_or(CalendarError::InvalidDate)?;
                if let Some(e) = self.conflict(&start, None) {
                    return Err(CalendarError::Conflict(Box::new(e.clone())));
                }
                let duration = match (t.end_hour, t.hour) {
                    (Some(eh), Some(h)) if eh > h => {
                        Some((eh * 60 + t.end_minute.unwrap_or(0)) - (h * 60 + t.minute.unwrap_or(0)))
                    }
                    _ => None,
                };
                let event = CalendarEvent {
                    id: self.next_id(),
                    name: action.event_name.clone().unwrap_or_else(|| "meeting".into()),
                    start,
                    duration_minutes: duration,
                    partners: action.event_partner.clone(),
                    place: action.event_place.clone(),
                };
                self.events.push(event.clone());
                Ok(Outcome::Scheduled(event))
            }
            Some(Action::Cancel) => {
                let i = self.unique(&Self::target_of(action))?;
                Ok(Outcome::Cancelled(self.events.remove(i)))
            }
            Some(Action::Move) => {
                if action.new_event_time.is_none() && action.new_event_place.is_none() {
                    return Err(CalendarError::Incomplete {
                        action: Action::Move,
                        missing: "a new time or place",
                    });
                }
                let i = self.unique(&Self::target_of(action))?;
                let before = self.events[i].clone();
                let mut after = before.clone();
                if let Some(nt) = &action.new_event_time {
                    after.start = moved_start(&before.start, nt, today).ok_or(CalendarError::InvalidDate)?;
                }
                if let Some(p) = &action.new_event_place {
                    after.place = Some(p.clone());
                }
                if let Some(e) = self.conflict(&after.start, Some(&before.id)) {
                    return Err(CalendarError::Conflict(Box::new(e.clone())));
                }
                self.events[i] = after.clone();
                Ok(Outcome::Moved { before, after })
            }
        }
    }

    pub fn load(path: &Path) -> Result<Calendar, CalendarError> {
        let file = match fs::File::open(path) {
            Ok(f) => f,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Calendar::new()),
            Err(e) => return Err(e.into()),
        };
        let mut cal = Calendar::new();
        for (i, line) in io::BufReader::new(file).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let event = serde_json::from_str(&line).map_err(|source| CalendarError::Parse { line: i + 1, source })?;
            cal.events.push(event);
        }
        Ok(cal)
    }

    pub fn save(&self, path: &Path) -> Result<(), CalendarError> {
        let mut out = io::BufWriter::new(fs::File::create(path)?);
        for e in &self.events {
            serde_json::to_writer(&mut out, e).map_err(io::Error::from)?;
            out.write_all(b"\n")?;
        }
        out.flush()?;
        Ok(())
    }

    /// Best-effort iCalendar rendering.
    pub fn to_ical(&self) -> String {
        let mut lines = vec![
            "BEGIN:VCALENDAR".to_string(),
            "VERSION:2.0".to_string(),
            "PRODID:-//construe//calendar//EN".to_string(),
        ];
        for e in &self.events {
            let Some(start) = e.start.datetime() else { continue };
            let end = start + Duration::minutes(e.duration());
            lines.push("BEGIN:VEVENT".into());
            lines.push(format!("UID:{}@construe", e.id));
            lines.push(format!("DTSTART:{}", start.format("%Y%m%dT%H%M%S")));
            lines.push(format!("DTEND:{}", end.format("%Y%m%dT%H%M%S")));
            let mut summary = e.name.clone();
            if !e.partners.is_empty() {
                summary.push_str(&format!(" with {}", e.partners.join(", ")));
            }
            lines.push(format!("SUMMARY:{}", ical_escape(&summary)));
            if let Some(p) = &e.place {
                lines.push(format!("LOCATION:{}", ical_escape(p)));
            }
            lines.push("END:VEVENT".into());
        }
        lines.push("END:VCALENDAR".into());
        lines.join("\r\n") + "\r\n"
    }
}

fn ical_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace(';', "\\;").replace(',', "\\,")
}

fn moved_start(old: &Start, nt: &EventTime, today: NaiveDate) -> Option<Start> {
    let merged = EventTime {
        minute: nt.minute.or(if nt.hour.is_some() { Some(0) } else { Some(old.minute.into()) }),
        hour: nt.hour.or(Some(old.hour.into())),
        day: nt.day.or(Some(old.day.into())),
        month: nt.month.or(Some(old.month.into())),
        year: nt.year.or(if nt.month.is_some() { None } else { Some(old.year.into()) }),
        ..Default::default()
    };
    resolve_start(&merged, today)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn today() -> NaiveDate {
        NaiveDate::from_ymd_opt(2026, 10, 15).unwrap()
    }

    fn at(hour: i64, day: i64, month: i64) -> EventTime {
        EventTime {
            minute: Some(0),
            hour: Some(hour),
            day: Some(day),
            month: Some(month),
            ..Default::default()
        }
    }

    fn schedule(name: &str, t: EventTime, partner: &str) -> SlotSet {
        SlotSet {
            action_name: Some(Action::Schedule),
            event_name: Some(name.into()),
            event_time: Some(t),
            event_partner: vec![partner.into()],
            ..Default::default()
        }
    }

    #[test]
    fn missing_year_is_the_next_occurrence() {
        let s = resolve_start(&at(20, 30, 8), today()).unwrap();
        assert_eq!((s.year, s.month, s.day, s.hour), (2027, 8, 30, 20));
        let s = resolve_start(&at(9, 11, 11), today()).unwrap();
        assert_eq!(s.year, 2026);
        assert!(resolve_start(&at(9, 30, 2), today()).is_none());
    }

    #[test]
    fn schedule_conflict_cancel() {
        let mut cal = Calendar::new();
        let out = cal.apply(&schedule("meeting", at(20, 30, 8), "bob"), today()).unwrap();
        assert!(matches!(&out, Outcome::Scheduled(e) if e.id == "evt-0001"));
        assert!(matches!(
            cal.apply(&schedule("lunch", at(20, 30, 8), "ann"), today()),
            Err(CalendarError::Conflict(_))
        ));
        cal.check_conflicts = false;
        cal.apply(&schedule("lunch", at(20, 30, 8), "ann"), today()).unwrap();
        assert_eq!(cal.len(), 2);

        let cancel = SlotSet {
            action_name: Some(Action::Cancel),
            event_time: Some(at(20, 30, 8)),
            ..Default::default()
        };
        assert!(matches!(cal.apply(&cancel, today()), Err(CalendarError::Ambiguous(v)) if v.len() == 2));
        let cancel_lunch = SlotSet {
            event_name: Some("lunch".into()),
            ..cancel
        };
        assert!(matches!(cal.apply(&cancel_lunch, today()), Ok(Outcome::Cancelled(e)) if e.name == "lunch"));
        assert!(matches!(Calendar::new().apply(&cancel_lunch, today()), Err(CalendarError::NotFound)));
    }

    #[test]
    fn move_the_ten_oclock_interview_to_monday() {
        let mut cal = Calendar::new();
        cal.apply(&schedule("interview", at(10, 16, 10), "ann"), today()).unwrap();
        let mv = SlotSet {
            action_name: Some(Action::Move),
            event_name: Some("interview".into()),
            event_time: Some(EventTime {
                hour: Some(10),
                minute: Some(0),
                ..Default::default()
            }),
            event_time_ambiguity: Some(Ambiguity::AmPmUnknown),
            new_event_time: Some(EventTime {
                day: Some(19),
                month: Some(10),
                year: Some(2026),
                ..Default::default()
            }),
            ..Default::default()
        };
        let Outcome::Moved { before, after } = cal.apply(&mv, today()).unwrap() else { panic!() };
        assert_eq!(before.id, after.id);
        assert_eq!((after.start.day, after.start.hour), (19, 10));
    }

    #[test]
    fn query_examples() {
        let mut cal = Calendar::new();
        cal.apply(&schedule("interview", at(10, 16, 10), "ann"), today()).unwrap();
        let q = SlotSet {
            event_name: Some("interview".into()),
            event_time: Some(EventTime {
                hour: Some(10),
                ..Default::default()
            }),
            ..Default::default()
        };
        assert_eq!(cal.query(&q).len(), 1);
        assert_eq!(cal.query(&SlotSet::default()).len(), 1);
        let impossible = SlotSet {
            event_time: Some(EventTime {
                day: Some(30),
                month: Some(2),
                ..Default::default()
            }),
            ..Default::default()
        };
        assert!(cal.query(&impossible).is_empty());
    }

    #[test]
    fn ical_has_one_vevent_per_event() {
        let mut cal = Calendar::new();
        cal.apply(&schedule("meeting", at(20, 30, 8), "bob"), today()).unwrap();
        let ics = cal.to_ical();
        assert!(ics.contains("DTSTART:20270830T200000\r\n"));
        assert!(ics.contains("DTEND:20270830T210000\r\n"));
        assert!(ics.contains("SUMMARY:meeting with bob\r\n"));
        assert_eq!(ics.matches("BEGIN:VEVENT").count(), 1);
    }
}
