//! JSON-over-HTTP session service.
//!
//! ```text
//! POST /sessions                     -> {id, created_at, today}
//! POST /sessions/{id}/turns          {"utterance": "..."} -> {reply, act, slots, slot_block, trace?}
//! GET  /sessions/{id}/transcript     -> {lines, slot_block, text}
//! GET  /sessions/{id}/calendar       -> {events}
//! ```

use std::collections::HashMap;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::{DateTime, NaiveDate, Utc};
use construe::calendar::CalendarEvent;
use construe::dialogue::{DialogAct, Session, TranscriptLine};
use construe::semantics::SlotSet;
use construe::Grammar;
use serde::{Deserialize, Serialize};
use tokio::sync::{Mutex, RwLock};

use crate::Config;

struct Entry {
    created_at: DateTime<Utc>,
    session: Arc<Mutex<Session>>,
}

#[derive(Clone)]
pub struct AppState {
    config: Arc<Config>,
    grammar: Arc<Grammar>,
    sessions: Arc<RwLock<HashMap<String, Entry>>>,
}

impl AppState {
    pub fn new(config: Config, grammar: Arc<Grammar>) -> AppState {
        AppState {
            config: Arc::new(config),
            grammar,
            sessions: Arc::default(),
        }
    }
}

#[derive(Debug)]
pub enum ApiError {
    NotFound(String),
    BadRequest(String),
    Internal(String),
}

#[derive(Serialize)]
struct ErrorBody {
    error: String,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, error) = match self {
            ApiError::NotFound(m) => (StatusCode::NOT_FOUND, m),
            ApiError::BadRequest(m) => (StatusCode::BAD_REQUEST, m),
            ApiError::Internal(m) => (StatusCode::INTERNAL_SERVER_ERROR, m),
        };
        (status, Json(ErrorBody { error })).into_response()
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        ApiError::BadRequest(r.body_text())
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Created {
    pub id: String,
    pub created_at: DateTime<Utc>,
    pub today: NaiveDate,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TurnRequest {
    pub utterance: String,
    /// Overrides the service-wide trace setting for this turn.
    #[serde(default)]
    pub trace: Option<bool>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TurnResponse {
    pub reply: String,
    pub act: DialogAct,
    pub slots: SlotSet,
    pub slot_block: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<String>>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Transcript {
    pub lines: Vec<TranscriptLine>,
    pub slot_block: String,
    pub text: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Events {
    pub events: Vec<CalendarEvent>,
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/turns", post(post_turn))
        .route("/sessions/{id}/transcript", get(get_transcript))
        .route("/sessions/{id}/calendar", get(get_calendar))
        .with_state(state)
}

async fn lookup(state: &AppState, id: &str) -> Result<Arc<Mutex<Session>>, ApiError> {
    state
        .sessions
        .read()
        .await
        .get(id)
        .map(|e| e.session.clone())
        .ok_or_else(|| ApiError::NotFound(format!("no session {id}")))
}

async fn create_session(State(state): State<AppState>) -> Result<(StatusCode, Json<Created>), ApiError> {
    let session = state
        .config
        .session(state.grammar.clone())
        .map_err(|e| ApiError::Internal(format!("{e:#}")))?;
    let today = session.today();
    let id = uuid::Uuid::new_v4().simple().to_string();
    let created_at = Utc::now();
    state.sessions.write().await.insert(
        id.clone(),
        Entry {
            created_at,
            session: Arc::new(Mutex::new(session)),
        },
    );
    log::info!("created session {id}");
    Ok((StatusCode::CREATED, Json(Created { id, created_at, today })))
}

async fn post_turn(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<TurnRequest>, JsonRejection>,
) -> Result<Json<TurnResponse>, ApiError> {
    let session = lookup(&state, &id).await?;
    let Json(req) = body?;
    // The per-session mutex is fair, so turns run in arrival order.
    let mut s = session.lock().await;
    let r = s.run_turn(&req.utterance);
    let trace = req.trace.unwrap_or(state.config.trace).then(|| r.parse.trace_lines());
    Ok(Json(TurnResponse {
        reply: r.reply.text.clone(),
        slot_block: r.slots.block(),
        slots: r.slots,
        act: r.reply,
        trace,
    }))
}

async fn get_transcript(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<Transcript>, ApiError> {
    let session = lookup(&state, &id).await?;
    let s = session.lock().await;
    Ok(Json(Transcript {
        lines: s.transcript.clone(),
        slot_block: s.acc.block(),
        text: s.transcript_text(),
    }))
}

async fn get_calendar(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<Events>, ApiError> {
    let session = lookup(&state, &id).await?;
    let s = session.lock().await;
    Ok(Json(Events {
        events: s.calendar.events.clone(),
    }))
}

/// Number of live sessions and the oldest creation time, for logging.
pub async fn stats(state: &AppState) -> (usize, Option<DateTime<Utc>>) {
    let sessions = state.sessions.read().await;
    (sessions.len(), sessions.values().map(|e| e.created_at).min())
}

pub async fn serve(config: Config, addr: &str) -> anyhow::Result<()> {
    let grammar = config.load_grammar()?;
    let state = AppState::new(config, grammar);
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    let app = router(state.clone());
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    let (n, _) = stats(&state).await;
    log::info!("shut down with {n} session(s)");
    Ok(())
}
