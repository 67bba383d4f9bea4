//! HTTP front end for exploration sessions.
//!
//! Every session is owned by a single writer: interaction posts and ticks
//! take the session lock, snapshot reads copy what they need under the same
//! lock, so a reader never observes a half-applied tick. Events produced by
//! ticks are fanned out to `/events` subscribers over a broadcast channel.

use std::collections::HashMap;
use std::convert::Infallible;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock, Weak};
use std::time::Duration;

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::Stream;
use museum_core::data_space::{Catalog, Dimension};
use museum_core::params::Params;
use museum_core::session::{ClockMode, Session, SessionError, SessionEvent, UserEvent};
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;
use tokio::sync::broadcast;
use tracing::{debug, warn};

/// Buffered events per session before slow subscribers start lagging.
const EVENT_BUFFER: usize = 1024;

#[derive(Debug, Error)]
pub enum ApiError {
    #[error("no session `{0}`")]
    NoSession(String),
    #[error("session `{0}` already exists")]
    Conflict(String),
    #[error("{0}")]
    BadRequest(String),
    #[error(transparent)]
    Session(#[from] SessionError),
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match &self {
            ApiError::NoSession(_) => StatusCode::NOT_FOUND,
            ApiError::Conflict(_) => StatusCode::CONFLICT,
            ApiError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ApiError::Session(e) => match e {
                SessionError::UnknownRoom(_) => StatusCode::NOT_FOUND,
                SessionError::NotLogical => StatusCode::CONFLICT,
                SessionError::Version { .. } | SessionError::Corrupt(_) | SessionError::CatalogMismatch => {
                    StatusCode::UNPROCESSABLE_ENTITY
                }
                _ => StatusCode::BAD_REQUEST,
            },
        };
        (status, Json(json!({ "error": self.to_string() }))).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

struct Live {
    session: Mutex<Session>,
    events: broadcast::Sender<SessionEvent>,
}

impl Live {
    fn new(session: Session) -> Arc<Live> {
        let (events, _) = broadcast::channel(EVENT_BUFFER);
        Arc::new(Live {
            session: Mutex::new(session),
            events,
        })
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, Session> {
        self.session.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
    }

    fn publish(&self, events: &[SessionEvent]) {
        for e in events {
            // no subscribers is fine
            let _ = self.events.send(e.clone());
        }
    }
}

/// Shared server state: one catalog, one parameter set, many sessions.
#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

struct Inner {
    catalog: Arc<Catalog>,
    params: Params,
    default_mode: ClockMode,
    sessions: RwLock<HashMap<String, Arc<Live>>>,
    next_id: AtomicU64,
}

impl AppState {
    pub fn new(catalog: Arc<Catalog>, params: Params, default_mode: ClockMode) -> AppState {
        AppState {
            inner: Arc::new(Inner {
                catalog,
                params,
                default_mode,
                sessions: RwLock::new(HashMap::new()),
                next_id: AtomicU64::new(1),
            }),
        }
    }

    fn get(&self, id: &str) -> Result<Arc<Live>, ApiError> {
        self.inner
            .sessions
            .read()
            .unwrap_or_else(|p| p.into_inner())
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::NoSession(id.to_string()))
    }

    fn insert(&self, session: Session) -> Result<Arc<Live>, ApiError> {
        let id = session.id().to_string();
        let realtime = session.mode() == ClockMode::RealTime;
        let live = Live::new(session);
        {
            let mut sessions = self.inner.sessions.write().unwrap_or_else(|p| p.into_inner());
            if sessions.contains_key(&id) {
                return Err(ApiError::Conflict(id));
            }
            sessions.insert(id.clone(), live.clone());
        }
        if realtime {
            tokio::spawn(run_clock(Arc::downgrade(&live)));
        }
        debug!(session = %id, realtime, "session created");
        Ok(live)
    }
}

/// Ticks a real-time session once per second until it is dropped.
async fn run_clock(live: Weak<Live>) {
    let mut interval = tokio::time::interval(Duration::from_secs(1));
    interval.tick().await;
    loop {
        interval.tick().await;
        let Some(live) = live.upgrade() else { break };
        let mut session = live.lock();
        let events = session.tick();
        live.publish(&events);
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    pub mode: Option<ClockMode>,
    pub seed: Option<u64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SessionInfo {
    pub id: String,
    pub mode: ClockMode,
    pub seed: u64,
    pub clock: f64,
    pub user_room: String,
}

fn info(s: &Session) -> SessionInfo {
    SessionInfo {
        id: s.id().to_string(),
        mode: s.mode(),
        seed: s.seed(),
        clock: s.clock(),
        user_room: s.user_room().to_string(),
    }
}

async fn create_session(
    State(app): State<AppState>,
    body: Option<Json<CreateSession>>,
) -> Result<(StatusCode, Json<SessionInfo>), ApiError> {
    let req = body.map(|Json(b)| b).unwrap_or_default();
    let n = app.inner.next_id.fetch_add(1, Ordering::Relaxed);
    let session = Session::new(
        format!("s{n}"),
        app.inner.catalog.clone(),
        app.inner.params.clone(),
        req.mode.unwrap_or(app.inner.default_mode),
        req.seed.unwrap_or(n),
    )?;
    let live = app.insert(session)?;
    let body = info(&live.lock());
    Ok((StatusCode::CREATED, Json(body)))
}

async fn delete_session(State(app): State<AppState>, Path(id): Path<String>) -> Result<StatusCode, ApiError> {
    let removed = app
        .inner
        .sessions
        .write()
        .unwrap_or_else(|p| p.into_inner())
        .remove(&id);
    removed.map(|_| StatusCode::NO_CONTENT).ok_or(ApiError::NoSession(id))
}

async fn post_interaction(
    State(app): State<AppState>,
    Path(id): Path<String>,
    Json(event): Json<UserEvent>,
) -> ApiResult<museum_core::session::Ack> {
    let live = app.get(&id)?;
    let ack = live.lock().post(event)?;
    Ok(Json(ack))
}

#[derive(Debug, Deserialize)]
pub struct TickQuery {
    pub n: Option<u64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TickResponse {
    pub clock: f64,
    pub events: Vec<SessionEvent>,
}

async fn post_ticks(
    State(app): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<TickQuery>,
) -> ApiResult<TickResponse> {
    let live = app.get(&id)?;
    let (clock, events) = {
        let mut s = live.lock();
        let events = s.advance_clock(q.n.unwrap_or(1))?;
        live.publish(&events);
        (s.clock(), events)
    };
    Ok(Json(TickResponse { clock, events }))
}

async fn get_session(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<SessionInfo> {
    let live = app.get(&id)?;
    let body = info(&live.lock());
    Ok(Json(body))
}

async fn get_museum(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<serde_json::Value> {
    let live = app.get(&id)?;
    let s = live.lock();
    Ok(Json(json!({
        "clock": s.clock(),
        "user_room": s.user_room(),
        "museum": s.museum(),
    })))
}

async fn get_room(
    State(app): State<AppState>,
    Path((id, room)): Path<(String, String)>,
) -> ApiResult<museum_core::session::RoomSnapshot> {
    let live = app.get(&id)?;
    let room = live.lock().room(&room)?;
    Ok(Json(room))
}

#[derive(Debug, Deserialize)]
pub struct RelevanceQuery {
    pub dimension: Option<String>,
}

async fn get_relevance(
    State(app): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<RelevanceQuery>,
) -> ApiResult<serde_json::Value> {
    let dimension: Option<Dimension> = q
        .dimension
        .as_deref()
        .map(str::parse)
        .transpose()
        .map_err(ApiError::BadRequest)?;
    let live = app.get(&id)?;
    let s = live.lock();
    Ok(Json(json!({
        "clock": s.clock(),
        "entries": s.relevance_overlay(dimension),
    })))
}

async fn get_basket(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<serde_json::Value> {
    let live = app.get(&id)?;
    let s = live.lock();
    Ok(Json(json!({ "basket": s.basket() })))
}

async fn export_session(State(app): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let live = app.get(&id)?;
    let text = live.lock().save();
    Ok(([(axum::http::header::CONTENT_TYPE, "application/json")], text).into_response())
}

async fn import_session(
    State(app): State<AppState>,
    body: String,
) -> Result<(StatusCode, Json<SessionInfo>), ApiError> {
    let session = Session::load(&body, app.inner.catalog.clone())?;
    let live = app.insert(session)?;
    let body = info(&live.lock());
    Ok((StatusCode::CREATED, Json(body)))
}

fn event_name(e: &SessionEvent) -> &'static str {
    match e {
        SessionEvent::RoomSpawned { .. } => "RoomSpawned",
        SessionEvent::DoorOpened { .. } => "DoorOpened",
        SessionEvent::RelevanceUpdated { .. } => "RelevanceUpdated",
    }
}

async fn events(
    State(app): State<AppState>,
    Path(id): Path<String>,
) -> Result<Sse<impl Stream<Item = Result<Event, Infallible>>>, ApiError> {
    let rx = app.get(&id)?.events.subscribe();
    let stream = futures::stream::unfold(rx, |mut rx| async move {
        let event = match rx.recv().await {
            Ok(e) => {
                let data = serde_json::to_string(&e).expect("events serialize");
                Event::default().event(event_name(&e)).data(data)
            }
            Err(broadcast::error::RecvError::Lagged(n)) => {
                warn!(missed = n, "event subscriber lagging");
                Event::default().event("Lagged").data(n.to_string())
            }
            Err(broadcast::error::RecvError::Closed) => return None,
        };
        Some((Ok(event), rx))
    });
    Ok(Sse::new(stream).keep_alive(KeepAlive::default()))
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/import", post(import_session))
        .route("/sessions/{id}", get(get_session).delete(delete_session))
        .route("/sessions/{id}/interactions", post(post_interaction))
        .route("/sessions/{id}/ticks", post(post_ticks))
        .route("/sessions/{id}/museum", get(get_museum))
        .route("/sessions/{id}/rooms/{rid}", get(get_room))
        .route("/sessions/{id}/relevance", get(get_relevance))
        .route("/sessions/{id}/basket", get(get_basket))
        .route("/sessions/{id}/events", get(events))
        .route("/sessions/{id}/export", get(export_session))
        .with_state(state)
}
