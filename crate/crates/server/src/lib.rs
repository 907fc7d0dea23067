//! HTTP chat service: people converse with a trained agent through
//! structured dialogue acts and rate the finished session.

pub mod store;
pub mod templates;

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use hdm_core::agents::{render_action, HrlCursor, PolicySnapshot};
use hdm_core::critic::IntrinsicSpec;
use hdm_core::domain::{DialogueAct, Intent, SlotName, Speaker, SubtaskId, UserGoal};
use hdm_core::kb::Kb;
use hdm_core::tracker::DialogueState;
use parking_lot::{Mutex, RwLock};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::store::{now_ms, Record, Store, TranscriptEntry};
use crate::templates::{slot_label, TemplateTable};

pub const OPENING: &str = "Hello! I can book a flight and a hotel for your trip. How can I help?";

#[derive(Debug, thiserror::Error)]
pub enum ApiError {
    #[error("unknown agent `{0}`")]
    UnknownAgent(String),
    #[error("no session `{0}`")]
    SessionNotFound(String),
    #[error("session is closed")]
    SessionClosed,
    #[error("{0}")]
    ParseError(String),
    #[error("{0}")]
    OutOfRange(String),
    #[error("session already rated")]
    AlreadyRated,
    #[error("session is still open")]
    SessionOpen,
    #[error("internal error: {0}")]
    Internal(String),
}

impl ApiError {
    pub fn code(&self) -> &'static str {
        match self {
            ApiError::UnknownAgent(_) => "UnknownAgent",
            ApiError::SessionNotFound(_) => "SessionNotFound",
            ApiError::SessionClosed => "SessionClosed",
            ApiError::ParseError(_) => "ParseError",
            ApiError::OutOfRange(_) => "OutOfRange",
            ApiError::AlreadyRated => "AlreadyRated",
            ApiError::SessionOpen => "SessionOpen",
            ApiError::Internal(_) => "Internal",
        }
    }

    pub fn status(&self) -> StatusCode {
        match self {
            ApiError::UnknownAgent(_) | ApiError::SessionNotFound(_) => StatusCode::NOT_FOUND,
            ApiError::SessionClosed | ApiError::AlreadyRated | ApiError::SessionOpen => StatusCode::CONFLICT,
            ApiError::ParseError(_) => StatusCode::BAD_REQUEST,
            ApiError::OutOfRange(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ApiError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub code: String,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            error: self.to_string(),
            code: self.code().to_string(),
        };
        (self.status(), Json(body)).into_response()
    }
}

impl From<std::io::Error> for ApiError {
    fn from(e: std::io::Error) -> Self {
        ApiError::Internal(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SessionStatus {
    Open,
    Closed,
}

#[derive(Debug)]
pub struct Session {
    pub id: String,
    pub agent: String,
    pub goal: UserGoal,
    pub state: DialogueState,
    pub cursor: HrlCursor,
    pub transcript: Vec<TranscriptEntry>,
    pub status: SessionStatus,
    pub rating: Option<u8>,
    pub agent_turns: usize,
}

pub struct ServiceConfig {
    pub max_turn: usize,
    pub intrinsic: IntrinsicSpec,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            max_turn: 60,
            intrinsic: IntrinsicSpec::default(),
        }
    }
}

pub struct AppState {
    agents: BTreeMap<String, Arc<PolicySnapshot>>,
    kb: Arc<Kb>,
    goals: Vec<UserGoal>,
    templates: TemplateTable,
    sessions: RwLock<HashMap<String, Arc<Mutex<Session>>>>,
    store: Store,
    config: ServiceConfig,
}

impl AppState {
    pub fn new(
        agents: BTreeMap<String, PolicySnapshot>,
        kb: Kb,
        goals: Vec<UserGoal>,
        store: Store,
        config: ServiceConfig,
    ) -> Self {
        AppState {
            agents: agents.into_iter().map(|(k, v)| (k, Arc::new(v))).collect(),
            kb: Arc::new(kb),
            goals,
            templates: TemplateTable::default(),
            sessions: RwLock::new(HashMap::new()),
            store,
            config,
        }
    }

    pub fn kb(&self) -> &Kb {
        &self.kb
    }

    pub fn agent_names(&self) -> impl Iterator<Item = &str> {
        self.agents.keys().map(String::as_str)
    }

    fn session(&self, id: &str) -> Result<Arc<Mutex<Session>>, ApiError> {
        self.sessions
            .read()
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::SessionNotFound(id.to_string()))
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/acts", post(post_act))
        .route("/sessions/{id}/rating", post(post_rating))
        .route("/sessions/{id}/transcript", get(get_transcript))
        .with_state(state)
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateRequest {
    #[serde(default)]
    pub agent: Option<String>,
    /// Index into the service's goal corpus; random when absent.
    #[serde(default)]
    pub goal: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CardSlot {
    pub slot: SlotName,
    pub label: String,
    pub values: Vec<String>,
    pub soft: bool,
}

/// What the person is asked to achieve, in displayable form.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GoalCard {
    pub informs: Vec<CardSlot>,
    pub requests: Vec<CardSlot>,
    pub first_subtask: Option<SubtaskId>,
}

impl GoalCard {
    pub fn from_goal(goal: &UserGoal) -> Self {
        let informs = goal
            .inform
            .iter()
            .map(|(slot, values)| CardSlot {
                slot: *slot,
                label: slot_label(*slot).to_string(),
                values: values.clone(),
                soft: values.len() > 1,
            })
            .collect();
        let requests = goal
            .request
            .iter()
            .map(|&slot| CardSlot {
                slot,
                label: slot_label(slot).to_string(),
                values: vec![],
                soft: false,
            })
            .collect();
        GoalCard {
            informs,
            requests,
            first_subtask: goal.preferred_first_subtask,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CreateResponse {
    pub session_id: String,
    pub agent: String,
    pub goal: UserGoal,
    pub card: GoalCard,
    pub opening: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ActResponse {
    pub agent_act: DialogueAct,
    pub text: String,
    pub done: bool,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RatingRequest {
    pub rating: i64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RatingResponse {
    pub session_id: String,
    pub rating: u8,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TranscriptResponse {
    pub session_id: String,
    pub agent: String,
    pub goal: UserGoal,
    pub status: SessionStatus,
    pub rating: Option<u8>,
    pub agent_turns: usize,
    pub turns: Vec<TranscriptEntry>,
    pub state: serde_json::Value,
}

fn parse_json<T: serde::de::DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::ParseError(e.to_string()))
}

async fn create_session(State(app): State<Arc<AppState>>, body: Bytes) -> Result<Json<CreateResponse>, ApiError> {
    let req: CreateRequest = if body.iter().all(u8::is_ascii_whitespace) {
        CreateRequest::default()
    } else {
        parse_json(&body)?
    };
    let (agent, goal) = {
        let mut rng = rand::thread_rng();
        let agent = match req.agent {
            Some(name) if app.agents.contains_key(&name) => name,
            Some(name) => return Err(ApiError::UnknownAgent(name)),
            None => app
                .agents
                .keys()
                .collect::<Vec<_>>()
                .choose(&mut rng)
                .map(|s| s.to_string())
                .ok_or_else(|| ApiError::UnknownAgent("<none loaded>".into()))?,
        };
        if app.goals.is_empty() {
            return Err(ApiError::Internal("no goals loaded".into()));
        }
        let index = match req.goal {
            Some(i) if i < app.goals.len() => i,
            Some(i) => {
                return Err(ApiError::OutOfRange(format!(
                    "goal {i} is outside 0..{}",
                    app.goals.len()
                )))
            }
            None => rng.gen_range(0..app.goals.len()),
        };
        (agent, app.goals[index].clone())
    };
    let id = uuid::Uuid::new_v4().simple().to_string();
    let session = Session {
        id: id.clone(),
        agent: agent.clone(),
        goal: goal.clone(),
        state: DialogueState::new(&app.kb, app.config.max_turn),
        cursor: HrlCursor::default(),
        transcript: Vec::new(),
        status: SessionStatus::Open,
        rating: None,
        agent_turns: 0,
    };
    app.store.append(&Record::Created {
        session_id: id.clone(),
        agent: agent.clone(),
        goal: goal.clone(),
        at: now_ms(),
    })?;
    app.sessions.write().insert(id.clone(), Arc::new(Mutex::new(session)));
    Ok(Json(CreateResponse {
        session_id: id,
        agent,
        card: GoalCard::from_goal(&goal),
        goal,
        opening: OPENING.to_string(),
    }))
}

fn record_turn(app: &AppState, session: &mut Session, act: DialogueAct) -> Result<String, ApiError> {
    let text = app.templates.render(&act);
    let entry = TranscriptEntry {
        speaker: act.speaker,
        act,
        text: text.clone(),
        at: now_ms(),
    };
    app.store.append(&Record::Turn {
        session_id: session.id.clone(),
        entry: entry.clone(),
    })?;
    session.transcript.push(entry);
    Ok(text)
}

async fn post_act(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<ActResponse>, ApiError> {
    let handle = app.session(&id)?;
    let mut session = handle.lock();
    if session.status == SessionStatus::Closed {
        return Err(ApiError::SessionClosed);
    }
    let act: DialogueAct = parse_json(&body)?;
    if act.speaker != Speaker::User {
        return Err(ApiError::ParseError("acts posted to a session must have speaker \"user\"".into()));
    }
    act.validate_values().map_err(|e| ApiError::ParseError(e.to_string()))?;
    session
        .state
        .apply(&act, &app.kb)
        .map_err(|e| ApiError::ParseError(e.to_string()))?;
    let user_closing = act.intent == Intent::Closing;
    record_turn(&app, &mut session, act)?;

    let agent_act = if user_closing {
        DialogueAct::new(Speaker::Agent, Intent::Closing)
    } else {
        let policy = app.agents[&session.agent].clone();
        let Session { state, cursor, .. } = &mut *session;
        let action = policy.act(state, cursor, None, &app.config.intrinsic);
        render_action(action, state, &app.kb)
    };
    session
        .state
        .apply(&agent_act, &app.kb)
        .map_err(|e| ApiError::Internal(e.to_string()))?;
    session.agent_turns += 1;
    let done = user_closing || agent_act.intent == Intent::Closing || session.agent_turns >= app.config.max_turn;
    let text = record_turn(&app, &mut session, agent_act.clone())?;
    if done {
        session.status = SessionStatus::Closed;
        app.store.append(&Record::Closed {
            session_id: session.id.clone(),
            at: now_ms(),
        })?;
    }
    Ok(Json(ActResponse { agent_act, text, done }))
}

async fn post_rating(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<RatingResponse>, ApiError> {
    let handle = app.session(&id)?;
    let mut session = handle.lock();
    let req: RatingRequest = parse_json(&body)?;
    if !(1..=5).contains(&req.rating) {
        return Err(ApiError::OutOfRange(format!("rating {} is outside 1..=5", req.rating)));
    }
    if session.status == SessionStatus::Open {
        return Err(ApiError::SessionOpen);
    }
    if session.rating.is_some() {
        return Err(ApiError::AlreadyRated);
    }
    let rating = req.rating as u8;
    app.store.append(&Record::Rated {
        session_id: session.id.clone(),
        rating,
        transcript: session.transcript.clone(),
        at: now_ms(),
    })?;
    session.rating = Some(rating);
    Ok(Json(RatingResponse { session_id: id, rating }))
}

async fn get_transcript(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<Json<TranscriptResponse>, ApiError> {
    let handle = app.session(&id)?;
    let session = handle.lock();
    let state = serde_json::to_value(&session.state).map_err(|e| ApiError::Internal(e.to_string()))?;
    Ok(Json(TranscriptResponse {
        session_id: session.id.clone(),
        agent: session.agent.clone(),
        goal: session.goal.clone(),
        status: session.status,
        rating: session.rating,
        agent_turns: session.agent_turns,
        turns: session.transcript.clone(),
        state,
    }))
}

/// Rebuilds the tracker state from a transcript.
pub fn replay(turns: &[TranscriptEntry], kb: &Kb, max_turn: usize) -> hdm_core::Result<DialogueState> {
    let mut state = DialogueState::new(kb, max_turn);
    for t in turns {
        state.apply(&t.act, kb)?;
    }
    Ok(state)
}

/// Binds and serves until the process is stopped.
pub async fn serve(app: Arc<AppState>, addr: std::net::SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(app)).await
}
