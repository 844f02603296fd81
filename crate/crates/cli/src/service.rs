//! HTTP session API over a trained model.
//!
//! Sessions live in memory and are evicted after `ttl` without activity.
//! The model and corpus are shared read-only; each session is guarded by
//! its own lock and a request that finds it held gets 409.

use std::collections::{BTreeSet, HashMap};
use std::net::SocketAddr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, TryLockError};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use avlem::conversation::{
    advance_session, select_questions, Answer, AvlemRanker, Question, SessionState, Strategy,
};
use avlem::corpus::Corpus;
use avlem::model::{FeedbackUse, Model};
use avlem::{ItemId, UserId};

/// The published response and request schemas.
pub const SCHEMA: &str = include_str!("../schema/api.json");

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    /// Questions per iteration.
    pub m: usize,
    /// Items shown per session.
    pub iterations: usize,
    /// Unknown or absent users fall back to the mean user embedding.
    pub anonymous: bool,
    pub ttl_secs: u64,
    pub strategy: Strategy,
    pub feedback: FeedbackUse,
    pub seed: u64,
    pub port: u16,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            m: 1,
            iterations: 5,
            anonymous: false,
            ttl_secs: 3600,
            strategy: Strategy::MostMentioned,
            feedback: FeedbackUse::All,
            seed: 0,
            port: 8080,
        }
    }
}

impl ServiceConfig {
    pub fn validate(&self) -> anyhow::Result<()> {
        anyhow::ensure!((1..=3).contains(&self.m), "m {} outside 1..=3", self.m);
        anyhow::ensure!(self.iterations >= 1, "iterations must be at least 1");
        anyhow::ensure!(self.ttl_secs >= 1, "ttl must be at least one second");
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AvPairView {
    pub aspect: String,
    pub value: String,
    pub mentions: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemView {
    pub id: String,
    pub title: String,
    /// Sorted by mentions, most mentioned first.
    pub av_pairs: Vec<AvPairView>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionView {
    pub aspect: String,
    pub value: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerRecord {
    pub iteration: usize,
    pub aspect: String,
    pub value: String,
    pub answer: Answer,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepResponse {
    pub session_id: String,
    pub iteration: usize,
    pub shown_item: Option<ItemView>,
    pub questions: Vec<QuestionView>,
    pub finished: bool,
    pub personalization: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionView {
    pub session_id: String,
    pub user_id: Option<String>,
    pub personalization: bool,
    pub query: String,
    pub iteration: usize,
    pub budget: usize,
    pub finished: bool,
    pub shown: Vec<ItemView>,
    pub questions: Vec<QuestionView>,
    pub history: Vec<AnswerRecord>,
    pub created_at: u64,
    pub updated_at: u64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    #[serde(default)]
    pub user_id: Option<String>,
    pub query: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnswerInput {
    pub aspect: String,
    pub value: String,
    pub answer: Answer,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PostAnswers {
    pub answers: Vec<AnswerInput>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiError {
    pub status: StatusCode,
    pub message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (
            self.status,
            Json(serde_json::json!({ "error": self.message })),
        )
            .into_response()
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, r.body_text())
    }
}

impl From<avlem::Error> for ApiError {
    fn from(e: avlem::Error) -> Self {
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())
    }
}

type ApiResult<T> = Result<T, ApiError>;

struct SessionRecord {
    state: SessionState,
    user_name: Option<String>,
    pending: Vec<Question>,
    history: Vec<AnswerRecord>,
    created: SystemTime,
    updated: SystemTime,
    touched: Instant,
    rng: ChaCha8Rng,
}

/// Shared service state.
pub struct AppState {
    model: Model,
    corpus: Corpus,
    config: ServiceConfig,
    candidates: Vec<ItemId>,
    sessions: Mutex<HashMap<String, Arc<Mutex<SessionRecord>>>>,
    created: AtomicU64,
}

impl AppState {
    pub fn new(model: Model, corpus: Corpus, config: ServiceConfig) -> anyhow::Result<Self> {
        config.validate()?;
        let sizes = model.params.sizes();
        anyhow::ensure!(
            sizes.items == corpus.num_items() && sizes.users == corpus.num_users(),
            "model has {} items and {} users but the corpus has {} and {}",
            sizes.items,
            sizes.users,
            corpus.num_items(),
            corpus.num_users()
        );
        Ok(Self {
            candidates: (0..corpus.num_items() as ItemId).collect(),
            model,
            corpus,
            config,
            sessions: Mutex::new(HashMap::new()),
            created: AtomicU64::new(0),
        })
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn corpus(&self) -> &Corpus {
        &self.corpus
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    /// Drops sessions idle for longer than the TTL as of `now`. Returns
    /// how many were dropped.
    pub fn evict_expired(&self, now: Instant) -> usize {
        let ttl = Duration::from_secs(self.config.ttl_secs);
        let mut sessions = self.sessions.lock().expect("session store");
        let before = sessions.len();
        sessions.retain(|_, s| match s.try_lock() {
            Ok(s) => now.saturating_duration_since(s.touched) < ttl,
            Err(_) => true,
        });
        before - sessions.len()
    }

    pub fn session_count(&self) -> usize {
        self.sessions.lock().expect("session store").len()
    }

    fn ranker(&self) -> AvlemRanker<'_> {
        AvlemRanker::new(&self.model, &self.corpus, self.config.feedback)
    }

    fn item_view(&self, item: ItemId) -> ItemView {
        let c = &self.corpus;
        let mut pairs: Vec<_> = c.item_av(item).collect();
        pairs.sort_by(|a, b| {
            b.mentions
                .cmp(&a.mentions)
                .then(a.aspect.cmp(&b.aspect))
                .then(a.value.cmp(&b.value))
        });
        let name = c.items.token(item).to_owned();
        let title = match c.item_queries.get(item as usize).and_then(|q| q.first()) {
            Some(&q) => format!("{name} ({})", c.query_text(q)),
            None => name.clone(),
        };
        ItemView {
            id: name,
            title,
            av_pairs: pairs
                .into_iter()
                .map(|p| AvPairView {
                    aspect: c.aspect_name(p.aspect),
                    value: c.value_name(p.value).to_owned(),
                    mentions: p.mentions,
                })
                .collect(),
        }
    }

    fn question_view(&self, q: &Question) -> QuestionView {
        QuestionView {
            aspect: self.corpus.aspect_name(q.aspect),
            value: self.corpus.value_name(q.value).to_owned(),
            text: q.text.clone(),
        }
    }

    fn step(&self, id: &str, s: &SessionRecord) -> StepResponse {
        StepResponse {
            session_id: id.to_owned(),
            iteration: s.state.iteration(),
            shown_item: s.state.shown.last().map(|&i| self.item_view(i)),
            questions: s.pending.iter().map(|q| self.question_view(q)).collect(),
            finished: s.state.finished,
            personalization: s.state.user.is_some(),
        }
    }

    fn view(&self, id: &str, s: &SessionRecord) -> SessionView {
        SessionView {
            session_id: id.to_owned(),
            user_id: s.user_name.clone(),
            personalization: s.state.user.is_some(),
            query: self.corpus.words_text(&s.state.query),
            iteration: s.state.iteration(),
            budget: self.config.iterations,
            finished: s.state.finished,
            shown: s.state.shown.iter().map(|&i| self.item_view(i)).collect(),
            questions: s.pending.iter().map(|q| self.question_view(q)).collect(),
            history: s.history.clone(),
            created_at: unix_secs(s.created),
            updated_at: unix_secs(s.updated),
        }
    }

    /// Shows the next item and selects its questions.
    fn advance(&self, s: &mut SessionRecord, answers: &[((u32, u32), Answer)]) -> ApiResult<()> {
        advance_session(
            &mut s.state,
            answers,
            &self.ranker(),
            &self.candidates,
            self.config.iterations,
            &|_| false,
        )?;
        s.pending = if s.state.finished {
            Vec::new()
        } else {
            let qs = select_questions(
                &s.state,
                &self.corpus,
                self.config.m,
                self.config.strategy,
                &mut s.rng,
            );
            s.state.pose(&qs);
            qs
        };
        Ok(())
    }

    fn session(&self, id: &str) -> ApiResult<Arc<Mutex<SessionRecord>>> {
        self.evict_expired(Instant::now());
        self.sessions
            .lock()
            .expect("session store")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("unknown session {id:?}")))
    }

    fn resolve_user(&self, user: Option<&str>) -> ApiResult<Option<UserId>> {
        match user.and_then(|u| self.corpus.users.id(u)) {
            Some(u) => Ok(Some(u)),
            None if self.config.anonymous => Ok(None),
            None => Err(ApiError::new(
                StatusCode::NOT_FOUND,
                match user {
                    Some(u) => format!("unknown user {u:?}"),
                    None => "user_id required when anonymous mode is off".into(),
                },
            )),
        }
    }

    pub fn create_session(&self, req: CreateSession) -> ApiResult<StepResponse> {
        if req.query.trim().is_empty() {
            return Err(ApiError::new(StatusCode::BAD_REQUEST, "query is empty"));
        }
        let user = self.resolve_user(req.user_id.as_deref())?;
        let query = self.corpus.encode_known(&req.query);
        if query.is_empty() {
            return Err(ApiError::new(
                StatusCode::BAD_REQUEST,
                "query has no words known to the model",
            ));
        }
        let n = self.created.fetch_add(1, Ordering::Relaxed);
        let now = SystemTime::now();
        let mut record = SessionRecord {
            state: SessionState::new(user, query),
            user_name: user.map(|u| self.corpus.users.token(u).to_owned()),
            pending: Vec::new(),
            history: Vec::new(),
            created: now,
            updated: now,
            touched: Instant::now(),
            rng: ChaCha8Rng::seed_from_u64(self.config.seed ^ n),
        };
        self.advance(&mut record, &[])?;
        let id = uuid::Uuid::new_v4().simple().to_string();
        let step = self.step(&id, &record);
        self.evict_expired(Instant::now());
        self.sessions
            .lock()
            .expect("session store")
            .insert(id, Arc::new(Mutex::new(record)));
        Ok(step)
    }

    pub fn post_answers(&self, id: &str, req: PostAnswers) -> ApiResult<StepResponse> {
        let handle = self.session(id)?;
        let mut s = match handle.try_lock() {
            Ok(s) => s,
            Err(TryLockError::WouldBlock) => {
                return Err(ApiError::new(
                    StatusCode::CONFLICT,
                    "session is busy with another answer",
                ))
            }
            Err(TryLockError::Poisoned(_)) => {
                return Err(ApiError::new(
                    StatusCode::INTERNAL_SERVER_ERROR,
                    "session state poisoned",
                ))
            }
        };
        if s.state.finished {
            return Err(ApiError::new(StatusCode::GONE, "session finished"));
        }
        let mut seen = BTreeSet::new();
        let mut answers = Vec::with_capacity(req.answers.len());
        for a in &req.answers {
            let q = s
                .pending
                .iter()
                .find(|q| {
                    self.corpus.aspect_name(q.aspect) == a.aspect
                        && self.corpus.value_name(q.value) == a.value
                })
                .ok_or_else(|| {
                    ApiError::new(
                        StatusCode::CONFLICT,
                        format!("({}, {}) is not a pending question", a.aspect, a.value),
                    )
                })?;
            if !seen.insert(q.pair()) {
                return Err(ApiError::new(
                    StatusCode::CONFLICT,
                    format!("({}, {}) answered twice", a.aspect, a.value),
                ));
            }
            answers.push((q.pair(), a.answer));
        }
        let iteration = s.state.iteration();
        self.advance(&mut s, &answers)?;
        for a in &req.answers {
            s.history.push(AnswerRecord {
                iteration,
                aspect: a.aspect.clone(),
                value: a.value.clone(),
                answer: a.answer,
            });
        }
        s.updated = SystemTime::now();
        s.touched = Instant::now();
        Ok(self.step(id, &s))
    }

    pub fn get_session(&self, id: &str) -> ApiResult<SessionView> {
        let handle = self.session(id)?;
        let s = handle.lock().expect("session");
        Ok(self.view(id, &s))
    }

    pub fn get_item(&self, id: &str) -> ApiResult<ItemView> {
        self.corpus
            .items
            .id(id)
            .map(|i| self.item_view(i))
            .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("unknown item {id:?}")))
    }
}

fn unix_secs(t: SystemTime) -> u64 {
    t.duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

async fn create_handler(
    State(app): State<Arc<AppState>>,
    body: Result<Json<CreateSession>, JsonRejection>,
) -> ApiResult<(StatusCode, Json<StepResponse>)> {
    let Json(req) = body?;
    Ok((StatusCode::CREATED, Json(app.create_session(req)?)))
}

async fn answers_handler(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Result<Json<PostAnswers>, JsonRejection>,
) -> ApiResult<Json<StepResponse>> {
    let Json(req) = body?;
    Ok(Json(app.post_answers(&id, req)?))
}

async fn session_handler(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> ApiResult<Json<SessionView>> {
    Ok(Json(app.get_session(&id)?))
}

async fn item_handler(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> ApiResult<Json<ItemView>> {
    Ok(Json(app.get_item(&id)?))
}

async fn schema_handler() -> impl IntoResponse {
    (
        [(axum::http::header::CONTENT_TYPE, "application/schema+json")],
        SCHEMA,
    )
}

pub fn router(app: Arc<AppState>) -> Router {
    Router::new()
        .route("/sessions", post(create_handler))
        .route("/sessions/{id}", get(session_handler))
        .route("/sessions/{id}/answers", post(answers_handler))
        .route("/items/{id}", get(item_handler))
        .route("/schema", get(schema_handler))
        .with_state(app)
}

/// Serves until ctrl-c, evicting idle sessions in the background.
pub async fn serve(app: Arc<AppState>, addr: SocketAddr) -> anyhow::Result<()> {
    let sweeper = {
        let app = app.clone();
        let period = Duration::from_secs(app.config.ttl_secs.div_ceil(4).max(1));
        tokio::spawn(async move {
            loop {
                tokio::time::sleep(period).await;
                let n = app.evict_expired(Instant::now());
                if n > 0 {
                    log::info!("evicted {n} idle sessions");
                }
            }
        })
    };
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(app))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    sweeper.abort();
    Ok(())
}
