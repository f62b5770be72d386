//! HTTP/JSON API over a [`SessionStore`], plus static file serving for the
//! browser client.
//!
//! | method | path | body | response |
//! |---|---|---|---|
//! | `POST` | `/sessions` | `SessionConfig` | `{"session_id"}` |
//! | `GET` | `/sessions` | | session ids |
//! | `GET` | `/sessions/{id}` | | config, trials, resolution |
//! | `GET` | `/sessions/{id}/next-trial` | | `NextTrial` |
//! | `POST` | `/sessions/{id}/choices` | `{"trial_id", "x"}` | `ChoiceAck` |
//! | `POST` | `/sessions/{id}/resolve` | `{"realizations": {topic: bool}}` | `ResolutionRecord` |
//! | `GET` | `/sessions/{id}/observations[?topic=]` | | `ObservationSet` per topic, or one |
//! | `GET` | `/sessions/{id}/bounds[?topic=]` | | `MixingIntervalResult` per topic, or one |
//! | `GET` | `/sessions/{id}/log` | | the ndjson event log |
//!
//! Errors are `{"code", "message"}` with the codes of [`Error::code`].

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;

use crate::config::SessionConfig;
use crate::error::Error;
use crate::session::{ResolutionRecord, Trial};
use crate::store::SessionStore;

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

pub struct ApiError(Error);

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        Self(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match &self.0 {
            Error::InvalidConfig(_) | Error::InvalidRequest(_) | Error::Core(_) => StatusCode::BAD_REQUEST,
            Error::UnknownSession(_) | Error::UnknownTrial(_) => StatusCode::NOT_FOUND,
            Error::DuplicateConflicting { .. } | Error::UnresolvedTrials { .. } | Error::SessionClosed => {
                StatusCode::CONFLICT
            }
            Error::OutOfRange(_) | Error::MissingRealization(_) | Error::UnsupportedModel(_) => {
                StatusCode::UNPROCESSABLE_ENTITY
            }
            Error::CorruptLog(_) | Error::Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let body = ErrorBody { code: self.0.code().to_string(), message: self.0.to_string() };
        (status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

/// Parses a JSON body so that malformed requests get the API error shape.
fn parse<T: DeserializeOwned>(body: &Bytes) -> Result<T, Error> {
    serde_json::from_slice(body).map_err(|e| Error::InvalidRequest(e.to_string()))
}

/// Store calls touch the disk; keep them off the async workers.
async fn blocking<T, F>(store: &Arc<SessionStore>, f: F) -> Result<T, ApiError>
where
    T: Send + 'static,
    F: FnOnce(&SessionStore) -> crate::Result<T> + Send + 'static,
{
    let store = Arc::clone(store);
    tokio::task::spawn_blocking(move || f(&store))
        .await
        .map_err(|e| Error::Io(std::io::Error::other(e)))?
        .map_err(ApiError)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Created {
    pub session_id: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ChoiceRequest {
    pub trial_id: u32,
    pub x: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ResolveRequest {
    pub realizations: BTreeMap<String, bool>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SessionView {
    pub session_id: String,
    pub config: SessionConfig,
    pub trials: Vec<Trial>,
    pub complete: bool,
    pub resolution: Option<ResolutionRecord>,
}

#[derive(Debug, Deserialize)]
struct TopicQuery {
    topic: Option<String>,
}

async fn create_session(State(store): State<Arc<SessionStore>>, body: Bytes) -> Result<Response, ApiError> {
    let config: SessionConfig = serde_json::from_slice(&body).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let session_id = blocking(&store, move |s| s.create(config)).await?;
    Ok((StatusCode::CREATED, Json(Created { session_id })).into_response())
}

async fn list_sessions(State(store): State<Arc<SessionStore>>) -> Json<Vec<String>> {
    Json(store.ids())
}

async fn session_view(State(store): State<Arc<SessionStore>>, Path(id): Path<String>) -> ApiResult<SessionView> {
    let view = blocking(&store, move |st| {
        st.read(&id, |s| {
            Ok(SessionView {
                session_id: s.id().to_string(),
                config: s.config().clone(),
                trials: s.trials().to_vec(),
                complete: s.is_complete()?,
                resolution: s.resolution().cloned(),
            })
        })
    })
    .await?;
    Ok(Json(view))
}

async fn next_trial(State(store): State<Arc<SessionStore>>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let next = blocking(&store, move |s| s.next_trial(&id)).await?;
    Ok(Json(next).into_response())
}

async fn record_choice(
    State(store): State<Arc<SessionStore>>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let req: ChoiceRequest = parse(&body)?;
    let ack = blocking(&store, move |s| s.record_choice(&id, req.trial_id, req.x)).await?;
    Ok(Json(ack).into_response())
}

async fn resolve(
    State(store): State<Arc<SessionStore>>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let req: ResolveRequest = parse(&body)?;
    let record = blocking(&store, move |s| s.resolve(&id, &req.realizations)).await?;
    Ok(Json(record).into_response())
}

/// The whole per-topic map, or one entry when `?topic=` is given.
fn select<T: Serialize>(mut map: BTreeMap<String, T>, topic: Option<String>) -> Result<Response, Error> {
    match topic {
        None => Ok(Json(map).into_response()),
        Some(t) => match map.remove(&t) {
            Some(v) => Ok(Json(v).into_response()),
            None => Err(Error::InvalidRequest(format!("session has no topic `{t}`"))),
        },
    }
}

async fn observations(
    State(store): State<Arc<SessionStore>>,
    Path(id): Path<String>,
    Query(q): Query<TopicQuery>,
) -> Result<Response, ApiError> {
    let map = blocking(&store, move |s| s.observations(&id)).await?;
    Ok(select(map, q.topic)?)
}

async fn bounds(
    State(store): State<Arc<SessionStore>>,
    Path(id): Path<String>,
    Query(q): Query<TopicQuery>,
) -> Result<Response, ApiError> {
    let map = blocking(&store, move |s| s.bounds(&id)).await?;
    Ok(select(map, q.topic)?)
}

async fn log(State(store): State<Arc<SessionStore>>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let text = blocking(&store, move |s| s.log(&id)).await?;
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], text).into_response())
}

async fn not_found() -> ApiError {
    ApiError(Error::InvalidRequest("no such route".into()))
}

/// The API routes; with `static_dir`, other paths are served from it.
pub fn router(store: Arc<SessionStore>, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/sessions", post(create_session).get(list_sessions))
        .route("/sessions/{id}", get(session_view))
        .route("/sessions/{id}/next-trial", get(next_trial))
        .route("/sessions/{id}/choices", post(record_choice))
        .route("/sessions/{id}/resolve", post(resolve))
        .route("/sessions/{id}/observations", get(observations))
        .route("/sessions/{id}/bounds", get(bounds))
        .route("/sessions/{id}/log", get(log))
        .with_state(store);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir).append_index_html_on_directories(true)),
        None => api.fallback(not_found),
    }
}

/// Serves the API on `addr` until the process is stopped.
pub async fn serve(addr: SocketAddr, store: Arc<SessionStore>, static_dir: Option<PathBuf>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(store, static_dir)).await
}
