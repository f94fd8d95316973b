//! Read-only HTTP service over a loaded index.
//!
//! ```text
//! GET  /api/health    {"status": "ready" | "indexing" | "failed", ...}
//! GET  /api/corpora   registered corpora with coverage
//! POST /api/analysis  AnalysisRequest -> analysis bundle
//! GET  /*             explorer assets, when configured
//! ```
//!
//! Bundles are cached by the SHA-256 of the request's canonical JSON, so
//! a repeated request returns the very same bytes.

use std::collections::{HashMap, VecDeque};
use std::future::Future;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, RwLock};

use axum::body::Bytes;
use axum::extract::State;
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use lexshift_core::analysis::AnalysisRequest;
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};
use tower_http::services::ServeDir;

use crate::index::{bundle_to_json, AppError, CorpusRecord, LoadedIndex};

pub const DEFAULT_CACHE_ENTRIES: usize = 256;

enum Status {
    Indexing,
    Ready(Arc<LoadedIndex>),
    Failed(String),
}

/// Shared handler state. The index is swapped in once when loading
/// finishes and never changes afterwards.
#[derive(Clone)]
pub struct AppState {
    status: Arc<RwLock<Status>>,
    cache: Arc<Mutex<BundleCache>>,
}

struct BundleCache {
    capacity: usize,
    entries: HashMap<[u8; 32], Bytes>,
    order: VecDeque<[u8; 32]>,
}

impl BundleCache {
    fn get(&self, key: &[u8; 32]) -> Option<Bytes> {
        self.entries.get(key).cloned()
    }

    fn insert(&mut self, key: [u8; 32], value: Bytes) {
        if self.capacity == 0 || self.entries.contains_key(&key) {
            return;
        }
        if self.entries.len() == self.capacity {
            if let Some(old) = self.order.pop_front() {
                self.entries.remove(&old);
            }
        }
        self.order.push_back(key);
        self.entries.insert(key, value);
    }
}

impl AppState {
    /// State that answers 503 until [`AppState::set_ready`] or
    /// [`AppState::set_failed`] is called.
    pub fn indexing(cache_entries: usize) -> AppState {
        AppState {
            status: Arc::new(RwLock::new(Status::Indexing)),
            cache: Arc::new(Mutex::new(BundleCache {
                capacity: cache_entries,
                entries: HashMap::new(),
                order: VecDeque::new(),
            })),
        }
    }

    pub fn ready(index: LoadedIndex, cache_entries: usize) -> AppState {
        let state = AppState::indexing(cache_entries);
        state.set_ready(index);
        state
    }

    pub fn set_ready(&self, index: LoadedIndex) {
        *self.status.write().expect("status lock poisoned") = Status::Ready(Arc::new(index));
    }

    pub fn set_failed(&self, message: String) {
        *self.status.write().expect("status lock poisoned") = Status::Failed(message);
    }

    fn index(&self) -> Result<Arc<LoadedIndex>, ApiError> {
        match &*self.status.read().expect("status lock poisoned") {
            Status::Ready(index) => Ok(Arc::clone(index)),
            Status::Indexing => Err(ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "index is still loading")),
            Status::Failed(message) => Err(ApiError::new(
                StatusCode::SERVICE_UNAVAILABLE,
                format!("index failed to load: {message}"),
            )),
        }
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> ApiError {
        ApiError {
            status,
            message: message.into(),
        }
    }
}

impl From<AppError> for ApiError {
    fn from(e: AppError) -> ApiError {
        let status = match &e {
            AppError::UnknownCorpus(_) => StatusCode::NOT_FOUND,
            e if e.is_client_error() => StatusCode::BAD_REQUEST,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError::new(status, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = Json(json!({ "error": self.message, "status": self.status.as_u16() }));
        (self.status, body).into_response()
    }
}

/// Builds the router; `assets` is served under `/` when given.
pub fn router(state: AppState, assets: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/health", get(health))
        .route("/api/corpora", get(corpora))
        .route("/api/analysis", post(analysis))
        .with_state(state);
    match assets {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

async fn health(State(state): State<AppState>) -> Json<serde_json::Value> {
    let body = match &*state.status.read().expect("status lock poisoned") {
        Status::Ready(index) => json!({ "status": "ready", "corpora": index.corpora().count() }),
        Status::Indexing => json!({ "status": "indexing" }),
        Status::Failed(message) => json!({ "status": "failed", "error": message }),
    };
    Json(body)
}

#[derive(Serialize)]
struct CorpusSummary<'a> {
    id: &'a str,
    format: String,
    description: &'a str,
    year_from: i32,
    year_to: i32,
    years: Vec<i32>,
    tokens: u64,
    seeds: &'a [u64],
}

impl<'a> CorpusSummary<'a> {
    fn new(record: &'a CorpusRecord, index: &LoadedIndex) -> CorpusSummary<'a> {
        let years = index
            .get(&record.id)
            .map(|c| c.raw().years().map(|(y, _)| y).collect())
            .unwrap_or_default();
        CorpusSummary {
            id: &record.id,
            format: record.format.to_string(),
            description: &record.description,
            year_from: record.year_from,
            year_to: record.year_to,
            years,
            tokens: record.tokens,
            seeds: &record.seeds,
        }
    }
}

async fn corpora(State(state): State<AppState>) -> Result<Response, ApiError> {
    let index = state.index()?;
    let list: Vec<CorpusSummary> = index.corpora().map(|r| CorpusSummary::new(r, &index)).collect();
    Ok(Json(json!({ "corpora": list })).into_response())
}

fn json_bytes(bytes: Bytes, cache: &'static str) -> Response {
    (
        [
            (header::CONTENT_TYPE, HeaderValue::from_static("application/json")),
            (
                header::HeaderName::from_static("x-cache"),
                HeaderValue::from_static(cache),
            ),
        ],
        bytes,
    )
        .into_response()
}

async fn analysis(State(state): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let index = state.index()?;
    let request: AnalysisRequest = serde_json::from_slice(&body)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, format!("invalid analysis request: {e}")))?;
    let canonical = serde_json::to_vec(&request).expect("requests always serialise");
    let key: [u8; 32] = Sha256::digest(&canonical).into();
    if let Some(hit) = state.cache.lock().expect("cache lock poisoned").get(&key) {
        return Ok(json_bytes(hit, "hit"));
    }
    let bundle = tokio::task::spawn_blocking(move || index.analyze(&request).map(|b| bundle_to_json(&b)))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, format!("analysis task failed: {e}")))??;
    let bytes = Bytes::from(bundle);
    state
        .cache
        .lock()
        .expect("cache lock poisoned")
        .insert(key, bytes.clone());
    Ok(json_bytes(bytes, "miss"))
}

/// Serves until `shutdown` resolves, while `load` runs in the background;
/// requests that need the index get 503 until it has finished.
pub async fn serve<L, S>(addr: SocketAddr, assets: Option<PathBuf>, load: L, shutdown: S) -> std::io::Result<()>
where
    L: FnOnce() -> Result<LoadedIndex, AppError> + Send + 'static,
    S: Future<Output = ()> + Send + 'static,
{
    let state = AppState::indexing(DEFAULT_CACHE_ENTRIES);
    let loader = state.clone();
    tokio::task::spawn_blocking(move || match load() {
        Ok(index) => {
            log::info!("index ready: {} corpora", index.corpora().count());
            loader.set_ready(index);
        }
        Err(e) => {
            log::error!("index failed to load: {e}");
            loader.set_failed(e.to_string());
        }
    });
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state, assets))
        .with_graceful_shutdown(shutdown)
        .await
}
