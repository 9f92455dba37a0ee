//! Local HTTP service for reviewing generated question-answer pairs.
//!
//! Every decision is appended to the journal and synced before the
//! response is sent; readers share the state, writers are serialized.
//!
//! | Method | Path | |
//! |---|---|---|
//! | GET | `/api/queue?status=&page=&page_size=` | page of pairs in provenance order |
//! | GET | `/api/items/{qa_id}` | one pair with image and caption context |
//! | POST | `/api/items/{qa_id}/decision` | accept, reject or edit |
//! | GET | `/api/images/{image_id}` | the image file |
//! | GET | `/api/stats` | counts per review status |
//! | POST | `/api/export` | write the reviewed dataset |
//!
//! Any other path is served from the static asset directory, if one is
//! configured.

use std::collections::BTreeSet;
use std::net::SocketAddr;
use std::path::{Component, Path, PathBuf};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use axum::body::Body;
use axum::extract::{Path as UrlPath, Query, Request, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tokio::sync::RwLock;
use tower::ServiceExt;
use tower_http::services::{ServeDir, ServeFile};
use vqakit::corpus::{load_corpus, save_corpus, CorpusError, ReviewStatus};
use vqakit::review::{
    default_export_statuses, journal_path_for, Journal, QueueItem, QueuePage, ReviewAction, ReviewDecision,
    ReviewError, ReviewProgress, ReviewSession, ReviewWarning,
};

pub const DEFAULT_PORT: u16 = 8765;
pub const DEFAULT_PAGE_SIZE: usize = 50;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Review(#[from] ReviewError),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub dataset: PathBuf,
    /// Defaults to `<dataset stem>.review.jsonl` beside the dataset.
    pub journal: Option<PathBuf>,
    /// Relative image URIs resolve against this directory; defaults to the
    /// dataset's directory.
    pub image_root: Option<PathBuf>,
    pub static_dir: Option<PathBuf>,
    /// Defaults to `<dataset stem>.reviewed.json` beside the dataset.
    pub export_path: Option<PathBuf>,
}

impl ServiceConfig {
    pub fn new(dataset: impl Into<PathBuf>) -> Self {
        ServiceConfig {
            dataset: dataset.into(),
            journal: None,
            image_root: None,
            static_dir: None,
            export_path: None,
        }
    }

    fn sibling(&self, suffix: &str) -> PathBuf {
        let stem = self
            .dataset
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "dataset".into());
        self.dataset.with_file_name(format!("{stem}{suffix}"))
    }

    fn dataset_dir(&self) -> PathBuf {
        self.dataset
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."))
    }
}

struct Inner {
    session: ReviewSession,
    journal: Journal,
}

#[derive(Clone)]
pub struct AppState {
    inner: Arc<RwLock<Inner>>,
    image_root: PathBuf,
    export_path: PathBuf,
}

impl AppState {
    /// Loads the dataset and replays its journal. Warnings from loading
    /// and replay are returned for the caller to log.
    pub fn load(config: &ServiceConfig) -> Result<(AppState, Vec<ReviewWarning>), ServiceError> {
        let corpus = load_corpus(&config.dataset)?;
        let journal_path = config.journal.clone().unwrap_or_else(|| journal_path_for(&config.dataset));
        let (journal, decisions, mut warnings) = Journal::open(&journal_path)?;
        let (session, replay_warnings) = ReviewSession::replay(corpus, &decisions);
        warnings.extend(replay_warnings);
        let state = AppState {
            inner: Arc::new(RwLock::new(Inner { session, journal })),
            image_root: config.image_root.clone().unwrap_or_else(|| config.dataset_dir()),
            export_path: config.export_path.clone().unwrap_or_else(|| config.sibling(".reviewed.json")),
        };
        Ok((state, warnings))
    }

    pub async fn progress(&self) -> ReviewProgress {
        self.inner.read().await.session.progress()
    }
}

pub fn router(state: AppState, static_dir: Option<&Path>) -> Router {
    let api = Router::new()
        .route("/api/queue", get(queue))
        .route("/api/items/{qa_id}", get(item))
        .route("/api/items/{qa_id}/decision", post(decision))
        .route("/api/images/{image_id}", get(image))
        .route("/api/stats", get(stats))
        .route("/api/export", post(export))
        .with_state(state);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir).append_index_html_on_directories(true)),
        None => api,
    }
}

/// Loopback address on `port`.
pub fn loopback(port: u16) -> SocketAddr {
    SocketAddr::from(([127, 0, 0, 1], port))
}

pub async fn serve(listener: tokio::net::TcpListener, app: Router) -> std::io::Result<()> {
    axum::serve(listener, app).await
}

struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(serde_json::json!({ "error": self.1 }))).into_response()
    }
}

impl From<ReviewError> for ApiError {
    fn from(e: ReviewError) -> Self {
        let status = match &e {
            ReviewError::UnknownItem(_) => StatusCode::NOT_FOUND,
            ReviewError::EmptyEdit(_) | ReviewError::UnexpectedEdit(_) | ReviewError::MalformedEdit(_) => {
                StatusCode::UNPROCESSABLE_ENTITY
            }
            ReviewError::InvalidPageSize => StatusCode::BAD_REQUEST,
            ReviewError::Io { .. } | ReviewError::Corrupt { .. } => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError(status, e.to_string())
    }
}

#[derive(Debug, Deserialize)]
struct QueueParams {
    status: Option<String>,
    #[serde(default)]
    page: usize,
    page_size: Option<usize>,
}

async fn queue(State(state): State<AppState>, Query(q): Query<QueueParams>) -> Result<Json<QueuePage>, ApiError> {
    let filter = match q.status.as_deref() {
        None | Some("") | Some("all") => None,
        Some(s) => Some(s.parse::<ReviewStatus>().map_err(|e| ApiError(StatusCode::BAD_REQUEST, e))?),
    };
    let inner = state.inner.read().await;
    Ok(Json(inner.session.queue(filter, q.page, q.page_size.unwrap_or(DEFAULT_PAGE_SIZE))?))
}

async fn item(State(state): State<AppState>, UrlPath(qa_id): UrlPath<String>) -> Result<Json<QueueItem>, ApiError> {
    let inner = state.inner.read().await;
    let pair = inner.session.get(&qa_id).ok_or(ReviewError::UnknownItem(qa_id))?;
    Ok(Json(inner.session.queue_item(pair)))
}

#[derive(Debug, Deserialize)]
struct DecisionBody {
    action: ReviewAction,
    #[serde(default)]
    edited_question: Option<String>,
    #[serde(default)]
    edited_answer: Option<String>,
    #[serde(default)]
    reviewer: String,
    #[serde(default)]
    note: Option<String>,
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

async fn decision(
    State(state): State<AppState>,
    UrlPath(qa_id): UrlPath<String>,
    Json(body): Json<DecisionBody>,
) -> Result<Json<QueueItem>, ApiError> {
    let decision = ReviewDecision {
        qa_id,
        action: body.action,
        edited_question: body.edited_question,
        edited_answer: body.edited_answer,
        reviewer: body.reviewer,
        timestamp_ms: now_ms(),
        note: body.note,
    };
    let mut inner = state.inner.write().await;
    inner.session.preview(&decision)?;
    let stored = inner.journal.append(decision)?;
    let pair = inner.session.apply(&stored)?.clone();
    Ok(Json(inner.session.queue_item(&pair)))
}

/// Resolves a relative image URI under `root`, refusing anything that
/// would leave it.
fn resolve_image(root: &Path, uri: &str) -> Option<PathBuf> {
    let rel = Path::new(uri);
    if uri.contains("://") || rel.is_absolute() {
        return None;
    }
    if rel.components().any(|c| !matches!(c, Component::Normal(_) | Component::CurDir)) {
        return None;
    }
    Some(root.join(rel))
}

async fn image(
    State(state): State<AppState>,
    UrlPath(image_id): UrlPath<String>,
    req: Request,
) -> Result<Response, ApiError> {
    let uri = {
        let inner = state.inner.read().await;
        let img = inner
            .session
            .corpus()
            .image(&image_id)
            .ok_or_else(|| ApiError(StatusCode::NOT_FOUND, format!("unknown image_id {image_id}")))?;
        img.uri.clone()
    };
    let path = resolve_image(&state.image_root, &uri)
        .ok_or_else(|| ApiError(StatusCode::NOT_FOUND, format!("image {image_id} is not a local file")))?;
    let (parts, _) = req.into_parts();
    let req = Request::from_parts(parts, Body::empty());
    match ServeFile::new(path).oneshot(req).await {
        Ok(resp) => Ok(resp.map(Body::new)),
        Err(e) => Err(ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())),
    }
}

async fn stats(State(state): State<AppState>) -> Json<ReviewProgress> {
    Json(state.progress().await)
}

#[derive(Debug, Default, Deserialize)]
struct ExportBody {
    include: Option<Vec<ReviewStatus>>,
}

#[derive(Debug, Serialize)]
struct ExportSummary {
    path: String,
    exported: usize,
    include: Vec<ReviewStatus>,
}

async fn export(State(state): State<AppState>, body: Option<Json<ExportBody>>) -> Result<Json<ExportSummary>, ApiError> {
    let include: BTreeSet<ReviewStatus> = body
        .and_then(|Json(b)| b.include)
        .map(|v| v.into_iter().collect())
        .unwrap_or_else(default_export_statuses);
    let corpus = state.inner.read().await.session.export(&include);
    save_corpus(&corpus, &state.export_path).map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    Ok(Json(ExportSummary {
        path: state.export_path.display().to_string(),
        exported: corpus.qa_pairs.len(),
        include: include.into_iter().collect(),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn image_paths_stay_under_root() {
        let root = Path::new("/data");
        assert_eq!(resolve_image(root, "img/a.png"), Some(PathBuf::from("/data/img/a.png")));
        assert_eq!(resolve_image(root, "../etc/passwd"), None);
        assert_eq!(resolve_image(root, "/etc/passwd"), None);
        assert_eq!(resolve_image(root, "https://x/a.png"), None);
    }
}
