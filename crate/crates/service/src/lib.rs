//! Session-holding render service behind the interactive layout editor.
//!
//! Endpoints:
//!
//! | method | path | body / query | response |
//! |---|---|---|---|
//! | GET  | `/healthz` | | `ok` |
//! | POST | `/sessions` | multipart `image` (PNG) + `layout` (layout JSON or `{"random":{"seed","n","d_f"}}`) | `{"id","revision"}` |
//! | GET  | `/sessions/{id}/layout` | | `{"revision","layout"}` |
//! | POST | `/sessions/{id}/ops` | manipulation JSON, e.g. `{"op":"remove","i":3}` | `{"revision"}` |
//! | POST | `/sessions/{id}/undo` | | `{"revision"}` |
//! | GET  | `/sessions/{id}/render` | `mode=...&format=png\|plt1&...` | PNG or PLT1 |
//!
//! Every layout and render response carries the revision it reflects in the
//! `x-revision` header. Sessions live in memory only.

pub mod error;
pub mod render;
pub mod session;

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::{Component, Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Multipart, Path as UrlPath, Query, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode, Uri};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use panolayout_core::imageops::EquirectImage;
use panolayout_core::layout::{LayoutDocument, DEFAULT_OBJECTS};
use panolayout_core::{Manipulation, SceneLayout};
use serde::{Deserialize, Serialize};

pub use error::ServiceError;
pub use render::{render_view, Rendered, ViewMode, ViewRequest};
pub use session::{SceneSession, Snapshot};

pub const REVISION_HEADER: &str = "x-revision";
/// Feature dimension of generated layouts when the request does not give one.
pub const DEFAULT_RANDOM_FEATURES: usize = 64;
const MAX_UPLOAD_BYTES: usize = 64 << 20;

type SharedSession = Arc<Mutex<SceneSession>>;

#[derive(Debug, Default)]
pub struct AppState {
    sessions: RwLock<HashMap<String, SharedSession>>,
    created: AtomicU64,
    root: Option<PathBuf>,
}

impl AppState {
    pub fn new(root: Option<PathBuf>) -> Self {
        Self {
            root,
            ..Default::default()
        }
    }

    pub fn session_count(&self) -> usize {
        self.sessions.read().unwrap().len()
    }

    fn session(&self, id: &str) -> Result<SharedSession, ServiceError> {
        self.sessions
            .read()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::NotFound(id.to_string()))
    }

    /// Registers a new session and returns its id.
    pub fn create_session(
        &self,
        background: EquirectImage,
        layout: SceneLayout,
    ) -> Result<String, ServiceError> {
        let id = uuid::Uuid::new_v4().simple().to_string();
        // projection seed only has to be stable for the lifetime of the session
        let seed = self.created.fetch_add(1, Ordering::Relaxed);
        let session = SceneSession::new(id.clone(), background, layout, seed)?;
        self.sessions
            .write()
            .unwrap()
            .insert(id.clone(), Arc::new(Mutex::new(session)));
        Ok(id)
    }

    pub fn mutate(&self, id: &str, op: &Manipulation) -> Result<u64, ServiceError> {
        let session = self.session(id)?;
        let mut guard = session.lock().unwrap();
        guard.mutate(op)
    }

    pub fn undo(&self, id: &str) -> Result<u64, ServiceError> {
        let session = self.session(id)?;
        let mut guard = session.lock().unwrap();
        guard.undo()
    }

    pub fn snapshot(&self, id: &str) -> Result<Snapshot, ServiceError> {
        Ok(self.session(id)?.lock().unwrap().snapshot())
    }
}

/// Layout source in a session-creation request.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum LayoutSource {
    Random { random: RandomLayout },
    Document(LayoutDocument),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomLayout {
    pub seed: u64,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub d_f: Option<usize>,
}

impl LayoutSource {
    pub fn into_layout(self, width: usize, height: usize) -> Result<SceneLayout, ServiceError> {
        Ok(match self {
            LayoutSource::Random { random } => SceneLayout::random(
                random.seed,
                random.n.unwrap_or(DEFAULT_OBJECTS),
                random.d_f.unwrap_or(DEFAULT_RANDOM_FEATURES),
                width,
                height,
            )?,
            LayoutSource::Document(doc) => doc.into_layout()?,
        })
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CreatedSession {
    pub id: String,
    pub revision: u64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RevisionReply {
    pub revision: u64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct LayoutReply {
    pub revision: u64,
    pub layout: LayoutDocument,
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/healthz", get(|| async { "ok" }))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/layout", get(get_layout))
        .route("/sessions/{id}/ops", post(apply_op))
        .route("/sessions/{id}/undo", post(undo))
        .route("/sessions/{id}/render", get(render))
        .fallback(static_file)
        .layer(DefaultBodyLimit::max(MAX_UPLOAD_BYTES))
        .with_state(state)
}

/// Binds `addr` and serves until the process exits.
pub async fn serve(addr: SocketAddr, root: Option<PathBuf>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(Arc::new(AppState::new(root)))).await
}

fn revision_header(revision: u64) -> [(header::HeaderName, HeaderValue); 1] {
    [(
        header::HeaderName::from_static(REVISION_HEADER),
        HeaderValue::from(revision),
    )]
}

async fn create_session(
    State(state): State<Arc<AppState>>,
    mut multipart: Multipart,
) -> Result<Json<CreatedSession>, ServiceError> {
    let mut image: Option<Bytes> = None;
    let mut layout: Option<Bytes> = None;
    while let Some(field) = multipart
        .next_field()
        .await
        .map_err(|e| ServiceError::BadRequest(e.to_string()))?
    {
        let name = field.name().unwrap_or_default().to_string();
        let data = field
            .bytes()
            .await
            .map_err(|e| ServiceError::BadRequest(e.to_string()))?;
        match name.as_str() {
            "image" => image = Some(data),
            "layout" | "layout-json" => layout = Some(data),
            other => return Err(ServiceError::BadRequest(format!("unexpected field {other:?}"))),
        }
    }
    let image = image.ok_or_else(|| ServiceError::BadRequest("missing image".into()))?;
    let layout = layout.ok_or_else(|| ServiceError::BadRequest("missing layout".into()))?;

    let background = EquirectImage::from_png_bytes(&image)?;
    let source: LayoutSource = serde_json::from_slice(&layout)
        .map_err(|e| ServiceError::BadRequest(format!("invalid layout: {e}")))?;
    let layout = source.into_layout(background.width(), background.height())?;
    let id = state.create_session(background, layout)?;
    Ok(Json(CreatedSession { id, revision: 0 }))
}

async fn get_layout(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
) -> Result<Response, ServiceError> {
    let snap = state.snapshot(&id)?;
    let reply = LayoutReply {
        revision: snap.revision,
        layout: snap.layout.to_document(),
    };
    Ok((revision_header(snap.revision), Json(reply)).into_response())
}

async fn apply_op(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    body: Bytes,
) -> Result<Json<RevisionReply>, ServiceError> {
    let op: Manipulation = serde_json::from_slice(&body)
        .map_err(|e| ServiceError::BadRequest(format!("invalid manipulation: {e}")))?;
    let revision = state.mutate(&id, &op)?;
    Ok(Json(RevisionReply { revision }))
}

async fn undo(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
) -> Result<Json<RevisionReply>, ServiceError> {
    let revision = state.undo(&id)?;
    Ok(Json(RevisionReply { revision }))
}

async fn render(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    Query(query): Query<HashMap<String, String>>,
) -> Result<Response, ServiceError> {
    let request = ViewRequest::from_query(&query)?;
    let snap = state.snapshot(&id)?;
    let rendered = tokio::task::spawn_blocking(move || render_view(&snap, &request))
        .await
        .map_err(|e| ServiceError::Internal(e.to_string()))??;
    let mut headers = HeaderMap::new();
    headers.insert(
        header::CONTENT_TYPE,
        HeaderValue::from_static(rendered.content_type),
    );
    headers.insert(REVISION_HEADER, HeaderValue::from(rendered.revision));
    Ok((headers, rendered.body).into_response())
}

fn content_type(path: &Path) -> &'static str {
    match path.extension().and_then(|e| e.to_str()) {
        Some("html") => "text/html; charset=utf-8",
        Some("js" | "mjs") => "text/javascript",
        Some("css") => "text/css",
        Some("json") => "application/json",
        Some("png") => "image/png",
        Some("svg") => "image/svg+xml",
        _ => "application/octet-stream",
    }
}

/// Serves files below the configured root; `/` maps to `index.html`.
async fn static_file(State(state): State<Arc<AppState>>, uri: Uri) -> Response {
    let Some(root) = &state.root else {
        return StatusCode::NOT_FOUND.into_response();
    };
    let rel = uri.path().trim_start_matches('/');
    let rel = if rel.is_empty() { "index.html" } else { rel };
    let rel = Path::new(rel);
    if !rel.components().all(|c| matches!(c, Component::Normal(_))) {
        return StatusCode::NOT_FOUND.into_response();
    }
    let path = root.join(rel);
    match tokio::fs::read(&path).await {
        Ok(bytes) => ([(header::CONTENT_TYPE, content_type(&path))], bytes).into_response(),
        Err(_) => StatusCode::NOT_FOUND.into_response(),
    }
}
