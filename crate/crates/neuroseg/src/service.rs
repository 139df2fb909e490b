//! Local HTTP service. Every session sits behind its own read/write lock:
//! slice, mesh and query requests share it, edits and saves take it
//! exclusively. Heavy work runs on the blocking pool.

use std::collections::HashMap;
use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use neuroseg_core::enhance::WindowLevel;
use neuroseg_core::orient::{orientation_code, orientation_of};
use neuroseg_core::surface::marching_cubes;
use neuroseg_core::{Histogram, Label, PlaneId};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::error::Error;
use crate::export::export_csv;
use crate::project::{self, SaveOptions};
use crate::render::render_slice;
use crate::session::{MeasureRequest, SessionState, ToolRequest, VolumeSlot};
use crate::{nifti, Result};

pub const DEFAULT_PORT: u16 = 8765;
pub const PORT_ENV: &str = "SERVICE_PORT";

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub bind: IpAddr,
    pub port: u16,
    /// Pins measurement and project timestamps; used for reproducible runs.
    pub fixed_timestamp: Option<i64>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            bind: IpAddr::V4(Ipv4Addr::LOCALHOST),
            port: DEFAULT_PORT,
            fixed_timestamp: None,
        }
    }
}

impl ServiceConfig {
    /// Port from the flag, else `SERVICE_PORT`, else the default.
    pub fn resolve_port(flag: Option<u16>) -> std::result::Result<u16, String> {
        if let Some(p) = flag {
            return Ok(p);
        }
        match std::env::var(PORT_ENV) {
            Ok(v) => v.trim().parse().map_err(|_| format!("{PORT_ENV}={v:?} is not a port number")),
            Err(_) => Ok(DEFAULT_PORT),
        }
    }

    pub fn now(&self) -> i64 {
        self.fixed_timestamp.unwrap_or_else(|| {
            std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs() as i64)
                .unwrap_or(0)
        })
    }
}

type SessionRef = Arc<RwLock<SessionState>>;

pub struct AppState {
    config: ServiceConfig,
    sessions: RwLock<HashMap<String, SessionRef>>,
    next_id: AtomicU64,
}

impl AppState {
    pub fn new(config: ServiceConfig) -> Arc<Self> {
        Arc::new(AppState {
            config,
            sessions: RwLock::new(HashMap::new()),
            next_id: AtomicU64::new(1),
        })
    }

    fn insert(&self, s: SessionState) -> String {
        let id = format!("s{}", self.next_id.fetch_add(1, Ordering::Relaxed));
        self.sessions.write().unwrap().insert(id.clone(), Arc::new(RwLock::new(s)));
        id
    }

    fn get(&self, id: &str) -> std::result::Result<SessionRef, ApiError> {
        self.sessions
            .read()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("no session {id:?}")))
    }
}

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError {
            status,
            message: message.into(),
        }
    }

    fn unprocessable(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, message)
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        use neuroseg_core::Error as C;
        let status = match &e {
            Error::NoSlot { .. } => StatusCode::NOT_FOUND,
            Error::Core(C::EmptyHistory(_)) => StatusCode::CONFLICT,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        ApiError::new(status, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}

type ApiResult<T> = std::result::Result<T, ApiError>;

/// Request bodies are parsed leniently: no content type required and an
/// empty body reads as `{}`.
fn parse_body<T: DeserializeOwned>(body: &[u8]) -> ApiResult<T> {
    let body = if body.iter().all(u8::is_ascii_whitespace) { b"{}".as_slice() } else { body };
    serde_json::from_slice(body).map_err(|e| ApiError::unprocessable(format!("invalid request body: {e}")))
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> ApiResult<T> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
}

fn slot_summary(slot: &VolumeSlot) -> Value {
    let v = &slot.volume;
    json!({
        "dims": v.dims(),
        "frames": v.frames(),
        "spacing": v.spacing(),
        "dtype": v.dtype().name(),
        "window": slot.window,
        "labels": slot.labels.labels(),
        "color_scheme": slot.scheme,
        "undo_depth": slot.history.undo_depth(),
        "redo_depth": slot.history.redo_depth(),
    })
}

fn session_summary(id: &str, s: &SessionState) -> Value {
    json!({
        "id": id,
        "slots": s.slots.iter().map(slot_summary).collect::<Vec<_>>(),
        "measurements": s.measurements.len(),
    })
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session).delete(delete_session))
        .route("/sessions/{id}/slots/{slot}/slice", get(get_slice))
        .route("/sessions/{id}/slots/{slot}/tools/{name}", post(apply_tool))
        .route("/sessions/{id}/slots/{slot}/undo", post(undo))
        .route("/sessions/{id}/slots/{slot}/redo", post(redo))
        .route("/sessions/{id}/slots/{slot}/mesh", get(get_mesh))
        .route("/sessions/{id}/slots/{slot}/labels", get(get_labels))
        .route("/sessions/{id}/slots/{slot}/histogram", get(get_histogram))
        .route("/sessions/{id}/slots/{slot}/metadata", get(get_metadata))
        .route(
            "/sessions/{id}/measurements",
            post(create_measurement).get(list_measurements).delete(delete_measurements),
        )
        .route("/sessions/{id}/measurements.csv", get(measurements_csv))
        .route("/sessions/{id}/save", post(save))
        .route("/projects/load", post(load))
        .with_state(state)
}

/// Binds and serves until Ctrl-C.
pub async fn serve(config: ServiceConfig) -> std::io::Result<()> {
    let addr = SocketAddr::new(config.bind, config.port);
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    let app = router(AppState::new(config));
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateSession {
    volume: PathBuf,
    #[serde(default)]
    second: Option<PathBuf>,
}

async fn create_session(State(st): State<Arc<AppState>>, body: Bytes) -> ApiResult<Response> {
    let req: CreateSession = parse_body(&body)?;
    let session = blocking(move || {
        let mut paths = vec![req.volume];
        paths.extend(req.second);
        Ok(SessionState::open(&paths)?)
    })
    .await?;
    let summary = session_summary("", &session);
    let id = st.insert(session);
    let mut summary = summary;
    summary["id"] = json!(id);
    Ok((StatusCode::CREATED, Json(summary)).into_response())
}

async fn get_session(State(st): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let s = st.get(&id)?;
    let g = s.read().unwrap();
    Ok(Json(session_summary(&id, &g)))
}

async fn delete_session(State(st): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<StatusCode> {
    st.get(&id)?;
    st.sessions.write().unwrap().remove(&id);
    Ok(StatusCode::NO_CONTENT)
}

#[derive(Deserialize)]
struct SliceQuery {
    plane: PlaneId,
    index: usize,
    #[serde(default)]
    t: usize,
    window: Option<f64>,
    level: Option<f64>,
    #[serde(default)]
    overlay: bool,
}

async fn get_slice(
    State(st): State<Arc<AppState>>,
    Path((id, k)): Path<(String, usize)>,
    Query(q): Query<SliceQuery>,
) -> ApiResult<Response> {
    let s = st.get(&id)?;
    let png = blocking(move || {
        let g = s.read().unwrap();
        let slot = g.slot(k)?;
        let wl = match (q.window, q.level) {
            (None, None) => slot.window,
            (w, l) => WindowLevel::new(w.unwrap_or(slot.window.window), l.unwrap_or(slot.window.level))
                .map_err(Error::from)?,
        };
        render_slice(&slot.volume, &slot.labels, &slot.scheme, (q.plane, q.index, q.t), wl, q.overlay).map_err(
            |e| match e {
                Error::Core(neuroseg_core::Error::Range { .. }) => {
                    ApiError::new(StatusCode::RANGE_NOT_SATISFIABLE, e.to_string())
                }
                e => e.into(),
            },
        )
    })
    .await?;
    Ok(([(header::CONTENT_TYPE, "image/png")], png).into_response())
}

async fn apply_tool(
    State(st): State<Arc<AppState>>,
    Path((id, k, name)): Path<(String, usize, String)>,
    body: Bytes,
) -> ApiResult<Json<Value>> {
    if !ToolRequest::NAMES.contains(&name.as_str()) {
        return Err(ApiError::new(
            StatusCode::NOT_FOUND,
            format!("unknown tool {name:?}; available: {}", ToolRequest::NAMES.join(", ")),
        ));
    }
    let mut obj: Value = parse_body(&body)?;
    let map = obj
        .as_object_mut()
        .ok_or_else(|| ApiError::unprocessable("tool parameters must be a JSON object"))?;
    map.insert("tool".into(), Value::String(name));
    let req: ToolRequest =
        serde_json::from_value(obj).map_err(|e| ApiError::unprocessable(format!("invalid tool parameters: {e}")))?;
    let s = st.get(&id)?;
    let changed = blocking(move || Ok(s.write().unwrap().apply_tool(k, &req)?)).await?;
    Ok(Json(json!({ "changed": changed })))
}

async fn undo(State(st): State<Arc<AppState>>, Path((id, k)): Path<(String, usize)>) -> ApiResult<Json<Value>> {
    let s = st.get(&id)?;
    let changed = s.write().unwrap().undo(k)?;
    Ok(Json(json!({ "changed": changed })))
}

async fn redo(State(st): State<Arc<AppState>>, Path((id, k)): Path<(String, usize)>) -> ApiResult<Json<Value>> {
    let s = st.get(&id)?;
    let changed = s.write().unwrap().redo(k)?;
    Ok(Json(json!({ "changed": changed })))
}

#[derive(Deserialize)]
struct MeshQuery {
    label: Label,
}

/// Mesh in world millimetres, in the little-endian layout of
/// [`neuroseg_core::surface::TriMesh::to_le_bytes`].
async fn get_mesh(
    State(st): State<Arc<AppState>>,
    Path((id, k)): Path<(String, usize)>,
    Query(q): Query<MeshQuery>,
) -> ApiResult<Response> {
    let s = st.get(&id)?;
    let bytes = blocking(move || {
        let g = s.read().unwrap();
        let slot = g.slot(k)?;
        if !slot.scheme.contains(q.label) || q.label == 0 {
            return Err(ApiError::unprocessable(format!("label {} is not in the slot's color scheme", q.label)));
        }
        let mesh = marching_cubes(&slot.labels, q.label, Some(slot.volume.affine())).map_err(Error::from)?;
        Ok(mesh.to_le_bytes())
    })
    .await?;
    Ok(([(header::CONTENT_TYPE, "application/octet-stream")], bytes).into_response())
}

async fn get_labels(State(st): State<Arc<AppState>>, Path((id, k)): Path<(String, usize)>) -> ApiResult<Response> {
    let s = st.get(&id)?;
    let bytes = blocking(move || {
        let g = s.read().unwrap();
        let slot = g.slot(k)?;
        let vol = slot.labels.to_volume(slot.volume.affine().clone()).map_err(Error::from)?;
        Ok(nifti::encode(&vol, true))
    })
    .await?;
    Ok(([(header::CONTENT_TYPE, "application/gzip")], bytes).into_response())
}

#[derive(Deserialize)]
struct HistogramQuery {
    #[serde(default = "default_bins")]
    bins: usize,
}

fn default_bins() -> usize {
    256
}

async fn get_histogram(
    State(st): State<Arc<AppState>>,
    Path((id, k)): Path<(String, usize)>,
    Query(q): Query<HistogramQuery>,
) -> ApiResult<Json<Value>> {
    let s = st.get(&id)?;
    let h = blocking(move || {
        let g = s.read().unwrap();
        Ok(Histogram::compute(g.slot(k)?.volume.data(), q.bins, None).map_err(Error::from)?)
    })
    .await?;
    let edges: Vec<f64> = (0..=h.counts.len()).map(|i| h.edge(i)).collect();
    Ok(Json(json!({ "lo": h.lo, "hi": h.hi, "counts": h.counts, "edges": edges })))
}

async fn get_metadata(State(st): State<Arc<AppState>>, Path((id, k)): Path<(String, usize)>) -> ApiResult<Json<Value>> {
    let s = st.get(&id)?;
    let g = s.read().unwrap();
    let slot = g.slot(k)?;
    let v = &slot.volume;
    let orientation = orientation_of(v.affine()).map(|o| orientation_code(&o)).ok();
    let header: serde_json::Map<String, Value> =
        v.metadata().iter().map(|(k, val)| (k.clone(), Value::String(val.clone()))).collect();
    Ok(Json(json!({
        "dims": v.dims(),
        "frames": v.frames(),
        "spacing": v.spacing(),
        "dtype": v.dtype().name(),
        "affine": v.affine().0,
        "orientation": orientation,
        "range": v.min_max(),
        "source": slot.source,
        "header": header,
    })))
}

async fn create_measurement(
    State(st): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Response> {
    let req: MeasureRequest = parse_body(&body)?;
    let s = st.get(&id)?;
    let now = st.config.now();
    let record = blocking(move || Ok(s.write().unwrap().measure(&req, now)?)).await?;
    Ok((StatusCode::CREATED, Json(record)).into_response())
}

async fn list_measurements(State(st): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let s = st.get(&id)?;
    let g = s.read().unwrap();
    Ok(Json(json!(g.measurements)))
}

#[derive(Deserialize)]
struct DeleteQuery {
    id: Option<u64>,
}

/// `?id=N` deletes one record; without it the catalog is cleared.
async fn delete_measurements(
    State(st): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<DeleteQuery>,
) -> ApiResult<StatusCode> {
    let s = st.get(&id)?;
    let mut g = s.write().unwrap();
    match q.id {
        Some(mid) if !g.delete_measurement(mid) => {
            Err(ApiError::new(StatusCode::NOT_FOUND, format!("no measurement {mid}")))
        }
        Some(_) => Ok(StatusCode::NO_CONTENT),
        None => {
            g.measurements.clear();
            Ok(StatusCode::NO_CONTENT)
        }
    }
}

async fn measurements_csv(State(st): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Response> {
    let s = st.get(&id)?;
    let csv = export_csv(&s.read().unwrap().measurements);
    Ok(([(header::CONTENT_TYPE, "text/csv; charset=utf-8")], csv).into_response())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SaveRequest {
    #[serde(default)]
    path: Option<PathBuf>,
    #[serde(default)]
    embed_volumes: bool,
}

async fn save(State(st): State<Arc<AppState>>, Path(id): Path<String>, body: Bytes) -> ApiResult<Json<Value>> {
    let req: SaveRequest = parse_body(&body)?;
    let s = st.get(&id)?;
    let opts = SaveOptions {
        embed_volumes: req.embed_volumes,
        timestamp: Some(st.config.now()),
    };
    let path = blocking(move || {
        let g = s.write().unwrap();
        let path = req.path.unwrap_or_else(|| project::default_path(&g));
        project::save_project(&g, &path, opts)?;
        Ok(path)
    })
    .await?;
    Ok(Json(json!({ "path": path })))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LoadRequest {
    path: PathBuf,
}

async fn load(State(st): State<Arc<AppState>>, body: Bytes) -> ApiResult<Response> {
    let req: LoadRequest = parse_body(&body)?;
    let session = blocking(move || -> ApiResult<SessionState> { Ok(project::load_project(&req.path)?) }).await?;
    let mut summary = session_summary("", &session);
    summary["id"] = json!(st.insert(session));
    Ok((StatusCode::CREATED, Json(summary)).into_response())
}

/// Runs the service on a fresh multi-threaded runtime.
pub fn run_blocking(config: ServiceConfig) -> Result<()> {
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| Error::io("<runtime>", e))?;
    let addr = format!("{}:{}", config.bind, config.port);
    rt.block_on(serve(config)).map_err(|e| Error::io(addr, e))
}
