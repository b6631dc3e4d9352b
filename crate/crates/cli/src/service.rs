//! Local JSON service.
//!
//! | method | path          | body / query                               | response                                     |
//! |--------|---------------|--------------------------------------------|----------------------------------------------|
//! | POST   | `/detect`     | `{id?, stroke}`                            | `{id, result}`                               |
//! | GET    | `/strokes`    | `?person&round&shape[&id]`                 | `{id, stroke, candidates, revision}`         |
//! | PUT    | `/labels`     | `{id?, stroke: "p-r-s", labels, revision}` | `{id, stroke, revision}`                     |
//! | GET    | `/candidates` | `{id?, stroke}` or `?person&round&shape`   | `{id, n, candidates}`                        |
//! | POST   | `/candidates` | `{id?, stroke}`                            | `{id, n, candidates}`                        |
//!
//! Errors are `{id, error: {code, message}}` with status 400 (`bad_request`),
//! 404 (`not_found`), 409 (`conflict`) or 500 (`internal`).

use crate::{detect_record, detection_json};
use axum::body::Bytes;
use axum::extract::{Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::Router;
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;
use serde_json::Value;
use sha2::{Digest, Sha256};
use std::collections::HashMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use strokeseg::eval::dataset_file_name;
use strokeseg::pipeline::{DetectError, Detector};
use strokeseg::stroke::{
    candidate_corners_with, parse_stk, resample, straw_of_points, CandidateCornerSet, StrokeError, StrokeRecord,
};
use strokeseg::{Point, PointLabel, SourceId};

pub struct AppState {
    detector: Arc<Detector>,
    dataset: PathBuf,
    locks: Mutex<HashMap<SourceId, Arc<tokio::sync::Mutex<()>>>>,
    next_id: AtomicU64,
}

impl AppState {
    pub fn new(detector: Detector, dataset: PathBuf) -> Arc<Self> {
        Arc::new(Self {
            detector: Arc::new(detector),
            dataset,
            locks: Mutex::new(HashMap::new()),
            next_id: AtomicU64::new(1),
        })
    }

    fn lock_for(&self, id: SourceId) -> Arc<tokio::sync::Mutex<()>> {
        self.locks.lock().expect("lock table poisoned").entry(id).or_default().clone()
    }

    fn fresh_id(&self) -> Value {
        Value::from(format!("req-{}", self.next_id.fetch_add(1, Ordering::Relaxed)))
    }

    fn stroke_path(&self, id: SourceId) -> PathBuf {
        self.dataset.join(dataset_file_name(id))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCode {
    BadRequest,
    NotFound,
    Conflict,
    Internal,
}

impl ErrorCode {
    fn status(self) -> StatusCode {
        match self {
            ErrorCode::BadRequest => StatusCode::BAD_REQUEST,
            ErrorCode::NotFound => StatusCode::NOT_FOUND,
            ErrorCode::Conflict => StatusCode::CONFLICT,
            ErrorCode::Internal => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            ErrorCode::BadRequest => "bad_request",
            ErrorCode::NotFound => "not_found",
            ErrorCode::Conflict => "conflict",
            ErrorCode::Internal => "internal",
        }
    }
}

struct ApiError {
    id: Value,
    code: ErrorCode,
    message: String,
}

impl ApiError {
    fn new(id: &Value, code: ErrorCode, message: impl Into<String>) -> Self {
        Self {
            id: id.clone(),
            code,
            message: message.into(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = serde_json::json!({
            "id": self.id,
            "error": {"code": self.code.as_str(), "message": self.message},
        });
        json_response(self.code.status(), body.to_string())
    }
}

fn json_response(status: StatusCode, body: String) -> Response {
    (status, [(axum::http::header::CONTENT_TYPE, "application/json")], body).into_response()
}

fn ok<T: Serialize>(body: &T) -> Response {
    json_response(StatusCode::OK, serde_json::to_string(body).expect("responses serialize"))
}

type ApiResult = Result<Response, ApiError>;

/// Parses a JSON body, taking the request id out first so that even a
/// malformed request gets its id echoed.
fn parse_body<T: serde::de::DeserializeOwned>(state: &AppState, body: &[u8]) -> Result<(Value, T), ApiError> {
    let value: Value = serde_json::from_slice(body)
        .map_err(|e| ApiError::new(&state.fresh_id(), ErrorCode::BadRequest, format!("malformed JSON: {e}")))?;
    let id = match value.get("id") {
        Some(v) if !v.is_null() => v.clone(),
        _ => state.fresh_id(),
    };
    let parsed = serde_json::from_value(value).map_err(|e| ApiError::new(&id, ErrorCode::BadRequest, e.to_string()))?;
    Ok((id, parsed))
}

#[derive(Deserialize)]
struct StrokeBody {
    stroke: StrokeRecord,
}

#[derive(Serialize)]
struct DetectResponse<'a> {
    id: &'a Value,
    result: &'a RawValue,
}

async fn detect(State(state): State<Arc<AppState>>, body: Bytes) -> ApiResult {
    let (id, req): (Value, StrokeBody) = parse_body(&state, &body)?;
    let detector = state.detector.clone();
    let outcome = tokio::task::spawn_blocking(move || detect_record(&detector, req.stroke))
        .await
        .map_err(|e| ApiError::new(&id, ErrorCode::Internal, e.to_string()))?;
    let result = outcome.map_err(|e| {
        let code = match e {
            DetectError::TooFewPoints(_) | DetectError::Stroke(_) => ErrorCode::BadRequest,
            _ => ErrorCode::Internal,
        };
        ApiError::new(&id, code, e.to_string())
    })?;
    let raw = RawValue::from_string(detection_json(&result.1)).expect("detection JSON is valid");
    Ok(ok(&DetectResponse { id: &id, result: &raw }))
}

#[derive(Deserialize)]
struct StrokeQuery {
    person: Option<String>,
    round: Option<String>,
    shape: Option<String>,
    id: Option<String>,
}

impl StrokeQuery {
    fn request_id(&self, state: &AppState) -> Value {
        self.id.clone().map(Value::from).unwrap_or_else(|| state.fresh_id())
    }

    fn source_id(&self, id: &Value) -> Result<SourceId, ApiError> {
        let field = |name: &str, v: &Option<String>| -> Result<u32, ApiError> {
            let v = v.as_deref().ok_or_else(|| ApiError::new(id, ErrorCode::BadRequest, format!("missing `{name}`")))?;
            v.parse()
                .map_err(|_| ApiError::new(id, ErrorCode::BadRequest, format!("`{name}` must be a non-negative integer")))
        };
        Ok(SourceId::new(field("person", &self.person)?, field("round", &self.round)?, field("shape", &self.shape)?))
    }
}

fn revision_of(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Reads a stored stroke; the record and the revision of its bytes.
fn read_stored(state: &AppState, req_id: &Value, sid: SourceId) -> Result<(StrokeRecord, String), ApiError> {
    let path = state.stroke_path(sid);
    let bytes = match std::fs::read(&path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(ApiError::new(req_id, ErrorCode::NotFound, format!("no stroke {sid}")));
        }
        Err(e) => return Err(ApiError::new(req_id, ErrorCode::Internal, e.to_string())),
    };
    let text = String::from_utf8_lossy(&bytes);
    let mut rec = parse_stk(&text).map_err(|e| ApiError::new(req_id, ErrorCode::Internal, format!("stored stroke {sid} is corrupt: {e}")))?;
    rec.source_id = Some(sid);
    Ok((rec, revision_of(&bytes)))
}

fn candidates_of(state: &AppState, points: &[Point]) -> CandidateCornerSet {
    let n = points.len();
    if n < 3 {
        return CandidateCornerSet {
            indices: (0..n).collect(),
        };
    }
    let cfg = state.detector.config();
    candidate_corners_with(&straw_of_points(points, cfg.straw_window.min((n - 1) / 2)), &cfg.walk)
}

#[derive(Serialize)]
struct StrokeResponse<'a> {
    id: &'a Value,
    stroke: &'a StrokeRecord,
    candidates: CandidateCornerSet,
    revision: String,
}

async fn strokes(State(state): State<Arc<AppState>>, Query(q): Query<StrokeQuery>) -> ApiResult {
    let id = q.request_id(&state);
    let sid = q.source_id(&id)?;
    let (rec, revision) = read_stored(&state, &id, sid)?;
    let candidates = candidates_of(&state, &rec.points);
    Ok(ok(&StrokeResponse {
        id: &id,
        stroke: &rec,
        candidates,
        revision,
    }))
}

#[derive(Deserialize)]
struct LabelsBody {
    stroke: SourceId,
    labels: Vec<PointLabel>,
    revision: String,
}

#[derive(Serialize)]
struct LabelsResponse<'a> {
    id: &'a Value,
    stroke: SourceId,
    revision: String,
}

/// Writes `bytes` next to `path` and renames over it.
fn write_atomically(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

async fn labels(State(state): State<Arc<AppState>>, body: Bytes) -> ApiResult {
    let (id, req): (Value, LabelsBody) = parse_body(&state, &body)?;
    let lock = state.lock_for(req.stroke);
    let _guard = lock.lock().await;
    let (mut rec, current) = read_stored(&state, &id, req.stroke)?;
    if current != req.revision {
        return Err(ApiError::new(
            &id,
            ErrorCode::Conflict,
            format!("stroke {} changed since revision {}", req.stroke, req.revision),
        ));
    }
    if req.labels.len() != rec.points.len() {
        return Err(ApiError::new(
            &id,
            ErrorCode::BadRequest,
            format!("{} labels for {} points", req.labels.len(), rec.points.len()),
        ));
    }
    rec.labels = req.labels;
    let bytes = rec.to_stk().into_bytes();
    let path = state.stroke_path(req.stroke);
    let write_path = path.clone();
    let data = bytes.clone();
    tokio::task::spawn_blocking(move || write_atomically(&write_path, &data))
        .await
        .map_err(|e| ApiError::new(&id, ErrorCode::Internal, e.to_string()))?
        .map_err(|e| ApiError::new(&id, ErrorCode::Internal, format!("{}: {e}", path.display())))?;
    Ok(ok(&LabelsResponse {
        id: &id,
        stroke: req.stroke,
        revision: revision_of(&bytes),
    }))
}

#[derive(Serialize)]
struct CandidatesResponse<'a> {
    id: &'a Value,
    n: usize,
    candidates: CandidateCornerSet,
}

fn stroke_candidates(state: &AppState, id: Value, record: StrokeRecord) -> ApiResult {
    let bad = |e: StrokeError| ApiError::new(&id, ErrorCode::BadRequest, e.to_string());
    let raw = record.into_raw().map_err(bad)?;
    let stk = resample(&raw, state.detector.config().n).map_err(bad)?;
    Ok(ok(&CandidatesResponse {
        id: &id,
        n: stk.len(),
        candidates: candidates_of(state, stk.points()),
    }))
}

async fn candidates_get(State(state): State<Arc<AppState>>, Query(q): Query<StrokeQuery>, body: Bytes) -> ApiResult {
    if body.iter().all(u8::is_ascii_whitespace) {
        let id = q.request_id(&state);
        let sid = q.source_id(&id)?;
        let (rec, _) = read_stored(&state, &id, sid)?;
        return Ok(ok(&CandidatesResponse {
            id: &id,
            n: rec.points.len(),
            candidates: candidates_of(&state, &rec.points),
        }));
    }
    let (id, req): (Value, StrokeBody) = parse_body(&state, &body)?;
    stroke_candidates(&state, id, req.stroke)
}

async fn candidates_post(State(state): State<Arc<AppState>>, body: Bytes) -> ApiResult {
    let (id, req): (Value, StrokeBody) = parse_body(&state, &body)?;
    stroke_candidates(&state, id, req.stroke)
}

async fn not_found(State(state): State<Arc<AppState>>, uri: axum::http::Uri) -> ApiError {
    ApiError::new(&state.fresh_id(), ErrorCode::NotFound, format!("no endpoint {}", uri.path()))
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/detect", post(detect))
        .route("/strokes", get(strokes))
        .route("/labels", put(labels))
        .route("/candidates", get(candidates_get).post(candidates_post))
        .fallback(not_found)
        .with_state(state)
}

pub async fn serve(listener: tokio::net::TcpListener, state: Arc<AppState>) -> std::io::Result<()> {
    axum::serve(listener, router(state)).await
}
