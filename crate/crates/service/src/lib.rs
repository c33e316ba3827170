//! HTTP API over a single project for the browser annotation UI.
//!
//! All endpoints live under `/api/v1`; images and masks travel as PNG, the
//! rest as JSON. Errors are `{"code": ..., "message": ...}` with a stable
//! machine code. Reads share the project lock, submissions and accepts take
//! it exclusively.

use std::future::Future;
use std::path::PathBuf;
use std::sync::{Arc, RwLock, RwLockReadGuard, RwLockWriteGuard};

use axum::body::Bytes;
use axum::extract::rejection::JsonRejection;
use axum::extract::{DefaultBodyLimit, Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use labelassist::imageio;
use labelassist::imgcore::{BitDepth, Image, Mask};
use labelassist::post_assist::InspectionReport;
use labelassist::selector::{CherryFlag, SampleId};
use labelassist::workbench::{LabeledRecord, Progress, Project, WorkbenchError};
use log::{error, info};
use serde::{Deserialize, Serialize};
use tokio::net::TcpListener;
use tower_http::services::ServeDir;

/// Largest accepted request body (label PNGs).
const BODY_LIMIT: usize = 64 * 1024 * 1024;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: u16,
    pub code: String,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self {
            status: status.as_u16(),
            code: code.to_string(),
            message: message.into(),
        }
    }
}

/// HTTP status for a workbench error code.
pub fn status_for(e: &WorkbenchError) -> StatusCode {
    match e {
        WorkbenchError::UnknownSample(_) => StatusCode::NOT_FOUND,
        WorkbenchError::NoUnlabeledSamples
        | WorkbenchError::NoPendingSubmission(_)
        | WorkbenchError::NoSuggestion(_)
        | WorkbenchError::AlreadyLabeled(_)
        | WorkbenchError::EmptyLabeledSet => StatusCode::CONFLICT,
        WorkbenchError::DimensionMismatch { .. } => StatusCode::UNPROCESSABLE_ENTITY,
        WorkbenchError::ConfigParse { .. }
        | WorkbenchError::InvalidConfig(_)
        | WorkbenchError::MissingDirectory(_)
        | WorkbenchError::MissingFile(_)
        | WorkbenchError::UnsupportedImageFormat(_)
        | WorkbenchError::EmptyPool(_)
        | WorkbenchError::DuplicateSample(_)
        | WorkbenchError::UnregisteredStrategy(_)
        | WorkbenchError::Storage(_)
        | WorkbenchError::Selector(_)
        | WorkbenchError::Prelabel(_)
        | WorkbenchError::Step(_)
        | WorkbenchError::Inspection(_)
        | WorkbenchError::Image(_) => StatusCode::INTERNAL_SERVER_ERROR,
    }
}

impl From<WorkbenchError> for ApiError {
    fn from(e: WorkbenchError) -> Self {
        let status = status_for(&e);
        if status.is_server_error() {
            error!("{e}");
        }
        ApiError::new(status, e.code(), e.to_string())
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "invalid_request", e.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

/// Shared handle to the served project.
#[derive(Clone)]
pub struct AppState {
    project: Arc<RwLock<Project>>,
}

impl AppState {
    pub fn new(project: Project) -> Self {
        Self {
            project: Arc::new(RwLock::new(project)),
        }
    }

    pub fn read(&self) -> RwLockReadGuard<'_, Project> {
        self.project.read().unwrap_or_else(|poisoned| poisoned.into_inner())
    }

    pub fn write(&self) -> RwLockWriteGuard<'_, Project> {
        self.project.write().unwrap_or_else(|poisoned| poisoned.into_inner())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NextResponse {
    pub sample_id: SampleId,
    pub width: u32,
    pub height: u32,
    pub has_prelabel: bool,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSummary {
    pub sample_id: SampleId,
    pub file: String,
    pub width: u32,
    pub height: u32,
    pub channels: u8,
    pub bit_depth: u32,
    pub labeled: bool,
    pub cherry_pick: Option<CherryFlag>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostprocessSummary {
    pub changed_pixels: usize,
    pub dsc_before_after: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubmitResponse {
    pub sample_id: SampleId,
    /// Absent when inspection is disabled.
    pub inspection: Option<InspectionReport>,
    /// Absent when post-processing is disabled.
    pub postprocess: Option<PostprocessSummary>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AcceptRequest {
    pub use_postprocessed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcceptResponse {
    pub sample_id: SampleId,
    pub mask_file: String,
    pub gamma: Option<f64>,
    pub warning: Option<bool>,
    pub accepted_postprocess: bool,
    pub timestamp_ms: u64,
    pub progress: Progress,
}

impl AcceptResponse {
    fn new(r: LabeledRecord, progress: Progress) -> Self {
        Self {
            mask_file: r
                .mask_path
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default(),
            sample_id: r.sample_id,
            gamma: r.gamma,
            warning: r.warning,
            accepted_postprocess: r.accepted_postprocess,
            timestamp_ms: r.timestamp_ms,
            progress,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CherryPickRequest {
    pub sample_id: SampleId,
    pub flag: CherryFlag,
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
pub struct ImageQuery {
    /// Pre-processed rendition (default) or the raw sample.
    pub preprocessed: Option<bool>,
    /// With `preprocessed=false`, keep 16-bit samples at 16 bit.
    #[serde(default)]
    pub raw16: bool,
}

fn png(bytes: Vec<u8>) -> Response {
    ([(header::CONTENT_TYPE, "image/png")], bytes).into_response()
}

fn image_png(img: &Image) -> ApiResult<Response> {
    Ok(png(imageio::encode_image_png(img).map_err(WorkbenchError::from)?))
}

fn mask_png(m: &Mask) -> ApiResult<Response> {
    Ok(png(imageio::encode_mask_png(m).map_err(WorkbenchError::from)?))
}

async fn next(State(s): State<AppState>) -> ApiResult<Json<NextResponse>> {
    let p = s.read();
    let sel = p.select_next()?;
    let info = p.sample(&sel.id)?;
    let has_prelabel = p.prelabel_for(&sel.id)?.is_some();
    Ok(Json(NextResponse {
        width: info.width,
        height: info.height,
        sample_id: sel.id,
        has_prelabel,
        score: sel.score,
    }))
}

async fn samples(State(s): State<AppState>) -> Json<Vec<SampleSummary>> {
    let p = s.read();
    let picks = p.cherry_picks().flags();
    Json(
        p.samples()
            .iter()
            .map(|info| SampleSummary {
                sample_id: info.id.clone(),
                file: info.file_name(),
                width: info.width,
                height: info.height,
                channels: info.channels,
                bit_depth: info.depth.bits(),
                labeled: p.is_labeled(&info.id),
                cherry_pick: picks.get(&info.id).copied(),
            })
            .collect(),
    )
}

async fn progress(State(s): State<AppState>) -> Json<Progress> {
    Json(s.read().progress())
}

async fn sample_image(
    State(s): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<ImageQuery>,
) -> ApiResult<Response> {
    let id = SampleId::new(id);
    let p = s.read();
    if q.preprocessed.unwrap_or(true) {
        image_png(&imageio::render_8bit(&p.display_image(&id)?))
    } else {
        let raw = p.raw_image(&id)?;
        if q.raw16 || raw.depth() == BitDepth::Eight {
            image_png(&raw)
        } else {
            image_png(&imageio::render_8bit(&raw))
        }
    }
}

async fn sample_prelabel(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    match s.read().prelabel_for(&SampleId::new(id))? {
        Some(m) => mask_png(&m),
        None => Ok(StatusCode::NO_CONTENT.into_response()),
    }
}

async fn sample_stored_label(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    match s.read().stored_label(&SampleId::new(id))? {
        Some(m) => mask_png(&m),
        None => Ok(StatusCode::NO_CONTENT.into_response()),
    }
}

async fn postprocess_preview(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let id = SampleId::new(id);
    let p = s.read();
    p.sample(&id)?;
    let pending = p
        .pending(&id)
        .ok_or_else(|| WorkbenchError::NoPendingSubmission(id.clone()))?;
    let suggestion = pending
        .submission
        .suggestion
        .as_ref()
        .ok_or_else(|| WorkbenchError::NoSuggestion(id.clone()))?;
    mask_png(&suggestion.after)
}

async fn submit_label(State(s): State<AppState>, Path(id): Path<String>, body: Bytes) -> ApiResult<Json<SubmitResponse>> {
    let id = SampleId::new(id);
    let mask = imageio::decode_mask(&body)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "invalid_mask", format!("label body: {e}")))?;
    let mut p = s.write();
    // Unknown ids take precedence over a malformed shape.
    p.sample(&id)?;
    let sub = p.submit_label(&id, mask)?;
    Ok(Json(SubmitResponse {
        sample_id: id,
        inspection: sub.report,
        postprocess: sub.suggestion.map(|x| PostprocessSummary {
            changed_pixels: x.changed_pixels,
            dsc_before_after: x.dsc_before_after,
        }),
    }))
}

async fn accept_label(
    State(s): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<AcceptRequest>, JsonRejection>,
) -> ApiResult<Json<AcceptResponse>> {
    let Json(req) = body?;
    let id = SampleId::new(id);
    let mut p = s.write();
    let record = p.accept_label(&id, req.use_postprocessed)?;
    info!("accepted label for {id}");
    Ok(Json(AcceptResponse::new(record, p.progress())))
}

async fn cherry_pick(
    State(s): State<AppState>,
    body: Result<Json<CherryPickRequest>, JsonRejection>,
) -> ApiResult<Json<CherryPickRequest>> {
    let Json(req) = body?;
    s.write().cherry_pick(&req.sample_id, req.flag)?;
    Ok(Json(req))
}

async fn api_not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such endpoint")
}

/// Routes for `state`; when `ui_dir` is given its files are served at `/`.
pub fn router(state: AppState, ui_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/next", get(next))
        .route("/samples", get(samples))
        .route("/progress", get(progress))
        .route("/sample/{id}/image", get(sample_image))
        .route("/sample/{id}/prelabel", get(sample_prelabel))
        .route("/sample/{id}/label", get(sample_stored_label).post(submit_label))
        .route("/sample/{id}/postprocess", get(postprocess_preview))
        .route("/sample/{id}/accept", post(accept_label))
        .route("/cherrypick", post(cherry_pick))
        .fallback(api_not_found);
    let app = Router::new()
        .nest("/api/v1", api)
        .layer(DefaultBodyLimit::max(BODY_LIMIT))
        .with_state(state);
    match ui_dir {
        Some(dir) => app.fallback_service(ServeDir::new(dir)),
        None => app.fallback(api_not_found),
    }
}

/// Serves `router` on `listener` until `shutdown` resolves.
pub async fn serve(
    listener: TcpListener,
    router: Router,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router).with_graceful_shutdown(shutdown).await
}
