//! JSON-over-HTTP interface to one labeling session.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::{Arc, RwLock};

use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use fdive_core::advisor::RankingView;
use fdive_core::projection::AnnotatedEmbedding;
use fdive_core::session::{Overlay, StatusSummary};
use fdive_core::som::TreeView;
use fdive_core::{DescriptorId, Error, ItemSource, Label, NormId, Session, SimilarityMeasure};
use serde::{Deserialize, Serialize};
use serde_json::json;

#[derive(Clone)]
pub struct AppState {
    pub session: Arc<RwLock<Session>>,
    /// Where the session is saved after label submissions and advances.
    pub state_file: Option<PathBuf>,
}

impl AppState {
    pub fn new(session: Session, state_file: Option<PathBuf>) -> Self {
        AppState {
            session: Arc::new(RwLock::new(session)),
            state_file,
        }
    }
}

pub struct ApiError {
    status: StatusCode,
    body: serde_json::Value,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError {
            status,
            body: json!({ "error": message.into() }),
        }
    }

    fn not_found(what: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, what)
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let message = e.to_string();
        match e {
            Error::UnknownIds(ids) => ApiError {
                status: StatusCode::BAD_REQUEST,
                body: json!({ "error": message, "unknown_ids": ids }),
            },
            Error::InsufficientLabels(_) | Error::PhaseTransition { .. } => {
                ApiError::new(StatusCode::CONFLICT, message)
            }
            Error::Parameter(_) => ApiError::new(StatusCode::BAD_REQUEST, message),
            _ => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, message),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

fn read(state: &AppState) -> std::sync::RwLockReadGuard<'_, Session> {
    state.session.read().unwrap_or_else(|p| p.into_inner())
}

fn persist(state: &AppState, session: &Session) -> Result<(), ApiError> {
    if let Some(path) = &state.state_file {
        session.save(path)?;
    }
    Ok(())
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/session/status", get(status))
        .route("/api/query", get(query))
        .route("/api/labels", post(labels))
        .route("/api/advance", post(advance))
        .route("/api/advisor/ranking", get(ranking))
        .route("/api/model/tree", get(tree))
        .route("/api/model/node/{node}/cell/{cell}/items", get(cell_items))
        .route("/api/projection", get(projection))
        .route("/api/items/{id}/thumbnail", get(thumbnail))
        .with_state(state)
}

async fn status(State(state): State<AppState>) -> Json<StatusSummary> {
    Json(read(&state).status())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct QueryItem {
    pub id: String,
    pub label: Label,
    /// Image endpoint for image corpora.
    pub thumbnail: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct QueryResponse {
    pub iteration: u32,
    pub items: Vec<QueryItem>,
}

async fn query(State(state): State<AppState>) -> Json<QueryResponse> {
    let session = read(&state);
    let items = session
        .query()
        .iter()
        .map(|id| {
            let is_image = matches!(session.corpus().get(id).map(|i| &i.source), Some(ItemSource::Image(_)));
            QueryItem {
                id: id.clone(),
                label: session.labels().get(id),
                thumbnail: is_image.then(|| format!("/api/items/{id}/thumbnail")),
            }
        })
        .collect();
    Json(QueryResponse {
        iteration: session.iteration(),
        items,
    })
}

#[derive(Debug, Serialize, Deserialize)]
pub struct LabelRequest {
    pub assignments: BTreeMap<String, Label>,
}

async fn labels(State(state): State<AppState>, Json(req): Json<LabelRequest>) -> ApiResult<StatusSummary> {
    let mut session = state.session.write().unwrap_or_else(|p| p.into_inner());
    let summary = session.submit_labels(&req.assignments)?;
    persist(&state, &session)?;
    Ok(Json(summary))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeasureRef {
    pub descriptor: String,
    pub p: f64,
}

impl MeasureRef {
    fn resolve(&self) -> Result<SimilarityMeasure, ApiError> {
        let norm = NormId::from_p(self.p)
            .ok_or_else(|| ApiError::new(StatusCode::BAD_REQUEST, format!("unsupported p = {}", self.p)))?;
        Ok(SimilarityMeasure::new(DescriptorId::new(self.descriptor.clone()), norm))
    }
}

#[derive(Debug, Default, Serialize, Deserialize)]
pub struct AdvanceRequest {
    #[serde(rename = "override", default)]
    pub measure_override: Option<MeasureRef>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AdvanceResponse {
    pub iteration: u32,
    pub ranking: RankingView,
    pub selected: SimilarityMeasure,
    pub overridden: bool,
    pub tree_id: u32,
    pub query_ids: Vec<String>,
}

async fn advance(State(state): State<AppState>, body: Option<Json<AdvanceRequest>>) -> ApiResult<AdvanceResponse> {
    let req = body.map(|Json(r)| r).unwrap_or_default();
    let measure = req.measure_override.as_ref().map(MeasureRef::resolve).transpose()?;
    let worker = state.clone();
    tokio::task::spawn_blocking(move || {
        let mut session = worker.session.write().unwrap_or_else(|p| p.into_inner());
        let outcome = session.advance(measure)?;
        persist(&worker, &session)?;
        Ok(Json(AdvanceResponse {
            iteration: outcome.iteration,
            ranking: outcome.ranking.to_view(),
            selected: outcome.selected,
            overridden: outcome.overridden,
            tree_id: outcome.tree_id,
            query_ids: outcome.query,
        }))
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
}

async fn ranking(State(state): State<AppState>) -> ApiResult<RankingView> {
    read(&state)
        .latest_ranking()
        .map(|r| Json(r.to_view()))
        .ok_or_else(|| ApiError::not_found("no ranking yet; advance the session first"))
}

#[derive(Debug, Default, Deserialize)]
pub struct TreeParams {
    pub full: Option<String>,
}

async fn tree(State(state): State<AppState>, Query(params): Query<TreeParams>) -> ApiResult<TreeView> {
    let full = matches!(params.full.as_deref(), Some("1" | "true"));
    read(&state)
        .tree()
        .map(|t| Json(t.view(full)))
        .ok_or_else(|| ApiError::not_found("no model yet; advance the session first"))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CellItem {
    pub id: String,
    /// Label when the model was trained.
    pub label: Label,
    pub classification: Option<Label>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CellItems {
    pub node: usize,
    pub cell: usize,
    pub items: Vec<CellItem>,
}

async fn cell_items(State(state): State<AppState>, Path((node, cell)): Path<(usize, usize)>) -> ApiResult<CellItems> {
    let session = read(&state);
    let tree = session
        .tree()
        .ok_or_else(|| ApiError::not_found("no model yet; advance the session first"))?;
    let members = tree
        .cell_items(node, cell)
        .ok_or_else(|| ApiError::not_found(format!("no cell {cell} in node {node}")))?;
    let classification = session.classification();
    let items = members
        .into_iter()
        .map(|(id, label)| CellItem {
            id: id.to_string(),
            label,
            classification: classification.and_then(|c| c.get(id).copied()),
        })
        .collect();
    Ok(Json(CellItems { node, cell, items }))
}

#[derive(Debug, Default, Deserialize)]
pub struct ProjectionParams {
    pub overlay: Option<Overlay>,
    pub descriptor: Option<String>,
    pub p: Option<f64>,
}

async fn projection(State(state): State<AppState>, Query(params): Query<ProjectionParams>) -> ApiResult<AnnotatedEmbedding> {
    let overlay = params.overlay.unwrap_or(Overlay::Labels);
    match (params.descriptor, params.p) {
        (Some(descriptor), Some(p)) => {
            let measure = MeasureRef { descriptor, p }.resolve()?;
            let worker = state.clone();
            tokio::task::spawn_blocking(move || Ok(Json(read(&worker).projection_for(&measure)?)))
                .await
                .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
        }
        (None, None) => read(&state)
            .projection(overlay)
            .map(Json)
            .ok_or_else(|| ApiError::not_found("no projection yet; advance the session first")),
        _ => Err(ApiError::new(StatusCode::BAD_REQUEST, "descriptor and p must be given together")),
    }
}

async fn thumbnail(State(state): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let path = {
        let session = read(&state);
        match session.corpus().get(&id).map(|i| &i.source) {
            Some(ItemSource::Image(path)) => path.clone(),
            Some(ItemSource::Vector(_)) => return Err(ApiError::not_found(format!("item {id} has no image"))),
            None => return Err(ApiError::not_found(format!("unknown item {id}"))),
        }
    };
    let bytes = tokio::fs::read(&path)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    let mime = match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("png") => "image/png",
        Some("jpg" | "jpeg") => "image/jpeg",
        _ => "application/octet-stream",
    };
    Ok(([(header::CONTENT_TYPE, mime)], bytes).into_response())
}
