//! HTTP routes. Every body is JSON except the CSV upload and HTML export;
//! every error is an [`ApiError`].

use axum::body::Bytes;
use axum::extract::rejection::{BytesRejection, JsonRejection, PathRejection, QueryRejection};
use axum::extract::{DefaultBodyLimit, FromRequest, Path, Query, Request, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, patch, post, put};
use axum::{Json, Router};
use medley_core::canvas::{CanvasElement, CanvasState, ElementSpec, Geometry, LinkMode, ViewSpec, WidgetSpec};
use medley_core::catalog::{AttributeAssignment, Intent};
use medley_core::dataset::{AttributeMeta, Dataset};
use medley_core::emitter::{emit_chart_spec_with, export_dashboard, ExportFormat};
use medley_core::engine::{Diagnostic, RankedCollection, Recommendations, UserInput};
use medley_core::interactions::{self, Effect, InteractionLink, SelectionEvent, TargetEffect};
use medley_core::interestingness::InterestingnessScore;
use medley_core::session::{ElementPatch, Session};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::ApiError;
use crate::state::{AppState, SharedSession};

/// All routes. Request bodies are capped at `maxUploadBytes`.
pub fn router(state: AppState) -> Router {
    let limit = state.config().max_upload_bytes;
    Router::new()
        .route("/health", get(health))
        .route("/catalog", get(catalog))
        .route("/datasets", post(upload_dataset))
        .route("/datasets/{id}", get(get_dataset))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/recommendations", get(recommendations))
        .route("/sessions/{id}/input", patch(update_input))
        .route("/sessions/{id}/canvas/elements", post(add_elements))
        .route("/sessions/{id}/canvas/elements/{eid}", patch(patch_element).delete(remove_element))
        .route("/sessions/{id}/links", get(links))
        .route("/sessions/{id}/links/{src}/{dst}", put(set_link))
        .route("/sessions/{id}/events", post(events))
        .route("/sessions/{id}/export", get(export))
        .fallback(|| async { ApiError::new(StatusCode::NOT_FOUND, "NotFound", "no such route") })
        .method_not_allowed_fallback(|| async {
            ApiError::new(StatusCode::METHOD_NOT_ALLOWED, "MethodNotAllowed", "method not allowed")
        })
        .layer(DefaultBodyLimit::max(limit))
        .with_state(state)
}

/// JSON body extractor whose rejections are [`ApiError`]s.
pub struct ApiJson<T>(pub T);

impl<S: Send + Sync, T: DeserializeOwned> FromRequest<S> for ApiJson<T> {
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, ApiError> {
        let Json(v) = Json::<T>::from_request(req, state).await.map_err(|e: JsonRejection| ApiError::from(e))?;
        Ok(ApiJson(v))
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn query<T>(q: Result<Query<T>, QueryRejection>) -> ApiResult<T> {
    q.map(|Query(v)| v).map_err(ApiError::from)
}

fn path<T>(p: Result<Path<T>, PathRejection>) -> ApiResult<T> {
    p.map(|Path(v)| v).map_err(ApiError::from)
}

fn read(s: &SharedSession) -> std::sync::RwLockReadGuard<'_, Session> {
    s.read().unwrap_or_else(|p| p.into_inner())
}

fn write(s: &SharedSession) -> std::sync::RwLockWriteGuard<'_, Session> {
    s.write().unwrap_or_else(|p| p.into_inner())
}

async fn health() -> Json<Value> {
    Json(serde_json::json!({"status": "ok"}))
}

async fn catalog(State(state): State<AppState>) -> Response {
    ([(header::CONTENT_TYPE, "application/json")], state.catalog().to_json()).into_response()
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct DatasetResponse {
    pub dataset_id: String,
    pub row_count: usize,
    pub attributes: Vec<AttributeMeta>,
}

impl DatasetResponse {
    fn of(ds: &Dataset) -> Self {
        DatasetResponse {
            dataset_id: ds.id().to_string(),
            row_count: ds.row_count(),
            attributes: ds.attributes().to_vec(),
        }
    }
}

async fn upload_dataset(
    State(state): State<AppState>,
    body: Result<Bytes, BytesRejection>,
) -> ApiResult<(StatusCode, Json<DatasetResponse>)> {
    let body = body?;
    let ds = tokio::task::spawn_blocking(move || state.add_dataset(&body))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))??;
    Ok((StatusCode::CREATED, Json(DatasetResponse::of(&ds))))
}

async fn get_dataset(
    State(state): State<AppState>,
    id: Result<Path<String>, PathRejection>,
) -> ApiResult<Json<DatasetResponse>> {
    let ds = state.dataset(&path(id)?)?;
    Ok(Json(DatasetResponse::of(&ds)))
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct CreateSession {
    pub dataset_id: String,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SessionResponse {
    pub session_id: String,
    pub dataset_id: String,
    pub input: UserInput,
    pub canvas: CanvasState,
    pub links: Vec<InteractionLink>,
    /// Mutations applied so far, including session creation.
    pub seq: u64,
}

impl SessionResponse {
    fn of(s: &Session) -> Self {
        SessionResponse {
            session_id: s.id().to_string(),
            dataset_id: s.dataset().id().to_string(),
            input: s.input().clone(),
            canvas: s.canvas().clone(),
            links: s.links(),
            seq: s.seq(),
        }
    }
}

async fn create_session(
    State(state): State<AppState>,
    ApiJson(req): ApiJson<CreateSession>,
) -> ApiResult<(StatusCode, Json<SessionResponse>)> {
    let s = state.create_session(&req.dataset_id)?;
    let body = SessionResponse::of(&read(&s));
    Ok((StatusCode::CREATED, Json(body)))
}

async fn get_session(
    State(state): State<AppState>,
    id: Result<Path<String>, PathRejection>,
) -> ApiResult<Json<SessionResponse>> {
    let s = state.session(&path(id)?)?;
    let body = SessionResponse::of(&read(&s));
    Ok(Json(body))
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, rename_all = "camelCase", deny_unknown_fields)]
pub struct RecommendationQuery {
    pub refresh: bool,
    /// Include a Vega-Lite spec per view (default true).
    pub charts: Option<bool>,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RecommendationsResponse {
    pub session_id: String,
    /// True when the canvas or input changed after this list was computed.
    pub stale: bool,
    pub round_robin: bool,
    pub recomputations: u64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<Diagnostic>,
    pub collections: Vec<CollectionBody>,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CollectionBody {
    pub rank: usize,
    pub code: String,
    pub intent: Intent,
    pub objective: String,
    pub primary_attributes: Vec<String>,
    pub assignment: AttributeAssignment,
    pub relevance: f64,
    pub attr_match: f64,
    pub coverage: f64,
    pub explicit_match: f64,
    pub mean_interestingness: f64,
    /// Views in display order.
    pub views: Vec<ViewBody>,
    pub widgets: Vec<WidgetSpec>,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ViewBody {
    pub view: ViewSpec,
    pub in_canvas: bool,
    pub attr_overlap: usize,
    pub explicit_overlap: usize,
    pub interestingness: InterestingnessScore,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chart: Option<Value>,
}

fn collection_body(
    rank: usize,
    c: &RankedCollection,
    session: &Session,
    charts: bool,
) -> ApiResult<CollectionBody> {
    let views = c
        .ranked_views
        .iter()
        .map(|rv| {
            let chart = charts
                .then(|| emit_chart_spec_with(&rv.view, session.dataset(), session.colors(), &Default::default(), &[]))
                .transpose()?;
            Ok(ViewBody {
                view: rv.view.clone(),
                in_canvas: rv.in_canvas,
                attr_overlap: rv.attr_overlap,
                explicit_overlap: rv.explicit_overlap,
                interestingness: rv.interestingness,
                chart,
            })
        })
        .collect::<ApiResult<_>>()?;
    Ok(CollectionBody {
        rank,
        code: c.collection.code.clone(),
        intent: c.collection.intent,
        objective: c.collection.objective.clone(),
        primary_attributes: c.collection.primary_attributes.clone(),
        assignment: c.collection.assignment.clone(),
        relevance: c.relevance,
        attr_match: c.attr_match,
        coverage: c.coverage,
        explicit_match: c.explicit_match,
        mean_interestingness: c.mean_interestingness,
        views,
        widgets: c.collection.widgets.clone(),
    })
}

pub fn recommendations_body(
    session: &Session,
    recs: &Recommendations,
    stale: bool,
    charts: bool,
) -> ApiResult<RecommendationsResponse> {
    Ok(RecommendationsResponse {
        session_id: session.id().to_string(),
        stale,
        round_robin: recs.round_robin,
        recomputations: session.recomputations(),
        diagnostics: recs.diagnostics.clone(),
        collections: recs
            .collections
            .iter()
            .enumerate()
            .map(|(i, c)| collection_body(i + 1, c, session, charts))
            .collect::<ApiResult<_>>()?,
    })
}

/// Returns the cached list unless `refresh` is set or nothing has been
/// computed yet; canvas edits never trigger a recomputation on their own.
async fn recommendations(
    State(state): State<AppState>,
    id: Result<Path<String>, PathRejection>,
    q: Result<Query<RecommendationQuery>, QueryRejection>,
) -> ApiResult<Json<RecommendationsResponse>> {
    let q = query(q)?;
    let s = state.session(&path(id)?)?;
    let charts = q.charts.unwrap_or(true);
    let body = tokio::task::spawn_blocking(move || {
        if !q.refresh {
            let guard = read(&s);
            if let Some((recs, stale)) = guard.cached_recommendations() {
                return recommendations_body(&guard, &recs, stale, charts);
            }
        }
        let mut guard = write(&s);
        let recs = guard.refresh_recommendations()?;
        recommendations_body(&guard, &recs, false, charts)
    })
    .await
    .map_err(|e| ApiError::internal(e.to_string()))??;
    Ok(Json(body))
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, rename_all = "camelCase", deny_unknown_fields)]
pub struct InputPatch {
    pub explicit_attrs: Option<Vec<String>>,
    pub intents: Option<Vec<Intent>>,
}

async fn update_input(
    State(state): State<AppState>,
    id: Result<Path<String>, PathRejection>,
    ApiJson(p): ApiJson<InputPatch>,
) -> ApiResult<Json<SessionResponse>> {
    let s = state.session(&path(id)?)?;
    let mut guard = write(&s);
    let mut input = guard.input().clone();
    if let Some(a) = p.explicit_attrs {
        input.explicit_attrs = a;
    }
    if let Some(i) = p.intents {
        input.intents = i;
    }
    guard.update_input(input)?;
    Ok(Json(SessionResponse::of(&guard)))
}

/// Either one element or a whole recommended collection.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum AddRequest {
    Element {
        spec: ElementSpec,
        #[serde(default)]
        geometry: Option<Geometry>,
        #[serde(default)]
        id: Option<String>,
    },
    Collection {
        collection: String,
    },
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct AddResponse {
    pub ids: Vec<String>,
    pub elements: Vec<CanvasElement>,
    #[serde(flatten)]
    pub session: SessionResponse,
}

async fn add_elements(
    State(state): State<AppState>,
    id: Result<Path<String>, PathRejection>,
    body: Result<Json<Value>, JsonRejection>,
) -> ApiResult<(StatusCode, Json<AddResponse>)> {
    let Json(raw) = body?;
    let req: AddRequest = serde_json::from_value(raw).map_err(|_| {
        ApiError::invalid_request("expected {\"spec\": element, \"geometry\"?, \"id\"?} or {\"collection\": code}")
    })?;
    let s = state.session(&path(id)?)?;
    let mut guard = write(&s);
    let ids = match req {
        AddRequest::Element { spec, geometry, id } => vec![guard.add_element(spec, geometry, id)?],
        AddRequest::Collection { collection } => {
            let recs = match guard.cached_recommendations() {
                Some((r, _)) => r,
                None => guard.refresh_recommendations()?,
            };
            let ranked = recs
                .collections
                .iter()
                .find(|c| c.collection.code == collection)
                .ok_or_else(|| ApiError::unknown_collection(&collection))?;
            guard.add_collection(ranked)?
        }
    };
    let elements = ids.iter().filter_map(|i| guard.canvas().get(i).cloned()).collect();
    Ok((
        StatusCode::CREATED,
        Json(AddResponse {
            ids,
            elements,
            session: SessionResponse::of(&guard),
        }),
    ))
}

async fn patch_element(
    State(state): State<AppState>,
    ids: Result<Path<(String, String)>, PathRejection>,
    ApiJson(p): ApiJson<ElementPatch>,
) -> ApiResult<Json<SessionResponse>> {
    let (id, eid) = path(ids)?;
    let s = state.session(&id)?;
    let mut guard = write(&s);
    guard.patch_element(&eid, p)?;
    Ok(Json(SessionResponse::of(&guard)))
}

async fn remove_element(
    State(state): State<AppState>,
    ids: Result<Path<(String, String)>, PathRejection>,
) -> ApiResult<Json<SessionResponse>> {
    let (id, eid) = path(ids)?;
    let s = state.session(&id)?;
    let mut guard = write(&s);
    guard.remove_element(&eid)?;
    Ok(Json(SessionResponse::of(&guard)))
}

async fn links(
    State(state): State<AppState>,
    id: Result<Path<String>, PathRejection>,
) -> ApiResult<Json<Vec<InteractionLink>>> {
    let s = state.session(&path(id)?)?;
    let links = read(&s).links();
    Ok(Json(links))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkModeBody {
    pub mode: LinkMode,
}

async fn set_link(
    State(state): State<AppState>,
    ids: Result<Path<(String, String, String)>, PathRejection>,
    ApiJson(body): ApiJson<LinkModeBody>,
) -> ApiResult<Json<InteractionLink>> {
    let (id, src, dst) = path(ids)?;
    let s = state.session(&id)?;
    let link = write(&s).set_link_mode(&src, &dst, body.mode)?;
    Ok(Json(link))
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, rename_all = "camelCase", deny_unknown_fields)]
pub struct EventQuery {
    /// Include each filtered target's re-rendered spec.
    pub charts: bool,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct EffectBody {
    #[serde(flatten)]
    pub effect: TargetEffect,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chart: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ApiError>,
}

#[derive(Debug, Serialize)]
pub struct EventResponse {
    pub effects: Vec<EffectBody>,
}

async fn events(
    State(state): State<AppState>,
    id: Result<Path<String>, PathRejection>,
    q: Result<Query<EventQuery>, QueryRejection>,
    ApiJson(event): ApiJson<SelectionEvent>,
) -> ApiResult<Json<EventResponse>> {
    let q = query(q)?;
    let s = state.session(&path(id)?)?;
    let guard = read(&s);
    let effects = interactions::apply_event(&event, guard.canvas())?;
    let effects = effects
        .into_iter()
        .map(|effect| {
            let mut body = EffectBody {
                chart: None,
                error: None,
                effect,
            };
            if let (true, Effect::Filter { predicates }) = (q.charts, &body.effect.effect) {
                let el = guard.canvas().get(&body.effect.target_id).expect("effects target canvas elements");
                if let ElementSpec::View(v) = &el.spec {
                    let (view, filters) = interactions::rebind_for_filter(v, predicates);
                    match emit_chart_spec_with(&view, guard.dataset(), guard.colors(), &el.overrides, &filters) {
                        Ok(c) => body.chart = Some(c),
                        Err(e) => body.error = Some(e.into()),
                    }
                }
            }
            body
        })
        .collect();
    Ok(Json(EventResponse { effects }))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExportQuery {
    #[serde(default = "default_format")]
    pub format: ExportFormat,
}

fn default_format() -> ExportFormat {
    ExportFormat::Json
}

async fn export(
    State(state): State<AppState>,
    id: Result<Path<String>, PathRejection>,
    q: Result<Query<ExportQuery>, QueryRejection>,
) -> ApiResult<Response> {
    let q = query(q)?;
    let s = state.session(&path(id)?)?;
    let id = read(&s).id().to_string();
    let bytes = tokio::task::spawn_blocking(move || {
        let guard = read(&s);
        export_dashboard(guard.dataset(), guard.canvas(), guard.colors(), q.format)
    })
    .await
    .map_err(|e| ApiError::internal(e.to_string()))??;
    let (mime, ext) = match q.format {
        ExportFormat::Json => ("application/json", "json"),
        ExportFormat::Html => ("text/html; charset=utf-8", "html"),
    };
    let disposition = format!("attachment; filename=\"dashboard-{id}.{ext}\"");
    Ok(([(header::CONTENT_TYPE, mime.to_string()), (header::CONTENT_DISPOSITION, disposition)], bytes).into_response())
}
