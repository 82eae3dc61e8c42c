//! HTTP API.
//!
//! | route | |
//! |---|---|
//! | `POST /api/search` | [`SearchRequest`] → [`SearchResponse`] |
//! | `GET /api/theorem/{id}` | stored record, slogan and paper metadata |
//! | `GET /api/facets` | [`Facets`] |
//! | `POST /api/feedback` | [`FeedbackRequest`] → 202 |
//! | `GET /api/health` | readiness |
//!
//! Every body, including errors, carries `api_version`. Routes that need
//! the index answer 503 until it has loaded.

use std::sync::{Arc, RwLock};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::{header, HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use thmdx_core::index::EntryMeta;
use tokio::net::TcpListener;
use tower_http::cors::{AllowOrigin, Any, CorsLayer};

use crate::config::ServiceConfig;
use crate::engine::{Facets, SearchEngine, SearchError, SearchRequest, SearchResponse};
use crate::feedback::{FeedbackError, FeedbackEvent, FeedbackLog, FeedbackRequest};
use crate::providers::Providers;
use crate::{ServiceError, API_VERSION};

/// The engine currently being served; empty while loading. Replacing it is
/// an atomic swap, in-flight requests keep the engine they started with.
#[derive(Clone, Default)]
pub struct EngineSlot(Arc<RwLock<Option<Arc<SearchEngine>>>>);

impl EngineSlot {
    pub fn ready(engine: SearchEngine) -> Self {
        let slot = Self::default();
        slot.set(Arc::new(engine));
        slot
    }

    pub fn set(&self, engine: Arc<SearchEngine>) {
        *self.0.write().expect("engine slot poisoned") = Some(engine);
    }

    pub fn get(&self) -> Option<Arc<SearchEngine>> {
        self.0.read().expect("engine slot poisoned").clone()
    }
}

#[derive(Clone)]
pub struct AppState {
    pub engine: EngineSlot,
    pub feedback: FeedbackLog,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub api_version: String,
    pub error: String,
}

#[derive(Debug)]
pub struct ApiError(pub StatusCode, pub String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            api_version: API_VERSION.into(),
            error: self.1,
        };
        (self.0, Json(body)).into_response()
    }
}

fn loading() -> ApiError {
    ApiError(StatusCode::SERVICE_UNAVAILABLE, "index is loading".into())
}

fn bad_body(rejection: JsonRejection) -> ApiError {
    ApiError(StatusCode::BAD_REQUEST, rejection.body_text())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremResponse {
    pub api_version: String,
    #[serde(flatten)]
    pub entry: EntryMeta,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FacetsResponse {
    pub api_version: String,
    #[serde(flatten)]
    pub facets: Facets,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackResponse {
    pub api_version: String,
    pub accepted: FeedbackEvent,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HealthResponse {
    pub api_version: String,
    pub status: String,
    pub count: usize,
}

async fn search(
    State(state): State<AppState>,
    body: Result<Json<SearchRequest>, JsonRejection>,
) -> Result<Json<SearchResponse>, ApiError> {
    let Json(request) = body.map_err(bad_body)?;
    let engine = state.engine.get().ok_or_else(loading)?;
    let result = tokio::task::spawn_blocking(move || engine.search(&request))
        .await
        .map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    result.map(Json).map_err(|e| match e {
        SearchError::BadRequest(m) => ApiError(StatusCode::BAD_REQUEST, m),
        SearchError::Upstream(m) => ApiError(StatusCode::BAD_GATEWAY, m),
        SearchError::Internal(m) => ApiError(StatusCode::INTERNAL_SERVER_ERROR, m),
    })
}

async fn theorem(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<TheoremResponse>, ApiError> {
    let engine = state.engine.get().ok_or_else(loading)?;
    let entry = engine
        .get(&id)
        .ok_or_else(|| ApiError(StatusCode::NOT_FOUND, format!("unknown record id {id:?}")))?;
    Ok(Json(TheoremResponse {
        api_version: API_VERSION.into(),
        entry: entry.clone(),
    }))
}

async fn facets(State(state): State<AppState>) -> Result<Json<FacetsResponse>, ApiError> {
    let engine = state.engine.get().ok_or_else(loading)?;
    Ok(Json(FacetsResponse {
        api_version: API_VERSION.into(),
        facets: engine.facets().clone(),
    }))
}

async fn feedback(
    State(state): State<AppState>,
    body: Result<Json<FeedbackRequest>, JsonRejection>,
) -> Result<(StatusCode, Json<FeedbackResponse>), ApiError> {
    let Json(request) = body.map_err(bad_body)?;
    let event = state.feedback.record(request).await.map_err(|e| match e {
        FeedbackError::Invalid(m) => ApiError(StatusCode::BAD_REQUEST, m),
        other => ApiError(StatusCode::INTERNAL_SERVER_ERROR, other.to_string()),
    })?;
    Ok((
        StatusCode::ACCEPTED,
        Json(FeedbackResponse {
            api_version: API_VERSION.into(),
            accepted: event,
        }),
    ))
}

async fn health(State(state): State<AppState>) -> Json<HealthResponse> {
    let engine = state.engine.get();
    Json(HealthResponse {
        api_version: API_VERSION.into(),
        status: if engine.is_some() { "ready" } else { "loading" }.into(),
        count: engine.map_or(0, |e| e.index().len()),
    })
}

async fn not_found() -> ApiError {
    ApiError(StatusCode::NOT_FOUND, "no such route".into())
}

async fn method_not_allowed() -> ApiError {
    ApiError(StatusCode::METHOD_NOT_ALLOWED, "method not allowed".into())
}

/// Same-origin requests always work; `origins` lists extra allowed
/// origins, `"*"` allows any.
pub fn cors_layer(origins: &[String]) -> Result<CorsLayer, ServiceError> {
    let layer = CorsLayer::new()
        .allow_methods([Method::GET, Method::POST, Method::OPTIONS])
        .allow_headers([header::CONTENT_TYPE]);
    if origins.iter().any(|o| o == "*") {
        return Ok(layer.allow_origin(Any));
    }
    let values = origins
        .iter()
        .map(|o| {
            HeaderValue::from_str(o)
                .map_err(|_| ServiceError::Config(format!("bad CORS origin {o:?}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(layer.allow_origin(AllowOrigin::list(values)))
}

pub fn router(state: AppState, cors: CorsLayer) -> Router {
    Router::new()
        .route("/api/search", post(search))
        .route("/api/theorem/{id}", get(theorem))
        .route("/api/facets", get(facets))
        .route("/api/feedback", post(feedback))
        .route("/api/health", get(health))
        .fallback(not_found)
        .method_not_allowed_fallback(method_not_allowed)
        .layer(cors)
        .with_state(state)
}

/// Bind, load the index in the background and serve until Ctrl-C. Requests
/// arriving before the index is ready get 503.
pub async fn serve(config: ServiceConfig) -> Result<(), ServiceError> {
    let providers = Providers::from_config(&config);
    let state = AppState {
        engine: EngineSlot::default(),
        feedback: FeedbackLog::open(&config.feedback_log_path, config.feedback_queue)?,
    };
    let app = router(state.clone(), cors_layer(&config.cors_allowed_origins)?);
    let listener = TcpListener::bind(&config.listen_address)
        .await
        .map_err(|e| {
            ServiceError::Config(format!("cannot listen on {}: {e}", config.listen_address))
        })?;
    tracing::info!(address = %config.listen_address, "listening");

    let (fatal_tx, fatal_rx) = tokio::sync::oneshot::channel::<ServiceError>();
    let slot = state.engine.clone();
    let load_config = config.clone();
    tokio::task::spawn_blocking(move || match SearchEngine::open(&load_config, &providers) {
        Ok(engine) => {
            tracing::info!(count = engine.index().len(), "index loaded");
            slot.set(Arc::new(engine));
        }
        Err(e) => {
            let _ = fatal_tx.send(e);
        }
    });

    let (stop_tx, stop_rx) = tokio::sync::oneshot::channel::<()>();
    let fatal = tokio::spawn(async move {
        let failure = tokio::select! {
            _ = tokio::signal::ctrl_c() => None,
            Ok(failure) = fatal_rx => Some(failure),
        };
        let _ = stop_tx.send(());
        failure
    });
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = stop_rx.await;
        })
        .await
        .map_err(|e| ServiceError::io(&config.listen_address, e))?;
    match fatal.await {
        Ok(Some(e)) => Err(e),
        _ => Ok(()),
    }
}
