//! Read-only HTTP API over a loaded index.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use memorec_core::{
    parse_json_model, ContextKind, CorpusIndex, EncodingScheme, EngineError, RankedList,
    RecommendParams,
};
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;
use serde_json::json;
use tower_http::cors::CorsLayer;

use crate::{Engines, RecommendError};

#[derive(Debug, Clone, Copy)]
pub struct Defaults {
    pub scheme: EncodingScheme,
    pub k: usize,
    pub k_contexts: usize,
    pub n: usize,
}

impl Default for Defaults {
    fn default() -> Self {
        Defaults {
            scheme: crate::DEFAULT_SCHEME,
            k: crate::DEFAULT_K,
            k_contexts: crate::DEFAULT_K,
            n: crate::DEFAULT_N,
        }
    }
}

struct AppState {
    index: CorpusIndex,
    engines: Engines,
    defaults: Defaults,
}

pub fn router(index: CorpusIndex, defaults: Defaults) -> Router {
    let engines = Engines::new(&index);
    let state = Arc::new(AppState {
        index,
        engines,
        defaults,
    });
    Router::new()
        .route("/api/health", get(health))
        .route("/api/corpus/stats", get(stats))
        .route("/api/recommendations", post(recommendations))
        .layer(CorsLayer::permissive())
        .with_state(state)
}

/// Serves until Ctrl-C (or SIGTERM), letting in-flight requests finish.
pub async fn serve(index: CorpusIndex, defaults: Defaults, addr: SocketAddr) -> anyhow::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(address = %listener.local_addr()?, metamodels = index.len(), "serving");
    axum::serve(listener, router(index, defaults))
        .with_graceful_shutdown(shutdown_signal())
        .await?;
    Ok(())
}

async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {},
        _ = term => {},
    }
}

pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn bad_request(code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status: StatusCode::BAD_REQUEST,
            code,
            message: message.into(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({"error": {"code": self.code, "message": self.message}});
        (self.status, Json(body)).into_response()
    }
}

impl From<RecommendError> for ApiError {
    fn from(e: RecommendError) -> Self {
        let message = e.to_string();
        match e {
            RecommendError::SchemeNotIndexed(_) => ApiError::bad_request("scheme_not_indexed", message),
            RecommendError::Engine(EngineError::UnknownContext(_)) => ApiError {
                status: StatusCode::NOT_FOUND,
                code: "unknown_context",
                message,
            },
            RecommendError::Engine(EngineError::ContextKindMismatch { .. }) => {
                ApiError::bad_request("context_kind_mismatch", message)
            }
            RecommendError::Engine(_) => ApiError {
                status: StatusCode::INTERNAL_SERVER_ERROR,
                code: "internal",
                message,
            },
        }
    }
}

async fn health(State(state): State<Arc<AppState>>) -> Json<serde_json::Value> {
    Json(json!({"status": "ok", "metamodels": state.index.len()}))
}

#[derive(Serialize)]
struct SchemeStats {
    metamodels: usize,
    pairs: usize,
    items: usize,
}

#[derive(Serialize)]
struct Stats {
    metamodels: usize,
    accepted: usize,
    duplicate: usize,
    unparsable: usize,
    schemes: BTreeMap<String, SchemeStats>,
}

async fn stats(State(state): State<Arc<AppState>>) -> Json<Stats> {
    let counts = state.index.counts();
    let schemes = state
        .index
        .schemes
        .iter()
        .map(|(scheme, s)| {
            (
                scheme.to_string(),
                SchemeStats {
                    metamodels: s.graph.len(),
                    pairs: s.encoded.iter().map(|e| e.pairs.len()).sum(),
                    items: s.graph.item_names().count(),
                },
            )
        })
        .collect();
    Json(Stats {
        metamodels: state.index.len(),
        accepted: counts.accepted,
        duplicate: counts.duplicate,
        unparsable: counts.unparsable,
        schemes,
    })
}

#[derive(Deserialize)]
struct ContextDto {
    kind: ContextKind,
    name: String,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct RecommendationRequest<'a> {
    /// Kept as raw bytes so the model's id is the hash of exactly what the
    /// client sent, as with a model file on the command line.
    #[serde(borrow)]
    model: &'a RawValue,
    scheme: Option<EncodingScheme>,
    context: ContextDto,
    k: Option<usize>,
    k_contexts: Option<usize>,
    n: Option<usize>,
}

async fn recommendations(
    State(state): State<Arc<AppState>>,
    body: Bytes,
) -> Result<Json<RankedList>, ApiError> {
    let req: RecommendationRequest = serde_json::from_slice(&body)
        .map_err(|e| ApiError::bad_request("invalid_request", e.to_string()))?;
    let model = parse_json_model(req.model.get().as_bytes(), "request")
        .map_err(|e| ApiError::bad_request("invalid_model", e.to_string()))?;

    let d = state.defaults;
    let k = req.k.unwrap_or(d.k);
    let k_contexts = req.k_contexts.or(req.k).unwrap_or(d.k_contexts);
    if k == 0 || k_contexts == 0 {
        return Err(ApiError::bad_request("invalid_parameter", "k and kContexts must be at least 1"));
    }
    let params = RecommendParams::new(k, k_contexts, req.n.unwrap_or(d.n));
    let scheme = req.scheme.unwrap_or(d.scheme);

    let list = state
        .engines
        .recommend(model, scheme, req.context.kind, &req.context.name, params)?;
    if list.empty_neighborhood {
        tracing::info!(%scheme, "no similar metamodel in the corpus");
    }
    Ok(Json(list))
}
