//! HTTP inference service: `POST /v1/price` and `GET /v1/health`.
//!
//! The checkpoint is shared immutably across request handlers. A malformed
//! body is a 400; a feature vector of the wrong length is a 422.

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use pricegate_core::trainer::{load_checkpoint, Checkpoint};
use pricegate_core::Error;

/// One pricing request: raw visual features plus the listing identifiers
/// used to look up historical price statistics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PriceRequest {
    pub visual_features: Vec<f64>,
    pub category_id: u32,
    pub seller_id: String,
}

/// The gate decision and, for accepted listings, the suggested price in
/// currency units (exp of the predicted log price, unrounded).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceResponse {
    pub qualified: bool,
    pub score: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub suggested_price: Option<f64>,
    pub model_version: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct HealthResponse {
    pub status: String,
    pub checksum: String,
}

#[derive(Debug, Serialize)]
struct ErrorBody {
    error: String,
}

/// A checkpoint loaded for serving, with its verified checksum.
#[derive(Debug, Clone)]
pub struct ModelState {
    pub checkpoint: Checkpoint,
    pub checksum: u32,
}

impl ModelState {
    pub fn load(path: &std::path::Path) -> pricegate_core::Result<Self> {
        let loaded = load_checkpoint(path)?;
        Ok(ModelState { checkpoint: loaded.checkpoint, checksum: loaded.checksum })
    }

    pub fn version(&self) -> String {
        format!("gprc1-{:08x}", self.checksum)
    }
}

/// Shared by the CLI `predict` command and the HTTP handler, so both
/// produce byte-identical responses for identical requests.
pub fn price_response(state: &ModelState, req: &PriceRequest) -> pricegate_core::Result<PriceResponse> {
    let outcome =
        state.checkpoint.predict(&req.visual_features, req.category_id, &req.seller_id)?;
    Ok(PriceResponse {
        qualified: outcome.qualified,
        score: outcome.score,
        suggested_price: outcome.suggested_price,
        model_version: state.version(),
    })
}

async fn handle_price(State(state): State<Arc<ModelState>>, body: Bytes) -> Response {
    let req: PriceRequest = match serde_json::from_slice(&body) {
        Ok(req) => req,
        Err(e) => {
            return (
                StatusCode::BAD_REQUEST,
                Json(ErrorBody { error: format!("malformed request body: {e}") }),
            )
                .into_response();
        }
    };
    match price_response(&state, &req) {
        Ok(resp) => (StatusCode::OK, Json(resp)).into_response(),
        Err(Error::DimensionMismatch { expected, got, .. }) => (
            StatusCode::UNPROCESSABLE_ENTITY,
            Json(ErrorBody {
                error: format!("feature vector has length {got}, model expects {expected}"),
            }),
        )
            .into_response(),
        Err(e) => (
            StatusCode::INTERNAL_SERVER_ERROR,
            Json(ErrorBody { error: e.to_string() }),
        )
            .into_response(),
    }
}

async fn handle_health(State(state): State<Arc<ModelState>>) -> Response {
    (
        StatusCode::OK,
        Json(HealthResponse {
            status: "ok".to_string(),
            checksum: format!("{:08x}", state.checksum),
        }),
    )
        .into_response()
}

pub fn router(state: Arc<ModelState>) -> Router {
    Router::new()
        .route("/v1/price", post(handle_price))
        .route("/v1/health", get(handle_health))
        .with_state(state)
}

/// Bind and serve until interrupted.
pub async fn serve(state: Arc<ModelState>, bind: &str) -> anyhow::Result<()> {
    let listener = tokio::net::TcpListener::bind(bind)
        .await
        .map_err(|e| anyhow::anyhow!("failed to bind {bind}: {e}"))?;
    eprintln!("serving on {} (model {})", listener.local_addr()?, state.version());
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
