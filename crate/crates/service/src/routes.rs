use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::rejection::JsonRejection;
use axum::extract::{DefaultBodyLimit, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use discovery_core::engine::StageTimings;
use discovery_core::{AgentCard, EngineConfig, Error as CoreError, Mode};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::state::{AppState, BuildError, BuildSummary, StageOutcome};

pub fn router(state: Arc<AppState>) -> Router {
    let limit = state.config().body_limit;
    Router::new()
        .route("/v1/agents", post(add_agents))
        .route("/v1/index/build", post(build_index))
        .route("/v1/discover", post(discover))
        .route("/v1/health", get(health))
        .route("/v1/stats", get(stats))
        .layer(DefaultBodyLimit::max(limit))
        .with_state(state)
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError { status, message: message.into() }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        let status = if r.status() == StatusCode::PAYLOAD_TOO_LARGE { r.status() } else { StatusCode::BAD_REQUEST };
        ApiError::new(status, r.body_text())
    }
}

impl From<CoreError> for ApiError {
    fn from(e: CoreError) -> Self {
        let status = match &e {
            CoreError::Input(_) | CoreError::EmptyText(_) | CoreError::Config(_) | CoreError::Dimension { .. } => {
                StatusCode::BAD_REQUEST
            }
            CoreError::NotReady(_) => StatusCode::SERVICE_UNAVAILABLE,
            CoreError::Provider { .. } => StatusCode::BAD_GATEWAY,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError::new(status, e.to_string())
    }
}

async fn add_agents(State(state): State<Arc<AppState>>, body: Bytes) -> Result<Json<StageOutcome>, ApiError> {
    let value: Value =
        serde_json::from_slice(&body).map_err(|e| ApiError::bad_request(format!("malformed JSON: {e}")))?;
    let items = match value {
        Value::Array(items) => items,
        single @ Value::Object(_) => vec![single],
        _ => return Err(ApiError::bad_request("expected an agent card object or an array of cards")),
    };
    let cards = items
        .into_iter()
        .map(|v| serde_json::from_value::<AgentCard>(v).map_err(|e| format!("invalid agent card: {e}")))
        .collect();
    Ok(Json(state.stage(cards)))
}

/// Applies the keys of `overrides` on top of `base`; unknown keys are errors.
pub fn apply_overrides(base: &EngineConfig, overrides: &Value) -> Result<EngineConfig, String> {
    let mut merged = serde_json::to_value(base).map_err(|e| e.to_string())?;
    match overrides {
        Value::Null => {}
        Value::Object(map) => {
            let target = merged.as_object_mut().expect("config serializes to an object");
            for (k, v) in map {
                if !target.contains_key(k) {
                    return Err(format!("unknown config field {k:?}"));
                }
                target.insert(k.clone(), v.clone());
            }
        }
        _ => return Err("config overrides must be a JSON object".into()),
    }
    let config: EngineConfig = serde_json::from_value(merged).map_err(|e| e.to_string())?;
    config.validate().map_err(|e| e.to_string())?;
    Ok(config)
}

async fn build_index(State(state): State<Arc<AppState>>, body: Bytes) -> Result<Json<BuildSummary>, ApiError> {
    let overrides: Value = if body.iter().all(u8::is_ascii_whitespace) {
        Value::Null
    } else {
        serde_json::from_slice(&body).map_err(|e| ApiError::bad_request(format!("malformed JSON: {e}")))?
    };
    let config = apply_overrides(&state.config().engine, &overrides).map_err(ApiError::bad_request)?;
    state.build(config).await.map(Json).map_err(|e| {
        let status = match e {
            BuildError::NothingStaged => StatusCode::CONFLICT,
            BuildError::Config(_) => StatusCode::BAD_REQUEST,
            BuildError::Failed(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError::new(status, e.to_string())
    })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscoverRequest {
    pub query: String,
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default)]
    pub mode: Option<Mode>,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct DiscoverHit {
    pub id: String,
    pub name: String,
    #[serde(rename = "final")]
    pub final_score: f64,
    #[serde(rename = "ctx")]
    pub context_score: f64,
    #[serde(rename = "res")]
    pub resonance_score: f64,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct DiscoverResponse {
    pub results: Vec<DiscoverHit>,
    pub timings: StageTimings,
    pub degraded: bool,
    pub mode: Mode,
    pub predicted_tags: Vec<String>,
    pub snapshot_id: u64,
}

async fn discover(
    State(state): State<Arc<AppState>>,
    body: Result<Json<DiscoverRequest>, JsonRejection>,
) -> Result<Json<DiscoverResponse>, ApiError> {
    let Json(req) = body?;
    if req.query.trim().is_empty() {
        return Err(ApiError::bad_request("query is empty"));
    }
    let snapshot = state
        .snapshot()
        .ok_or_else(|| ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "index has not been built yet"))?;
    let mut config = snapshot.engine.config().clone();
    if let Some(k) = req.k {
        if k == 0 {
            return Err(ApiError::bad_request("k must be positive"));
        }
        config.final_k = k;
    }
    if let Some(mode) = req.mode {
        config.mode = mode;
    }

    let deadline = state.config().deadline;
    let work = async {
        let _permit = state.permits.acquire().await.expect("semaphore is never closed");
        let snap = snapshot.clone();
        tokio::task::spawn_blocking(move || snap.engine.discover_with(&req.query, &config)).await
    };
    let result = match tokio::time::timeout(deadline, work).await {
        Err(_) => return Err(ApiError::new(StatusCode::GATEWAY_TIMEOUT, format!("discovery exceeded {deadline:?}"))),
        Ok(Err(join)) => return Err(ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, join.to_string())),
        Ok(Ok(r)) => r?,
    };

    let index = snapshot.engine.index();
    let results = result
        .ranked
        .iter()
        .map(|s| DiscoverHit {
            id: s.agent_id.clone(),
            name: index.row_of(&s.agent_id).map(|r| index.agent(r).name.clone()).unwrap_or_default(),
            final_score: s.final_score,
            context_score: s.context_score,
            resonance_score: s.resonance_score,
        })
        .collect();
    Ok(Json(DiscoverResponse {
        results,
        timings: result.timings,
        degraded: result.degraded,
        mode: result.mode,
        predicted_tags: result.predicted_tags,
        snapshot_id: result.snapshot_id,
    }))
}

async fn health() -> Json<Value> {
    Json(json!({ "status": "ok" }))
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct Stats {
    pub agents: usize,
    pub tags: usize,
    pub dim: usize,
    pub mode: Mode,
    pub uptime: f64,
    pub snapshot_id: Option<u64>,
    pub staged: usize,
}

async fn stats(State(state): State<Arc<AppState>>) -> Json<Stats> {
    let staged = state.staged_count();
    let uptime = state.uptime_secs();
    Json(match state.snapshot() {
        Some(s) => Stats {
            agents: s.engine.index().agents().len(),
            tags: s.engine.index().sparse().vocabulary_size(),
            dim: s.engine.config().dim,
            mode: s.engine.config().mode,
            uptime,
            snapshot_id: Some(s.id()),
            staged,
        },
        None => Stats {
            agents: 0,
            tags: 0,
            dim: state.config().engine.dim,
            mode: state.config().engine.mode,
            uptime,
            snapshot_id: None,
            staged,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_merge_and_validate() {
        let base = EngineConfig::default();
        let c = apply_overrides(&base, &json!({ "alpha": 0.25, "mode": "no_slm" })).unwrap();
        assert_eq!(c.alpha, 0.25);
        assert_eq!(c.mode, Mode::NoSlm);
        assert_eq!(c.dense_top_k, base.dense_top_k);
        assert_eq!(apply_overrides(&base, &Value::Null).unwrap(), base);
        assert!(apply_overrides(&base, &json!({ "alpha": 2.0 })).is_err());
        assert!(apply_overrides(&base, &json!({ "alhpa": 0.1 })).is_err());
        assert!(apply_overrides(&base, &json!([1])).is_err());
    }
}
