//! Embedded HTTP service: prediction, similarity, metrics, drift, health and
//! atomic bundle hot-reload.
//!
//! A request observes exactly one bundle: handlers clone the shared `Arc`
//! once up front, so an in-flight request keeps the old bundle across a
//! reload.

use std::path::PathBuf;
use std::sync::{Arc, Mutex, RwLock};
use std::time::Instant;

use axum::extract::rejection::JsonRejection;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::corpus::{Corpus, TicketRecord};
use crate::engine::{
    build_feed, drift_score, knn_similar, load_bundle_path, log_prediction, predict, MetricsReport,
    ModelBundle, PredictionLogEntry,
};
use crate::error::Error;

/// Shared service state; the bundle reference swaps atomically on reload.
pub struct ServeState {
    bundle: RwLock<Arc<ModelBundle>>,
    /// Optional evaluation report backing `/v1/metrics` per-label tables.
    report: RwLock<Option<MetricsReport>>,
    drift_trace: Mutex<Vec<f64>>,
    log_sink: Option<Mutex<std::fs::File>>,
}

impl ServeState {
    pub fn new(bundle: ModelBundle) -> Self {
        ServeState {
            bundle: RwLock::new(Arc::new(bundle)),
            report: RwLock::new(None),
            drift_trace: Mutex::new(Vec::new()),
            log_sink: None,
        }
    }

    pub fn with_report(mut self, report: Option<MetricsReport>) -> Self {
        self.report = RwLock::new(report);
        self
    }

    pub fn with_log_file(mut self, path: Option<PathBuf>) -> crate::error::Result<Self> {
        self.log_sink = match path {
            Some(p) => Some(Mutex::new(
                std::fs::OpenOptions::new().create(true).append(true).open(p)?,
            )),
            None => None,
        };
        Ok(self)
    }

    fn current(&self) -> Arc<ModelBundle> {
        self.bundle.read().unwrap().clone()
    }
}

fn error_body(status: StatusCode, code: &str, message: String) -> Response {
    (
        status,
        Json(json!({ "error": { "code": code, "message": message } })),
    )
        .into_response()
}

fn domain_error(err: Error) -> Response {
    match err {
        Error::EmptyDescription => error_body(
            StatusCode::UNPROCESSABLE_ENTITY,
            "empty_description",
            err.to_string(),
        ),
        Error::DriftWindowTooSmall { .. } => error_body(
            StatusCode::UNPROCESSABLE_ENTITY,
            "window_too_small",
            err.to_string(),
        ),
        other => error_body(
            StatusCode::BAD_REQUEST,
            "invalid_request",
            other.to_string(),
        ),
    }
}

fn bad_json(rejection: JsonRejection) -> Response {
    error_body(
        StatusCode::BAD_REQUEST,
        "malformed_json",
        rejection.to_string(),
    )
}

#[derive(Debug, Deserialize)]
struct PredictRequest {
    description: String,
    #[serde(default)]
    incident_id: Option<String>,
}

#[derive(Debug, Deserialize)]
struct SimilarRequest {
    description: String,
    #[serde(default)]
    k: Option<usize>,
}

#[derive(Debug, Deserialize)]
struct DriftTicket {
    description: String,
    #[serde(default)]
    incident_id: Option<String>,
}

#[derive(Debug, Deserialize)]
struct DriftRequest {
    tickets: Vec<DriftTicket>,
}

#[derive(Debug, Deserialize)]
struct ReloadRequest {
    bundle_path: String,
}

#[derive(Debug, Serialize)]
struct HealthResponse {
    status: &'static str,
    bundle_version: String,
}

async fn health(State(state): State<Arc<ServeState>>) -> Json<HealthResponse> {
    Json(HealthResponse {
        status: "ok",
        bundle_version: state.current().version.clone(),
    })
}

async fn predict_handler(
    State(state): State<Arc<ServeState>>,
    body: Result<Json<PredictRequest>, JsonRejection>,
) -> Response {
    let Json(req) = match body {
        Ok(b) => b,
        Err(r) => return bad_json(r),
    };
    let bundle = state.current();
    let mut ticket = TicketRecord::new(
        req.incident_id.unwrap_or_else(|| "ad-hoc".to_string()),
        req.description,
    );
    ticket.description = ticket.description.trim().to_string();
    let started = Instant::now();
    let inference = &bundle.config.inference;
    match predict(
        &bundle,
        &ticket,
        inference.threshold,
        inference.top_n,
        inference.fallback_k,
    ) {
        Ok(result) => {
            if let Some(sink) = &state.log_sink {
                let entry = PredictionLogEntry::from_result(
                    &result,
                    started.elapsed().as_secs_f64() * 1000.0,
                );
                // The prediction is never blocked by a failing log write.
                let _ = log_prediction(&mut *sink.lock().unwrap(), &entry);
            }
            Json(result).into_response()
        }
        Err(err) => domain_error(err),
    }
}

async fn similar_handler(
    State(state): State<Arc<ServeState>>,
    body: Result<Json<SimilarRequest>, JsonRejection>,
) -> Response {
    let Json(req) = match body {
        Ok(b) => b,
        Err(r) => return bad_json(r),
    };
    if req.description.trim().is_empty() {
        return domain_error(Error::EmptyDescription);
    }
    let bundle = state.current();
    let k = req.k.unwrap_or(bundle.config.inference.fallback_k);
    let ticket = TicketRecord::new("ad-hoc", req.description);
    match knn_similar(&bundle, &ticket, k) {
        Ok(hits) => Json(hits).into_response(),
        Err(err) => domain_error(err),
    }
}

async fn metrics_handler(State(state): State<Arc<ServeState>>) -> Response {
    let bundle = state.current();
    let report = state.report.read().unwrap().clone();
    let drift_trace = state.drift_trace.lock().unwrap().clone();
    match report {
        Some(report) => Json(build_feed(&bundle, &report, &drift_trace, None)).into_response(),
        None => {
            // No evaluation report loaded: serve the training-side tables.
            let total: usize = bundle.train_label_counts.values().sum();
            let sparsity: Vec<serde_json::Value> = bundle
                .train_label_counts
                .iter()
                .map(|(label, &size)| {
                    json!({ "label": label, "size": size, "share": size as f64 / total as f64 })
                })
                .collect();
            Json(json!({
                "generated_at": chrono::Utc::now().to_rfc3339(),
                "bundle_version": bundle.version,
                "cluster_sparsity": sparsity,
                "per_label_accuracy": [],
                "confidence_histogram": [],
                "time_to_resolution": null,
                "ticket_volumes": {},
                "drift_trace": drift_trace,
                "low_confidence_top_tokens": [],
            }))
            .into_response()
        }
    }
}

async fn drift_handler(
    State(state): State<Arc<ServeState>>,
    body: Result<Json<DriftRequest>, JsonRejection>,
) -> Response {
    let Json(req) = match body {
        Ok(b) => b,
        Err(r) => return bad_json(r),
    };
    let bundle = state.current();
    let records: Vec<TicketRecord> = req
        .tickets
        .into_iter()
        .enumerate()
        .map(|(i, t)| {
            TicketRecord::new(
                t.incident_id.unwrap_or_else(|| format!("window-{i}")),
                t.description,
            )
        })
        .collect();
    match drift_score(&bundle, &Corpus::new(records)) {
        Ok(report) => {
            state
                .drift_trace
                .lock()
                .unwrap()
                .push(report.js_divergence);
            Json(report).into_response()
        }
        Err(err) => domain_error(err),
    }
}

async fn reload_handler(
    State(state): State<Arc<ServeState>>,
    body: Result<Json<ReloadRequest>, JsonRejection>,
) -> Response {
    let Json(req) = match body {
        Ok(b) => b,
        Err(r) => return bad_json(r),
    };
    match load_bundle_path(std::path::Path::new(&req.bundle_path)) {
        Ok(new_bundle) => {
            let version = new_bundle.version.clone();
            *state.bundle.write().unwrap() = Arc::new(new_bundle);
            Json(json!({ "status": "reloaded", "bundle_version": version })).into_response()
        }
        Err(err) => error_body(
            StatusCode::CONFLICT,
            "reload_failed",
            format!("bundle retained; reload failed: {err}"),
        ),
    }
}

/// Builds the service router over shared state.
pub fn router(state: Arc<ServeState>) -> Router {
    Router::new()
        .route("/v1/predict", post(predict_handler))
        .route("/v1/similar", post(similar_handler))
        .route("/v1/metrics", get(metrics_handler))
        .route("/v1/drift", post(drift_handler))
        .route("/v1/health", get(health))
        .route("/v1/reload", post(reload_handler))
        .with_state(state)
}

/// Binds and serves until the process is terminated (Ctrl-C aware).
pub async fn run(state: Arc<ServeState>, bind: &str, port: u16) -> crate::error::Result<()> {
    let listener = tokio::net::TcpListener::bind((bind, port)).await?;
    let addr = listener.local_addr()?;
    eprintln!("listening on http://{addr}");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
