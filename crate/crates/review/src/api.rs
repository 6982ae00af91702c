use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::{Query, Request, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::{DateTime, Utc};
use serde::Deserialize;
use serde_json::json;
use tower_http::services::ServeDir;

use numprobe_core::perturb::{write_probes, PerturbMode, PerturbationType};

use crate::store::{Decision, ExportMode, QueueFilter, ReviewDecision, ReviewError, ReviewStore};

pub const WARNING_HEADER: &str = "x-numprobe-warning";

#[derive(Debug, Clone, Default)]
pub struct ServiceConfig {
    /// Required as `Authorization: Bearer <token>` on /api routes when set.
    pub token: Option<String>,
    /// Directory with the built review UI.
    pub ui_dir: Option<PathBuf>,
}

#[derive(Clone)]
struct AppState {
    store: Arc<ReviewStore>,
    token: Option<Arc<str>>,
}

fn error(status: StatusCode, msg: impl Into<String>) -> Response {
    (status, Json(json!({"error": msg.into()}))).into_response()
}

fn parse_opt<T>(v: &Option<String>) -> Result<Option<T>, Response>
where
    T: std::str::FromStr,
    T::Err: std::fmt::Display,
{
    match v.as_deref().map(str::trim) {
        None | Some("") => Ok(None),
        Some(s) => s.parse::<T>().map(Some).map_err(|e| error(StatusCode::BAD_REQUEST, e.to_string())),
    }
}

#[derive(Debug, Deserialize)]
struct QueueParams {
    ptype: Option<String>,
    mode: Option<String>,
    after: Option<String>,
}

async fn queue_next(State(st): State<AppState>, Query(q): Query<QueueParams>) -> Response {
    let filter = match (parse_opt::<PerturbationType>(&q.ptype), parse_opt::<PerturbMode>(&q.mode)) {
        (Ok(ptype), Ok(mode)) => QueueFilter {
            ptype,
            mode,
            after: q.after.filter(|s| !s.is_empty()),
        },
        (Err(e), _) | (_, Err(e)) => return e,
    };
    Json(st.store.next_pending(&filter)).into_response()
}

#[derive(Debug, Deserialize)]
struct DecisionBody {
    probe_ref: String,
    decision: Decision,
    #[serde(default)]
    note: Option<String>,
    #[serde(default)]
    reviewer: Option<String>,
    #[serde(default)]
    timestamp: Option<DateTime<Utc>>,
}

async fn decision(State(st): State<AppState>, Json(b): Json<DecisionBody>) -> Response {
    let d = ReviewDecision {
        probe_ref: b.probe_ref,
        decision: b.decision,
        note: b.note.filter(|n| !n.is_empty()),
        reviewer: b.reviewer.unwrap_or_else(|| "anonymous".into()),
        timestamp: b.timestamp.unwrap_or_else(Utc::now),
    };
    match st.store.record(d) {
        Ok(ack) => Json(ack).into_response(),
        Err(e @ ReviewError::NotFound(_)) => error(StatusCode::NOT_FOUND, e.to_string()),
        Err(e) => {
            tracing::error!(error = %e, "failed to record decision");
            error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())
        }
    }
}

async fn stats(State(st): State<AppState>) -> Response {
    Json(st.store.stats()).into_response()
}

#[derive(Debug, Deserialize)]
struct ExportParams {
    mode: Option<String>,
}

async fn export(State(st): State<AppState>, Query(q): Query<ExportParams>) -> Response {
    let mode = match parse_opt::<ExportMode>(&q.mode) {
        Ok(m) => m.unwrap_or_default(),
        Err(e) => return e,
    };
    let ex = st.store.export(mode);
    let mut body = Vec::new();
    write_probes(&mut body, &ex.probes).expect("in-memory write");
    let mut resp = (
        [(header::CONTENT_TYPE, HeaderValue::from_static("application/x-ndjson"))],
        body,
    )
        .into_response();
    if let Some(w) = ex.warning {
        tracing::warn!("lenient export: {w}");
        resp.headers_mut()
            .insert(WARNING_HEADER, HeaderValue::from_str(&w).expect("ascii warning"));
    }
    resp
}

async fn auth(State(st): State<AppState>, req: Request, next: Next) -> Response {
    if let Some(token) = &st.token {
        let ok = req
            .headers()
            .get(header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "))
            .is_some_and(|t| t == &**token);
        if !ok {
            return error(StatusCode::UNAUTHORIZED, "missing or wrong bearer token");
        }
    }
    next.run(req).await
}

pub fn router(store: Arc<ReviewStore>, cfg: ServiceConfig) -> Router {
    let state = AppState {
        store,
        token: cfg.token.map(Into::into),
    };
    let api = Router::new()
        .route("/api/queue/next", get(queue_next))
        .route("/api/decision", post(decision))
        .route("/api/stats", get(stats))
        .route("/api/export", get(export))
        .route_layer(middleware::from_fn_with_state(state.clone(), auth))
        .with_state(state);
    match cfg.ui_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

/// Serve until Ctrl-C.
pub async fn serve(addr: SocketAddr, store: Arc<ReviewStore>, cfg: ServiceConfig) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!("review service listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(store, cfg))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
