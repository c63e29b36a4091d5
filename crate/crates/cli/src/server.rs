//! Stateless HTTP API. Every handler works only from its request and the
//! read-only templates loaded at startup.

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, State};
use axum::http::{header, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use glyphctl_core::bench::SIMPLE_TEMPLATE;
use glyphctl_core::instruction::ParseError;
use glyphctl_core::metrics::{evaluate_bench, EvalCase, EvalInputs, MetricError, OcrPrediction};
use glyphctl_core::{parse_instructions, render, validate};
use serde::{Deserialize, Serialize};
use serde_json::json;

const BODY_LIMIT: usize = 64 * 1024 * 1024;

const INDEX_HTML: &str = r#"<!doctype html>
<html lang="en">
<head><meta charset="utf-8"><title>glyph studio</title></head>
<body>
<h1>glyph studio</h1>
<p>The editor UI is not bundled with this build. The API is live:</p>
<ul>
<li><code>POST /api/render</code> instruction object to PNG</li>
<li><code>POST /api/validate</code> instruction object to validation report</li>
<li><code>POST /api/eval</code> <code>{"cases": [...], "predictions": [...]}</code> to evaluation report</li>
<li><code>GET /api/templates</code> prompt templates</li>
</ul>
</body>
</html>
"#;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Template {
    pub kind: &'static str,
    pub template: String,
}

#[derive(Debug)]
struct AppState {
    templates: Vec<Template>,
}

/// Case and prediction bundle accepted by `/api/eval`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalBundle {
    pub cases: Vec<EvalCase>,
    #[serde(default)]
    pub predictions: Vec<OcrPrediction>,
}

pub fn router(creative_templates: Vec<String>) -> Router {
    let mut templates = vec![Template {
        kind: "simple",
        template: SIMPLE_TEMPLATE.to_string(),
    }];
    templates.extend(creative_templates.into_iter().map(|t| Template {
        kind: "creative",
        template: t,
    }));
    Router::new()
        .route("/", get(index))
        .route("/api/render", post(render_handler))
        .route("/api/validate", post(validate_handler))
        .route("/api/eval", post(eval_handler))
        .route("/api/templates", get(templates_handler))
        .layer(DefaultBodyLimit::max(BODY_LIMIT))
        .with_state(Arc::new(AppState { templates }))
}

fn error(status: StatusCode, body: serde_json::Value) -> Response {
    (status, Json(body)).into_response()
}

fn parse_error(e: &ParseError) -> Response {
    error(
        StatusCode::BAD_REQUEST,
        json!({
            "error": e,
            "box_index": e.box_index(),
            "field": e.field(),
            "message": e.to_string(),
        }),
    )
}

fn internal(e: impl std::fmt::Display) -> Response {
    error(
        StatusCode::INTERNAL_SERVER_ERROR,
        json!({ "message": e.to_string() }),
    )
}

async fn index() -> Html<&'static str> {
    Html(INDEX_HTML)
}

async fn render_handler(body: Bytes) -> Response {
    let set = match parse_instructions(&body) {
        Ok(s) => s,
        Err(e) => return parse_error(&e),
    };
    let report = validate(&set);
    if !report.errors.is_empty() {
        return error(StatusCode::UNPROCESSABLE_ENTITY, json!(report));
    }
    match tokio::task::spawn_blocking(move || render(&set).to_png_bytes()).await {
        Ok(png) => ([(header::CONTENT_TYPE, "image/png")], png).into_response(),
        Err(e) => internal(e),
    }
}

async fn validate_handler(body: Bytes) -> Response {
    match parse_instructions(&body) {
        Ok(set) => Json(validate(&set)).into_response(),
        Err(e) => parse_error(&e),
    }
}

async fn eval_handler(body: Bytes) -> Response {
    let bundle: EvalBundle = match serde_json::from_slice(&body) {
        Ok(b) => b,
        Err(e) => {
            return error(
                StatusCode::BAD_REQUEST,
                json!({ "field": "body", "message": e.to_string() }),
            )
        }
    };
    let inputs = EvalInputs {
        cases: bundle.cases,
        predictions: bundle.predictions,
        ..Default::default()
    };
    match tokio::task::spawn_blocking(move || evaluate_bench(&inputs)).await {
        Ok(Ok(report)) => Json(report).into_response(),
        Ok(Err(e @ MetricError::Schema(_))) => {
            error(StatusCode::BAD_REQUEST, json!({ "message": e.to_string() }))
        }
        Ok(Err(e @ (MetricError::EmptyGroundTruth | MetricError::EmptyBucket(_)))) => error(
            StatusCode::UNPROCESSABLE_ENTITY,
            json!({ "message": e.to_string() }),
        ),
        Ok(Err(e)) => internal(e),
        Err(e) => internal(e),
    }
}

async fn templates_handler(State(state): State<Arc<AppState>>) -> Json<Vec<Template>> {
    Json(state.templates.clone())
}
