//! HTTP routes: `/feed` and `/healthz`.

use std::sync::Arc;

use axum::extract::{RawQuery, State};
use axum::http::header::{CACHE_CONTROL, CONTENT_TYPE, HOST};
use axum::http::{HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use feedforge_core::model::{AbsoluteUri, Violation};
use feedforge_core::params::from_query_string;
use serde::Serialize;

use crate::client::ClientError;
use crate::service::{FeedService, ServiceError};

pub const CACHE_HEADER: &str = "x-feed-cache";
pub const PROBLEM_MEDIA_TYPE: &str = "application/problem+json";

/// Structured error body.
#[derive(Debug, Serialize)]
pub struct Problem {
    #[serde(rename = "type")]
    pub kind: &'static str,
    pub title: &'static str,
    pub status: u16,
    pub detail: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub violations: Vec<Violation>,
}

impl Problem {
    pub fn from_error(e: &ServiceError) -> Self {
        let (kind, title, status) = match e {
            ServiceError::Invalid(_) => ("invalid-request", "Invalid request", StatusCode::BAD_REQUEST),
            ServiceError::RatesUnavailable(_) => (
                "rates-unavailable",
                "Exchange rates unavailable",
                StatusCode::SERVICE_UNAVAILABLE,
            ),
            ServiceError::Endpoint(ClientError::Timeout(_)) => {
                ("endpoint-timeout", "SPARQL endpoint timed out", StatusCode::GATEWAY_TIMEOUT)
            }
            ServiceError::Endpoint(_) => ("endpoint-failure", "SPARQL endpoint failed", StatusCode::BAD_GATEWAY),
            ServiceError::Cache(_) | ServiceError::Internal(_) => {
                ("internal", "Internal error", StatusCode::INTERNAL_SERVER_ERROR)
            }
        };
        let (detail, violations) = match e {
            ServiceError::Invalid(v) => (
                v.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "),
                v.clone(),
            ),
            other => (other.to_string(), Vec::new()),
        };
        Problem {
            kind,
            title,
            status: status.as_u16(),
            detail,
            violations,
        }
    }
}

impl IntoResponse for Problem {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        let mut resp = (status, Json(self)).into_response();
        resp.headers_mut()
            .insert(CONTENT_TYPE, HeaderValue::from_static(PROBLEM_MEDIA_TYPE));
        resp
    }
}

/// Scheme and authority for self links: the configured public URL, else
/// the request's Host header, else the listen address.
fn base_url(svc: &FeedService, headers: &HeaderMap) -> String {
    if svc.config().public_url.is_some() {
        return svc.config().default_base();
    }
    headers
        .get(HOST)
        .and_then(|h| h.to_str().ok())
        .map(|h| format!("http://{h}"))
        .filter(|u| AbsoluteUri::parse(u).is_ok() && url::Url::parse(u).is_ok_and(|p| p.path() == "/"))
        .unwrap_or_else(|| svc.config().default_base())
}

async fn feed(State(svc): State<Arc<FeedService>>, headers: HeaderMap, RawQuery(raw): RawQuery) -> Response {
    let req = match from_query_string(raw.as_deref().unwrap_or("")) {
        Ok(r) => r,
        Err(v) => return Problem::from_error(&ServiceError::Invalid(v)).into_response(),
    };
    let self_url = svc.self_url(&base_url(&svc, &headers), &req);
    match svc.feed(&req, &self_url).await {
        Ok(out) => {
            let mut resp = out.body.into_response();
            let h = resp.headers_mut();
            h.insert(CONTENT_TYPE, HeaderValue::from_static(out.format.media_type()));
            h.insert(CACHE_HEADER, HeaderValue::from_static(out.cache.as_str()));
            h.insert(CACHE_CONTROL, HeaderValue::from_static("no-cache"));
            resp
        }
        Err(e) => {
            if !matches!(e, ServiceError::Invalid(_)) {
                tracing::warn!(error = %e, "feed request failed");
            }
            Problem::from_error(&e).into_response()
        }
    }
}

async fn healthz(State(svc): State<Arc<FeedService>>) -> Response {
    Json(svc.health().await).into_response()
}

pub fn router(svc: Arc<FeedService>) -> Router {
    Router::new()
        .route("/feed", get(feed))
        .route("/healthz", get(healthz))
        .with_state(svc)
}
