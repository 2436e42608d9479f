//! HTTP/JSON service over a [`Workbench`].
//!
//! Errors come back as `{"error": {"code", "message", "field"}}` with 400 for
//! invalid input, 404 for missing records and 422 for numerical failures.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use edm_core::store::{FieldFilter, Table};
use edm_core::{Error, ErrorKind};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

use crate::workbench::{
    AnalysisRequest, CompareRequest, CostRequest, ExcludeRequest, FitRequest, IngestRequest,
    OptimizeRequest, PlanRequest, ReportRequest, WhatIfRequest, Workbench,
};

type Shared = Arc<Workbench>;

/// Error wrapper that renders as the JSON error body.
#[derive(Debug)]
pub struct ApiError(pub Error);

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        ApiError(e)
    }
}

pub fn status_for(e: &Error) -> StatusCode {
    match e.kind() {
        ErrorKind::Validation | ErrorKind::Usage => StatusCode::BAD_REQUEST,
        ErrorKind::NotFound => StatusCode::NOT_FOUND,
        ErrorKind::Numerical => StatusCode::UNPROCESSABLE_ENTITY,
        ErrorKind::Io => StatusCode::INTERNAL_SERVER_ERROR,
    }
}

/// The error body shared with the command line's JSON output.
pub fn error_body(e: &Error) -> Value {
    json!({"error": {"code": e.code(), "message": e.to_string(), "field": e.field()}})
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (status_for(&self.0), Json(error_body(&self.0))).into_response()
    }
}

type ApiResult = Result<Json<Value>, ApiError>;

/// Runs a store-bound operation off the async executor.
async fn blocking<T, F>(wb: Shared, f: F) -> ApiResult
where
    T: Serialize + Send + 'static,
    F: FnOnce(&Workbench) -> edm_core::Result<T> + Send + 'static,
{
    let out = tokio::task::spawn_blocking(move || f(&wb))
        .await
        .map_err(|e| Error::Numerical(format!("request task failed: {e}")))??;
    let value = serde_json::to_value(out).map_err(|e| Error::Numerical(e.to_string()))?;
    Ok(Json(value))
}

/// Parses a JSON body, reporting malformed input as a validation error.
fn body<T: DeserializeOwned>(raw: &str) -> Result<T, ApiError> {
    serde_json::from_str(raw).map_err(|e| {
        let msg = e.to_string();
        let field = msg.split('`').nth(1).filter(|f| !f.is_empty()).unwrap_or("body").to_string();
        ApiError(Error::Validation { field, message: msg })
    })
}

fn table(name: &str) -> Result<Table, ApiError> {
    name.parse::<Table>().map_err(|e| match e {
        Error::Usage(m) => ApiError(Error::NotFound(m)),
        other => ApiError(other),
    })
}

fn filters(q: &HashMap<String, String>) -> Vec<FieldFilter> {
    let mut f: Vec<FieldFilter> = q
        .iter()
        .map(|(k, v)| FieldFilter { field: k.clone(), value: v.clone() })
        .collect();
    f.sort_by(|a, b| a.field.cmp(&b.field));
    f
}

pub fn router(wb: Workbench) -> Router {
    Router::new()
        .route("/api/plan", post(plan))
        .route("/api/observations", post(ingest))
        .route("/api/observations/exclude", post(exclude))
        .route("/api/analysis/:kind", post(analysis))
        .route("/api/models/fit", post(fit))
        .route("/api/models/simulate", post(simulate))
        .route("/api/optimize", post(optimize))
        .route("/api/whatif", post(what_if))
        .route("/api/compare", post(compare))
        .route("/api/cost", post(cost))
        .route("/api/reports/:kind", get(report))
        .route("/api/:table", get(list).put(put))
        .route("/api/:table/*key", get(fetch).put(put_keyed).delete(remove))
        .with_state(Arc::new(wb))
}

async fn list(State(wb): State<Shared>, Path(t): Path<String>, Query(q): Query<HashMap<String, String>>) -> ApiResult {
    let t = table(&t)?;
    let f = filters(&q);
    blocking(wb, move |wb| wb.entity_list(t, &f)).await
}

async fn fetch(State(wb): State<Shared>, Path((t, key)): Path<(String, String)>) -> ApiResult {
    let t = table(&t)?;
    blocking(wb, move |wb| wb.entity_get(t, &key)).await
}

async fn put(State(wb): State<Shared>, Path(t): Path<String>, raw: String) -> ApiResult {
    let t = table(&t)?;
    let record: Value = body(&raw)?;
    blocking(wb, move |wb| wb.entity_put(t, record)).await
}

/// PUT to a keyed path; the body's key must match the path.
async fn put_keyed(State(wb): State<Shared>, Path((t, key)): Path<(String, String)>, raw: String) -> ApiResult {
    let t = table(&t)?;
    let record: Value = body(&raw)?;
    blocking(wb, move |wb| {
        let stored = wb.entity_put_checked(t, &key, record)?;
        Ok(stored)
    })
    .await
}

async fn remove(State(wb): State<Shared>, Path((t, key)): Path<(String, String)>) -> ApiResult {
    let t = table(&t)?;
    blocking(wb, move |wb| wb.entity_delete(t, &key)).await
}

async fn plan(State(wb): State<Shared>, raw: String) -> ApiResult {
    let req: PlanRequest = body(&raw)?;
    blocking(wb, move |wb| wb.plan(&req)).await
}

async fn ingest(State(wb): State<Shared>, raw: String) -> ApiResult {
    let req: IngestRequest = body(&raw)?;
    blocking(wb, move |wb| wb.ingest(req)).await
}

async fn exclude(State(wb): State<Shared>, raw: String) -> ApiResult {
    let req: ExcludeRequest = body(&raw)?;
    blocking(wb, move |wb| wb.exclude(&req)).await
}

async fn analysis(State(wb): State<Shared>, Path(kind): Path<String>, raw: String) -> ApiResult {
    let req: AnalysisRequest = body(&raw)?;
    match kind.as_str() {
        "homogeneity" => blocking(wb, move |wb| wb.homogeneity(&req)).await,
        "anova1" => blocking(wb, move |wb| wb.anova1(&req)).await,
        "anova2" => blocking(wb, move |wb| wb.anova2(&req)).await,
        other => Err(ApiError(Error::NotFound(format!(
            "analysis {other:?}; expected homogeneity, anova1 or anova2"
        )))),
    }
}

async fn fit(State(wb): State<Shared>, raw: String) -> ApiResult {
    let req: FitRequest = body(&raw)?;
    blocking(wb, move |wb| wb.fit(&req)).await
}

async fn simulate(State(wb): State<Shared>, raw: String) -> ApiResult {
    let req: FitRequest = body(&raw)?;
    blocking(wb, move |wb| wb.simulate(&req)).await
}

async fn optimize(State(wb): State<Shared>, raw: String) -> ApiResult {
    let req: OptimizeRequest = body(&raw)?;
    blocking(wb, move |wb| wb.optimize(&req)).await
}

async fn what_if(State(wb): State<Shared>, raw: String) -> ApiResult {
    let req: WhatIfRequest = body(&raw)?;
    blocking(wb, move |wb| wb.what_if(&req)).await
}

async fn compare(State(wb): State<Shared>, raw: String) -> ApiResult {
    let req: CompareRequest = body(&raw)?;
    blocking(wb, move |wb| wb.compare(&req)).await
}

async fn cost(State(wb): State<Shared>, raw: String) -> ApiResult {
    let req: CostRequest = body(&raw)?;
    blocking(wb, move |wb| wb.cost(&req)).await
}

async fn report(State(wb): State<Shared>, Path(kind): Path<String>, Query(q): Query<HashMap<String, String>>) -> ApiResult {
    let kind = table(&kind)?;
    let req = ReportRequest { kind, filters: filters(&q) };
    blocking(wb, move |wb| wb.report(&req)).await
}

/// Serves until Ctrl-C.
pub async fn serve(wb: Workbench, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(wb))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
