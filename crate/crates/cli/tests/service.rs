mod common;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use common::{fresh_store, seed_outlier, seed_quadratic, snapshot};
use edm_workbench::service::router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value, Vec<u8>) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map_or_else(Body::empty, |b| Body::from(b.to_string())))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    let value = serde_json::from_slice(&bytes).unwrap_or(Value::Null);
    (status, value, bytes)
}

#[tokio::test]
async fn machine_put_then_get_round_trips() {
    let (_d, _lab, wb) = fresh_store();
    let app = router(wb);
    let machine = json!({"id":"M1","name":"Elox","generator_type":"RC","max_current":50.0,"hourly_rate":"40.50"});
    let (s, put, put_bytes) = call(&app, Method::PUT, "/api/MACHINE", Some(machine.clone())).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(put, machine);
    let (s, got, got_bytes) = call(&app, Method::GET, "/api/machine/M1", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(got, machine);
    assert_eq!(got_bytes, put_bytes);
    let (s, list, _) = call(&app, Method::GET, "/api/MACHINE?generator_type=RC", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(list, json!([machine]));
}

#[tokio::test]
async fn keyed_put_checks_the_address() {
    let (_d, _lab, wb) = fresh_store();
    let app = router(wb);
    let po = json!({"id":"P1","name":"die"});
    let (s, _, _) = call(&app, Method::PUT, "/api/PO/P1", Some(po.clone())).await;
    assert_eq!(s, StatusCode::OK);
    let (s, body, _) = call(&app, Method::PUT, "/api/PO/P2", Some(po)).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(body["error"]["field"], "key");
    let prop = json!({"owner_kind":"PO","owner_id":"P1","property_name":"hardness","value":58.0,"unit":"HRC"});
    let (s, _, _) = call(&app, Method::PUT, "/api/POPROPERTIES/P1:hardness", Some(prop)).await;
    assert_eq!(s, StatusCode::OK);
    let (s, body, _) = call(&app, Method::DELETE, "/api/PO/P1", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(body["cascaded"], json!(["POPROPERTIES:P1:hardness"]));
}

#[tokio::test]
async fn error_statuses() {
    let (_d, _lab, wb) = fresh_store();
    seed_quadratic(&wb);
    let app = router(wb);
    let (s, body, _) = call(&app, Method::PUT, "/api/MACHINE", Some(json!({"id":"M1","max_current":-5,"hourly_rate":"1"}))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(body["error"]["code"], "validation");
    assert_eq!(body["error"]["field"], "max_current");
    let (s, body, _) = call(&app, Method::GET, "/api/MACHINE/nope", None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert_eq!(body["error"]["code"], "not_found");
    let (s, _, _) = call(&app, Method::GET, "/api/NOTATABLE", None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    let (s, body, _) = call(
        &app,
        Method::POST,
        "/api/optimize",
        Some(json!({"experiment_id":"Q","objectives":[{"output_code":"wear"}]})),
    )
    .await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["error"]["code"], "no_model");
    let (s, body, _) = call(&app, Method::POST, "/api/cost", Some(json!({"time": 10, "bogus": 1}))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(body["error"]["field"], "bogus");
}

#[tokio::test]
async fn homogeneity_suggests_without_excluding() {
    let (_d, lab, wb) = fresh_store();
    seed_outlier(&wb);
    let app = router(wb);
    let req = json!({"experiment_id":"H","output_code":"wear"});
    let before = snapshot(&lab);
    let (s, body, _) = call(&app, Method::POST, "/api/analysis/homogeneity", Some(req.clone())).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(body["report"]["homogeneous"], false);
    let suggestions = body["suggestions"].as_array().unwrap();
    assert_eq!(suggestions.len(), 2);
    assert_eq!(suggestions[0]["verdict"], "suggest_eliminate");
    assert_eq!(snapshot(&lab), before);
    let (_, rows, _) = call(&app, Method::GET, "/api/OUTCOME?excluded=true", None).await;
    assert_eq!(rows, json!([]));

    let runs: Vec<Value> = suggestions.iter().map(|s| s["run_reference"].clone()).collect();
    let (s, _, _) = call(&app, Method::POST, "/api/observations/exclude", Some(json!({"runs": runs, "reason": "Grubbs"}))).await;
    assert_eq!(s, StatusCode::OK);
    let (_, body, _) = call(&app, Method::POST, "/api/analysis/homogeneity", Some(req)).await;
    assert_eq!(body["report"]["homogeneous"], true);
    assert_eq!(body["excluded_observations"], 2);
    let (_, report, _) = call(&app, Method::GET, "/api/reports/OUTCOME?excluded=true", None).await;
    assert_eq!(report["rows"].as_array().unwrap().len(), 2);
    assert_eq!(report["rows"][0]["exclusion_reason"], "Grubbs");
}

#[tokio::test]
async fn optimize_over_the_wire() {
    let (_d, _lab, wb) = fresh_store();
    seed_quadratic(&wb);
    let app = router(wb);
    let fit = json!({"experiment_id":"Q","output_code":"wear","factor_codes":["x1","x2"],"arity":"multi","family":"rs_quadratic"});
    let (s, body, _) = call(&app, Method::POST, "/api/models/fit", Some(fit)).await;
    assert_eq!(s, StatusCode::OK, "{body}");
    let (s, body, _) = call(
        &app,
        Method::POST,
        "/api/optimize",
        Some(json!({"experiment_id":"Q","objectives":[{"output_code":"wear","sense":"minimize"}]})),
    )
    .await;
    assert_eq!(s, StatusCode::OK, "{body}");
    let settings = &body["report"]["settings"];
    assert!((settings["x1"].as_f64().unwrap() - 2.0).abs() < 1e-4);
    assert!((settings["x2"].as_f64().unwrap() + 1.0).abs() < 1e-4);

    // a fitted point predicts its measured value
    let (s, body, _) = call(&app, Method::POST, "/api/whatif", Some(json!({"experiment_id":"Q","settings":{"x1":0.0,"x2":1.0}}))).await;
    assert_eq!(s, StatusCode::OK);
    assert!((body["predictions"][0]["value"].as_f64().unwrap() - 8.0).abs() < 1e-9);
    assert_eq!(body["predictions"][0]["extrapolated"], false);
}

#[tokio::test]
async fn plan_simulate_compare_cost_and_reports() {
    let (_d, _lab, wb) = fresh_store();
    seed_quadratic(&wb);
    let app = router(wb);
    let (s, body, _) = call(&app, Method::POST, "/api/plan", Some(json!({"factors":[{"code":"x1"},{"code":"x2"}],"replicates":1}))).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(body["rows"].as_array().unwrap().len(), 4);
    let sim = json!({"experiment_id":"Q","output_code":"wear","factor_codes":["x1","x2"],"arity":"multi"});
    let (s, body, _) = call(&app, Method::POST, "/api/models/simulate", Some(sim)).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(body["ranking"]["entries"][0]["model"]["family"], "rs_quadratic");
    let (s, body, _) = call(&app, Method::POST, "/api/compare", Some(json!({"material":"steel","operation":"drilling","time":30}))).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert!(body["error"]["message"].as_str().unwrap().contains("steel"));
    let (s, body, _) = call(
        &app,
        Method::POST,
        "/api/cost",
        Some(json!({"time":120,"rates":{"machine_rate":"30","labor_rate":"20"}})),
    )
    .await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(body["breakdown"]["total"], "100.0000");
    let (s, body, _) = call(&app, Method::GET, "/api/reports/machine", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(body["rows"], json!([]));
    assert_eq!(body["columns"][0], "id");
}

#[tokio::test]
async fn concurrent_requests_are_consistent() {
    let (_d, _lab, wb) = fresh_store();
    let app = router(wb);
    let mut handles = Vec::new();
    for i in 0..16 {
        let app = app.clone();
        handles.push(tokio::spawn(async move {
            let m = json!({"id": format!("M{i:02}"), "max_current": 10.0, "hourly_rate": "1"});
            call(&app, Method::PUT, "/api/MACHINE", Some(m)).await.0
        }));
    }
    for h in handles {
        assert_eq!(h.await.unwrap(), StatusCode::OK);
    }
    let (_, list, _) = call(&app, Method::GET, "/api/MACHINE", None).await;
    assert_eq!(list.as_array().unwrap().len(), 16);
}
