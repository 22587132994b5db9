//! Drives the HTTP API in-process: uploads a corpus, fits a model as a
//! background job, opens a project and records an outlier decision.
//!
//! Run with `cargo run --example api_walkthrough`.

use std::time::Duration;

use axum::body::Body;
use axum::http::{header, Method, Request};
use axum::Router;
use groundwork::server::{router, AppState, Store};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

async fn call(app: &Router, method: Method, path: &str, body: Option<Value>) -> (u16, Value) {
    let request = Request::builder()
        .method(method.clone())
        .uri(format!("/api/v1{path}"))
        .header(header::CONTENT_TYPE, "application/json")
        .body(body.map_or_else(Body::empty, |b| Body::from(b.to_string())))
        .expect("valid request");
    let response = app.clone().oneshot(request).await.expect("router is infallible");
    let status = response.status().as_u16();
    let bytes = response.into_body().collect().await.expect("body").to_bytes();
    let value = serde_json::from_slice(&bytes).unwrap_or(Value::Null);
    println!("{method} {path} -> {status}");
    (status, value)
}

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let app = router(AppState::new(Store::open(dir.path())?, 2));

    let texts = [
        "Partners share knowledge across firms and share design risk.",
        "Knowledge sharing between partner firms builds trust over time.",
        "Trust and contracts govern the innovation partnership.",
        "Design workshops let contractors propose innovation early.",
        "Risk sharing contracts reward partners for design innovation.",
        "Leadership sets the tone for collaboration and trust.",
    ];
    let documents: Vec<Value> = texts
        .iter()
        .enumerate()
        .map(|(i, t)| json!({"doc_id": format!("i{i}"), "raw_text": t}))
        .collect();
    let (_, corpus) = call(&app, Method::POST, "/corpora", Some(json!({"documents": documents}))).await;
    let corpus_id = corpus["id"].as_str().expect("corpus id").to_string();
    println!("  vocabulary size {}", corpus["vocab_size"]);

    let params = json!({"num_topics": 3, "sweeps": 200, "seed": 7});
    let (_, job) = call(
        &app,
        Method::POST,
        "/jobs/lda",
        Some(json!({"corpus_id": corpus_id, "params": params})),
    )
    .await;
    let job_path = format!("/jobs/{}", job["job_id"].as_str().expect("job id"));
    let job = loop {
        let (_, job) = call(&app, Method::GET, &job_path, None).await;
        match job["status"].as_str() {
            Some("DONE") | Some("FAILED") => break job,
            _ => tokio::time::sleep(Duration::from_millis(50)).await,
        }
    };
    let model_id = job["result_ref"].as_str().expect("finished job has a model").to_string();

    let (_, topics) = call(&app, Method::GET, &format!("/models/{model_id}/topics?n=5"), None).await;
    for topic in topics.as_array().into_iter().flatten() {
        println!("  topic_{}: {}", topic["topic_id"], topic["words"]);
    }

    let (_, project) = call(&app, Method::POST, "/projects", Some(json!({"model_id": model_id}))).await;
    let project_id = project["project_id"].as_str().expect("project id").to_string();
    let (_, evidence) = call(
        &app,
        Method::GET,
        &format!("/projects/{project_id}/codes/0/documents"),
        None,
    )
    .await;
    println!("  evidence for topic_0: {evidence}");

    let (_, changed) = call(
        &app,
        Method::POST,
        &format!("/projects/{project_id}/outliers"),
        Some(json!({"topic_id": 2, "reason": "mixes unrelated themes"})),
    )
    .await;
    println!("  outcome: {}", changed["outcome"]);

    let (status, error) = call(
        &app,
        Method::POST,
        &format!("/projects/{project_id}/labels"),
        Some(json!({"expert_id": "e1", "topic_id": 0, "label": "Trust", "rating": 6})),
    )
    .await;
    println!("  rejected with {status}: {error}");
    Ok(())
}
