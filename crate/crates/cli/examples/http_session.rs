//! Serve a trained model through the HTTP router in-process and walk one
//! session: create it, answer every question "no", and read back the
//! snapshot. `avlem serve` exposes the same router on a TCP port.
//!
//! ```bash
//! cargo run -p avlem-cli --release --example http_session
//! ```

use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use avlem::corpus::synthetic::generate_synthetic;
use avlem::model::Variant;
use avlem::training::{train, TrainConfig};
use avlem_cli::service::{router, AppState, ServiceConfig};

async fn call(
    app: &Router,
    method: Method,
    uri: &str,
    body: Option<Value>,
) -> anyhow::Result<Value> {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map_or_else(Body::empty, |b| Body::from(b.to_string())))?;
    let res = app.clone().oneshot(req).await?;
    let status = res.status();
    let bytes = res.into_body().collect().await?.to_bytes();
    let v: Value = serde_json::from_slice(&bytes)?;
    println!("{status} {uri}");
    Ok(v)
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    let synth = generate_synthetic(&Default::default(), 2)?;
    let config = TrainConfig {
        epochs: 10,
        seed: 2,
        ..TrainConfig::default()
    };
    let model = train(
        &synth.corpus,
        &synth.split,
        Variant::Full.config(32),
        &config,
    )?
    .model;
    let service = ServiceConfig {
        m: 2,
        iterations: 4,
        ..ServiceConfig::default()
    };
    let corpus = synth.corpus;
    let pair = &synth.split.test_pairs[0];
    let user = corpus.users.token(pair.user).to_string();
    let query = corpus.query_text(pair.query);
    let app = router(Arc::new(AppState::new(model, corpus, service)?));

    let mut step = call(
        &app,
        Method::POST,
        "/sessions",
        Some(json!({ "user_id": user, "query": query })),
    )
    .await?;
    let id = step["session_id"].as_str().unwrap_or_default().to_string();
    loop {
        println!("  shown {}", step["shown_item"]["title"]);
        if step["finished"].as_bool() != Some(false) {
            break;
        }
        let answers: Vec<Value> = step["questions"]
            .as_array()
            .into_iter()
            .flatten()
            .map(|q| {
                println!("  {} no", q["text"]);
                json!({ "aspect": q["aspect"], "value": q["value"], "answer": "no" })
            })
            .collect();
        let uri = format!("/sessions/{id}/answers");
        step = call(
            &app,
            Method::POST,
            &uri,
            Some(json!({ "answers": answers })),
        )
        .await?;
    }

    let snapshot = call(&app, Method::GET, &format!("/sessions/{id}"), None).await?;
    println!("{}", serde_json::to_string_pretty(&snapshot)?);
    Ok(())
}
