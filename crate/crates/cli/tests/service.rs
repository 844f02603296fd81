use std::sync::{Arc, OnceLock};
use std::time::{Duration, Instant};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use avlem::corpus::synthetic::{generate_synthetic, SynthConfig, SyntheticCorpus};
use avlem::model::{FeedbackSet, Model, Variant};
use avlem::training::{train, TrainConfig};
use avlem::ItemId;
use avlem_cli::service::{router, AppState, PostAnswers, ServiceConfig, SCHEMA};

struct Fixture {
    synth: SyntheticCorpus,
    model: Model,
}

fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let synth = generate_synthetic(&SynthConfig::default(), 1).unwrap();
        let tc = TrainConfig {
            epochs: 5,
            seed: 1,
            ..TrainConfig::default()
        };
        let model = train(&synth.corpus, &synth.split, Variant::Full.config(32), &tc)
            .unwrap()
            .model;
        Fixture { synth, model }
    })
}

fn app(config: ServiceConfig) -> Arc<AppState> {
    let f = fixture();
    Arc::new(AppState::new(f.model.clone(), f.synth.corpus.clone(), config).unwrap())
}

fn default_app() -> Arc<AppState> {
    app(ServiceConfig {
        m: 2,
        iterations: 3,
        ..ServiceConfig::default()
    })
}

fn validator(def: &str) -> jsonschema::Validator {
    let mut schema: Value = serde_json::from_str(SCHEMA).unwrap();
    schema["$ref"] = json!(format!("#/$defs/{def}"));
    jsonschema::validator_for(&schema).unwrap()
}

fn assert_valid(def: &str, v: &Value) {
    let errors: Vec<String> = validator(def)
        .iter_errors(v)
        .map(|e| e.to_string())
        .collect();
    assert!(
        errors.is_empty(),
        "{def} schema violations {errors:?} in {v}"
    );
}

async fn call(
    app: &Arc<AppState>,
    method: &str,
    uri: &str,
    body: Option<Value>,
) -> (StatusCode, Value) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(match body {
            Some(b) => Body::from(b.to_string()),
            None => Body::empty(),
        })
        .unwrap();
    let resp = router(app.clone()).oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let v = if bytes.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&bytes).unwrap()
    };
    if status.is_success() {
        assert!(!v.is_null());
    } else {
        assert_valid("Error", &v);
    }
    (status, v)
}

fn user_and_query() -> (String, String) {
    let c = &fixture().synth.corpus;
    let pair = &fixture().synth.split.test_pairs[0];
    (
        c.users.token(pair.user).to_owned(),
        c.query_text(pair.query),
    )
}

async fn create(app: &Arc<AppState>) -> Value {
    let (user, query) = user_and_query();
    let (status, v) = call(
        app,
        "POST",
        "/sessions",
        Some(json!({"user_id": user, "query": query})),
    )
    .await;
    assert_eq!(status, StatusCode::CREATED, "{v}");
    assert_valid("Step", &v);
    v
}

fn skip_all(step: &Value) -> Value {
    let answers: Vec<Value> = step["questions"]
        .as_array()
        .unwrap()
        .iter()
        .map(|q| json!({"aspect": q["aspect"], "value": q["value"], "answer": "skip"}))
        .collect();
    json!({ "answers": answers })
}

#[tokio::test]
async fn create_session_returns_first_item_and_questions() {
    let app = default_app();
    let v = create(&app).await;
    assert_eq!(v["iteration"], 1);
    assert_eq!(v["personalization"], true);
    assert_eq!(v["finished"], false);
    let qs = v["questions"].as_array().unwrap();
    assert!(!qs.is_empty() && qs.len() <= 2);
    // questions come from the shown item's catalog
    let pairs: Vec<(String, String)> = v["shown_item"]["av_pairs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| {
            (
                p["aspect"].as_str().unwrap().to_owned(),
                p["value"].as_str().unwrap().to_owned(),
            )
        })
        .collect();
    for q in qs {
        let key = (
            q["aspect"].as_str().unwrap().to_owned(),
            q["value"].as_str().unwrap().to_owned(),
        );
        assert!(pairs.contains(&key));
    }
}

#[tokio::test]
async fn create_session_errors() {
    let app = default_app();
    let (user, query) = user_and_query();
    let (s, _) = call(
        &app,
        "POST",
        "/sessions",
        Some(json!({"user_id": user, "query": "  "})),
    )
    .await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    let (s, _) = call(
        &app,
        "POST",
        "/sessions",
        Some(json!({"user_id": user, "query": "zzzz qqqq"})),
    )
    .await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    let (s, _) = call(
        &app,
        "POST",
        "/sessions",
        Some(json!({"user_id": "nobody", "query": query})),
    )
    .await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    let (s, _) = call(&app, "POST", "/sessions", Some(json!({"query": query}))).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    let (s, _) = call(&app, "POST", "/sessions", Some(json!({"user": user}))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    let req = Request::builder()
        .method("POST")
        .uri("/sessions")
        .header("content-type", "application/json")
        .body(Body::from("{not json"))
        .unwrap();
    let resp = router(app.clone()).oneshot(req).await.unwrap();
    assert_eq!(resp.status(), StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn anonymous_mode_uses_mean_user() {
    let app = app(ServiceConfig {
        anonymous: true,
        ..ServiceConfig::default()
    });
    let (_, query) = user_and_query();
    let (s, v) = call(
        &app,
        "POST",
        "/sessions",
        Some(json!({"user_id": "nobody", "query": query})),
    )
    .await;
    assert_eq!(s, StatusCode::CREATED);
    assert_valid("Step", &v);
    assert_eq!(v["personalization"], false);
    let f = fixture();
    let q = f.synth.corpus.encode_known(&query);
    let items: Vec<ItemId> = (0..f.synth.corpus.num_items() as ItemId).collect();
    let top = f
        .model
        .rank_items(
            None,
            &q,
            &FeedbackSet::new(),
            &items,
            &f.synth.corpus.aspects,
        )
        .unwrap()[0]
        .0;
    assert_eq!(v["shown_item"]["id"], f.synth.corpus.items.token(top));
    let id = v["session_id"].as_str().unwrap();
    let (_, g) = call(&app, "GET", &format!("/sessions/{id}"), None).await;
    assert_eq!(g["user_id"], Value::Null);
}

#[tokio::test]
async fn all_skip_reranks_without_feedback() {
    let app = default_app();
    let f = fixture();
    let c = &f.synth.corpus;
    let (user, query) = user_and_query();
    let v = create(&app).await;
    let id = v["session_id"].as_str().unwrap().to_owned();
    let (s, next) = call(
        &app,
        "POST",
        &format!("/sessions/{id}/answers"),
        Some(skip_all(&v)),
    )
    .await;
    assert_eq!(s, StatusCode::OK, "{next}");
    assert_valid("Step", &next);
    assert_eq!(next["iteration"], 2);
    let first = c.items.id(v["shown_item"]["id"].as_str().unwrap()).unwrap();
    let rest: Vec<ItemId> = (0..c.num_items() as ItemId)
        .filter(|&i| i != first)
        .collect();
    let want = f
        .model
        .rank_items(
            c.users.id(&user),
            &c.encode_known(&query),
            &FeedbackSet::new(),
            &rest,
            &c.aspects,
        )
        .unwrap()[0]
        .0;
    assert_eq!(next["shown_item"]["id"], c.items.token(want));
}

#[tokio::test]
async fn answer_errors() {
    let app = default_app();
    let (s, _) = call(
        &app,
        "POST",
        "/sessions/missing/answers",
        Some(json!({"answers": []})),
    )
    .await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    let v = create(&app).await;
    let id = v["session_id"].as_str().unwrap().to_owned();
    let uri = format!("/sessions/{id}/answers");
    let bogus = json!({"answers": [{"aspect": "no such aspect", "value": "x", "answer": "yes"}]});
    let (s, _) = call(&app, "POST", &uri, Some(bogus)).await;
    assert_eq!(s, StatusCode::CONFLICT);
    let q = &v["questions"][0];
    let twice = json!({"answers": [
        {"aspect": q["aspect"], "value": q["value"], "answer": "yes"},
        {"aspect": q["aspect"], "value": q["value"], "answer": "no"}
    ]});
    let (s, _) = call(&app, "POST", &uri, Some(twice)).await;
    assert_eq!(s, StatusCode::CONFLICT);
    let bad_answer =
        json!({"answers": [{"aspect": q["aspect"], "value": q["value"], "answer": "maybe"}]});
    let (s, _) = call(&app, "POST", &uri, Some(bad_answer)).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    // rejected requests leave the session untouched
    let (_, g) = call(&app, "GET", &format!("/sessions/{id}"), None).await;
    assert_eq!(g["iteration"], 1);
    // a question from the previous round is stale
    let (s, step2) = call(&app, "POST", &uri, Some(skip_all(&v))).await;
    assert_eq!(s, StatusCode::OK);
    let (s, _) = call(&app, "POST", &uri, Some(skip_all(&v))).await;
    assert_eq!(s, StatusCode::CONFLICT);
    // budget of three shown items
    let (s, step3) = call(&app, "POST", &uri, Some(skip_all(&step2))).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(step3["iteration"], 3);
    assert_eq!(step3["finished"], true);
    assert_eq!(step3["questions"], json!([]));
    let (s, _) = call(&app, "POST", &uri, Some(json!({"answers": []}))).await;
    assert_eq!(s, StatusCode::GONE);
}

#[tokio::test]
async fn session_snapshot_tracks_history() {
    let app = default_app();
    let v = create(&app).await;
    let id = v["session_id"].as_str().unwrap().to_owned();
    let (s, g) = call(&app, "GET", &format!("/sessions/{id}"), None).await;
    assert_eq!(s, StatusCode::OK);
    assert_valid("Session", &g);
    assert_eq!(g["iteration"], 1);
    assert_eq!(g["budget"], 3);
    assert_eq!(g["questions"], v["questions"]);
    let q = &v["questions"][0];
    let body = json!({"answers": [{"aspect": q["aspect"], "value": q["value"], "answer": "no"}]});
    call(&app, "POST", &format!("/sessions/{id}/answers"), Some(body)).await;
    let (_, g) = call(&app, "GET", &format!("/sessions/{id}"), None).await;
    assert_valid("Session", &g);
    assert_eq!(g["iteration"], 2);
    assert_eq!(g["shown"].as_array().unwrap().len(), 2);
    assert_eq!(
        g["history"],
        json!([{"iteration": 1, "aspect": q["aspect"], "value": q["value"], "answer": "no"}])
    );
    let (s, _) = call(&app, "GET", "/sessions/nope", None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn item_endpoint_sorts_pairs_by_mentions() {
    let app = default_app();
    let c = &fixture().synth.corpus;
    for item in 0..c.num_items() as ItemId {
        let (s, v) = call(
            &app,
            "GET",
            &format!("/items/{}", c.items.token(item)),
            None,
        )
        .await;
        assert_eq!(s, StatusCode::OK);
        assert_valid("Item", &v);
        let mentions: Vec<u64> = v["av_pairs"]
            .as_array()
            .unwrap()
            .iter()
            .map(|p| p["mentions"].as_u64().unwrap())
            .collect();
        assert!(mentions.windows(2).all(|w| w[0] >= w[1]));
        assert_eq!(mentions.len(), c.item_av(item).count());
    }
    let (s, _) = call(&app, "GET", "/items/unknown-item", None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn schema_is_published() {
    let app = default_app();
    let (s, v) = call(&app, "GET", "/schema", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v, serde_json::from_str::<Value>(SCHEMA).unwrap());
    assert_valid("CreateSession", &json!({"user_id": "u", "query": "q"}));
    assert_valid(
        "PostAnswers",
        &json!({"answers": [{"aspect": "a", "value": "v", "answer": "skip"}]}),
    );
}

#[tokio::test]
async fn idle_sessions_expire() {
    let app = app(ServiceConfig {
        ttl_secs: 1,
        ..ServiceConfig::default()
    });
    let v = create(&app).await;
    let id = v["session_id"].as_str().unwrap().to_owned();
    assert_eq!(app.evict_expired(Instant::now()), 0);
    assert_eq!(
        app.evict_expired(Instant::now() + Duration::from_secs(2)),
        1
    );
    assert_eq!(app.session_count(), 0);
    let (s, _) = call(&app, "GET", &format!("/sessions/{id}"), None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn endpoints_never_mutate_the_model() {
    let app = default_app();
    let before = app.model().params.checksum();
    let mut step = create(&app).await;
    let id = step["session_id"].as_str().unwrap().to_owned();
    for _ in 0..2 {
        let q = &step["questions"][0];
        let body =
            json!({"answers": [{"aspect": q["aspect"], "value": q["value"], "answer": "yes"}]});
        step = call(&app, "POST", &format!("/sessions/{id}/answers"), Some(body))
            .await
            .1;
    }
    assert_eq!(app.model().params.checksum(), before);
    assert_eq!(app.model(), &fixture().model);
}

#[test]
fn concurrent_answers_yield_one_next_state() {
    let app = default_app();
    let rt = tokio::runtime::Runtime::new().unwrap();
    let v = rt.block_on(create(&app));
    let id = v["session_id"].as_str().unwrap().to_owned();
    let body: PostAnswers = serde_json::from_value(skip_all(&v)).unwrap();
    let results: Vec<_> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..8)
            .map(|_| {
                let app = app.clone();
                let id = id.clone();
                let body = body.clone();
                s.spawn(move || app.post_answers(&id, body))
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let ok = results.iter().filter(|r| r.is_ok()).count();
    assert_eq!(ok, 1);
    for r in results.iter().filter_map(|r| r.as_ref().err()) {
        assert_eq!(r.status, StatusCode::CONFLICT);
    }
    assert_eq!(app.get_session(&id).unwrap().iteration, 2);
}

/// Scripted three-round session: a "no" to a planted pair moves the next
/// item away from what an all-skip session shows.
#[tokio::test]
async fn negative_answer_changes_next_item() {
    let f = fixture();
    let c = &f.synth.corpus;
    let app = app(ServiceConfig {
        m: 1,
        iterations: 3,
        feedback: avlem::model::FeedbackUse::Negative,
        ..ServiceConfig::default()
    });
    let mut changed = 0;
    for pair in &f.synth.split.test_pairs {
        let body = json!({"user_id": c.users.token(pair.user), "query": c.query_text(pair.query)});
        let (_, a) = call(&app, "POST", "/sessions", Some(body.clone())).await;
        let (_, b) = call(&app, "POST", "/sessions", Some(body)).await;
        assert_eq!(a["shown_item"], b["shown_item"]);
        let Some(q) = a["questions"].get(0).cloned() else {
            continue;
        };
        let no = json!({"answers": [{"aspect": q["aspect"], "value": q["value"], "answer": "no"}]});
        let ida = a["session_id"].as_str().unwrap();
        let idb = b["session_id"].as_str().unwrap();
        let (_, na) = call(&app, "POST", &format!("/sessions/{ida}/answers"), Some(no)).await;
        let (_, nb) = call(
            &app,
            "POST",
            &format!("/sessions/{idb}/answers"),
            Some(skip_all(&b)),
        )
        .await;
        if na["shown_item"] != nb["shown_item"] {
            changed += 1;
        }
        let (s, last) = call(
            &app,
            "POST",
            &format!("/sessions/{ida}/answers"),
            Some(skip_all(&na)),
        )
        .await;
        assert_eq!(s, StatusCode::OK);
        assert_valid("Step", &last);
        assert_eq!(last["iteration"], 3);
        assert_eq!(last["finished"], true);
    }
    assert!(changed > 0, "no session responded to a negative answer");
}
