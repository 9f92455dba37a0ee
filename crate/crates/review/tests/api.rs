use std::path::{Path, PathBuf};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;
use vqakit::corpus::{load_corpus, save_corpus};
use vqakit::review::read_journal;
use vqakit::transduce::{GenerateConfig, Transducer};
use vqakit_review::{router, AppState, ServiceConfig};

fn sample_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/sample")
}

/// Five generated pairs over the sample corpus, written into `dir`.
fn five_pair_dataset(dir: &Path) -> PathBuf {
    let mut corpus = load_corpus(sample_dir().join("corpus.json")).unwrap();
    let (qs, _) = Transducer::default().generate(&corpus, &GenerateConfig::default());
    corpus.qa_pairs = qs.into_iter().take(5).map(|q| q.pair).collect();
    assert_eq!(corpus.qa_pairs.len(), 5);
    let path = dir.join("qa.json");
    save_corpus(&corpus, &path).unwrap();
    path
}

fn app(dataset: &Path, static_dir: Option<&Path>) -> Router {
    let mut config = ServiceConfig::new(dataset);
    config.image_root = Some(sample_dir());
    let (state, warnings) = AppState::load(&config).unwrap();
    assert!(warnings.is_empty(), "{warnings:?}");
    router(state, static_dir)
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Vec<u8>) {
    let mut req = Request::builder().method(method).uri(uri);
    let body = match body {
        Some(v) => {
            req = req.header("content-type", "application/json");
            Body::from(v.to_string())
        }
        None => Body::empty(),
    };
    let resp = app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    (status, bytes)
}

async fn call_json(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let (status, bytes) = call(app, method, uri, body).await;
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

fn ids(page: &Value) -> Vec<String> {
    page["items"]
        .as_array()
        .unwrap()
        .iter()
        .map(|i| i["qa_id"].as_str().unwrap().to_string())
        .collect()
}

#[tokio::test]
async fn queue_shrinks_as_items_are_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(&five_pair_dataset(dir.path()), None);
    let (status, page) = call_json(&app, "GET", "/api/queue?status=generated", None).await;
    assert_eq!(status, StatusCode::OK);
    let all = ids(&page);
    assert_eq!(all.len(), 5);
    assert!(page["items"][0]["image_uri"].as_str().unwrap().ends_with(".png"));
    for id in &all[..2] {
        let (status, item) = call_json(&app, "POST", &format!("/api/items/{id}/decision"), Some(json!({"action": "accept", "reviewer": "a"}))).await;
        assert_eq!(status, StatusCode::OK);
        assert_eq!(item["status"], "accepted");
    }
    let (_, page) = call_json(&app, "GET", "/api/queue?status=generated", None).await;
    assert_eq!(ids(&page), all[2..]);
    let (_, page) = call_json(&app, "GET", "/api/queue?page=7&page_size=2", None).await;
    assert!(ids(&page).is_empty());
    let (status, _) = call_json(&app, "GET", "/api/queue?page_size=0", None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (_, stats) = call_json(&app, "GET", "/api/stats", None).await;
    assert_eq!(stats, json!({"total": 5, "generated": 3, "accepted": 2, "edited": 0, "rejected": 0}));
}

#[tokio::test]
async fn decisions_persist_and_export() {
    let dir = tempfile::tempdir().unwrap();
    let dataset = five_pair_dataset(dir.path());
    let app1 = app(&dataset, None);
    let (_, page) = call_json(&app1, "GET", "/api/queue", None).await;
    let all = ids(&page);

    let (status, item) = call_json(
        &app1,
        "POST",
        &format!("/api/items/{}/decision", all[0]),
        Some(json!({"action": "edit", "edited_question": "Doe microscopy show coagulative  necrosis", "reviewer": "a"})),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(item["question"], "Doe microscopy show coagulative necrosis?");
    assert_eq!(item["status"], "edited");
    call_json(&app1, "POST", &format!("/api/items/{}/decision", all[1]), Some(json!({"action": "reject"}))).await;
    call_json(&app1, "POST", &format!("/api/items/{}/decision", all[2]), Some(json!({"action": "reject"}))).await;
    call_json(&app1, "POST", &format!("/api/items/{}/decision", all[2]), Some(json!({"action": "accept"}))).await;

    let (status, _) = call_json(&app1, "POST", "/api/items/nope/decision", Some(json!({"action": "accept"}))).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _) = call_json(&app1, "POST", &format!("/api/items/{}/decision", all[3]), Some(json!({"action": "edit"}))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let (status, _) = call_json(
        &app1,
        "POST",
        &format!("/api/items/{}/decision", all[3]),
        Some(json!({"action": "edit", "edited_question": " "})),
    )
    .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);

    let (journal, warnings) = read_journal(&dir.path().join("qa.review.jsonl")).unwrap();
    assert_eq!((journal.len(), warnings.len()), (4, 0));

    // a fresh service sees the same state
    let app2 = app(&dataset, None);
    let (_, item) = call_json(&app2, "GET", &format!("/api/items/{}", all[2]), None).await;
    assert_eq!(item["status"], "accepted");
    let (_, item) = call_json(&app2, "GET", &format!("/api/items/{}", all[0]), None).await;
    assert_eq!(item["question"], "Doe microscopy show coagulative necrosis?");

    let (status, summary) = call_json(&app2, "POST", "/api/export", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(summary["exported"], 2);
    let exported = load_corpus(dir.path().join("qa.reviewed.json")).unwrap();
    assert_eq!(exported.qa_pairs[0].question, "Doe microscopy show coagulative necrosis?");
    let (_, summary) = call_json(&app2, "POST", "/api/export", Some(json!({"include": ["generated", "accepted", "edited"]}))).await;
    assert_eq!(summary["exported"], 4);
}

#[tokio::test]
async fn serves_images_and_static_assets() {
    let dir = tempfile::tempdir().unwrap();
    let dataset = five_pair_dataset(dir.path());
    let assets = dir.path().join("ui");
    std::fs::create_dir(&assets).unwrap();
    std::fs::write(assets.join("index.html"), "<html>review</html>").unwrap();
    let app = app(&dataset, Some(&assets));

    let (status, bytes) = call(&app, "GET", "/api/images/img01", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(&bytes[..4], b"\x89PNG");
    let (status, _) = call(&app, "GET", "/api/images/unknown", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, bytes) = call(&app, "GET", "/", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(bytes, b"<html>review</html>");
    let (status, _) = call(&app, "GET", "/missing.js", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn truncated_journal_loads_with_one_warning() {
    let dir = tempfile::tempdir().unwrap();
    let dataset = five_pair_dataset(dir.path());
    let corpus = load_corpus(&dataset).unwrap();
    let id = &corpus.qa_pairs[0].qa_id;
    let line = json!({"qa_id": id, "action": "reject", "reviewer": "a", "timestamp_ms": 1}).to_string();
    std::fs::write(dir.path().join("qa.review.jsonl"), format!("{line}\n{{\"qa_id\":\"{id}\",\"act")).unwrap();
    let (state, warnings) = AppState::load(&ServiceConfig::new(&dataset)).unwrap();
    assert_eq!(warnings.len(), 1);
    assert_eq!(state.progress().await.rejected, 1);
}
