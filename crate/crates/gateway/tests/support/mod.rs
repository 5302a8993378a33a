#![allow(dead_code)]

use std::path::PathBuf;
use std::time::Duration;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use gtfs2stn_core::gtfs::{load_feed, write_feed_zip};
use http_body_util::BodyExt;
use serde_json::Value;
use tower::ServiceExt;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

pub fn fixture_zip(name: &str) -> Vec<u8> {
    write_feed_zip(&load_feed(fixture(name)).unwrap()).unwrap()
}

pub struct Reply {
    pub status: StatusCode,
    pub content_type: String,
    pub body: Vec<u8>,
}

impl Reply {
    pub fn json(&self) -> Value {
        serde_json::from_slice(&self.body).unwrap_or_else(|e| panic!("{e}: {}", self.text()))
    }
    pub fn text(&self) -> String {
        String::from_utf8_lossy(&self.body).into_owned()
    }
}

pub async fn send(app: &Router, req: Request<Body>) -> Reply {
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let content_type = resp.headers().get("content-type").map(|v| v.to_str().unwrap().to_string()).unwrap_or_default();
    let body = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    Reply { status, content_type, body }
}

pub async fn get(app: &Router, uri: &str) -> Reply {
    send(app, Request::get(uri).body(Body::empty()).unwrap()).await
}

pub async fn post_json(app: &Router, uri: &str, body: Value) -> Reply {
    let req = Request::post(uri).header("content-type", "application/json").body(Body::from(body.to_string())).unwrap();
    send(app, req).await
}

pub async fn upload(app: &Router, session: &str, zip: Vec<u8>) -> Reply {
    let boundary = "gtfs2stn-test-boundary";
    let mut body = format!(
        "--{boundary}\r\nContent-Disposition: form-data; name=\"file\"; filename=\"feed.zip\"\r\nContent-Type: application/zip\r\n\r\n"
    )
    .into_bytes();
    body.extend(zip);
    body.extend(format!("\r\n--{boundary}--\r\n").into_bytes());
    let req = Request::post(format!("/sessions/{session}/feed"))
        .header("content-type", format!("multipart/form-data; boundary={boundary}"))
        .body(Body::from(body))
        .unwrap();
    send(app, req).await
}

pub async fn new_session(app: &Router) -> String {
    let r = send(app, Request::post("/sessions").body(Body::empty()).unwrap()).await;
    assert_eq!(r.status, StatusCode::CREATED);
    r.json()["session_id"].as_str().unwrap().to_string()
}

/// Polls a job until it leaves the queue and returns its final status.
pub async fn wait_job(app: &Router, session: &str, job: &Value) -> Value {
    let id = job["job_id"].as_str().unwrap();
    for _ in 0..600 {
        let r = get(app, &format!("/sessions/{session}/jobs/{id}")).await;
        assert_eq!(r.status, StatusCode::OK, "{}", r.text());
        let j = r.json();
        if j["phase"] == "done" || j["phase"] == "failed" {
            return j;
        }
        tokio::time::sleep(Duration::from_millis(20)).await;
    }
    panic!("job {id} did not finish");
}

/// New session with the fixture uploaded and a network built.
pub async fn ready_session(app: &Router, fixture_name: &str, build: Value) -> String {
    let s = new_session(app).await;
    let r = upload(app, &s, fixture_zip(fixture_name)).await;
    assert_eq!(r.status, StatusCode::ACCEPTED, "{}", r.text());
    assert_eq!(wait_job(app, &s, &r.json()).await["phase"], "done");
    let r = post_json(app, &format!("/sessions/{s}/network"), build).await;
    assert_eq!(r.status, StatusCode::ACCEPTED, "{}", r.text());
    assert_eq!(wait_job(app, &s, &r.json()).await["phase"], "done");
    s
}
