//! Walk the HTTP workflow in-process: create a session, upload a feed,
//! build, then ask for an isochrone and a journey profile.
//!
//!     cargo run -p gtfs2stn --example http_workflow

use std::time::Duration;

use axum::body::Body;
use axum::http::Request;
use axum::Router;
use gtfs2stn::server::{app, ServerConfig};
use gtfs2stn_core::gtfs::write_feed_zip;
use gtfs2stn_core::synth::three_route_feed;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

async fn call(app: &Router, req: Request<Body>) -> (u16, String) {
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status().as_u16();
    let body = resp.into_body().collect().await.unwrap().to_bytes();
    (status, String::from_utf8_lossy(&body).into_owned())
}

async fn post(app: &Router, uri: &str, body: Value) -> (u16, String) {
    let req = Request::post(uri).header("content-type", "application/json").body(Body::from(body.to_string())).unwrap();
    call(app, req).await
}

async fn wait(app: &Router, session: &str, job: &str) -> Value {
    loop {
        let (_, body) =
            call(app, Request::get(format!("/sessions/{session}/jobs/{job}")).body(Body::empty()).unwrap()).await;
        let status: Value = serde_json::from_str(&body).unwrap();
        if status["phase"] == "done" || status["phase"] == "failed" {
            return status;
        }
        tokio::time::sleep(Duration::from_millis(10)).await;
    }
}

#[tokio::main]
async fn main() {
    let (app, _) = app(ServerConfig::default());

    let (_, body) = call(&app, Request::post("/sessions").body(Body::empty()).unwrap()).await;
    let session = serde_json::from_str::<Value>(&body).unwrap()["session_id"].as_str().unwrap().to_string();
    println!("session {session}");

    // Step 1: upload a zipped feed as multipart form data.
    let boundary = "example";
    let mut form =
        format!("--{boundary}\r\nContent-Disposition: form-data; name=\"file\"; filename=\"feed.zip\"\r\n\r\n")
            .into_bytes();
    form.extend(write_feed_zip(&three_route_feed()).unwrap());
    form.extend(format!("\r\n--{boundary}--\r\n").bytes());
    let req = Request::post(format!("/sessions/{session}/feed"))
        .header("content-type", format!("multipart/form-data; boundary={boundary}"))
        .body(Body::from(form))
        .unwrap();
    let (_, body) = call(&app, req).await;
    let job: Value = serde_json::from_str(&body).unwrap();
    println!("upload: {}", wait(&app, &session, job["job_id"].as_str().unwrap()).await);

    // Step 2: inspect.
    let (_, tables) =
        call(&app, Request::get(format!("/sessions/{session}/feed/tables")).body(Body::empty()).unwrap()).await;
    println!("tables: {tables}");

    // Asking for an isochrone now is out of order.
    let iso = json!({"origins": ["S1"], "depart": "08:00:00", "cutoff_s": 3600, "bands": [1200, 2400, 3600]});
    let (status, body) = post(&app, &format!("/sessions/{session}/isochrone"), iso.clone()).await;
    println!("isochrone before build: {status} {body}");

    // Step 3: build.
    let (_, body) =
        post(&app, &format!("/sessions/{session}/network"), json!({"service_ids": ["WKDY"], "max_walk_m": 400})).await;
    let job: Value = serde_json::from_str(&body).unwrap();
    println!("build: {}", wait(&app, &session, job["job_id"].as_str().unwrap()).await);

    // Step 4: isochrone.
    let (status, body) = post(&app, &format!("/sessions/{session}/isochrone"), iso).await;
    let doc: Value = serde_json::from_str(&body).unwrap();
    for f in doc["features"].as_array().unwrap().iter().filter(|f| f["properties"]["kind"] == "band") {
        println!(
            "isochrone {status}: {} min band, {} stops",
            f["properties"]["threshold_min"], f["properties"]["stops"]
        );
    }

    // Step 5: profile, as a table.
    let profile = json!({"origin": "S1", "dest": "S6", "window": "07:40-08:20", "step": "10m"});
    let (_, table) = post(&app, &format!("/sessions/{session}/profile?format=csv"), profile).await;
    print!("{table}");
}
