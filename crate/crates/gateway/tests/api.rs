mod support;

use std::time::Duration;

use axum::http::StatusCode;
use gtfs2stn::server::{app, ServerConfig};
use gtfs2stn_core::network::{build_network, deserialize_network, BuildConfig};
use gtfs2stn_core::synth;
use serde_json::json;
use support::*;

#[tokio::test]
async fn workflow_in_order() {
    let (app, _) = app(ServerConfig::default());
    let s = new_session(&app).await;

    let r = post_json(
        &app,
        &format!("/sessions/{s}/isochrone"),
        json!({"origins": ["S1"], "depart": "08:00:00", "cutoff_s": 600}),
    )
    .await;
    assert_eq!(r.status, StatusCode::CONFLICT, "isochrone before anything");
    let r = post_json(&app, &format!("/sessions/{s}/network"), json!({"service_ids": ["WKDY"]})).await;
    assert_eq!(r.status, StatusCode::CONFLICT, "build before upload");
    assert_eq!(get(&app, &format!("/sessions/{s}/feed/tables")).await.status, StatusCode::CONFLICT);

    let r = upload(&app, &s, fixture_zip("three-route")).await;
    assert_eq!(r.status, StatusCode::ACCEPTED);
    assert_eq!(r.json()["phase"], "queued");
    let done = wait_job(&app, &s, &r.json()).await;
    assert_eq!(done["phase"], "done");
    assert_eq!(done["progress"], 1.0);

    let summary = get(&app, &format!("/sessions/{s}/feed")).await.json();
    assert_eq!(summary["service_ids"], json!(["SAT", "WKDY"]));
    let tables = get(&app, &format!("/sessions/{s}/feed/tables")).await.json();
    assert!(tables.as_array().unwrap().iter().any(|t| t["table"] == "stop_times" && t["rows"] == 36));
    let page = get(&app, &format!("/sessions/{s}/feed/tables/stops?page=0")).await.json();
    assert_eq!(page["rows"].as_array().unwrap().len(), 9);
    assert_eq!(page["page_size"], 1000);
    assert_eq!(get(&app, &format!("/sessions/{s}/feed/tables/nope")).await.status, StatusCode::NOT_FOUND);
    let stops = get(&app, &format!("/sessions/{s}/feed/stops.geojson")).await;
    assert_eq!(stops.content_type, "application/geo+json");
    assert_eq!(stops.json()["features"].as_array().unwrap().len(), 9);
    assert_eq!(get(&app, &format!("/sessions/{s}/feed/shapes.geojson")).await.status, StatusCode::OK);

    let r = post_json(
        &app,
        &format!("/sessions/{s}/isochrone"),
        json!({"origins": ["S1"], "depart": "08:00:00", "cutoff_s": 600}),
    )
    .await;
    assert_eq!(r.status, StatusCode::CONFLICT, "network not built");
    assert!(r.json()["error"].as_str().unwrap().contains("network not built"));

    let r =
        post_json(&app, &format!("/sessions/{s}/network"), json!({"service_ids": ["WKDY"], "max_walk_m": 0.0})).await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);
    let r = post_json(&app, &format!("/sessions/{s}/network"), json!({"service_ids": ["HOLIDAY"]})).await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);

    let r =
        post_json(&app, &format!("/sessions/{s}/network"), json!({"service_ids": ["WKDY"], "max_walk_m": 400.0})).await;
    assert_eq!(r.status, StatusCode::ACCEPTED);
    assert_eq!(wait_job(&app, &s, &r.json()).await["phase"], "done");

    let info = get(&app, &format!("/sessions/{s}/network")).await.json();
    let expect = build_network(&synth::three_route_feed(), &BuildConfig::new(["WKDY"]).with_walk(400.0, 1.34)).unwrap();
    assert_eq!(info["stats"]["nodes"], expect.nodes().len());
    let dl = get(&app, info["download"].as_str().unwrap()).await;
    assert_eq!(deserialize_network(&dl.body).unwrap(), expect);

    let r = post_json(
        &app,
        &format!("/sessions/{s}/isochrone"),
        json!({"origins": ["S1"], "depart": "08:00:00", "cutoff_s": 3600, "bands": [1200, 3600]}),
    )
    .await;
    assert_eq!(r.status, StatusCode::OK, "{}", r.text());
    let doc = r.json();
    assert_eq!(doc["query"]["direction"], "forward");
    let bands = doc["features"].as_array().unwrap().iter().filter(|f| f["properties"]["kind"] == "band").count();
    assert_eq!(bands, 2);

    let r = post_json(
        &app,
        &format!("/sessions/{s}/isochrone"),
        json!({"origins": ["S6"], "arrive": "09:20:00", "cutoff_s": 3600}),
    )
    .await;
    assert_eq!(r.json()["query"]["direction"], "reverse");

    let r = post_json(
        &app,
        &format!("/sessions/{s}/isochrone"),
        json!({"origins": ["NOPE"], "depart": "08:00:00", "cutoff_s": 600}),
    )
    .await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);
    let r = post_json(
        &app,
        &format!("/sessions/{s}/isochrone"),
        json!({"origins": ["S1"], "depart": "8h", "cutoff_s": 600}),
    )
    .await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);
    let r = post_json(
        &app,
        &format!("/sessions/{s}/isochrone"),
        json!({"origins": ["S1"], "depart": 28800, "arrive": 30000, "cutoff_s": 600}),
    )
    .await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);

    let body = json!({"origin": "S1", "dest": "S6", "window": "07:50-08:10", "step": "10m"});
    let r = post_json(&app, &format!("/sessions/{s}/profile"), body.clone()).await;
    assert_eq!(r.status, StatusCode::OK, "{}", r.text());
    let p = r.json();
    assert_eq!(p["samples"].as_array().unwrap().len(), 3);
    for sample in p["samples"].as_array().unwrap() {
        let j = &sample["journey"];
        if !j.is_null() {
            let parts =
                j["walk_s"].as_u64().unwrap() + j["wait_s"].as_u64().unwrap() + j["vehicle_s"].as_u64().unwrap();
            assert_eq!(parts, j["total_s"].as_u64().unwrap());
        }
    }
    let csv = post_json(&app, &format!("/sessions/{s}/profile?format=csv"), body).await;
    assert!(csv.content_type.starts_with("text/csv"));
    assert_eq!(csv.text().lines().count(), 4);
    let r = post_json(
        &app,
        &format!("/sessions/{s}/profile"),
        json!({"origin": "S1", "dest": "S6", "window": "08:10-08:00", "step": 600}),
    )
    .await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test]
async fn grid_and_diff() {
    let (app, _) = app(ServerConfig::default());
    let s = new_session(&app).await;
    let r = upload(&app, &s, fixture_zip("three-route")).await;
    wait_job(&app, &s, &r.json()).await;

    let req = |label: &str| json!({"service_ids": ["WKDY"], "cell_deg": 0.01, "window": "08:00-10:00", "label": label});
    let a = post_json(&app, &format!("/sessions/{s}/grid"), req("a")).await;
    assert_eq!(a.status, StatusCode::OK, "{}", a.text());
    let b = post_json(&app, &format!("/sessions/{s}/grid"), req("b")).await;
    let d = post_json(&app, &format!("/sessions/{s}/grid/diff"), json!({"a": a.json(), "b": b.json()})).await;
    assert_eq!(d.status, StatusCode::OK, "{}", d.text());
    assert!(d.json()["features"].as_array().unwrap().iter().all(|f| f["properties"]["diff"] == 0.0));

    let coarse = post_json(
        &app,
        &format!("/sessions/{s}/grid"),
        json!({"service_ids": ["WKDY"], "cell_deg": 0.05, "window": "08:00-10:00"}),
    )
    .await;
    let r = post_json(&app, &format!("/sessions/{s}/grid/diff"), json!({"a": a.json(), "b": coarse.json()})).await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);
    let r = post_json(
        &app,
        &format!("/sessions/{s}/grid"),
        json!({"service_ids": ["WKDY"], "cell_deg": 0.01, "window": "10:00-08:00"}),
    )
    .await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test]
async fn unknown_and_expired_sessions() {
    let (app, state) = app(ServerConfig { session_ttl: Duration::from_millis(100), ..ServerConfig::default() });
    assert_eq!(get(&app, "/sessions/not-a-uuid").await.status, StatusCode::NOT_FOUND);
    assert_eq!(get(&app, "/sessions/00000000-0000-0000-0000-000000000000/feed").await.status, StatusCode::NOT_FOUND);

    let s = new_session(&app).await;
    assert_eq!(get(&app, &format!("/sessions/{s}")).await.status, StatusCode::OK);
    tokio::time::sleep(Duration::from_millis(250)).await;
    assert_eq!(get(&app, &format!("/sessions/{s}")).await.status, StatusCode::NOT_FOUND);

    let t = new_session(&app).await;
    tokio::time::sleep(Duration::from_millis(250)).await;
    assert_eq!(state.sweep(), 1);
    assert!(state.is_empty());
    assert_eq!(get(&app, &format!("/sessions/{t}")).await.status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn bad_uploads_leave_state_alone() {
    let (app, _) = app(ServerConfig { upload_cap_bytes: 64 * 1024, ..ServerConfig::default() });
    let s = new_session(&app).await;
    let r = upload(&app, &s, b"this is not a zip".to_vec()).await;
    let j = wait_job(&app, &s, &r.json()).await;
    assert_eq!(j["phase"], "failed");
    assert!(!j["message"].as_str().unwrap().is_empty());
    assert_eq!(get(&app, &format!("/sessions/{s}")).await.json()["has_feed"], false);

    let r = upload(&app, &s, vec![0u8; 128 * 1024]).await;
    assert_eq!(r.status, StatusCode::PAYLOAD_TOO_LARGE);

    // A valid feed, then a broken one: the first stays.
    let r = upload(&app, &s, fixture_zip("frequency-loop")).await;
    assert_eq!(wait_job(&app, &s, &r.json()).await["phase"], "done");
    let mut broken = synth::single_trip_feed();
    broken.stop_times[0].trip_id = "GHOST".into();
    let r = upload(&app, &s, gtfs2stn_core::gtfs::write_feed_zip(&broken).unwrap()).await;
    let j = wait_job(&app, &s, &r.json()).await;
    assert_eq!(j["phase"], "failed");
    assert!(j["message"].as_str().unwrap().contains("fatal"));
    let stops = get(&app, &format!("/sessions/{s}/feed/stops.geojson")).await.json();
    assert_eq!(stops["features"][0]["properties"]["stop_id"], "HUB");
}

#[tokio::test]
async fn sessions_are_isolated() {
    let (app, _) = app(ServerConfig::default());
    let a = ready_session(&app, "three-route", json!({"service_ids": ["WKDY"]})).await;
    let b = new_session(&app).await;
    let r = post_json(
        &app,
        &format!("/sessions/{b}/isochrone"),
        json!({"origins": ["S1"], "depart": "08:00:00", "cutoff_s": 600}),
    )
    .await;
    assert_eq!(r.status, StatusCode::CONFLICT);
    assert_eq!(get(&app, &format!("/sessions/{b}")).await.json()["has_feed"], false);
    let r = send(&app, axum::http::Request::delete(format!("/sessions/{b}")).body(axum::body::Body::empty()).unwrap())
        .await;
    assert_eq!(r.status, StatusCode::NO_CONTENT);
    assert_eq!(get(&app, &format!("/sessions/{a}")).await.json()["has_network"], true);
}
