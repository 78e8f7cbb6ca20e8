use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use texton_core::estimation::{synth_world, LayoutSpec};
use texton_core::io::{render_png, TextonDocument};
use texton_core::{GaussianSet, ImageFrame};
use texton_service::{router, SessionState};
use tower::ServiceExt;

async fn send(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Vec<u8>) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(v) => req
            .header("content-type", "application/json")
            .body(Body::from(v.to_string())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    (status, bytes)
}

async fn send_json(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let (status, bytes) = send(app, method, uri, body).await;
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

fn synth_body(k: usize, seed: u64) -> Value {
    json!({ "synth": { "k": k, "width": 48, "height": 40, "n_f": 3, "seed": seed } })
}

async fn create(app: &Router, k: usize, seed: u64) -> SessionState {
    let (status, v) = send_json(app, "POST", "/sessions", Some(synth_body(k, seed))).await;
    assert_eq!(status, StatusCode::CREATED, "{v}");
    serde_json::from_value(v).unwrap()
}

async fn state(app: &Router, id: &str) -> SessionState {
    let (status, v) = send_json(app, "GET", &format!("/sessions/{id}"), None).await;
    assert_eq!(status, StatusCode::OK);
    serde_json::from_value(v).unwrap()
}

fn synth_set(k: usize, seed: u64) -> GaussianSet {
    let spec = LayoutSpec::new(ImageFrame::new(48, 40).unwrap(), k, 3);
    synth_world(&spec, seed).unwrap().truth
}

#[tokio::test]
async fn synth_session_has_requested_textons() {
    let app = router();
    let s = create(&app, 5, 3).await;
    assert_eq!(s.document.gaussians.len(), 5);
    assert_eq!(s.revision, 0);
    let again = create(&app, 5, 3).await;
    assert_ne!(s.id, again.id);
    let (status, v) = send_json(&app, "GET", "/healthz", None).await;
    assert_eq!((status, v["status"].as_str()), (StatusCode::OK, Some("ok")));
}

#[tokio::test]
async fn malformed_and_invalid_payloads() {
    let app = router();
    let (status, _) = send(&app, "POST", "/sessions", None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _) = send_json(&app, "POST", "/sessions", Some(json!({ "bogus": 1 }))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);

    let mut doc = TextonDocument::from_set(&synth_set(2, 1), None);
    doc.gaussians[1].cov[0][1] += 0.5;
    let (status, v) = send_json(&app, "POST", "/sessions", Some(json!({ "document": doc }))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let violations = v["violations"].as_array().unwrap();
    assert!(violations.iter().any(|x| x.as_str().unwrap().contains("index 1")), "{v}");
}

#[tokio::test]
async fn move_then_undo_restores_state() {
    let app = router();
    let s = create(&app, 4, 8).await;
    let uri = format!("/sessions/{}/edits", s.id);
    let (status, v) = send_json(&app, "POST", &uri, Some(json!({ "op": "move", "index": 0, "dx": 5.0, "dy": 0.0 }))).await;
    assert_eq!(status, StatusCode::OK);
    let moved: SessionState = serde_json::from_value(v).unwrap();
    assert_eq!(moved.revision, 1);
    assert_eq!(moved.document.gaussians[0].mean[0], s.document.gaussians[0].mean[0] + 5.0);

    let (status, v) = send_json(&app, "POST", &format!("/sessions/{}/undo", s.id), None).await;
    assert_eq!(status, StatusCode::OK);
    let undone: SessionState = serde_json::from_value(v).unwrap();
    assert_eq!(undone.document, s.document);

    let (status, _) = send_json(&app, "POST", &format!("/sessions/{}/undo", s.id), None).await;
    assert_eq!(status, StatusCode::CONFLICT);
}

#[tokio::test]
async fn zero_rotation_bumps_revision_only() {
    let app = router();
    let s = create(&app, 3, 2).await;
    let (status, v) = send_json(
        &app,
        "POST",
        &format!("/sessions/{}/edits", s.id),
        Some(json!({ "op": "rotate", "index": 1, "theta": 0.0 })),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    let after: SessionState = serde_json::from_value(v).unwrap();
    assert_eq!(after.revision, 1);
    assert_eq!(after.document, s.document);
}

#[tokio::test]
async fn error_statuses() {
    let app = router();
    let (status, v) = send_json(&app, "GET", "/sessions/nope", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(v["id"], "nope");
    let (status, v) = send_json(&app, "GET", "/sessions/zzz/render", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(v["id"], "zzz");

    let s = create(&app, 3, 2).await;
    let uri = format!("/sessions/{}/edits", s.id);
    let (status, v) = send_json(&app, "POST", &uri, Some(json!({ "op": "scale", "index": 7, "s": 2.0 }))).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(v["index"], 7);
    let (status, _) = send_json(&app, "POST", &uri, Some(json!({ "op": "warp" }))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _) = send_json(&app, "POST", &uri, Some(json!({ "op": "scale", "index": 0, "s": -1.0 }))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let (status, _) = send_json(
        &app,
        "POST",
        &uri,
        Some(json!({ "op": "move", "index": 0, "dx": 1.0, "dy": 0.0, "if_revision": 5 })),
    )
    .await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(state(&app, &s.id).await.revision, 0);
}

#[tokio::test]
async fn render_matches_library_bytes() {
    let app = router();
    let s = create(&app, 6, 11).await;
    let (status, png) = send(&app, "GET", &format!("/sessions/{}/render", s.id), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(png, render_png(&synth_set(6, 11), None).unwrap());

    let (status, big) = send(&app, "GET", &format!("/sessions/{}/render?w=96&h=80", s.id), None).await;
    assert_eq!(status, StatusCode::OK);
    let frame = ImageFrame::new(96, 80).unwrap();
    assert_eq!(big, render_png(&synth_set(6, 11), Some(frame)).unwrap());

    // a no-op edit leaves the image unchanged
    send(
        &app,
        "POST",
        &format!("/sessions/{}/edits", s.id),
        Some(json!({ "op": "rotate", "index": 0, "theta": 0.0 })),
    )
    .await;
    let (_, again) = send(&app, "GET", &format!("/sessions/{}/render", s.id), None).await;
    assert_eq!(again, png);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_edits_are_linearizable() {
    let app = router();
    let base = create(&app, 4, 5).await;
    let set = base.document.to_set().unwrap();
    let a = json!({ "op": "move", "index": 0, "dx": 3.0, "dy": -1.0 });
    let b = json!({ "op": "rotate", "index": 0, "theta": 0.7 });
    let ca: texton_service::EditCommand = serde_json::from_value(a.clone()).unwrap();
    let cb: texton_service::EditCommand = serde_json::from_value(b.clone()).unwrap();
    let ab = cb.apply(&ca.apply(&set).unwrap()).unwrap();
    let ba = ca.apply(&cb.apply(&set).unwrap()).unwrap();

    for _ in 0..20 {
        let s = create(&app, 4, 5).await;
        let uri = format!("/sessions/{}/edits", s.id);
        let (r1, r2) = tokio::join!(
            tokio::spawn({
                let (app, uri, a) = (app.clone(), uri.clone(), a.clone());
                async move { send(&app, "POST", &uri, Some(a)).await.0 }
            }),
            tokio::spawn({
                let (app, uri, b) = (app.clone(), uri.clone(), b.clone());
                async move { send(&app, "POST", &uri, Some(b)).await.0 }
            })
        );
        assert_eq!((r1.unwrap(), r2.unwrap()), (StatusCode::OK, StatusCode::OK));
        let fin = state(&app, &s.id).await;
        assert_eq!(fin.revision, 2);
        let got = fin.document.to_set().unwrap();
        assert!(got == ab || got == ba, "final state matches no sequential order");
    }
}

#[tokio::test]
async fn sessions_are_isolated() {
    let app = router();
    let a = create(&app, 3, 1).await;
    let b = create(&app, 3, 1).await;
    for i in 0..6 {
        let (id, dx) = if i % 2 == 0 { (&a.id, 1.0) } else { (&b.id, -2.0) };
        send(
            &app,
            "POST",
            &format!("/sessions/{id}/edits"),
            Some(json!({ "op": "move", "index": i % 3, "dx": dx, "dy": 0.0 })),
        )
        .await;
    }
    let sa = state(&app, &a.id).await;
    let sb = state(&app, &b.id).await;
    for (i, g) in sa.document.gaussians.iter().enumerate() {
        let touched = [0, 2, 4].iter().any(|&k| k % 3 == i);
        let expect = a.document.gaussians[i].mean[0] + if touched { 1.0 } else { 0.0 };
        assert_eq!(g.mean[0], expect);
    }
    for (i, g) in sb.document.gaussians.iter().enumerate() {
        let touched = [1, 3, 5].iter().any(|&k| k % 3 == i);
        let expect = b.document.gaussians[i].mean[0] + if touched { -2.0 } else { 0.0 };
        assert_eq!(g.mean[0], expect);
    }
}

#[tokio::test]
async fn library_commands_round_trip() {
    let app = router();
    let s = create(&app, 5, 4).await;
    let other = TextonDocument::from_set(&synth_set(5, 9), None);
    let uri = format!("/sessions/{}/edits", s.id);
    for cmd in [
        json!({ "op": "reshuffle", "seed": 3 }),
        json!({ "op": "reshuffle", "seed": 3, "mode": "soft", "gamma": 0.5 }),
        json!({ "op": "vary", "delta_f": 1.5, "delta_u": 0.5 }),
        json!({ "op": "transfer", "mode": "mean", "appearance": other }),
        json!({ "op": "transfer", "mode": "replace", "appearance": other, "seed": 2 }),
        json!({ "op": "interpolate", "other": other, "eta": 0.5, "seed": 1 }),
        json!({ "op": "rescale", "s": 0.5, "anchor": [0.0, 0.0] }),
    ] {
        let (status, v) = send_json(&app, "POST", &uri, Some(cmd.clone())).await;
        assert_eq!(status, StatusCode::OK, "{cmd}: {v}");
    }
    assert_eq!(state(&app, &s.id).await.revision, 7);
}
