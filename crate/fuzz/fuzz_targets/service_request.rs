#![no_main]

//! The first byte picks an endpoint, the rest is the request body.

use axum::body::Body;
use axum::http::{Method, Request};
use libfuzzer_sys::fuzz_target;
use std::sync::{Arc, OnceLock};
use strokeseg::pipeline::ClassifierSpec;
use strokeseg::{Detector, DetectorConfig};
use strokeseg_cli::service::{router, AppState};
use tower::ServiceExt;

fn null_detector() -> Result<Detector, strokeseg::pipeline::DetectError> {
    Detector::from_config(DetectorConfig {
        point_classifier: Some(ClassifierSpec::Null),
        corner_classifier: Some(ClassifierSpec::Null),
        ..DetectorConfig::default()
    })
}

struct Env {
    rt: tokio::runtime::Runtime,
    state: Arc<AppState>,
    _dir: tempfile::TempDir,
}

fn env() -> &'static Env {
    static ENV: OnceLock<Env> = OnceLock::new();
    ENV.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let stk: String = std::iter::once("10\n".to_string())
            .chain((0..10).map(|i| format!("{} {} 0\n", i * 5, i % 2)))
            .collect();
        std::fs::write(dir.path().join("1-1-1.stk"), stk).unwrap();
        let detector = null_detector().unwrap();
        Env {
            rt: tokio::runtime::Builder::new_current_thread().enable_all().build().unwrap(),
            state: AppState::new(detector, dir.path().to_path_buf()),
            _dir: dir,
        }
    })
}

fuzz_target!(|data: &[u8]| {
    let Some((&pick, body)) = data.split_first() else { return };
    let (method, uri) = match pick % 5 {
        0 => (Method::POST, "/detect"),
        1 => (Method::PUT, "/labels"),
        2 => (Method::POST, "/candidates"),
        3 => (Method::GET, "/candidates"),
        _ => (Method::GET, "/strokes?person=1&round=1&shape=1"),
    };
    let env = env();
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(Body::from(body.to_vec()))
        .unwrap();
    let res = env.rt.block_on(router(env.state.clone()).oneshot(req)).unwrap();
    assert!(res.status().as_u16() < 500 || pick % 5 == 0, "status {}", res.status());
});
