//! Replays the service fuzz corpus against a live service.

use std::path::Path;
use std::sync::mpsc;
use strokeseg::pipeline::ClassifierSpec;
use strokeseg::{Detector, DetectorConfig};
use strokeseg_cli::service::{serve, AppState};

fn null_detector() -> Result<Detector, strokeseg::pipeline::DetectError> {
    Detector::from_config(DetectorConfig {
        point_classifier: Some(ClassifierSpec::Null),
        corner_classifier: Some(ClassifierSpec::Null),
        ..DetectorConfig::default()
    })
}

#[test]
fn service_request_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let stk: String = std::iter::once("10\n".to_string())
        .chain((0..10).map(|i| format!("{} {} 0\n", i * 5, i % 2)))
        .collect();
    std::fs::write(dir.path().join("1-1-1.stk"), stk).unwrap();
    let state = AppState::new(null_detector().unwrap(), dir.path().to_path_buf());
    let (tx, rx) = mpsc::channel();
    std::thread::spawn(move || {
        let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build().unwrap();
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
            tx.send(listener.local_addr().unwrap()).unwrap();
            serve(listener, state).await.unwrap();
        });
    });
    let base = format!("http://{}", rx.recv().unwrap());
    let agent: ureq::Agent = ureq::Agent::config_builder().http_status_as_error(false).build().into();

    let corpus = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus/service_request");
    let mut seen = 0;
    for e in std::fs::read_dir(corpus).unwrap() {
        let path = e.unwrap().path();
        let data = std::fs::read(&path).unwrap();
        let Some((&pick, body)) = data.split_first() else { continue };
        let res = match pick % 5 {
            0 => agent.post(&format!("{base}/detect")).send(body),
            1 => agent.put(&format!("{base}/labels")).send(body),
            2 => agent.post(&format!("{base}/candidates")).send(body),
            3 => agent.get(&format!("{base}/candidates")).force_send_body().send(body),
            _ => agent.get(&format!("{base}/strokes?person=1&round=1&shape=1")).call(),
        };
        let mut res = res.unwrap();
        let status = res.status().as_u16();
        let reply: serde_json::Value = serde_json::from_str(&res.body_mut().read_to_string().unwrap()).unwrap();
        assert!(status < 500, "{}: {status} {reply}", path.display());
        assert!(reply.get("id").is_some(), "{}: {reply}", path.display());
        seen += 1;
    }
    assert!(seen >= 5);
}
