use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use polydub::audio::{Waveform, FPS, SAMPLES_PER_FRAME};
use polydub::facecrop::ProviderRegistry;
use polydub::facegen::{FacegenConfig, FacegenModel};
use polydub::pipeline::{register_source_video, CropConfig, DubConfig, Dubber, WorkerPool};
use polydub::textfront::Frontend;
use polydub::toydata::render_face_clip;
use polydub::tts::{SpeakerEntry, SymbolTable, TtsConfig, TtsModel, TtsSession};
use polydub::LanguageTag;
use polydub_cli::server::router;

fn dubber() -> Dubber {
    let speakers = vec![SpeakerEntry { speaker_id: "en0".into(), native_language: LanguageTag::En }];
    let tts = TtsModel::new(TtsConfig::default(), SymbolTable::from_frontend(Frontend::bundled()), speakers).unwrap();
    let facegen = Arc::new(FacegenModel::new(FacegenConfig::default()).unwrap());
    let mut d = Dubber::new(TtsSession::new(tts), facegen, DubConfig::default());
    let clip = render_face_clip(&Waveform::silence(10 * SAMPLES_PER_FRAME, 22050), 2);
    d.add_source(
        register_source_video("face", clip.frames, FPS, &ProviderRegistry::with_builtin(), &CropConfig::default()).unwrap(),
    );
    d
}

async fn call(app: axum::Router, req: Request<Body>) -> (StatusCode, Value) {
    let resp = app.oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap())
}

fn post(body: Value) -> Request<Body> {
    Request::post("/dub").header("content-type", "application/json").body(Body::from(body.to_string())).unwrap()
}

#[tokio::test]
async fn health_reports_workers() {
    let out = tempfile::tempdir().unwrap();
    let app = router(WorkerPool::new(vec![dubber()], 2).unwrap(), out.path().to_path_buf());
    let (status, body) = call(app, Request::get("/health").body(Body::empty()).unwrap()).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, json!({ "status": "ok", "workers": 1 }));
}

#[tokio::test]
async fn dub_writes_an_artifact() {
    let out = tempfile::tempdir().unwrap();
    let app = router(WorkerPool::new(vec![dubber()], 2).unwrap(), out.path().to_path_buf());
    let req = json!({ "text": "hello world", "language": "en", "speaker_id": "en0", "source_video_id": "face" });
    let (status, body) = call(app, post(req)).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    let n = body["n_frames"].as_u64().unwrap();
    assert!(n > 0);
    let dir = std::path::PathBuf::from(body["artifact_dir"].as_str().unwrap());
    assert!(dir.starts_with(out.path()));
    assert_eq!(body["substitution"], json!(false));
}

#[tokio::test]
async fn bad_requests_are_client_errors() {
    let out = tempfile::tempdir().unwrap();
    let app = router(WorkerPool::new(vec![dubber()], 2).unwrap(), out.path().to_path_buf());
    let req = json!({ "text": "hello", "language": "en", "speaker_id": "nobody", "source_video_id": "face" });
    let (status, body) = call(app, post(req)).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(body["error"].as_str().unwrap().contains("nobody"));
}
