//! Service-level invariants beyond the acceptance contract: concurrent
//! identical requests return identical bodies, and unknown routes 404.

use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use tower::ServiceExt;

use pricegate::service::{price_response, router, ModelState, PriceRequest, PriceResponse};
use pricegate_core::pipeline::{assemble, build_stat_index, split};
use pricegate_core::synth::{generate, SynthConfig};
use pricegate_core::trainer::{save_checkpoint, train, SchedulePhase, Stage, TrainConfig};
use pricegate_core::types::ObjectiveConfig;

fn make_state() -> &'static (Arc<ModelState>, PriceRequest) {
    static STATE: std::sync::OnceLock<(Arc<ModelState>, PriceRequest)> =
        std::sync::OnceLock::new();
    STATE.get_or_init(build_state)
}

fn build_state() -> (Arc<ModelState>, PriceRequest) {
    let out = generate(&SynthConfig {
        n: 800,
        d_v: 6,
        n_sellers: 25,
        seed: 12,
        ..SynthConfig::default()
    })
    .unwrap();
    let idx = build_stat_index(&out.table).unwrap();
    let examples = assemble(&out.table, &idx).unwrap();
    let (train_set, val_set, _) = split(&examples, (0.9, 0.1, 0.0), 12).unwrap();
    let cfg = TrainConfig {
        objective: ObjectiveConfig::percentile(0.5),
        batch_size: 256,
        schedule: vec![
            SchedulePhase { stage: Stage::Warmup, lr: 0.004, epochs: 3 },
            SchedulePhase { stage: Stage::Joint, lr: 0.002, epochs: 3 },
        ],
        seed: 4,
        standardize: true,
        hidden_dims: vec![12, 6],
    };
    let run = train(&train_set, &val_set, &idx, &cfg).unwrap();
    let dir = std::env::temp_dir().join(format!("pricegate-svc-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("svc.gprc");
    save_checkpoint(&run.checkpoint, &path).unwrap();
    let state = Arc::new(ModelState::load(&path).unwrap());
    let request = PriceRequest {
        visual_features: examples[0].visual_features.clone(),
        category_id: examples[0].category_id,
        seller_id: examples[0].seller_id.clone(),
    };
    (state, request)
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_identical_requests_return_identical_bodies() {
    let (state, request) = make_state().clone();
    let body = serde_json::to_vec(&request).unwrap();
    let reference = serde_json::to_string(&price_response(&state, &request).unwrap()).unwrap();
    let mut handles = Vec::new();
    for _ in 0..200 {
        let app = router(state.clone());
        let body = body.clone();
        handles.push(tokio::spawn(async move {
            let resp = app
                .oneshot(Request::post("/v1/price").body(Body::from(body)).unwrap())
                .await
                .unwrap();
            assert_eq!(resp.status(), StatusCode::OK);
            let bytes = resp.into_body().collect().await.unwrap().to_bytes();
            String::from_utf8(bytes.to_vec()).unwrap()
        }));
    }
    for handle in handles {
        assert_eq!(handle.await.unwrap(), reference);
    }
}

#[tokio::test]
async fn response_respects_the_gate_invariants() {
    let (state, request) = make_state().clone();
    let resp = router(state.clone())
        .oneshot(
            Request::post("/v1/price")
                .body(Body::from(serde_json::to_vec(&request).unwrap()))
                .unwrap(),
        )
        .await
        .unwrap();
    assert_eq!(resp.status(), StatusCode::OK);
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let parsed: PriceResponse = serde_json::from_slice(&bytes).unwrap();
    assert!(parsed.score > 0.0 && parsed.score < 1.0);
    assert_eq!(parsed.qualified, parsed.score >= 0.5);
    match parsed.suggested_price {
        Some(p) => {
            assert!(parsed.qualified);
            assert!(p > 0.0);
        }
        None => assert!(!parsed.qualified),
    }
    // Unqualified responses omit the price field entirely on the wire.
    if !parsed.qualified {
        assert!(!String::from_utf8(bytes.to_vec()).unwrap().contains("suggested_price"));
    }
    assert_eq!(parsed.model_version, state.version());
}

#[tokio::test]
async fn unknown_route_is_not_found() {
    let (state, _) = make_state().clone();
    let resp = router(state)
        .oneshot(Request::get("/v2/price").body(Body::empty()).unwrap())
        .await
        .unwrap();
    assert_eq!(resp.status(), StatusCode::NOT_FOUND);
}
