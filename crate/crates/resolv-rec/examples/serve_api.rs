//! Stand up the HTTP service in-process, exercise every endpoint, and hot-
//! reload a second bundle without dropping requests.
//!
//! ```sh
//! cargo run --release --example serve_api
//! ```

use std::sync::Arc;

use resolv_rec::engine::{save_bundle_path, train_pipeline};
use resolv_rec::serve::{router, ServeState};
use resolv_rec::synth::{generate, SynthConfig};
use resolv_rec::AppConfig;

fn train(seed: u64) -> resolv_rec::engine::ModelBundle {
    let corpus = generate(&SynthConfig {
        n_tickets: 200,
        n_classes: 4,
        ..SynthConfig::default()
    });
    let mut config = AppConfig::default();
    config.train.seed = seed;
    config.lda.k = 4;
    config.lda.sweeps = 100;
    config.lda.infer_sweeps = 15;
    config.siamese.epochs = 15;
    config.indexembed.epochs = 40;
    config.ensemble.epochs = 100;
    config.ensemble.folds = 3;
    train_pipeline(&corpus, &config).unwrap().bundle
}

fn main() {
    let first = train(42);
    let second = train(43);
    let reload_path = std::env::temp_dir().join("resolv-rec-reload.rrb");
    save_bundle_path(&second, &reload_path).unwrap();

    let state = Arc::new(ServeState::new(first));
    let runtime = tokio::runtime::Runtime::new().unwrap();
    let (addr_tx, addr_rx) = std::sync::mpsc::channel();
    let app = router(state);
    runtime.spawn(async move {
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
        addr_tx.send(listener.local_addr().unwrap()).unwrap();
        axum::serve(listener, app).await.unwrap();
    });
    let base = format!("http://{}", addr_rx.recv().unwrap());
    let client = reqwest::blocking::Client::new();

    let health: serde_json::Value = client
        .get(format!("{base}/v1/health"))
        .send()
        .unwrap()
        .json()
        .unwrap();
    println!("health: {health}");

    let prediction: serde_json::Value = client
        .post(format!("{base}/v1/predict"))
        .json(&serde_json::json!({ "description": "core1word0 core1word2 core1word5" }))
        .send()
        .unwrap()
        .json()
        .unwrap();
    println!(
        "predict: top {} p={:.3}",
        prediction["ranked"][0]["resolution_id"],
        prediction["ranked"][0]["probability"].as_f64().unwrap()
    );

    let similar: serde_json::Value = client
        .post(format!("{base}/v1/similar"))
        .json(&serde_json::json!({ "description": "core1word0 core1word2", "k": 3 }))
        .send()
        .unwrap()
        .json()
        .unwrap();
    println!("similar: {} neighbors", similar.as_array().unwrap().len());

    let window: Vec<serde_json::Value> = (0..12)
        .map(|i| serde_json::json!({ "description": format!("core{}word0 core{}word1", i % 4, i % 4) }))
        .collect();
    let drift: serde_json::Value = client
        .post(format!("{base}/v1/drift"))
        .json(&serde_json::json!({ "tickets": window }))
        .send()
        .unwrap()
        .json()
        .unwrap();
    println!("drift: JS {:.4}", drift["js_divergence"].as_f64().unwrap());

    let metrics = client.get(format!("{base}/v1/metrics")).send().unwrap();
    println!("metrics: HTTP {}", metrics.status());

    let reload: serde_json::Value = client
        .post(format!("{base}/v1/reload"))
        .json(&serde_json::json!({ "bundle_path": reload_path.to_str().unwrap() }))
        .send()
        .unwrap()
        .json()
        .unwrap();
    println!("reload: {reload}");

    let health: serde_json::Value = client
        .get(format!("{base}/v1/health"))
        .send()
        .unwrap()
        .json()
        .unwrap();
    println!("health after reload: {health}");
    std::fs::remove_file(&reload_path).ok();
}
