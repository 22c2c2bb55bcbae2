//! Cosine nearest-neighbor retrieval over historical tickets, the same
//! machinery that backs the low-confidence fallback.
//!
//! ```sh
//! cargo run --release --example similar_tickets
//! ```

use resolv_rec::engine::{knn_similar, train_pipeline};
use resolv_rec::synth::{generate, SynthConfig};
use resolv_rec::{AppConfig, TicketRecord};

fn main() -> resolv_rec::Result<()> {
    let corpus = generate(&SynthConfig {
        n_tickets: 200,
        n_classes: 4,
        ..SynthConfig::default()
    });
    let mut config = AppConfig::default();
    config.lda.k = 4;
    config.lda.sweeps = 100;
    config.lda.infer_sweeps = 15;
    config.siamese.epochs = 15;
    config.indexembed.epochs = 40;
    config.ensemble.epochs = 100;
    config.ensemble.folds = 3;
    let bundle = train_pipeline(&corpus, &config)?.bundle;

    let query = TicketRecord::new("Q1", "core0word1 core0word3 noiseword7 core0word6");
    println!("query: {}", query.description);
    for hit in knn_similar(&bundle, &query, 5)? {
        println!(
            "  {}  cos {:.4}  {} — {}",
            hit.incident_id,
            hit.similarity,
            hit.resolution_id.as_deref().unwrap_or("-"),
            hit.resolution_text.as_deref().unwrap_or("-"),
        );
    }
    Ok(())
}
