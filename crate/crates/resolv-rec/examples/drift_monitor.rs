//! Concept-drift monitoring: score incoming ticket windows against the
//! bundle's training topic baseline via Jensen–Shannon divergence.
//!
//! ```sh
//! cargo run --release --example drift_monitor
//! ```

use resolv_rec::engine::train_pipeline;
use resolv_rec::synth::{generate, SynthConfig};
use resolv_rec::{AppConfig, Corpus, TicketRecord};

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

    // In-distribution window: a slice of the training data itself.
    let familiar = Corpus::new(corpus.records.iter().take(40).cloned().collect());
    let report = resolv_rec::engine::drift_score(&bundle, &familiar)?;
    println!(
        "familiar window:  JS {:.4} (threshold {}) retrain: {}",
        report.js_divergence, report.threshold, report.retrain_recommended
    );

    // Drifted window: every ticket collapses onto one class. Longer
    // descriptions let the observed tokens outweigh the Dirichlet smoothing
    // (alpha = 50/K) during fold-in.
    let text = "core3word0 core3word1 core3word2 core3word4 core3word6 ".repeat(30);
    let skewed = Corpus::new(
        (0..40)
            .map(|i| TicketRecord::new(format!("S{i}"), text.trim()))
            .collect(),
    );
    let report = resolv_rec::engine::drift_score(&bundle, &skewed)?;
    println!(
        "skewed window:    JS {:.4} (threshold {}) retrain: {}",
        report.js_divergence, report.threshold, report.retrain_recommended
    );
    Ok(())
}
