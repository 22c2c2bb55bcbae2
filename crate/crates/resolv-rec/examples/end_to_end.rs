//! Full pipeline on generated tickets: train, evaluate the holdout, and
//! recommend resolutions for a fresh ticket.
//!
//! ```sh
//! cargo run --release --example end_to_end
//! ```

use resolv_rec::engine::{evaluate, predict, train_pipeline};
use resolv_rec::synth::{generate, SynthConfig};
use resolv_rec::{AppConfig, TicketRecord};

fn main() -> resolv_rec::Result<()> {
    let corpus = generate(&SynthConfig {
        n_tickets: 400,
        n_classes: 5,
        ..SynthConfig::default()
    });

    let mut config = AppConfig::default();
    config.lda.k = 5;
    config.lda.sweeps = 150;
    config.lda.infer_sweeps = 20;
    config.siamese.epochs = 25;
    config.indexembed.epochs = 50;
    config.ensemble.epochs = 150;

    println!("training on {} tickets ...", corpus.len());
    let outcome = train_pipeline(&corpus, &config)?;
    let bundle = &outcome.bundle;
    println!(
        "bundle {} over {} labels (stratified split: {})",
        bundle.version,
        bundle.label_space.len(),
        outcome.stratified
    );

    let report = evaluate(bundle, &outcome.test)?;
    println!(
        "holdout: accuracy {:.3}, macro precision {:.3}, macro recall {:.3}",
        report.accuracy, report.macro_precision, report.macro_recall
    );

    let ticket = TicketRecord::new(
        "NEW-1",
        "core2word0 core2word3 core2word5 noiseword4 core2word1",
    );
    let inference = &bundle.config.inference;
    let result = predict(
        bundle,
        &ticket,
        inference.threshold,
        inference.top_n,
        inference.fallback_k,
    )?;
    println!(
        "ticket {}: confidence {:.3}, low_confidence {}",
        result.incident_id, result.confidence, result.low_confidence
    );
    for ranked in result.ranked.iter().take(3) {
        println!(
            "  {}  p={:.3}  {}",
            ranked.resolution_id,
            ranked.probability,
            ranked.resolution_text.as_deref().unwrap_or("-")
        );
    }
    Ok(())
}
