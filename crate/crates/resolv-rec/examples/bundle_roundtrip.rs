//! Persist a trained bundle as a single `.rrb` archive, load it back, and
//! show that predictions are bit-identical.
//!
//! ```sh
//! cargo run --release --example bundle_roundtrip
//! ```

use resolv_rec::engine::{load_bundle_path, predict, save_bundle_path, train_pipeline};
use resolv_rec::synth::{generate, gibberish_ticket, SynthConfig};
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

    let dir = std::env::temp_dir();
    let path = dir.join("resolv-rec-example.rrb");
    save_bundle_path(&bundle, &path)?;
    let size = std::fs::metadata(&path)?.len();
    println!("saved {} ({size} bytes, version {})", path.display(), bundle.version);

    let loaded = load_bundle_path(&path)?;
    assert_eq!(loaded, bundle);
    println!("loaded bundle is identical");

    for ticket in [
        TicketRecord::new("Q1", "core2word0 core2word1 core2word4"),
        gibberish_ticket(),
    ] {
        let a = predict(&bundle, &ticket, 0.3, 3, 5)?;
        let b = predict(&loaded, &ticket, 0.3, 3, 5)?;
        assert_eq!(a, b);
        println!(
            "{}: top {} p={:.3} (identical before/after reload)",
            ticket.incident_id, a.ranked[0].resolution_id, a.ranked[0].probability
        );
    }
    std::fs::remove_file(&path).ok();
    Ok(())
}
