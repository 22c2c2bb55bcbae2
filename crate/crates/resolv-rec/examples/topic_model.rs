//! Collapsed-Gibbs LDA over ticket descriptions: fit, inspect topic top
//! words, build the topic→resolution table, and fold in an unseen document.
//!
//! ```sh
//! cargo run --release --example topic_model
//! ```

use std::collections::BTreeSet;

use resolv_rec::synth::{generate, SynthConfig};
use resolv_rec::textprep::{build_vocab, prepare, NgramConfig, NormalizeMode};
use resolv_rec::topics::{build_topic_resolution_table, lda_fit, lda_infer};

fn main() -> resolv_rec::Result<()> {
    let corpus = generate(&SynthConfig {
        n_tickets: 300,
        n_classes: 4,
        ..SynthConfig::default()
    });

    let stopwords = BTreeSet::new();
    let token_docs: Vec<Vec<String>> = corpus
        .records
        .iter()
        .map(|r| prepare(&r.description, NormalizeMode::Stem, &stopwords))
        .collect();
    let vocab = build_vocab(&token_docs, 2, 0.8, NgramConfig { max_n: 1 })?;
    let docs: Vec<Vec<usize>> = token_docs.iter().map(|d| vocab.term_ids(d)).collect();

    let k = 4;
    let alpha = 50.0 / k as f64;
    let model = lda_fit(&docs, vocab.len(), k, alpha, 0.01, 200, 42)?;
    let terms = vocab.terms();
    for topic in 0..k {
        let words: Vec<&str> = model
            .top_words(topic, 5)
            .into_iter()
            .map(|id| terms[id])
            .collect();
        println!("topic {topic}: {}", words.join(" "));
    }

    let table = build_topic_resolution_table(&model, &corpus)?;
    for (topic, entries) in table.topics.iter().enumerate() {
        let head = &entries[0];
        println!(
            "topic {topic} -> {} (share {:.2}, {} docs)",
            head.resolution_id, head.share, head.frequency
        );
    }

    let unseen = prepare(
        "core1word0 core1word2 core1word5 noiseword3",
        NormalizeMode::Stem,
        &stopwords,
    );
    let theta = lda_infer(&model, &vocab.term_ids(&unseen), 30, 7);
    println!(
        "fold-in distribution: [{}]",
        theta
            .iter()
            .map(|p| format!("{p:.3}"))
            .collect::<Vec<_>>()
            .join(", ")
    );
    Ok(())
}
