//! Synthetic ticket-corpus generator: class-disjoint core vocabularies with
//! a shared noise vocabulary. Used by the examples and the end-to-end test
//! oracles, where the generator's class labels are the ground truth.

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Corpus, TicketRecord};

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub n_tickets: usize,
    pub n_classes: usize,
    pub seed: u64,
    /// When false, tickets carry only resolution text and the pipeline must
    /// synthesize labels by clustering.
    pub with_resolution_ids: bool,
    /// Fraction of description tokens drawn from the shared noise vocabulary.
    pub noise_ratio: f64,
    pub tokens_per_description: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_tickets: 1000,
            n_classes: 10,
            seed: 7,
            with_resolution_ids: true,
            noise_ratio: 0.2,
            tokens_per_description: 8,
        }
    }
}

const CORE_WORDS_PER_CLASS: usize = 8;
const NOISE_WORDS: usize = 20;

fn core_word(class: usize, j: usize) -> String {
    format!("core{class}word{j}")
}

fn noise_word(j: usize) -> String {
    format!("noiseword{j}")
}

/// Canonical resolution id of a generated class.
pub fn class_resolution_id(class: usize) -> String {
    format!("RES{class:02}")
}

/// Canonical resolution text of a generated class (class-disjoint words, so
/// resolution clustering recovers the classes).
pub fn class_resolution_text(class: usize) -> String {
    format!("apply fixstep{class} restart module{class} verify check{class}")
}

fn description(class: usize, config: &SynthConfig, rng: &mut ChaCha8Rng) -> String {
    let mut words = Vec::with_capacity(config.tokens_per_description);
    for _ in 0..config.tokens_per_description {
        if rng.random_range(0.0..1.0) < config.noise_ratio {
            words.push(noise_word(rng.random_range(0..NOISE_WORDS)));
        } else {
            words.push(core_word(class, rng.random_range(0..CORE_WORDS_PER_CLASS)));
        }
    }
    words.join(" ")
}

/// Generates a corpus with round-robin class assignment, deterministic under
/// the seed. Dates are synthetic but consistent (resolved after submit).
pub fn generate(config: &SynthConfig) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let base = NaiveDate::from_ymd_opt(2024, 7, 1)
        .unwrap()
        .and_hms_opt(8, 0, 0)
        .unwrap();
    let records = (0..config.n_tickets)
        .map(|i| {
            let class = i % config.n_classes;
            let submit = base + chrono::Duration::minutes(i as i64 * 17);
            let resolved = submit + chrono::Duration::minutes(30 + (class as i64) * 45);
            TicketRecord {
                incident_id: format!("INC{i:05}"),
                description: description(class, config, &mut rng),
                submit_date: Some(submit),
                resolved_date: Some(resolved),
                resolution_text: Some(class_resolution_text(class)),
                resolution_id: config
                    .with_resolution_ids
                    .then(|| class_resolution_id(class)),
            }
        })
        .collect();
    Corpus::new(records)
}

/// True class of a generated ticket, recovered from its incident id.
pub fn true_class(record: &TicketRecord, n_classes: usize) -> usize {
    record.incident_id[3..]
        .parse::<usize>()
        .expect("synthetic incident id")
        % n_classes
}

/// A ticket whose description shares no vocabulary with any generated class.
pub fn gibberish_ticket() -> TicketRecord {
    TicketRecord::new(
        "INCGIB",
        "zxqv wvzk qjxx plomtrev yyzzk gharblat vexquill snorfblatt",
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_deterministic() {
        let config = SynthConfig {
            n_tickets: 50,
            ..Default::default()
        };
        assert_eq!(generate(&config), generate(&config));
    }

    #[test]
    fn classes_round_robin_with_consistent_labels() {
        let config = SynthConfig {
            n_tickets: 30,
            n_classes: 3,
            ..Default::default()
        };
        let corpus = generate(&config);
        assert_eq!(corpus.label_space().len(), 3);
        for record in &corpus.records {
            let class = true_class(record, 3);
            assert_eq!(record.resolution_id.as_deref(), Some(class_resolution_id(class).as_str()));
            assert!(record.resolved_date.unwrap() >= record.submit_date.unwrap());
        }
    }

    #[test]
    fn unlabeled_mode_keeps_resolution_text() {
        let config = SynthConfig {
            n_tickets: 10,
            with_resolution_ids: false,
            ..Default::default()
        };
        let corpus = generate(&config);
        assert!(corpus.label_space().is_empty());
        assert!(corpus.records.iter().all(|r| r.resolution_text.is_some()));
    }
}
