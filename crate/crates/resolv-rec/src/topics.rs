//! Collapsed-Gibbs LDA, per-topic resolution ranking and fold-in inference.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};

/// Fitted LDA state: exact integer count matrices from the final sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaModel {
    pub k: usize,
    pub vocab_size: usize,
    pub alpha: f64,
    pub beta: f64,
    /// K x V
    pub topic_word_counts: Vec<Vec<u32>>,
    /// K
    pub topic_totals: Vec<u32>,
    /// D x K, training documents
    pub doc_topic_counts: Vec<Vec<u32>>,
    pub seed: u64,
}

impl LdaModel {
    pub fn n_docs(&self) -> usize {
        self.doc_topic_counts.len()
    }

    /// Smoothed word distribution of one topic.
    pub fn topic_word_dist(&self, k: usize) -> Vec<f64> {
        let denom = self.topic_totals[k] as f64 + self.vocab_size as f64 * self.beta;
        (0..self.vocab_size)
            .map(|v| (self.topic_word_counts[k][v] as f64 + self.beta) / denom)
            .collect()
    }

    /// Most frequent word ids of one topic, descending count, ties by id.
    pub fn top_words(&self, k: usize, n: usize) -> Vec<usize> {
        let mut ids: Vec<usize> = (0..self.vocab_size).collect();
        ids.sort_by(|&a, &b| {
            self.topic_word_counts[k][b]
                .cmp(&self.topic_word_counts[k][a])
                .then(a.cmp(&b))
        });
        ids.truncate(n);
        ids
    }
}

fn sample_topic(
    rng: &mut ChaCha8Rng,
    doc_counts: &[u32],
    word_counts: impl Fn(usize) -> f64,
    topic_totals: &[u32],
    alpha: f64,
    beta: f64,
    vocab_size: usize,
) -> usize {
    let k = doc_counts.len();
    let mut weights = Vec::with_capacity(k);
    let mut total = 0.0;
    for t in 0..k {
        let w = (doc_counts[t] as f64 + alpha) * (word_counts(t) + beta)
            / (topic_totals[t] as f64 + vocab_size as f64 * beta);
        total += w;
        weights.push(w);
    }
    let mut target = rng.random_range(0.0..total);
    for (t, &w) in weights.iter().enumerate() {
        if target < w {
            return t;
        }
        target -= w;
    }
    k - 1
}

/// Collapsed Gibbs sampling: sequential token-by-token resampling with
/// p(z=k) proportional to (n_dk+alpha)(n_kw+beta)/(n_k+V*beta).
pub fn lda_fit(
    docs: &[Vec<usize>],
    vocab_size: usize,
    k: usize,
    alpha: f64,
    beta: f64,
    sweeps: usize,
    seed: u64,
) -> Result<LdaModel> {
    if docs.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut model = LdaModel {
        k,
        vocab_size,
        alpha,
        beta,
        topic_word_counts: vec![vec![0; vocab_size]; k],
        topic_totals: vec![0; k],
        doc_topic_counts: vec![vec![0; k]; docs.len()],
        seed,
    };
    // random initial assignments
    let mut z: Vec<Vec<usize>> = docs
        .iter()
        .enumerate()
        .map(|(d, doc)| {
            doc.iter()
                .map(|&w| {
                    debug_assert!(w < vocab_size);
                    let t = rng.random_range(0..k);
                    model.doc_topic_counts[d][t] += 1;
                    model.topic_word_counts[t][w] += 1;
                    model.topic_totals[t] += 1;
                    t
                })
                .collect()
        })
        .collect();

    for _ in 0..sweeps {
        for (d, doc) in docs.iter().enumerate() {
            for (i, &w) in doc.iter().enumerate() {
                let old = z[d][i];
                model.doc_topic_counts[d][old] -= 1;
                model.topic_word_counts[old][w] -= 1;
                model.topic_totals[old] -= 1;
                let new = sample_topic(
                    &mut rng,
                    &model.doc_topic_counts[d],
                    |t| model.topic_word_counts[t][w] as f64,
                    &model.topic_totals,
                    alpha,
                    beta,
                    vocab_size,
                );
                z[d][i] = new;
                model.doc_topic_counts[d][new] += 1;
                model.topic_word_counts[new][w] += 1;
                model.topic_totals[new] += 1;
            }
        }
    }
    Ok(model)
}

/// Argmax over the smoothed doc-topic distribution, ties to the lowest id.
pub fn dominant_topic(model: &LdaModel, doc_index: usize) -> Result<usize> {
    let counts = model
        .doc_topic_counts
        .get(doc_index)
        .ok_or(Error::DocIndex(doc_index))?;
    Ok(counts
        .iter()
        .enumerate()
        .max_by(|a, b| {
            (*a.1 as f64 + model.alpha)
                .partial_cmp(&(*b.1 as f64 + model.alpha))
                .unwrap()
                .then(b.0.cmp(&a.0))
        })
        .map(|(i, _)| i)
        .unwrap())
}

/// Fold-in Gibbs with topic-word counts held fixed; returns the smoothed
/// normalized doc-topic distribution. Out-of-range token ids are skipped.
pub fn lda_infer(model: &LdaModel, new_doc: &[usize], sweeps: usize, seed: u64) -> Vec<f64> {
    let tokens: Vec<usize> = new_doc
        .iter()
        .copied()
        .filter(|&w| w < model.vocab_size)
        .collect();
    let k = model.k;
    if tokens.is_empty() {
        return vec![1.0 / k as f64; k];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut doc_counts = vec![0u32; k];
    let mut z: Vec<usize> = tokens
        .iter()
        .map(|_| {
            let t = rng.random_range(0..k);
            doc_counts[t] += 1;
            t
        })
        .collect();
    for _ in 0..sweeps {
        for (i, &w) in tokens.iter().enumerate() {
            let old = z[i];
            doc_counts[old] -= 1;
            let new = sample_topic(
                &mut rng,
                &doc_counts,
                |t| model.topic_word_counts[t][w] as f64,
                &model.topic_totals,
                model.alpha,
                model.beta,
                model.vocab_size,
            );
            z[i] = new;
            doc_counts[new] += 1;
        }
    }
    let denom = tokens.len() as f64 + k as f64 * model.alpha;
    doc_counts
        .iter()
        .map(|&c| (c as f64 + model.alpha) / denom)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicResolutionEntry {
    pub resolution_id: String,
    pub frequency: usize,
    pub share: f64,
}

/// Per-topic resolution ranking: entries sorted by descending frequency,
/// ties by ascending resolution id; shares within a topic sum to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicResolutionTable {
    pub topics: Vec<Vec<TopicResolutionEntry>>,
}

impl TopicResolutionTable {
    /// All distinct resolution ids in the table, ascending.
    pub fn resolution_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self
            .topics
            .iter()
            .flatten()
            .map(|e| e.resolution_id.clone())
            .collect();
        ids.sort();
        ids.dedup();
        ids
    }
}

/// Counts resolution ids of each topic's member tickets. Record order must
/// match the document order the model was fitted on.
pub fn build_topic_resolution_table(model: &LdaModel, train: &Corpus) -> Result<TopicResolutionTable> {
    let mut counts: Vec<BTreeMap<&str, usize>> = vec![BTreeMap::new(); model.k];
    for (i, record) in train.records.iter().enumerate().take(model.n_docs()) {
        let Some(resolution_id) = record.resolution_id.as_deref() else {
            continue;
        };
        let topic = dominant_topic(model, i)?;
        *counts[topic].entry(resolution_id).or_insert(0) += 1;
    }
    let topics = counts
        .into_iter()
        .map(|map| {
            let total: usize = map.values().sum();
            let mut entries: Vec<TopicResolutionEntry> = map
                .into_iter()
                .map(|(id, freq)| TopicResolutionEntry {
                    resolution_id: id.to_string(),
                    frequency: freq,
                    share: freq as f64 / total as f64,
                })
                .collect();
            entries.sort_by(|a, b| {
                b.frequency
                    .cmp(&a.frequency)
                    .then(a.resolution_id.cmp(&b.resolution_id))
            });
            entries
        })
        .collect();
    Ok(TopicResolutionTable { topics })
}

/// score(r) = sum_k theta_k * share(r|k); descending, ties by ascending id.
pub fn lda_predict(
    model: &LdaModel,
    table: &TopicResolutionTable,
    new_doc: &[usize],
    sweeps: usize,
    seed: u64,
) -> Vec<(String, f64)> {
    let theta = lda_infer(model, new_doc, sweeps, seed);
    let mut scores: BTreeMap<&str, f64> = BTreeMap::new();
    for (k, entries) in table.topics.iter().enumerate() {
        for e in entries {
            *scores.entry(&e.resolution_id).or_insert(0.0) += theta[k] * e.share;
        }
    }
    let mut ranked: Vec<(String, f64)> = scores
        .into_iter()
        .map(|(id, s)| (id.to_string(), s))
        .collect();
    ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    ranked
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::corpus::TicketRecord;

    /// Two disjoint-support topics over a 20-word vocabulary; documents draw
    /// 15 tokens uniformly from their topic's half. The generator is the
    /// oracle for recovery tests.
    pub(crate) fn synthetic_two_topic_corpus(
        n_docs: usize,
        seed: u64,
    ) -> (Vec<Vec<usize>>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut docs = Vec::with_capacity(n_docs);
        let mut truth = Vec::with_capacity(n_docs);
        for d in 0..n_docs {
            let topic = d % 2;
            let base = topic * 10;
            docs.push((0..15).map(|_| base + rng.random_range(0..10)).collect());
            truth.push(topic);
        }
        (docs, truth)
    }

    fn total_tokens(docs: &[Vec<usize>]) -> u32 {
        docs.iter().map(|d| d.len() as u32).sum()
    }

    #[test]
    fn k1_puts_everything_in_topic_zero() {
        let docs = vec![vec![0, 1, 2], vec![3, 4]];
        let model = lda_fit(&docs, 5, 1, 0.5, 0.01, 10, 1).unwrap();
        assert_eq!(model.topic_totals[0], 5);
        for d in 0..2 {
            assert_eq!(dominant_topic(&model, d).unwrap(), 0);
        }
        let theta = lda_infer(&model, &[0, 1], 10, 2);
        assert_eq!(theta, vec![1.0]);
    }

    #[test]
    fn counts_are_conserved() {
        let (docs, _) = synthetic_two_topic_corpus(20, 3);
        for sweeps in [1, 5, 25] {
            let model = lda_fit(&docs, 20, 3, 0.1, 0.01, sweeps, 7).unwrap();
            let total: u32 = model.topic_totals.iter().sum();
            assert_eq!(total, total_tokens(&docs));
            for k in 0..model.k {
                let row: u32 = model.topic_word_counts[k].iter().sum();
                assert_eq!(row, model.topic_totals[k]);
            }
            let doc_total: u32 = model.doc_topic_counts.iter().flatten().sum();
            assert_eq!(doc_total, total_tokens(&docs));
        }
    }

    #[test]
    fn fit_is_deterministic() {
        let (docs, _) = synthetic_two_topic_corpus(10, 4);
        let a = lda_fit(&docs, 20, 2, 0.1, 0.01, 20, 9).unwrap();
        let b = lda_fit(&docs, 20, 2, 0.1, 0.01, 20, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn recovers_disjoint_topics() {
        let (docs, _) = synthetic_two_topic_corpus(60, 5);
        let model = lda_fit(&docs, 20, 2, 0.5, 0.01, 200, 11).unwrap();
        // greedy alignment: learned topic for true topic 0 is whichever puts
        // more mass on words 0..10
        let dist0 = model.topic_word_dist(0);
        let mass_low: f64 = dist0[..10].iter().sum();
        let (low_topic, high_topic) = if mass_low > 0.5 { (0, 1) } else { (1, 0) };
        for (learned, range) in [(low_topic, 0..10), (high_topic, 10..20)] {
            let dist = model.topic_word_dist(learned);
            let mut ideal = vec![0.0; 20];
            for v in range {
                ideal[v] = 0.1;
            }
            let dot: f64 = dist.iter().zip(&ideal).map(|(a, b)| a * b).sum();
            let na = dist.iter().map(|x| x * x).sum::<f64>().sqrt();
            let nb = ideal.iter().map(|x| x * x).sum::<f64>().sqrt();
            let cosine = dot / (na * nb);
            assert!(cosine >= 0.8, "topic cosine = {cosine}");
        }
    }

    #[test]
    fn dominant_topic_rules() {
        let model = LdaModel {
            k: 3,
            vocab_size: 1,
            alpha: 0.1,
            beta: 0.01,
            topic_word_counts: vec![vec![0]; 3],
            topic_totals: vec![0; 3],
            doc_topic_counts: vec![vec![5, 1, 0], vec![3, 3, 0]],
            seed: 0,
        };
        assert_eq!(dominant_topic(&model, 0).unwrap(), 0);
        // exact tie breaks to the lowest topic id
        assert_eq!(dominant_topic(&model, 1).unwrap(), 0);
        assert!(matches!(dominant_topic(&model, 5), Err(Error::DocIndex(5))));
    }

    #[test]
    fn infer_empty_doc_is_uniform() {
        let (docs, _) = synthetic_two_topic_corpus(10, 6);
        let model = lda_fit(&docs, 20, 4, 0.1, 0.01, 20, 3).unwrap();
        let theta = lda_infer(&model, &[], 50, 1);
        assert_eq!(theta, vec![0.25; 4]);
        // out-of-range ids behave like an empty doc
        let theta2 = lda_infer(&model, &[999], 50, 1);
        assert_eq!(theta2, vec![0.25; 4]);
    }

    #[test]
    fn infer_is_valid_distribution() {
        let (docs, _) = synthetic_two_topic_corpus(20, 8);
        let model = lda_fit(&docs, 20, 3, 0.1, 0.01, 50, 5).unwrap();
        let theta = lda_infer(&model, &docs[0], 50, 77);
        let sum: f64 = theta.iter().sum();
        assert!((sum - 1.0).abs() < 1e-9);
        assert!(theta.iter().all(|&p| p > 0.0));
    }

    #[test]
    fn infer_concentrates_on_exclusive_topic() {
        let (docs, _) = synthetic_two_topic_corpus(60, 9);
        let model = lda_fit(&docs, 20, 2, 0.1, 0.01, 200, 13).unwrap();
        let exclusive: Vec<usize> = (0..10).collect();
        let theta = lda_infer(&model, &exclusive, 50, 3);
        let top = theta.iter().cloned().fold(0.0, f64::max);
        assert!(top >= 0.9, "theta = {theta:?}");
    }

    fn corpus_with_labels(labels: &[&str]) -> Corpus {
        Corpus::new(
            labels
                .iter()
                .enumerate()
                .map(|(i, l)| {
                    let mut r = TicketRecord::new(format!("INC{i:03}"), "d");
                    r.resolution_id = Some(l.to_string());
                    r
                })
                .collect(),
        )
    }

    #[test]
    fn resolution_table_counts_and_shares() {
        let model = LdaModel {
            k: 2,
            vocab_size: 1,
            alpha: 0.1,
            beta: 0.01,
            topic_word_counts: vec![vec![0]; 2],
            topic_totals: vec![0; 2],
            // docs 0-3 in topic 0, none in topic 1
            doc_topic_counts: vec![vec![2, 0]; 4],
            seed: 0,
        };
        let corpus = corpus_with_labels(&["RES001", "RES001", "RES001", "RES002"]);
        let table = build_topic_resolution_table(&model, &corpus).unwrap();
        assert_eq!(table.topics[0].len(), 2);
        assert_eq!(table.topics[0][0].resolution_id, "RES001");
        assert_eq!(table.topics[0][0].frequency, 3);
        assert!((table.topics[0][0].share - 0.75).abs() < 1e-12);
        assert!((table.topics[0][1].share - 0.25).abs() < 1e-12);
        assert!(table.topics[1].is_empty());
    }

    #[test]
    fn predict_degenerate_single_topic() {
        let docs = vec![vec![0, 1], vec![1, 2]];
        let model = lda_fit(&docs, 3, 1, 0.5, 0.01, 5, 1).unwrap();
        let corpus = corpus_with_labels(&["RES001", "RES001"]);
        let table = build_topic_resolution_table(&model, &corpus).unwrap();
        let ranked = lda_predict(&model, &table, &[0], 10, 2);
        assert_eq!(ranked, vec![("RES001".to_string(), 1.0)]);
    }

    #[test]
    fn predict_arithmetic_and_tie_rule() {
        let model = LdaModel {
            k: 2,
            vocab_size: 1,
            alpha: 1.0,
            beta: 0.01,
            topic_word_counts: vec![vec![0]; 2],
            topic_totals: vec![0; 2],
            doc_topic_counts: vec![],
            seed: 0,
        };
        let table = TopicResolutionTable {
            topics: vec![
                vec![TopicResolutionEntry {
                    resolution_id: "A".into(),
                    frequency: 1,
                    share: 1.0,
                }],
                vec![TopicResolutionEntry {
                    resolution_id: "B".into(),
                    frequency: 1,
                    share: 1.0,
                }],
            ],
        };
        // empty doc -> uniform theta = [0.5, 0.5]
        let ranked = lda_predict(&model, &table, &[], 10, 0);
        assert_eq!(ranked[0].0, "A");
        assert_eq!(ranked[1].0, "B");
        assert!((ranked[0].1 - 0.5).abs() < 1e-12);
        assert!((ranked[1].1 - 0.5).abs() < 1e-12);
    }
}
