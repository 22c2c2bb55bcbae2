//! Siamese triplet-loss encoder: feature assembly, augmentation, training
//! and nearest-prototype scoring.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::mlp::Mlp;
use crate::error::{Error, Result};
use crate::textprep::{Vocabulary, WordVectorTable};
use crate::topics::{lda_infer, LdaModel};

/// Concatenates the inferred topic distribution with the word-vector text
/// embedding: the Siamese input representation.
pub fn siamese_features(
    tokens: &[String],
    lda: &LdaModel,
    vocab: &Vocabulary,
    table: &WordVectorTable,
    infer_sweeps: usize,
    seed: u64,
) -> Vec<f64> {
    let theta = lda_infer(lda, &vocab.term_ids(tokens), infer_sweeps, seed);
    let embedding = table.embed_text(tokens);
    let mut features = Vec::with_capacity(theta.len() + embedding.len());
    features.extend(theta);
    features.extend(embedding);
    features
}

/// Hinge triplet loss L = max(0, |a-p|^2 - |a-n|^2 + margin) and its
/// gradients w.r.t. the three embeddings. Gradients are zero when the hinge
/// is inactive.
pub fn triplet_loss(
    a: &[f64],
    p: &[f64],
    n: &[f64],
    margin: f64,
) -> (f64, Vec<f64>, Vec<f64>, Vec<f64>) {
    let d_ap: f64 = a.iter().zip(p).map(|(x, y)| (x - y) * (x - y)).sum();
    let d_an: f64 = a.iter().zip(n).map(|(x, y)| (x - y) * (x - y)).sum();
    let loss = (d_ap - d_an + margin).max(0.0);
    if loss <= 0.0 {
        let zeros = vec![0.0; a.len()];
        return (0.0, zeros.clone(), zeros.clone(), zeros);
    }
    // d/da (|a-p|^2 - |a-n|^2) = 2(a-p) - 2(a-n) = 2(n-p)
    let ga: Vec<f64> = p.iter().zip(n).map(|(&pi, &ni)| 2.0 * (ni - pi)).collect();
    let gp: Vec<f64> = a.iter().zip(p).map(|(&ai, &pi)| -2.0 * (ai - pi)).collect();
    let gn: Vec<f64> = a.iter().zip(n).map(|(&ai, &ni)| 2.0 * (ai - ni)).collect();
    (loss, ga, gp, gn)
}

/// Label-preserving augmentation: replaces 1..=3 seeded non-stopword tokens
/// with samples from the dominant topic's top-word list. Output length
/// equals input length.
pub fn augment(
    tokens: &[String],
    topic_top_words: &[String],
    stopwords: &BTreeSet<String>,
    seed: u64,
) -> Vec<String> {
    let replaceable: Vec<usize> = (0..tokens.len())
        .filter(|&i| !stopwords.contains(&tokens[i]))
        .collect();
    if replaceable.is_empty() || topic_top_words.is_empty() {
        return tokens.to_vec();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = rng.random_range(1..=3usize).min(replaceable.len());
    let mut positions = replaceable;
    positions.shuffle(&mut rng);
    positions.truncate(r);
    let mut out = tokens.to_vec();
    for pos in positions {
        out[pos] = topic_top_words[rng.random_range(0..topic_top_words.len())].clone();
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SiameseConfig {
    pub margin: f64,
    pub lr: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Freeze the bottom 3 weight layers (fine-tuning phase).
    pub fine_tune: bool,
}

impl Default for SiameseConfig {
    fn default() -> Self {
        SiameseConfig {
            margin: 0.2,
            lr: 0.01,
            epochs: 100,
            seed: 0,
            fine_tune: false,
        }
    }
}

/// One unit-norm prototype per training label: the renormalized mean of the
/// label's member embeddings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrototypeSet {
    pub prototypes: BTreeMap<String, Vec<f64>>,
}

impl PrototypeSet {
    pub fn labels(&self) -> Vec<&str> {
        self.prototypes.keys().map(String::as_str).collect()
    }
}

/// Trained encoder plus its epoch-mean loss trace.
pub struct SiameseOutcome {
    pub mlp: Mlp,
    pub prototypes: PrototypeSet,
    pub loss_trace: Vec<f64>,
}

/// Seeded triplet training over labeled feature vectors. Singleton labels
/// use the anchor itself as positive (the engine backfills such classes with
/// augmented copies before calling).
pub fn siamese_train(
    features: &[Vec<f64>],
    labels: &[String],
    config: &SiameseConfig,
) -> Result<SiameseOutcome> {
    let input_dim = features.first().map_or(0, Vec::len);
    let mut mlp = Mlp::new(input_dim, config.seed);
    if config.fine_tune {
        mlp.freeze_lower(3);
    }
    siamese_train_with(mlp, features, labels, config)
}

/// Like [`siamese_train`] but continues from an existing network (used for a
/// second fine-tuning phase; the caller freezes layers beforehand).
pub fn siamese_train_with(
    mut mlp: Mlp,
    features: &[Vec<f64>],
    labels: &[String],
    config: &SiameseConfig,
) -> Result<SiameseOutcome> {
    assert_eq!(features.len(), labels.len());
    let mut by_label: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, label) in labels.iter().enumerate() {
        by_label.entry(label).or_default().push(i);
    }
    if by_label.len() < 2 {
        return Err(Error::SingleLabel(by_label.len()));
    }
    let label_list: Vec<&str> = by_label.keys().copied().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ TRIPLET_SEED_MIX);
    let mut loss_trace = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        let mut order: Vec<usize> = (0..features.len()).collect();
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for &anchor in &order {
            let members = &by_label[labels[anchor].as_str()];
            let positive = if members.len() == 1 {
                anchor
            } else {
                loop {
                    let p = members[rng.random_range(0..members.len())];
                    if p != anchor {
                        break p;
                    }
                }
            };
            let negative_label = loop {
                let l = label_list[rng.random_range(0..label_list.len())];
                if l != labels[anchor] {
                    break l;
                }
            };
            let neg_members = &by_label[negative_label];
            let negative = neg_members[rng.random_range(0..neg_members.len())];

            let ca = mlp.forward_cache(&features[anchor])?;
            let cp = mlp.forward_cache(&features[positive])?;
            let cn = mlp.forward_cache(&features[negative])?;
            let (loss, ga, gp, gn) = triplet_loss(&ca.output, &cp.output, &cn.output, config.margin);
            epoch_loss += loss;
            if loss > 0.0 {
                let mut grads = mlp.backward(&ca, &ga);
                grads.add(&mlp.backward(&cp, &gp));
                grads.add(&mlp.backward(&cn, &gn));
                mlp.apply(&grads, config.lr);
            }
        }
        loss_trace.push(epoch_loss / features.len() as f64);
    }

    let mut sums: BTreeMap<&str, (Vec<f64>, usize)> = BTreeMap::new();
    for (feature, label) in features.iter().zip(labels) {
        let embedding = mlp.forward(feature)?;
        let entry = sums
            .entry(label)
            .or_insert_with(|| (vec![0.0; embedding.len()], 0));
        for (s, e) in entry.0.iter_mut().zip(&embedding) {
            *s += e;
        }
        entry.1 += 1;
    }
    let prototypes = sums
        .into_iter()
        .map(|(label, (sum, count))| {
            let mean: Vec<f64> = sum.iter().map(|s| s / count as f64).collect();
            let norm = mean.iter().map(|v| v * v).sum::<f64>().sqrt();
            let proto = if norm > 0.0 {
                mean.iter().map(|v| v / norm).collect()
            } else {
                mean
            };
            (label.to_string(), proto)
        })
        .collect();
    Ok(SiameseOutcome {
        mlp,
        prototypes: PrototypeSet { prototypes },
        loss_trace,
    })
}

const TRIPLET_SEED_MIX: u64 = 0x51a3_53e5_0000_0001;

/// Softmax over negated squared prototype distances; ascending-label order.
pub fn siamese_predict(
    mlp: &Mlp,
    prototypes: &PrototypeSet,
    features: &[f64],
) -> Result<Vec<(String, f64)>> {
    let embedding = mlp.forward(features)?;
    let logits: Vec<(String, f64)> = prototypes
        .prototypes
        .iter()
        .map(|(label, proto)| {
            let d2: f64 = embedding
                .iter()
                .zip(proto)
                .map(|(e, p)| (e - p) * (e - p))
                .sum();
            (label.clone(), -d2)
        })
        .collect();
    let max = logits.iter().map(|(_, l)| *l).fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|(_, l)| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    Ok(logits
        .into_iter()
        .zip(exps)
        .map(|((label, _), e)| (label, e / sum))
        .collect())
}
