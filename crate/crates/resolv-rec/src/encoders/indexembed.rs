//! Dual-matrix index-embedding model trained with logistic negative
//! sampling over issue-resolution pairs.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IndexEmbedConfig {
    pub dim: usize,
    pub neg_k: usize,
    pub lr: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for IndexEmbedConfig {
    fn default() -> Self {
        IndexEmbedConfig {
            dim: 64,
            neg_k: 5,
            lr: 0.05,
            epochs: 100,
            seed: 0,
        }
    }
}

/// One embedding row per distinct issue id and per distinct resolution id,
/// rows in ascending id order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexEmbedModel {
    pub dim: usize,
    pub issue_ids: Vec<String>,
    pub resolution_ids: Vec<String>,
    pub issue_embeddings: Vec<Vec<f64>>,
    pub resolution_embeddings: Vec<Vec<f64>>,
}

impl IndexEmbedModel {
    pub fn issue_row(&self, issue_id: &str) -> Option<usize> {
        self.issue_ids.binary_search_by(|x| x.as_str().cmp(issue_id)).ok()
    }

    pub fn resolution_row(&self, resolution_id: &str) -> Option<usize> {
        self.resolution_ids
            .binary_search_by(|x| x.as_str().cmp(resolution_id))
            .ok()
    }

    /// Raw pair score sigma(u_i . v_r).
    pub fn pair_score(&self, issue_row: usize, resolution_row: usize) -> f64 {
        sigmoid(dot(
            &self.issue_embeddings[issue_row],
            &self.resolution_embeddings[resolution_row],
        ))
    }

    /// Scores over all resolutions for one issue row, normalized to sum 1,
    /// in ascending resolution-id order.
    pub fn scores_for_row(&self, issue_row: usize) -> Vec<(String, f64)> {
        let raw: Vec<f64> = (0..self.resolution_ids.len())
            .map(|r| self.pair_score(issue_row, r))
            .collect();
        let sum: f64 = raw.iter().sum();
        self.resolution_ids
            .iter()
            .zip(raw)
            .map(|(id, s)| (id.clone(), if sum > 0.0 { s / sum } else { 1.0 / self.resolution_ids.len() as f64 }))
            .collect()
    }
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Loss and gradients for one positive pair with explicit negatives:
/// L = -ln sigma(u.v) - sum_j ln sigma(-u.v_j).
pub fn pair_loss_grads(
    u: &[f64],
    v_pos: &[f64],
    v_negs: &[&[f64]],
) -> (f64, Vec<f64>, Vec<f64>, Vec<Vec<f64>>) {
    let s_pos = sigmoid(dot(u, v_pos));
    let mut loss = -s_pos.max(1e-12).ln();
    let mut gu: Vec<f64> = v_pos.iter().map(|&x| (s_pos - 1.0) * x).collect();
    let gv_pos: Vec<f64> = u.iter().map(|&x| (s_pos - 1.0) * x).collect();
    let mut gv_negs = Vec::with_capacity(v_negs.len());
    for v_neg in v_negs {
        let s_neg = sigmoid(dot(u, v_neg));
        loss -= (1.0 - s_neg).max(1e-12).ln();
        for (g, &x) in gu.iter_mut().zip(v_neg.iter()) {
            *g += s_neg * x;
        }
        gv_negs.push(u.iter().map(|&x| s_neg * x).collect());
    }
    (loss, gu, gv_pos, gv_negs)
}

/// SGD over positive pairs with `neg_k` uniform negative resolutions per
/// pair. Embeddings initialize seeded uniform(+-0.5/dim).
pub fn indexembed_train(
    pairs: &[(String, String)],
    config: &IndexEmbedConfig,
) -> Result<IndexEmbedModel> {
    if pairs.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut issue_ids: Vec<String> = pairs.iter().map(|(i, _)| i.clone()).collect();
    issue_ids.sort();
    issue_ids.dedup();
    let mut resolution_ids: Vec<String> = pairs.iter().map(|(_, r)| r.clone()).collect();
    resolution_ids.sort();
    resolution_ids.dedup();
    if resolution_ids.len() < 2 {
        return Err(Error::SingleLabel(resolution_ids.len()));
    }
    let issue_index: BTreeMap<&str, usize> = issue_ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    let resolution_index: BTreeMap<&str, usize> = resolution_ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    let indexed: Vec<(usize, usize)> = pairs
        .iter()
        .map(|(i, r)| (issue_index[i.as_str()], resolution_index[r.as_str()]))
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let bound = 0.5 / config.dim as f64;
    let mut init = |n: usize| -> Vec<Vec<f64>> {
        (0..n)
            .map(|_| (0..config.dim).map(|_| rng.random_range(-bound..bound)).collect())
            .collect()
    };
    let mut model = IndexEmbedModel {
        dim: config.dim,
        issue_embeddings: init(issue_ids.len()),
        resolution_embeddings: init(resolution_ids.len()),
        issue_ids,
        resolution_ids,
    };

    let n_res = model.resolution_ids.len();
    for _ in 0..config.epochs {
        for &(iu, ir) in &indexed {
            let negatives: Vec<usize> = (0..config.neg_k.max(1))
                .map(|_| loop {
                    let j = rng.random_range(0..n_res);
                    if j != ir {
                        break j;
                    }
                })
                .collect();
            let neg_refs: Vec<&[f64]> = negatives
                .iter()
                .map(|&j| model.resolution_embeddings[j].as_slice())
                .collect();
            let (_, gu, gv_pos, gv_negs) = pair_loss_grads(
                &model.issue_embeddings[iu],
                &model.resolution_embeddings[ir],
                &neg_refs,
            );
            for (w, g) in model.issue_embeddings[iu].iter_mut().zip(&gu) {
                *w -= config.lr * g;
            }
            for (w, g) in model.resolution_embeddings[ir].iter_mut().zip(&gv_pos) {
                *w -= config.lr * g;
            }
            for (&j, gv) in negatives.iter().zip(&gv_negs) {
                for (w, g) in model.resolution_embeddings[j].iter_mut().zip(gv) {
                    *w -= config.lr * g;
                }
            }
        }
    }
    for v in model
        .issue_embeddings
        .iter()
        .chain(model.resolution_embeddings.iter())
        .flatten()
    {
        if !v.is_finite() {
            return Err(Error::Numeric("index embeddings"));
        }
    }
    Ok(model)
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let na = dot(a, a).sqrt();
    let nb = dot(b, b).sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot(a, b) / (na * nb)
    }
}

/// Scores a ticket: known incident ids use their own embedding row; unknown
/// tickets (cold start) borrow the row of the nearest training issue by
/// cosine over text embeddings (ties by ascending incident id).
pub fn indexembed_predict(
    model: &IndexEmbedModel,
    incident_id: Option<&str>,
    query_embedding: &[f64],
    train_text_embeddings: &[(String, Vec<f64>)],
) -> Result<Vec<(String, f64)>> {
    if let Some(row) = incident_id.and_then(|id| model.issue_row(id)) {
        return Ok(model.scores_for_row(row));
    }
    if train_text_embeddings.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut best: Option<(&str, f64)> = None;
    for (id, emb) in train_text_embeddings {
        let c = cosine(query_embedding, emb);
        let better = match best {
            None => true,
            Some((bid, bc)) => c > bc || (c == bc && id.as_str() < bid),
        };
        if better {
            best = Some((id, c));
        }
    }
    let nearest = best.unwrap().0;
    match model.issue_row(nearest) {
        Some(row) => Ok(model.scores_for_row(row)),
        None => {
            // nearest train issue never appeared in a training pair: uniform
            let n = model.resolution_ids.len() as f64;
            Ok(model
                .resolution_ids
                .iter()
                .map(|id| (id.clone(), 1.0 / n))
                .collect())
        }
    }
}
