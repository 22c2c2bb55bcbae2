//! Word-vector table with deterministic subword fallback for
//! out-of-vocabulary tokens.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const DEFAULT_SUBWORD_MIN: usize = 3;
const DEFAULT_SUBWORD_MAX: usize = 5;
const DEFAULT_HASH_BUCKETS: u64 = 1 << 18;

/// Dense token vectors plus hashed character n-gram composition for tokens
/// the table has never seen. The same token always embeds identically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordVectorTable {
    pub dim: usize,
    pub word_vectors: BTreeMap<String, Vec<f64>>,
    pub subword_min: usize,
    pub subword_max: usize,
    pub hash_buckets: u64,
}

impl WordVectorTable {
    /// Pure hashing table: no pretrained vectors, every token composed from
    /// subword buckets. Lets the pipeline run without external downloads.
    pub fn hashed(dim: usize) -> Self {
        WordVectorTable {
            dim,
            word_vectors: BTreeMap::new(),
            subword_min: DEFAULT_SUBWORD_MIN,
            subword_max: DEFAULT_SUBWORD_MAX,
            hash_buckets: DEFAULT_HASH_BUCKETS,
        }
    }

    /// Embeds one token: stored vector if known, otherwise the mean of its
    /// character n-gram bucket vectors.
    pub fn embed_token(&self, token: &str) -> Vec<f64> {
        if let Some(v) = self.word_vectors.get(token) {
            return v.clone();
        }
        let padded: Vec<char> = std::iter::once('<')
            .chain(token.chars())
            .chain(std::iter::once('>'))
            .collect();
        let mut sum = vec![0.0; self.dim];
        let mut count = 0usize;
        for n in self.subword_min..=self.subword_max {
            if padded.len() < n {
                break;
            }
            for window in padded.windows(n) {
                let gram: String = window.iter().collect();
                let bucket = fnv1a64(gram.as_bytes()) % self.hash_buckets;
                let v = bucket_vector(bucket, self.dim);
                for (s, x) in sum.iter_mut().zip(v) {
                    *s += x;
                }
                count += 1;
            }
        }
        if count == 0 {
            // token shorter than the smallest n-gram: hash the whole token
            let bucket = fnv1a64(token.as_bytes()) % self.hash_buckets;
            return bucket_vector(bucket, self.dim);
        }
        for s in &mut sum {
            *s /= count as f64;
        }
        sum
    }

    /// Mean of per-token embeddings; empty input gives the zero vector.
    pub fn embed_text(&self, tokens: &[String]) -> Vec<f64> {
        let mut sum = vec![0.0; self.dim];
        if tokens.is_empty() {
            return sum;
        }
        for token in tokens {
            for (s, x) in sum.iter_mut().zip(self.embed_token(token)) {
                *s += x;
            }
        }
        for s in &mut sum {
            *s /= tokens.len() as f64;
        }
        sum
    }
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

/// Deterministic pseudo-random unit vector for one hash bucket.
fn bucket_vector(bucket: u64, dim: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(bucket ^ (dim as u64).rotate_left(32));
    let mut v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in &mut v {
            *x /= norm;
        }
    }
    v
}

/// Loads the standard `.vec` text layout: a `<count> <dim>` header line,
/// then one `token v1 .. v_dim` row per line.
pub fn load_word_vectors<R: Read>(source: R) -> Result<WordVectorTable> {
    let reader = BufReader::new(source);
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or(Error::WordVectorFormat {
            line: 1,
            reason: "missing header".into(),
        })?
        .map_err(Error::Io)?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    let (count, dim) = match parts.as_slice() {
        [c, d] => (
            c.parse::<usize>().ok(),
            d.parse::<usize>().ok(),
        ),
        _ => (None, None),
    };
    let (count, dim) = match (count, dim) {
        (Some(c), Some(d)) if d > 0 => (c, d),
        _ => {
            return Err(Error::WordVectorFormat {
                line: 1,
                reason: format!("expected `<count> <dim>` header, got `{header}`"),
            })
        }
    };

    let mut word_vectors = BTreeMap::new();
    for (i, line) in lines.enumerate() {
        let line = line.map_err(Error::Io)?;
        let line_no = i + 2;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let token = fields.next().unwrap().to_string();
        let values: std::result::Result<Vec<f64>, _> =
            fields.map(str::parse::<f64>).collect();
        let values = values.map_err(|e| Error::WordVectorFormat {
            line: line_no,
            reason: e.to_string(),
        })?;
        if values.len() != dim {
            return Err(Error::WordVectorFormat {
                line: line_no,
                reason: format!("expected {dim} values, got {}", values.len()),
            });
        }
        word_vectors.insert(token, values);
    }
    if word_vectors.len() != count {
        // tolerated: real .vec files occasionally disagree with their header
    }
    Ok(WordVectorTable {
        dim,
        word_vectors,
        subword_min: DEFAULT_SUBWORD_MIN,
        subword_max: DEFAULT_SUBWORD_MAX,
        hash_buckets: DEFAULT_HASH_BUCKETS,
    })
}
