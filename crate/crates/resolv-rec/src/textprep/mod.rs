//! Tokenization, normalization, frequency-filtered vocabularies, n-gram
//! TF-IDF vectors and word-vector embeddings.

pub mod stem;
mod wordvec;

pub use wordvec::{load_word_vectors, WordVectorTable};

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sentinel replacing numeric tokens.
pub const NUM_SENTINEL: &str = "<num>";

/// Small bundled English stopword list; an external one-token-per-line file
/// may replace it via config.
pub const DEFAULT_STOPWORDS: &[&str] = &[
    "a", "an", "and", "are", "as", "at", "be", "but", "by", "for", "from", "had", "has", "have",
    "he", "her", "his", "i", "if", "in", "is", "it", "its", "my", "no", "not", "of", "on", "or",
    "our", "she", "so", "that", "the", "their", "them", "then", "there", "they", "this", "to",
    "was", "we", "were", "which", "will", "with", "you", "your",
];

/// Lowercases, splits on non-alphanumeric runs, maps digit-dominated runs to
/// [`NUM_SENTINEL`] and drops tokens shorter than two characters.
pub fn tokenize(text: &str) -> Vec<String> {
    let lowered = text.to_lowercase();
    let mut tokens = Vec::new();
    for run in lowered.split(|c: char| !c.is_alphanumeric()) {
        if run.is_empty() {
            continue;
        }
        let digits = run.chars().filter(|c| c.is_ascii_digit()).count();
        let letters = run.chars().count() - digits;
        let token = if digits > 0 && letters <= digits {
            NUM_SENTINEL.to_string()
        } else {
            run.to_string()
        };
        if token == NUM_SENTINEL || token.chars().count() >= 2 {
            tokens.push(token);
        }
    }
    tokens
}

/// Vocabulary normalization mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizeMode {
    Stem,
    /// Irregular-forms lookup first, then stemming.
    #[default]
    LemmaStem,
}

/// Suffix-stems tokens, optionally resolving irregular forms first.
/// Tokens that stem to nothing are dropped.
pub fn normalize(tokens: &[String], mode: NormalizeMode) -> Vec<String> {
    tokens
        .iter()
        .map(|t| {
            let base = match mode {
                NormalizeMode::LemmaStem => stem::lemma(t).unwrap_or(t),
                NormalizeMode::Stem => t,
            };
            stem::stem(base)
        })
        .filter(|t| !t.is_empty())
        .collect()
}

/// Tokenize + normalize with stopword removal; the standard document form
/// used across the pipeline.
pub fn prepare(text: &str, mode: NormalizeMode, stopwords: &BTreeSet<String>) -> Vec<String> {
    normalize(
        &tokenize(text)
            .into_iter()
            .filter(|t| !stopwords.contains(t))
            .collect::<Vec<_>>(),
        mode,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NgramConfig {
    /// Highest n-gram order included; 1 = unigrams only, 3 = uni+bi+trigrams.
    pub max_n: usize,
}

impl Default for NgramConfig {
    fn default() -> Self {
        NgramConfig { max_n: 2 }
    }
}

/// Expands a token list into its n-gram terms (orders 1..=max_n, joined
/// with `_`), in document order.
pub fn ngram_terms(tokens: &[String], config: NgramConfig) -> Vec<String> {
    let mut terms = Vec::new();
    for n in 1..=config.max_n.max(1) {
        if tokens.len() < n {
            break;
        }
        for window in tokens.windows(n) {
            terms.push(window.join("_"));
        }
    }
    terms
}

/// Frequency-filtered term dictionary with dense lexicographic ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vocabulary {
    term_to_id: BTreeMap<String, usize>,
    doc_freq: Vec<usize>,
    n_docs: usize,
    ngrams: NgramConfig,
    min_df: usize,
    max_df_ratio: f64,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.term_to_id.len()
    }

    pub fn is_empty(&self) -> bool {
        self.term_to_id.is_empty()
    }

    pub fn id(&self, term: &str) -> Option<usize> {
        self.term_to_id.get(term).copied()
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn ngrams(&self) -> NgramConfig {
        self.ngrams
    }

    /// Terms in id order.
    pub fn terms(&self) -> Vec<&str> {
        // BTreeMap iterates lexicographically, which is exactly id order.
        self.term_to_id.keys().map(String::as_str).collect()
    }

    pub fn doc_freq(&self, term_id: usize) -> usize {
        self.doc_freq[term_id]
    }

    fn idf(&self, term_id: usize) -> f64 {
        ((1 + self.n_docs) as f64 / (1 + self.doc_freq[term_id]) as f64).ln() + 1.0
    }

    /// Maps a token list to in-vocabulary term ids (n-gram expanded).
    pub fn term_ids(&self, tokens: &[String]) -> Vec<usize> {
        ngram_terms(tokens, self.ngrams)
            .iter()
            .filter_map(|t| self.id(t))
            .collect()
    }
}

/// Builds a document-frequency filtered vocabulary over n-gram terms.
pub fn build_vocab(
    docs: &[Vec<String>],
    min_df: usize,
    max_df_ratio: f64,
    ngrams: NgramConfig,
) -> Result<Vocabulary> {
    if docs.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n_docs = docs.len();
    let mut df: BTreeMap<String, usize> = BTreeMap::new();
    for doc in docs {
        let unique: BTreeSet<String> = ngram_terms(doc, ngrams).into_iter().collect();
        for term in unique {
            *df.entry(term).or_insert(0) += 1;
        }
    }
    let max_df = max_df_ratio * n_docs as f64;
    let mut term_to_id = BTreeMap::new();
    let mut doc_freq = Vec::new();
    for (term, freq) in df {
        if freq >= min_df && freq as f64 <= max_df {
            term_to_id.insert(term, doc_freq.len());
            doc_freq.push(freq);
        }
    }
    if term_to_id.is_empty() {
        return Err(Error::FilterTooStrict { min_df, max_df_ratio });
    }
    Ok(Vocabulary {
        term_to_id,
        doc_freq,
        n_docs,
        ngrams,
        min_df,
        max_df_ratio,
    })
}

/// Sorted sparse document vector; zero weights are never stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    pub entries: Vec<(usize, f64)>,
    pub dim: usize,
}

impl SparseVector {
    pub fn dot(&self, other: &SparseVector) -> f64 {
        let mut sum = 0.0;
        let mut i = 0;
        let mut j = 0;
        while i < self.entries.len() && j < other.entries.len() {
            match self.entries[i].0.cmp(&other.entries[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    sum += self.entries[i].1 * other.entries[j].1;
                    i += 1;
                    j += 1;
                }
            }
        }
        sum
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|(_, w)| w * w).sum::<f64>().sqrt()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut dense = vec![0.0; self.dim];
        for &(id, w) in &self.entries {
            dense[id] = w;
        }
        dense
    }
}

/// L2-normalized TF-IDF vector for one document;
/// idf(t) = ln((1+N)/(1+df(t))) + 1. Out-of-vocabulary terms are ignored.
pub fn tfidf(doc: &[String], vocab: &Vocabulary) -> SparseVector {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for id in vocab.term_ids(doc) {
        *counts.entry(id).or_insert(0) += 1;
    }
    let mut entries: Vec<(usize, f64)> = counts
        .into_iter()
        .map(|(id, tf)| (id, tf as f64 * vocab.idf(id)))
        .collect();
    let norm = entries.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
    if norm > 0.0 {
        for (_, w) in &mut entries {
            *w /= norm;
        }
    }
    SparseVector {
        entries,
        dim: vocab.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(words: &[&str]) -> Vec<String> {
        words.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn tokenize_paper_sample() {
        assert_eq!(
            tokenize("Network not available in my area"),
            toks(&["network", "not", "available", "in", "my", "area"])
        );
    }

    #[test]
    fn tokenize_digit_rules() {
        assert_eq!(tokenize("error 404"), toks(&["error", NUM_SENTINEL]));
        // letters dominate, run stays whole
        assert_eq!(tokenize("Recharge2024a!"), toks(&["recharge2024a"]));
        // digits dominate
        assert_eq!(tokenize("x2024"), toks(&[NUM_SENTINEL]));
        assert_eq!(tokenize(""), Vec::<String>::new());
    }

    #[test]
    fn tokenize_drops_single_chars() {
        assert_eq!(tokenize("a bb 7"), toks(&["bb", NUM_SENTINEL]));
    }

    #[test]
    fn normalize_modes() {
        assert_eq!(
            normalize(&toks(&["updating"]), NormalizeMode::Stem),
            toks(&["updat"])
        );
        assert_eq!(
            normalize(&toks(&["networks", "network"]), NormalizeMode::Stem),
            toks(&["network", "network"])
        );
        assert_eq!(
            normalize(&toks(&["went"]), NormalizeMode::LemmaStem),
            toks(&["go"])
        );
    }

    #[test]
    fn ngram_expansion() {
        let doc = toks(&["a", "b", "c"]);
        let terms = ngram_terms(&doc, NgramConfig { max_n: 2 });
        assert_eq!(terms, toks(&["a", "b", "c", "a_b", "b_c"]));
    }

    #[test]
    fn build_vocab_filters() {
        let docs: Vec<Vec<String>> = vec![
            toks(&["common", "rare"]),
            toks(&["common", "mid"]),
            toks(&["common", "mid"]),
            toks(&["common", "other"]),
        ];
        let vocab = build_vocab(&docs, 2, 0.5, NgramConfig { max_n: 1 }).unwrap();
        // "common" df=4 > 0.5*4, excluded; "rare"/"other" df=1 < 2, excluded.
        assert_eq!(vocab.terms(), vec!["mid"]);
    }

    #[test]
    fn build_vocab_ids_are_lexicographic_bijection() {
        let docs: Vec<Vec<String>> = vec![toks(&["b", "a", "c"]), toks(&["a", "b", "c"])];
        let vocab = build_vocab(&docs, 1, 1.0, NgramConfig { max_n: 1 }).unwrap();
        let terms = vocab.terms();
        for (i, t) in terms.iter().enumerate() {
            assert_eq!(vocab.id(t), Some(i));
        }
        let mut sorted = terms.clone();
        sorted.sort_unstable();
        assert_eq!(terms, sorted);
    }

    #[test]
    fn build_vocab_too_strict() {
        let docs = vec![toks(&["one"])];
        assert!(matches!(
            build_vocab(&docs, 5, 1.0, NgramConfig { max_n: 1 }),
            Err(Error::FilterTooStrict { .. })
        ));
    }

    #[test]
    fn tfidf_hand_computed() {
        let d1 = toks(&["net", "down"]);
        let d2 = toks(&["net", "slow"]);
        let vocab = build_vocab(&[d1.clone(), d2], 1, 1.0, NgramConfig { max_n: 1 }).unwrap();
        let v = tfidf(&d1, &vocab);
        // idf(net) = ln(3/3)+1 = 1.0, idf(down) = ln(3/2)+1 ≈ 1.4055
        let down = vocab.id("down").unwrap();
        let net = vocab.id("net").unwrap();
        let get = |id| v.entries.iter().find(|(i, _)| *i == id).unwrap().1;
        assert!((get(net) - 0.5797).abs() < 1e-4, "net = {}", get(net));
        assert!((get(down) - 0.8148).abs() < 1e-4, "down = {}", get(down));
        assert!((v.norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn tfidf_all_oov_is_empty() {
        let vocab =
            build_vocab(&[toks(&["net"])], 1, 1.0, NgramConfig { max_n: 1 }).unwrap();
        let v = tfidf(&toks(&["unknown"]), &vocab);
        assert!(v.entries.is_empty());
        assert_eq!(v.dim, 1);
    }

    #[test]
    fn tfidf_direction_stable_under_token_repetition() {
        let base = toks(&["net", "down", "down"]);
        let mut tripled = Vec::new();
        for t in &base {
            for _ in 0..3 {
                tripled.push(t.clone());
            }
        }
        let vocab = build_vocab(
            &[base.clone(), toks(&["net", "slow"])],
            1,
            1.0,
            NgramConfig { max_n: 1 },
        )
        .unwrap();
        let a = tfidf(&base, &vocab);
        let b = tfidf(&tripled, &vocab);
        for (x, y) in a.entries.iter().zip(b.entries.iter()) {
            assert_eq!(x.0, y.0);
            assert!((x.1 - y.1).abs() < 1e-12);
        }
    }
}
