//! End-to-end orchestration: the training pipeline, confidence-gated
//! prediction with cosine-kNN fallback, drift scoring, prediction logging and
//! bundle persistence.

mod metrics;
mod rrb;

pub use metrics::{
    build_feed, evaluate, export_metrics, ClusterShare, DashboardFeed, LabelMetrics, MetricsReport,
    PerLabelAccuracy, TimeStats,
};
pub use rrb::{
    crc64, load_bundle, load_bundle_path, save_bundle, save_bundle_path, FORMAT_VERSION,
};

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::cluster::SyntheticLabeling;
use crate::config::AppConfig;
use crate::corpus::{clean, split, CleanPolicy, CleanReport, Corpus, TicketRecord};
use crate::encoders::{
    indexembed_predict, indexembed_train, siamese_features, siamese_predict, siamese_train,
    siamese_train_with, IndexEmbedConfig, IndexEmbedModel, Mlp, PrototypeSet, SiameseConfig,
};
use crate::ensemble::{build_meta_features, ensemble_predict, logreg_fit, LogRegConfig, LogRegModel};
use crate::error::{Error, Result};
use crate::textprep::{self, load_word_vectors, NgramConfig, Vocabulary, WordVectorTable};
use crate::topics::{
    build_topic_resolution_table, lda_fit, lda_predict, LdaModel, TopicResolutionTable,
};

// Fixed per-stage seed offsets, all derived from the master training seed.
const SEED_SPLIT: u64 = 1;
const SEED_CLUSTER: u64 = 2;
const SEED_LDA: u64 = 3;
const SEED_SIAMESE: u64 = 4;
const SEED_INDEXEMBED: u64 = 5;
const SEED_OOF: u64 = 6;
const SEED_LOGREG: u64 = 7;
const SEED_INFER: u64 = 8;
const SEED_AUGMENT: u64 = 9;

fn stage_seed(master: u64, tag: u64) -> u64 {
    master ^ tag.wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

/// Resolution id and text of one training ticket, kept for fallback display.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainTicketInfo {
    pub resolution_id: String,
    pub resolution_text: Option<String>,
}

/// Everything the serving path needs: all fitted sub-models sharing one
/// vocabulary and label space, the training-embedding matrix for kNN
/// fallback, and the drift baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBundle {
    pub format_version: u32,
    /// Content hash of the trained state; echoed by predictions and the API.
    pub version: String,
    pub config: AppConfig,
    pub stopwords: BTreeSet<String>,
    pub vocab: Vocabulary,
    pub word_vectors: WordVectorTable,
    pub synthetic_labeling: Option<SyntheticLabeling>,
    pub lda: LdaModel,
    pub topic_table: TopicResolutionTable,
    pub mlp: Mlp,
    pub prototypes: PrototypeSet,
    pub indexembed: IndexEmbedModel,
    pub logreg: LogRegModel,
    /// Ordered (ascending) resolution ids; every probability block aligns to it.
    pub label_space: Vec<String>,
    /// Representative resolution text per id (first training occurrence).
    pub label_texts: BTreeMap<String, String>,
    /// (incident_id, word-vector text embedding) per training ticket.
    pub train_embeddings: Vec<(String, Vec<f64>)>,
    pub train_info: BTreeMap<String, TrainTicketInfo>,
    pub train_label_counts: BTreeMap<String, usize>,
    /// Mean training topic distribution (K-simplex).
    pub drift_baseline: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedResolution {
    pub resolution_id: String,
    pub resolution_text: Option<String>,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseDiagnostic {
    pub model: String,
    pub resolution_id: String,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarTicket {
    pub incident_id: String,
    pub similarity: f64,
    pub resolution_id: Option<String>,
    pub resolution_text: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionResult {
    pub incident_id: String,
    /// Descending probability, ties by ascending resolution id.
    pub ranked: Vec<RankedResolution>,
    /// Sum of the top `top_n` probabilities.
    pub confidence: f64,
    pub low_confidence: bool,
    /// Populated only when flagged (and fallback_k > 0).
    pub fallback: Vec<SimilarTicket>,
    pub base_top1: Vec<BaseDiagnostic>,
    pub bundle_version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    pub js_divergence: f64,
    pub window: usize,
    pub baseline: usize,
    pub threshold: f64,
    pub retrain_recommended: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionLogEntry {
    pub ts: String,
    pub incident_id: String,
    pub resolution_id: String,
    pub confidence: f64,
    pub low_confidence: bool,
    pub bundle_version: String,
    pub latency_ms: f64,
}

/// Bundle plus the held-out split and ingest bookkeeping, so callers can
/// evaluate on data the pipeline never trained on.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub bundle: ModelBundle,
    pub test: Corpus,
    pub clean_report: CleanReport,
    pub stratified: bool,
}

fn resolve_stopwords(config: &AppConfig) -> Result<BTreeSet<String>> {
    match &config.text.stopwords_path {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            Ok(text
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .map(String::from)
                .collect())
        }
        None => Ok(textprep::DEFAULT_STOPWORDS
            .iter()
            .map(|s| s.to_string())
            .collect()),
    }
}

fn resolve_word_vectors(config: &AppConfig) -> Result<WordVectorTable> {
    match &config.text.word_vectors_path {
        Some(path) => load_word_vectors(std::fs::File::open(path)?),
        None => Ok(WordVectorTable::hashed(config.text.embedding_dim)),
    }
}

/// Renormalizes a raw score block onto the shared label space: missing labels
/// score 0, a zero-sum block degrades to uniform.
fn align_block(raw: &[(String, f64)], label_space: &[String]) -> Vec<(String, f64)> {
    let map: BTreeMap<&str, f64> = raw.iter().map(|(id, s)| (id.as_str(), *s)).collect();
    let scores: Vec<f64> = label_space
        .iter()
        .map(|l| map.get(l.as_str()).copied().unwrap_or(0.0).max(0.0))
        .collect();
    let sum: f64 = scores.iter().sum();
    label_space
        .iter()
        .zip(scores)
        .map(|(l, s)| {
            let p = if sum > 0.0 {
                s / sum
            } else {
                1.0 / label_space.len() as f64
            };
            (l.clone(), p)
        })
        .collect()
}

/// The three base models of one (sub)fit, over one shared vocabulary.
struct BaseFit {
    lda: LdaModel,
    table: TopicResolutionTable,
    mlp: Mlp,
    prototypes: PrototypeSet,
    indexembed: IndexEmbedModel,
}

/// Borrowed view over a set of base models (fold fit or final bundle).
struct BaseRefs<'a> {
    lda: &'a LdaModel,
    table: &'a TopicResolutionTable,
    mlp: &'a Mlp,
    prototypes: &'a PrototypeSet,
    indexembed: &'a IndexEmbedModel,
}

impl BaseFit {
    fn refs(&self) -> BaseRefs<'_> {
        BaseRefs {
            lda: &self.lda,
            table: &self.table,
            mlp: &self.mlp,
            prototypes: &self.prototypes,
            indexembed: &self.indexembed,
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn fit_base_models(
    records: &[TicketRecord],
    token_docs: &[Vec<String>],
    vocab: &Vocabulary,
    word_vectors: &WordVectorTable,
    stopwords: &BTreeSet<String>,
    config: &AppConfig,
    master: u64,
    fold_tag: u64,
) -> Result<BaseFit> {
    let term_docs: Vec<Vec<usize>> = token_docs.iter().map(|t| vocab.term_ids(t)).collect();
    let lda = lda_fit(
        &term_docs,
        vocab.len(),
        config.lda.k,
        config.lda.effective_alpha(),
        config.lda.beta,
        config.lda.sweeps,
        stage_seed(master, SEED_LDA) ^ fold_tag,
    )
    .map_err(|e| e.in_stage("lda"))?;
    let fold_corpus = Corpus::new(records.to_vec());
    let table = build_topic_resolution_table(&lda, &fold_corpus).map_err(|e| e.in_stage("lda"))?;

    let infer_seed = stage_seed(master, SEED_INFER);
    let mut features: Vec<Vec<f64>> = token_docs
        .iter()
        .enumerate()
        .map(|(i, tokens)| {
            siamese_features(
                tokens,
                &lda,
                vocab,
                word_vectors,
                config.lda.infer_sweeps,
                infer_seed.wrapping_add(i as u64),
            )
        })
        .collect();
    let mut labels: Vec<String> = records
        .iter()
        .map(|r| r.resolution_id.clone().expect("labeled training record"))
        .collect();

    // Singleton classes get one augmented copy so triplet mining always finds
    // a positive distinct from the anchor.
    let mut label_counts: BTreeMap<&str, usize> = BTreeMap::new();
    for l in &labels {
        *label_counts.entry(l).or_insert(0) += 1;
    }
    let singles: Vec<usize> = (0..labels.len())
        .filter(|&i| label_counts[labels[i].as_str()] == 1)
        .collect();
    let vocab_terms = vocab.terms();
    let augment_seed = stage_seed(master, SEED_AUGMENT);
    for (j, &i) in singles.iter().enumerate() {
        let theta = crate::topics::lda_infer(
            &lda,
            &vocab.term_ids(&token_docs[i]),
            config.lda.infer_sweeps,
            infer_seed.wrapping_add(i as u64),
        );
        let topic = theta
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap().then(b.0.cmp(&a.0)))
            .map(|(t, _)| t)
            .unwrap();
        let top_words: Vec<String> = lda
            .top_words(topic, 10)
            .into_iter()
            .map(|id| vocab_terms[id].to_string())
            .collect();
        let aug = crate::encoders::augment(
            &token_docs[i],
            &top_words,
            stopwords,
            augment_seed.wrapping_add(j as u64),
        );
        features.push(siamese_features(
            &aug,
            &lda,
            vocab,
            word_vectors,
            config.lda.infer_sweeps,
            infer_seed.wrapping_add((token_docs.len() + j) as u64),
        ));
        labels.push(labels[i].clone());
    }

    let siamese_config = SiameseConfig {
        margin: config.siamese.margin,
        lr: config.siamese.lr,
        epochs: config.siamese.epochs,
        seed: stage_seed(master, SEED_SIAMESE) ^ fold_tag,
        fine_tune: false,
    };
    let mut outcome =
        siamese_train(&features, &labels, &siamese_config).map_err(|e| e.in_stage("siamese"))?;
    if config.siamese.fine_tune_epochs > 0 {
        let mut mlp = outcome.mlp;
        mlp.freeze_lower(3);
        let fine_config = SiameseConfig {
            epochs: config.siamese.fine_tune_epochs,
            fine_tune: true,
            ..siamese_config
        };
        outcome = siamese_train_with(mlp, &features, &labels, &fine_config)
            .map_err(|e| e.in_stage("siamese"))?;
    }

    let pairs: Vec<(String, String)> = records
        .iter()
        .map(|r| {
            (
                r.incident_id.clone(),
                r.resolution_id.clone().expect("labeled training record"),
            )
        })
        .collect();
    let ie_config = IndexEmbedConfig {
        dim: config.indexembed.dim,
        neg_k: config.indexembed.neg_k,
        lr: config.indexembed.lr,
        epochs: config.indexembed.epochs,
        seed: stage_seed(master, SEED_INDEXEMBED) ^ fold_tag,
    };
    let indexembed = indexembed_train(&pairs, &ie_config).map_err(|e| e.in_stage("indexembed"))?;

    Ok(BaseFit {
        lda,
        table,
        mlp: outcome.mlp,
        prototypes: outcome.prototypes,
        indexembed,
    })
}

/// Aligned [lda, siamese, indexembed] probability blocks for one document.
fn base_blocks(
    fit: &BaseRefs<'_>,
    vocab: &Vocabulary,
    word_vectors: &WordVectorTable,
    label_space: &[String],
    incident_id: Option<&str>,
    tokens: &[String],
    train_embeddings: &[(String, Vec<f64>)],
    infer_sweeps: usize,
    infer_seed: u64,
) -> Result<[Vec<(String, f64)>; 3]> {
    let term_ids = vocab.term_ids(tokens);
    let lda_raw = lda_predict(fit.lda, fit.table, &term_ids, infer_sweeps, infer_seed);
    let lda_block = align_block(&lda_raw, label_space);

    let features = siamese_features(tokens, fit.lda, vocab, word_vectors, infer_sweeps, infer_seed);
    let siamese_raw = siamese_predict(fit.mlp, fit.prototypes, &features)?;
    let siamese_block = align_block(&siamese_raw, label_space);

    let query = word_vectors.embed_text(tokens);
    let ie_raw = indexembed_predict(fit.indexembed, incident_id, &query, train_embeddings)?;
    let ie_block = align_block(&ie_raw, label_space);

    Ok([lda_block, siamese_block, ie_block])
}

/// Smoothed mean training topic distribution: the drift baseline.
fn topic_baseline(lda: &LdaModel) -> Vec<f64> {
    let k = lda.k;
    let mut mean = vec![0.0; k];
    for counts in &lda.doc_topic_counts {
        let total: u32 = counts.iter().sum();
        let denom = total as f64 + k as f64 * lda.alpha;
        for (m, &c) in mean.iter_mut().zip(counts) {
            *m += (c as f64 + lda.alpha) / denom;
        }
    }
    let n = lda.doc_topic_counts.len().max(1) as f64;
    for m in &mut mean {
        *m /= n;
    }
    mean
}

/// Runs the full training pipeline: clean, synthetic labeling when needed,
/// split, vocabulary, LDA, Siamese, index embedding, out-of-fold stacking and
/// bundle assembly. Deterministic given (corpus, config).
pub fn train_pipeline(corpus: &Corpus, config: &AppConfig) -> Result<TrainOutcome> {
    config.validate()?;
    let master = config.train.seed;

    let fully_labeled = corpus.fully_labeled();
    let policy = CleanPolicy {
        require_resolution: !fully_labeled,
    };
    let (mut cleaned, clean_report) = clean(corpus, &policy).map_err(|e| e.in_stage("clean"))?;

    if let Some(days) = config.train.window_days {
        let newest = cleaned.records.iter().filter_map(|r| r.submit_date).max();
        if let Some(newest) = newest {
            let cutoff = newest - chrono::Duration::days(days);
            cleaned.records.retain(|r| r.submit_date.map_or(false, |d| d >= cutoff));
        }
        if cleaned.is_empty() {
            return Err(Error::EmptyAfterClean.in_stage("window"));
        }
    }

    let synthetic_labeling = if cleaned.fully_labeled() {
        None
    } else {
        let labeling = crate::cluster::assign_resolution_ids(
            &cleaned,
            config.cluster.method,
            config.cluster.k,
            stage_seed(master, SEED_CLUSTER),
        )
        .map_err(|e| e.in_stage("synthetic-labeling"))?;
        for record in &mut cleaned.records {
            record.resolution_id = labeling.assignment.get(&record.incident_id).cloned();
        }
        cleaned.records.retain(|r| r.resolution_id.is_some());
        Some(labeling)
    };

    let split_result = split(&cleaned, config.train.ratio, stage_seed(master, SEED_SPLIT))
        .map_err(|e| e.in_stage("split"))?;
    let train = split_result.train;

    let stopwords = resolve_stopwords(config).map_err(|e| e.in_stage("textprep"))?;
    let word_vectors = resolve_word_vectors(config).map_err(|e| e.in_stage("textprep"))?;
    let token_docs: Vec<Vec<String>> = train
        .records
        .iter()
        .map(|r| textprep::prepare(&r.description, config.text.normalize, &stopwords))
        .collect();
    let vocab = textprep::build_vocab(
        &token_docs,
        config.text.min_df,
        config.text.max_df_ratio,
        NgramConfig {
            max_n: config.text.max_ngram,
        },
    )
    .map_err(|e| e.in_stage("vocabulary"))?;

    let label_space = train.label_space();
    if label_space.len() < 2 {
        return Err(Error::SingleLabel(label_space.len()).in_stage("split"));
    }
    let train_embeddings: Vec<(String, Vec<f64>)> = train
        .records
        .iter()
        .zip(&token_docs)
        .map(|(r, tokens)| (r.incident_id.clone(), word_vectors.embed_text(tokens)))
        .collect();

    // Out-of-fold base predictions: each fold's meta-features come from base
    // models that never saw the fold.
    let folds = config.ensemble.folds.min(train.len());
    let fold_of: Vec<usize> = {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut order: Vec<usize> = (0..train.len()).collect();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(stage_seed(master, SEED_OOF));
        order.shuffle(&mut rng);
        let mut fold = vec![0usize; train.len()];
        for (pos, &i) in order.iter().enumerate() {
            fold[i] = pos % folds;
        }
        fold
    };
    let infer_seed = stage_seed(master, SEED_INFER);
    let mut meta_x: Vec<Vec<f64>> = vec![Vec::new(); train.len()];
    let mut meta_y: Vec<usize> = vec![0; train.len()];
    for f in 0..folds {
        let in_fold: Vec<usize> = (0..train.len()).filter(|&i| fold_of[i] == f).collect();
        let rest: Vec<usize> = (0..train.len()).filter(|&i| fold_of[i] != f).collect();
        let rest_records: Vec<TicketRecord> =
            rest.iter().map(|&i| train.records[i].clone()).collect();
        let rest_tokens: Vec<Vec<String>> = rest.iter().map(|&i| token_docs[i].clone()).collect();
        let rest_embeddings: Vec<(String, Vec<f64>)> =
            rest.iter().map(|&i| train_embeddings[i].clone()).collect();
        let fit = fit_base_models(
            &rest_records,
            &rest_tokens,
            &vocab,
            &word_vectors,
            &stopwords,
            config,
            master,
            (f as u64) + 1,
        )?;
        for &i in &in_fold {
            let blocks = base_blocks(
                &fit.refs(),
                &vocab,
                &word_vectors,
                &label_space,
                Some(train.records[i].incident_id.as_str()),
                &token_docs[i],
                &rest_embeddings,
                config.lda.infer_sweeps,
                infer_seed.wrapping_add(i as u64),
            )?;
            meta_x[i] = build_meta_features(&label_space, &blocks[0], &blocks[1], &blocks[2])
                .map_err(|e| e.in_stage("stacking"))?;
            let label = train.records[i].resolution_id.as_deref().unwrap();
            meta_y[i] = label_space.iter().position(|l| l == label).unwrap();
        }
    }

    let logreg = logreg_fit(
        &meta_x,
        &meta_y,
        label_space.len(),
        &LogRegConfig {
            l2: config.ensemble.l2,
            lr: config.ensemble.lr,
            epochs: config.ensemble.epochs,
            batch: config.ensemble.batch,
            seed: stage_seed(master, SEED_LOGREG),
        },
    )
    .map_err(|e| e.in_stage("stacking"))?;

    // Final base models refit on the full training split.
    let full_fit = fit_base_models(
        &train.records,
        &token_docs,
        &vocab,
        &word_vectors,
        &stopwords,
        config,
        master,
        0,
    )?;
    let drift_baseline = topic_baseline(&full_fit.lda);

    let mut label_texts = BTreeMap::new();
    let mut train_info = BTreeMap::new();
    let mut train_label_counts: BTreeMap<String, usize> = BTreeMap::new();
    for record in &train.records {
        let id = record.resolution_id.clone().unwrap();
        if let Some(text) = &record.resolution_text {
            label_texts.entry(id.clone()).or_insert_with(|| text.clone());
        }
        *train_label_counts.entry(id.clone()).or_insert(0) += 1;
        train_info.insert(
            record.incident_id.clone(),
            TrainTicketInfo {
                resolution_id: id,
                resolution_text: record.resolution_text.clone(),
            },
        );
    }

    let mut bundle = ModelBundle {
        format_version: FORMAT_VERSION,
        version: String::new(),
        config: config.clone(),
        stopwords,
        vocab,
        word_vectors,
        synthetic_labeling,
        lda: full_fit.lda,
        topic_table: full_fit.table,
        mlp: full_fit.mlp,
        prototypes: full_fit.prototypes,
        indexembed: full_fit.indexembed,
        logreg,
        label_space,
        label_texts,
        train_embeddings,
        train_info,
        train_label_counts,
        drift_baseline,
    };
    bundle.version = format!("{:016x}", crc64(&serde_json::to_vec(&bundle)?));

    Ok(TrainOutcome {
        bundle,
        test: split_result.test,
        clean_report,
        stratified: split_result.stratified,
    })
}

impl ModelBundle {
    /// Training-identical preprocessing of one description.
    pub fn prepare_tokens(&self, text: &str) -> Vec<String> {
        textprep::prepare(text, self.config.text.normalize, &self.stopwords)
    }

    fn infer_seed(&self) -> u64 {
        stage_seed(self.config.train.seed, SEED_INFER)
    }
}

/// Confidence-gated ensemble prediction with kNN fallback.
///
/// `fallback_k = 0` suppresses fallback retrieval (used by bulk evaluation).
pub fn predict(
    bundle: &ModelBundle,
    ticket: &TicketRecord,
    threshold: f64,
    top_n: usize,
    fallback_k: usize,
) -> Result<PredictionResult> {
    if ticket.description.trim().is_empty() {
        return Err(Error::EmptyDescription);
    }
    let tokens = bundle.prepare_tokens(&ticket.description);
    let refs = BaseRefs {
        lda: &bundle.lda,
        table: &bundle.topic_table,
        mlp: &bundle.mlp,
        prototypes: &bundle.prototypes,
        indexembed: &bundle.indexembed,
    };
    let blocks = base_blocks(
        &refs,
        &bundle.vocab,
        &bundle.word_vectors,
        &bundle.label_space,
        Some(ticket.incident_id.as_str()),
        &tokens,
        &bundle.train_embeddings,
        bundle.config.lda.infer_sweeps,
        bundle.infer_seed(),
    )?;
    let meta = build_meta_features(&bundle.label_space, &blocks[0], &blocks[1], &blocks[2])?;
    let probs = ensemble_predict(&bundle.logreg, &meta)?;

    let mut ranked: Vec<RankedResolution> = bundle
        .label_space
        .iter()
        .zip(&probs)
        .map(|(id, &p)| RankedResolution {
            resolution_id: id.clone(),
            resolution_text: bundle.label_texts.get(id).cloned(),
            probability: p,
        })
        .collect();
    ranked.sort_by(|a, b| {
        b.probability
            .partial_cmp(&a.probability)
            .unwrap()
            .then(a.resolution_id.cmp(&b.resolution_id))
    });
    let confidence: f64 = ranked.iter().take(top_n).map(|r| r.probability).sum();
    let low_confidence = confidence < threshold;
    let fallback = if low_confidence && fallback_k > 0 {
        knn_similar(bundle, ticket, fallback_k)?
    } else {
        Vec::new()
    };
    let base_top1 = ["lda", "siamese", "indexembed"]
        .iter()
        .zip(&blocks)
        .map(|(name, block)| {
            let (id, p) = block
                .iter()
                .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(b.0.cmp(&a.0)))
                .unwrap();
            BaseDiagnostic {
                model: name.to_string(),
                resolution_id: id.clone(),
                probability: *p,
            }
        })
        .collect();

    Ok(PredictionResult {
        incident_id: ticket.incident_id.clone(),
        ranked,
        confidence,
        low_confidence,
        fallback,
        base_top1,
        bundle_version: bundle.version.clone(),
    })
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Exact brute-force cosine kNN over the stored training embeddings.
/// Descending similarity, ties by ascending incident id; k caps at N.
pub fn knn_similar(bundle: &ModelBundle, ticket: &TicketRecord, k: usize) -> Result<Vec<SimilarTicket>> {
    let tokens = bundle.prepare_tokens(&ticket.description);
    let query = bundle.word_vectors.embed_text(&tokens);
    let mut scored: Vec<(&str, f64)> = bundle
        .train_embeddings
        .iter()
        .map(|(id, emb)| (id.as_str(), cosine(&query, emb)))
        .collect();
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(b.0)));
    scored.truncate(k);
    Ok(scored
        .into_iter()
        .map(|(id, similarity)| {
            let info = bundle.train_info.get(id);
            SimilarTicket {
                incident_id: id.to_string(),
                similarity,
                resolution_id: info.map(|i| i.resolution_id.clone()),
                resolution_text: info.and_then(|i| i.resolution_text.clone()),
            }
        })
        .collect())
}

/// Jensen-Shannon divergence with natural logarithms; ranges over [0, ln 2].
pub fn js_divergence(p: &[f64], q: &[f64]) -> f64 {
    fn kl(a: &[f64], m: &[f64]) -> f64 {
        a.iter()
            .zip(m)
            .filter(|(&ai, _)| ai > 0.0)
            .map(|(&ai, &mi)| ai * (ai / mi).ln())
            .sum()
    }
    let m: Vec<f64> = p.iter().zip(q).map(|(&a, &b)| 0.5 * (a + b)).collect();
    0.5 * kl(p, &m) + 0.5 * kl(q, &m)
}

/// Scores topic drift of a recent ticket window against the training
/// baseline.
pub fn drift_score(bundle: &ModelBundle, recent: &Corpus) -> Result<DriftReport> {
    let floor = bundle.config.drift.min_window;
    if recent.len() < floor {
        return Err(Error::DriftWindowTooSmall {
            got: recent.len(),
            floor,
        });
    }
    let k = bundle.lda.k;
    let mut mean = vec![0.0; k];
    let seed = bundle.infer_seed();
    for (i, record) in recent.records.iter().enumerate() {
        let tokens = bundle.prepare_tokens(&record.description);
        let theta = crate::topics::lda_infer(
            &bundle.lda,
            &bundle.vocab.term_ids(&tokens),
            bundle.config.lda.infer_sweeps,
            seed.wrapping_add(i as u64),
        );
        for (m, t) in mean.iter_mut().zip(theta) {
            *m += t;
        }
    }
    for m in &mut mean {
        *m /= recent.len() as f64;
    }
    let js = js_divergence(&bundle.drift_baseline, &mean);
    Ok(DriftReport {
        js_divergence: js,
        window: recent.len(),
        baseline: bundle.lda.n_docs(),
        threshold: bundle.config.drift.threshold,
        retrain_recommended: js > bundle.config.drift.threshold,
    })
}

impl PredictionLogEntry {
    /// Builds a log entry from a finished prediction, stamped now.
    pub fn from_result(result: &PredictionResult, latency_ms: f64) -> Self {
        PredictionLogEntry {
            ts: chrono::Utc::now().to_rfc3339(),
            incident_id: result.incident_id.clone(),
            resolution_id: result
                .ranked
                .first()
                .map(|r| r.resolution_id.clone())
                .unwrap_or_default(),
            confidence: result.confidence,
            low_confidence: result.low_confidence,
            bundle_version: result.bundle_version.clone(),
            latency_ms,
        }
    }
}

/// Appends one JSON line and flushes.
pub fn log_prediction<W: Write>(sink: &mut W, entry: &PredictionLogEntry) -> Result<()> {
    serde_json::to_writer(&mut *sink, entry)?;
    sink.write_all(b"\n")?;
    sink.flush()?;
    Ok(())
}
