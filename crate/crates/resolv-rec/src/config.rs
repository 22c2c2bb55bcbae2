//! Application configuration: one TOML file covering every pipeline stage.
//! Unknown keys are rejected; every numeric field is range-checked.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cluster::ClusterMethod;
use crate::corpus::CsvFormatConfig;
use crate::error::{Error, Result};
use crate::textprep::NormalizeMode;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AppConfig {
    pub corpus: CsvFormatConfig,
    pub text: TextConfig,
    pub cluster: ClusterConfig,
    pub lda: LdaConfig,
    pub siamese: SiameseStageConfig,
    pub indexembed: IndexEmbedStageConfig,
    pub ensemble: EnsembleConfig,
    pub train: TrainConfig,
    pub inference: InferenceConfig,
    pub drift: DriftConfig,
    pub service: ServiceConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TextConfig {
    pub min_df: usize,
    pub max_df_ratio: f64,
    pub max_ngram: usize,
    pub normalize: NormalizeMode,
    /// Optional one-token-per-line stopword file; the bundled list otherwise.
    pub stopwords_path: Option<String>,
    /// Optional pretrained `.vec` file; hashed subword vectors otherwise.
    pub word_vectors_path: Option<String>,
    pub embedding_dim: usize,
}

impl Default for TextConfig {
    fn default() -> Self {
        TextConfig {
            min_df: 2,
            max_df_ratio: 0.5,
            max_ngram: 2,
            normalize: NormalizeMode::LemmaStem,
            stopwords_path: None,
            word_vectors_path: None,
            embedding_dim: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterConfig {
    pub method: ClusterMethod,
    pub k: usize,
    pub seed: u64,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        ClusterConfig {
            method: ClusterMethod::Kmeans,
            k: 10,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LdaConfig {
    pub k: usize,
    /// Dirichlet document prior; absent means 50/K.
    pub alpha: Option<f64>,
    pub beta: f64,
    pub sweeps: usize,
    pub infer_sweeps: usize,
}

impl LdaConfig {
    pub fn effective_alpha(&self) -> f64 {
        self.alpha.unwrap_or(50.0 / self.k as f64)
    }
}

impl Default for LdaConfig {
    fn default() -> Self {
        LdaConfig {
            k: 10,
            alpha: None,
            beta: 0.01,
            sweeps: 500,
            infer_sweeps: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SiameseStageConfig {
    pub margin: f64,
    pub lr: f64,
    pub epochs: usize,
    /// Optional second phase with the bottom 3 layers frozen.
    pub fine_tune_epochs: usize,
}

impl Default for SiameseStageConfig {
    fn default() -> Self {
        SiameseStageConfig {
            margin: 0.2,
            lr: 0.01,
            epochs: 100,
            fine_tune_epochs: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IndexEmbedStageConfig {
    pub dim: usize,
    pub neg_k: usize,
    pub lr: f64,
    pub epochs: usize,
}

impl Default for IndexEmbedStageConfig {
    fn default() -> Self {
        IndexEmbedStageConfig {
            dim: 64,
            neg_k: 5,
            lr: 0.05,
            epochs: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleConfig {
    pub l2: f64,
    pub lr: f64,
    pub epochs: usize,
    pub batch: usize,
    /// Folds for out-of-fold base predictions feeding the meta-learner.
    pub folds: usize,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        EnsembleConfig {
            l2: 1e-3,
            lr: 0.1,
            epochs: 300,
            batch: 32,
            folds: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub ratio: f64,
    pub seed: u64,
    /// When set, only tickets submitted within this many days of the newest
    /// ticket are used for training.
    pub window_days: Option<i64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            ratio: 0.8,
            seed: 42,
            window_days: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InferenceConfig {
    pub threshold: f64,
    pub top_n: usize,
    pub fallback_k: usize,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        InferenceConfig {
            threshold: 0.30,
            top_n: 3,
            fallback_k: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DriftConfig {
    pub threshold: f64,
    /// Minimum recent-window size accepted by the drift scorer.
    pub min_window: usize,
}

impl Default for DriftConfig {
    fn default() -> Self {
        DriftConfig {
            threshold: 0.1,
            min_window: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub bind: String,
    pub port: u16,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            bind: "127.0.0.1".into(),
            port: 8080,
        }
    }
}

impl AppConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: AppConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, message: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::Config(message.to_string()))
            }
        };
        check(self.text.min_df >= 1, "text.min_df must be >= 1")?;
        check(
            self.text.max_df_ratio > 0.0 && self.text.max_df_ratio <= 1.0,
            "text.max_df_ratio must be in (0, 1]",
        )?;
        check(
            (1..=3).contains(&self.text.max_ngram),
            "text.max_ngram must be 1, 2 or 3",
        )?;
        check(self.text.embedding_dim >= 1, "text.embedding_dim must be >= 1")?;
        check(self.cluster.k >= 1, "cluster.k must be >= 1")?;
        check(self.lda.k >= 1, "lda.k must be >= 1")?;
        check(self.lda.beta > 0.0, "lda.beta must be > 0")?;
        check(
            self.lda.alpha.map_or(true, |a| a > 0.0),
            "lda.alpha must be > 0",
        )?;
        check(self.siamese.margin > 0.0, "siamese.margin must be > 0")?;
        check(self.siamese.lr > 0.0, "siamese.lr must be > 0")?;
        check(self.indexembed.dim >= 1, "indexembed.dim must be >= 1")?;
        check(self.indexembed.neg_k >= 1, "indexembed.neg_k must be >= 1")?;
        check(self.ensemble.folds >= 2, "ensemble.folds must be >= 2")?;
        check(
            self.train.ratio > 0.0 && self.train.ratio < 1.0,
            "train.ratio must be in (0, 1)",
        )?;
        check(
            (0.0..=1.0).contains(&self.inference.threshold),
            "inference.threshold must be in [0, 1]",
        )?;
        check(self.inference.top_n >= 1, "inference.top_n must be >= 1")?;
        check(
            self.drift.threshold >= 0.0,
            "drift.threshold must be >= 0",
        )?;
        check(self.drift.min_window >= 1, "drift.min_window must be >= 1")?;
        Ok(())
    }
}
