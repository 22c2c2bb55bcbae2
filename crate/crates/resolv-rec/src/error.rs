//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("missing mandatory column `{0}` in CSV header")]
    MissingColumn(String),
    #[error("duplicate incident id `{id}` (rows {first_row} and {second_row})")]
    DuplicateIncidentId {
        id: String,
        first_row: usize,
        second_row: usize,
    },
    #[error("input contains no data rows")]
    EmptyInput,
    #[error("corpus is empty after cleaning")]
    EmptyAfterClean,
    #[error("corpus too small to split: {0} records (need at least 2)")]
    TooSmallToSplit(usize),
    #[error("split ratio {0} outside (0, 1)")]
    BadSplitRatio(f64),
    #[error("vocabulary empty after frequency filtering (min_df={min_df}, max_df_ratio={max_df_ratio})")]
    FilterTooStrict { min_df: usize, max_df_ratio: f64 },
    #[error("word-vector format error at line {line}: {reason}")]
    WordVectorFormat { line: usize, reason: String },
    #[error("cannot fit {k} clusters to {n} points")]
    InfeasibleClustering { k: usize, n: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },
    #[error("non-finite value encountered in {0}")]
    Numeric(&'static str),
    #[error("silhouette undefined for a single cluster")]
    SingleCluster,
    #[error("document index {0} out of range")]
    DocIndex(usize),
    #[error("training requires at least 2 distinct labels, got {0}")]
    SingleLabel(usize),
    #[error("base-model label spaces do not align: {0}")]
    LabelAlignment(String),
    #[error("ticket has an empty description")]
    EmptyDescription,
    #[error("drift window too small: {got} recent tickets (floor {floor})")]
    DriftWindowTooSmall { got: usize, floor: usize },
    #[error("bundle corrupted: checksum mismatch in section `{0}`")]
    BundleCorrupt(String),
    #[error("unsupported bundle format version {0}")]
    BundleVersion(u32),
    #[error("bundle malformed: {0}")]
    BundleFormat(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
    #[error("csv parse error: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Wraps an error with the name of the pipeline stage that produced it.
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
