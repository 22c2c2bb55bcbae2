//! Resolution recommendation engine for incident tickets.
//!
//! The pipeline ingests historical ticket CSVs, synthesizes resolution
//! labels by clustering free-text resolutions when none exist, trains three
//! base recommenders (collapsed-Gibbs LDA, a Siamese triplet-loss encoder,
//! and an index-embedding model), fuses them with a logistic-regression
//! stacking meta-learner, and serves confidence-gated predictions with a
//! cosine-similarity fallback over historical tickets.
//!
//! Start with the runnable examples in `examples/` — each one exercises a
//! major capability end to end on generated data.

pub mod cluster;
pub mod config;
pub mod corpus;
pub mod encoders;
pub mod engine;
pub mod ensemble;
pub mod error;
pub mod serve;
pub mod synth;
pub mod textprep;
pub mod topics;

pub use config::AppConfig;
pub use corpus::{Corpus, TicketRecord};
pub use engine::{ModelBundle, PredictionResult};
pub use error::{Error, Result};
