//! Command-line interface over the recommendation pipeline plus the embedded
//! HTTP service.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};

use resolv_rec::cluster::{assign_resolution_ids, labeling_silhouette, ClusterMethod};
use resolv_rec::config::AppConfig;
use resolv_rec::corpus::{load_csv, Corpus, TicketRecord};
use resolv_rec::engine::{
    drift_score, evaluate, export_metrics, knn_similar, load_bundle_path, predict,
    save_bundle_path, train_pipeline, MetricsReport,
};
use resolv_rec::error::Result;
use resolv_rec::serve::{run, ServeState};

#[derive(Parser)]
#[command(name = "resolv-rec", version, about = "Incident-ticket resolution recommendation engine")]
struct Cli {
    /// Configuration file (TOML); RESOLV_REC_CONFIG overrides the default path.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Emit machine-readable JSON instead of human-readable tables.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct InputArg {
    /// Ticket CSV file.
    #[arg(long)]
    input: PathBuf,
}

#[derive(Args)]
struct ModelArg {
    /// Trained `.rrb` bundle.
    #[arg(long)]
    model: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Kmeans,
    Gmm,
}

impl From<MethodArg> for ClusterMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Kmeans => ClusterMethod::Kmeans,
            MethodArg::Gmm => ClusterMethod::Gmm,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Parse, clean and summarize a ticket CSV.
    Ingest(InputArg),
    /// Cluster resolution texts into synthetic resolution ids.
    Cluster {
        #[command(flatten)]
        input: InputArg,
        #[arg(long, value_enum)]
        method: Option<MethodArg>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Evaluate a range of k values, e.g. `2:8`, reporting silhouettes.
        #[arg(long, value_name = "LO:HI")]
        k_sweep: Option<String>,
    },
    /// Run the full training pipeline and write a bundle.
    Train {
        #[command(flatten)]
        input: InputArg,
        /// Output bundle path (`.rrb`).
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a bundle against a labeled CSV.
    Evaluate {
        #[command(flatten)]
        model: ModelArg,
        #[command(flatten)]
        input: InputArg,
    },
    /// Predict a resolution for one ticket description.
    Predict {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long)]
        text: String,
        #[arg(long)]
        incident_id: Option<String>,
    },
    /// Retrieve the most similar historical tickets.
    Similar {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long)]
        text: String,
        #[arg(long)]
        k: Option<usize>,
    },
    /// Score topic drift of a recent ticket window.
    Drift {
        #[command(flatten)]
        model: ModelArg,
        #[command(flatten)]
        input: InputArg,
    },
    /// Evaluate and export the dashboard feed JSON.
    ExportMetrics {
        #[command(flatten)]
        model: ModelArg,
        #[command(flatten)]
        input: InputArg,
        #[arg(long)]
        out: PathBuf,
        /// Fixed generation timestamp (RFC 3339) for reproducible exports.
        #[arg(long)]
        timestamp: Option<String>,
    },
    /// Serve the HTTP API over a bundle.
    Serve {
        #[command(flatten)]
        model: ModelArg,
        /// Optional evaluation report JSON backing /v1/metrics.
        #[arg(long)]
        metrics: Option<PathBuf>,
        /// Prediction log file (JSON Lines), appended per request.
        #[arg(long)]
        log: Option<PathBuf>,
        #[arg(long)]
        bind: Option<String>,
        #[arg(long)]
        port: Option<u16>,
    },
}

fn load_config(explicit: Option<&Path>) -> Result<AppConfig> {
    if let Some(path) = explicit {
        return AppConfig::load(path);
    }
    if let Ok(path) = std::env::var("RESOLV_REC_CONFIG") {
        return AppConfig::load(Path::new(&path));
    }
    Ok(AppConfig::default())
}

fn read_corpus(path: &Path, config: &AppConfig) -> Result<Corpus> {
    load_csv(std::fs::File::open(path)?, &config.corpus)
}

fn print_report_table(report: &MetricsReport) {
    println!(
        "evaluated {}  accuracy {:.4}  macro-P {:.4}  macro-R {:.4}  macro-F1 {:.4}",
        report.evaluated,
        report.accuracy,
        report.macro_precision,
        report.macro_recall,
        report.macro_f1
    );
    println!("{:<16} {:>9} {:>9} {:>9} {:>8}", "label", "precision", "recall", "f1", "support");
    for m in &report.per_label {
        println!(
            "{:<16} {:>9.4} {:>9.4} {:>9.4} {:>8}",
            m.label, m.precision, m.recall, m.f1, m.support
        );
    }
}

fn run_command(cli: Cli) -> Result<()> {
    let config = load_config(cli.config.as_deref())?;
    match cli.command {
        Command::Ingest(input) => {
            let corpus = read_corpus(&input.input, &config)?;
            let (cleaned, report) =
                resolv_rec::corpus::clean(&corpus, &Default::default())?;
            if cli.json {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&serde_json::json!({
                        "rows": corpus.len(),
                        "kept": report.kept,
                        "empty_description": report.empty_description,
                        "labels": cleaned.label_space(),
                        "fully_labeled": cleaned.fully_labeled(),
                    }))?
                );
            } else {
                println!(
                    "{} rows, {} kept ({} empty descriptions dropped), {} labels, fully labeled: {}",
                    corpus.len(),
                    report.kept,
                    report.empty_description,
                    cleaned.label_space().len(),
                    cleaned.fully_labeled()
                );
            }
        }
        Command::Cluster {
            input,
            method,
            k,
            seed,
            k_sweep,
        } => {
            let corpus = read_corpus(&input.input, &config)?;
            let method: ClusterMethod =
                method.map(Into::into).unwrap_or(config.cluster.method);
            let seed = seed.unwrap_or(config.cluster.seed);
            let ks: Vec<usize> = match &k_sweep {
                Some(range) => {
                    let (lo, hi) = range.split_once(':').ok_or_else(|| {
                        resolv_rec::Error::Config(format!("bad k-sweep range `{range}`"))
                    })?;
                    let lo: usize = lo.parse().map_err(|_| {
                        resolv_rec::Error::Config(format!("bad k-sweep range `{range}`"))
                    })?;
                    let hi: usize = hi.parse().map_err(|_| {
                        resolv_rec::Error::Config(format!("bad k-sweep range `{range}`"))
                    })?;
                    (lo..=hi).collect()
                }
                None => vec![k.unwrap_or(config.cluster.k)],
            };
            let mut rows = Vec::new();
            for k in ks {
                let labeling = assign_resolution_ids(&corpus, method, k, seed)?;
                let silhouette = labeling_silhouette(&corpus, &labeling).unwrap_or(0.0);
                let mut sizes = std::collections::BTreeMap::new();
                for cluster in labeling.assignment.values() {
                    *sizes.entry(cluster.clone()).or_insert(0usize) += 1;
                }
                rows.push((k, silhouette, sizes, labeling));
            }
            if cli.json {
                let out: Vec<serde_json::Value> = rows
                    .iter()
                    .map(|(k, s, sizes, labeling)| {
                        serde_json::json!({
                            "k": k,
                            "silhouette": s,
                            "cluster_sizes": sizes,
                            "assignment": labeling.assignment,
                        })
                    })
                    .collect();
                println!("{}", serde_json::to_string_pretty(&out)?);
            } else {
                for (k, s, sizes, _) in &rows {
                    println!("k = {k}: silhouette {s:.4}");
                    for (cluster, size) in sizes {
                        println!("  {cluster:<10} {size}");
                    }
                }
            }
        }
        Command::Train { input, out } => {
            let corpus = read_corpus(&input.input, &config)?;
            let outcome = train_pipeline(&corpus, &config)?;
            save_bundle_path(&outcome.bundle, &out)?;
            if cli.json {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&serde_json::json!({
                        "bundle": out,
                        "bundle_version": outcome.bundle.version,
                        "train": outcome.bundle.train_embeddings.len(),
                        "test": outcome.test.len(),
                        "labels": outcome.bundle.label_space,
                        "stratified": outcome.stratified,
                        "synthetic_labeling": outcome.bundle.synthetic_labeling.is_some(),
                    }))?
                );
            } else {
                println!(
                    "trained bundle {} ({} train / {} held out, {} labels) -> {}",
                    outcome.bundle.version,
                    outcome.bundle.train_embeddings.len(),
                    outcome.test.len(),
                    outcome.bundle.label_space.len(),
                    out.display()
                );
            }
        }
        Command::Evaluate { model, input } => {
            let bundle = load_bundle_path(&model.model)?;
            let test = read_corpus(&input.input, &config)?;
            let report = evaluate(&bundle, &test)?;
            if cli.json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                print_report_table(&report);
            }
        }
        Command::Predict {
            model,
            text,
            incident_id,
        } => {
            let bundle = load_bundle_path(&model.model)?;
            let ticket =
                TicketRecord::new(incident_id.unwrap_or_else(|| "ad-hoc".into()), text);
            let inference = &bundle.config.inference;
            let result = predict(
                &bundle,
                &ticket,
                inference.threshold,
                inference.top_n,
                inference.fallback_k,
            )?;
            if cli.json {
                println!("{}", serde_json::to_string_pretty(&result)?);
            } else {
                println!(
                    "confidence {:.4}{}",
                    result.confidence,
                    if result.low_confidence { "  [LOW CONFIDENCE]" } else { "" }
                );
                for r in result.ranked.iter().take(inference.top_n) {
                    println!(
                        "  {:<12} {:.4}  {}",
                        r.resolution_id,
                        r.probability,
                        r.resolution_text.as_deref().unwrap_or("")
                    );
                }
                for s in &result.fallback {
                    println!(
                        "  similar: {:<12} {:.4}  {}",
                        s.incident_id,
                        s.similarity,
                        s.resolution_text.as_deref().unwrap_or("")
                    );
                }
            }
        }
        Command::Similar { model, text, k } => {
            let bundle = load_bundle_path(&model.model)?;
            let k = k.unwrap_or(bundle.config.inference.fallback_k);
            let ticket = TicketRecord::new("ad-hoc", text);
            let hits = knn_similar(&bundle, &ticket, k)?;
            if cli.json {
                println!("{}", serde_json::to_string_pretty(&hits)?);
            } else {
                for h in &hits {
                    println!(
                        "{:<12} {:.4}  {}",
                        h.incident_id,
                        h.similarity,
                        h.resolution_text.as_deref().unwrap_or("")
                    );
                }
            }
        }
        Command::Drift { model, input } => {
            let bundle = load_bundle_path(&model.model)?;
            let recent = read_corpus(&input.input, &config)?;
            let report = drift_score(&bundle, &recent)?;
            if cli.json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                println!(
                    "js divergence {:.4} over {} recent tickets (threshold {}): retrain {}",
                    report.js_divergence,
                    report.window,
                    report.threshold,
                    if report.retrain_recommended { "recommended" } else { "not needed" }
                );
            }
        }
        Command::ExportMetrics {
            model,
            input,
            out,
            timestamp,
        } => {
            let bundle = load_bundle_path(&model.model)?;
            let test = read_corpus(&input.input, &config)?;
            let report = evaluate(&bundle, &test)?;
            let feed = export_metrics(&bundle, &report, &[], timestamp, &out)?;
            if cli.json {
                println!("{}", serde_json::to_string_pretty(&feed)?);
            } else {
                println!("dashboard feed written to {}", out.display());
            }
        }
        Command::Serve {
            model,
            metrics,
            log,
            bind,
            port,
        } => {
            let bundle = load_bundle_path(&model.model)?;
            let report: Option<MetricsReport> = match metrics {
                Some(path) => Some(serde_json::from_str(&std::fs::read_to_string(path)?)?),
                None => None,
            };
            let bind = bind.unwrap_or_else(|| config.service.bind.clone());
            let port = port.unwrap_or(config.service.port);
            let state = Arc::new(
                ServeState::new(bundle)
                    .with_report(report)
                    .with_log_file(log)?,
            );
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(run(state, &bind, port))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse(); // clap exits with code 2 on usage errors
    match run_command(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}
