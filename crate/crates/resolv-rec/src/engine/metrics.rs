//! Evaluation metrics and the dashboard feed export.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{predict, ModelBundle};
use crate::corpus::Corpus;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelMetrics {
    pub label: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Ground-truth count in the evaluated set.
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterShare {
    pub label: String,
    pub size: usize,
    pub share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeStats {
    pub mean_hours: f64,
    pub median_hours: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub evaluated: usize,
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub per_label: Vec<LabelMetrics>,
    /// Shared axis of the confusion matrix, ascending resolution ids.
    pub labels: Vec<String>,
    /// Rows = true label, columns = predicted label.
    pub confusion: Vec<Vec<usize>>,
    /// Ensemble confidence in 10 equal bins over [0, 1].
    pub confidence_histogram: Vec<usize>,
    /// Training-cluster sizes and shares (shares sum to 1).
    pub cluster_sparsity: Vec<ClusterShare>,
    pub time_to_resolution: Option<TimeStats>,
    /// Evaluated-ticket count per true label.
    pub volume_per_label: BTreeMap<String, usize>,
    /// Top-20 token frequencies over low-confidence tickets (experimental).
    pub low_confidence_top_tokens: Vec<(String, usize)>,
}

/// Runs the bundle over a labeled test corpus (fallback retrieval
/// suppressed) and aggregates classification metrics.
pub fn evaluate(bundle: &ModelBundle, test: &Corpus) -> Result<MetricsReport> {
    if test.is_empty() {
        return Err(Error::EmptyInput);
    }
    let labels = bundle.label_space.clone();
    let index: BTreeMap<&str, usize> = labels
        .iter()
        .enumerate()
        .map(|(i, l)| (l.as_str(), i))
        .collect();
    let threshold = bundle.config.inference.threshold;
    let top_n = bundle.config.inference.top_n;

    let mut confusion = vec![vec![0usize; labels.len()]; labels.len()];
    let mut histogram = vec![0usize; 10];
    let mut volume: BTreeMap<String, usize> = BTreeMap::new();
    let mut low_conf_tokens: BTreeMap<String, usize> = BTreeMap::new();
    let mut durations_hours: Vec<f64> = Vec::new();
    let mut evaluated = 0usize;

    for record in &test.records {
        let Some(truth) = record.resolution_id.as_deref() else {
            continue;
        };
        let &true_idx = index.get(truth).ok_or_else(|| {
            Error::LabelAlignment(format!("test label `{truth}` unknown to the bundle"))
        })?;
        let result = predict(bundle, record, threshold, top_n, 0)?;
        let predicted = &result.ranked[0].resolution_id;
        let pred_idx = index[predicted.as_str()];
        confusion[true_idx][pred_idx] += 1;
        let bin = ((result.confidence * 10.0) as usize).min(9);
        histogram[bin] += 1;
        *volume.entry(truth.to_string()).or_insert(0) += 1;
        if result.low_confidence {
            for token in bundle.prepare_tokens(&record.description) {
                *low_conf_tokens.entry(token).or_insert(0) += 1;
            }
        }
        if let (Some(submit), Some(resolved)) = (record.submit_date, record.resolved_date) {
            durations_hours.push((resolved - submit).num_seconds() as f64 / 3600.0);
        }
        evaluated += 1;
    }
    if evaluated == 0 {
        return Err(Error::EmptyInput);
    }

    let mut per_label = Vec::with_capacity(labels.len());
    let mut correct = 0usize;
    for (i, label) in labels.iter().enumerate() {
        let tp = confusion[i][i];
        correct += tp;
        let support: usize = confusion[i].iter().sum();
        let predicted: usize = confusion.iter().map(|row| row[i]).sum();
        let precision = if predicted > 0 {
            tp as f64 / predicted as f64
        } else {
            0.0
        };
        let recall = if support > 0 {
            tp as f64 / support as f64
        } else {
            0.0
        };
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        per_label.push(LabelMetrics {
            label: label.clone(),
            precision,
            recall,
            f1,
            support,
        });
    }
    let n_labels = labels.len() as f64;
    let macro_precision = per_label.iter().map(|m| m.precision).sum::<f64>() / n_labels;
    let macro_recall = per_label.iter().map(|m| m.recall).sum::<f64>() / n_labels;
    let macro_f1 = per_label.iter().map(|m| m.f1).sum::<f64>() / n_labels;

    let train_total: usize = bundle.train_label_counts.values().sum();
    let cluster_sparsity = bundle
        .train_label_counts
        .iter()
        .map(|(label, &size)| ClusterShare {
            label: label.clone(),
            size,
            share: size as f64 / train_total as f64,
        })
        .collect();

    let time_to_resolution = if durations_hours.is_empty() {
        None
    } else {
        let mut sorted = durations_hours.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mid = sorted.len() / 2;
        let median = if sorted.len() % 2 == 0 {
            (sorted[mid - 1] + sorted[mid]) / 2.0
        } else {
            sorted[mid]
        };
        Some(TimeStats {
            mean_hours: durations_hours.iter().sum::<f64>() / durations_hours.len() as f64,
            median_hours: median,
            count: durations_hours.len(),
        })
    };

    let mut token_counts: Vec<(String, usize)> = low_conf_tokens.into_iter().collect();
    token_counts.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    token_counts.truncate(20);

    Ok(MetricsReport {
        evaluated,
        accuracy: correct as f64 / evaluated as f64,
        macro_precision,
        macro_recall,
        macro_f1,
        per_label,
        labels,
        confusion,
        confidence_histogram: histogram,
        cluster_sparsity,
        time_to_resolution,
        volume_per_label: volume,
        low_confidence_top_tokens: token_counts,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerLabelAccuracy {
    pub label: String,
    pub accuracy: f64,
    pub support: usize,
}

/// Dashboard data contract; schema published in `docs/dashboard_feed.schema.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DashboardFeed {
    pub generated_at: String,
    pub bundle_version: String,
    pub cluster_sparsity: Vec<ClusterShare>,
    pub per_label_accuracy: Vec<PerLabelAccuracy>,
    pub confidence_histogram: Vec<usize>,
    pub time_to_resolution: Option<TimeStats>,
    pub ticket_volumes: BTreeMap<String, usize>,
    pub drift_trace: Vec<f64>,
    /// Experimental: token frequencies over low-confidence tickets.
    pub low_confidence_top_tokens: Vec<(String, usize)>,
}

/// Assembles the dashboard feed. `generated_at` is injectable so exports can
/// be byte-deterministic; `None` stamps the current UTC time.
pub fn build_feed(
    bundle: &ModelBundle,
    report: &MetricsReport,
    drift_trace: &[f64],
    generated_at: Option<String>,
) -> DashboardFeed {
    DashboardFeed {
        generated_at: generated_at.unwrap_or_else(|| chrono::Utc::now().to_rfc3339()),
        bundle_version: bundle.version.clone(),
        cluster_sparsity: report.cluster_sparsity.clone(),
        per_label_accuracy: report
            .per_label
            .iter()
            .map(|m| PerLabelAccuracy {
                label: m.label.clone(),
                accuracy: m.recall,
                support: m.support,
            })
            .collect(),
        confidence_histogram: report.confidence_histogram.clone(),
        time_to_resolution: report.time_to_resolution.clone(),
        ticket_volumes: report.volume_per_label.clone(),
        drift_trace: drift_trace.to_vec(),
        low_confidence_top_tokens: report.low_confidence_top_tokens.clone(),
    }
}

/// Writes the dashboard feed as pretty JSON; deterministic given a fixed
/// `generated_at`.
pub fn export_metrics(
    bundle: &ModelBundle,
    report: &MetricsReport,
    drift_trace: &[f64],
    generated_at: Option<String>,
    path: &Path,
) -> Result<DashboardFeed> {
    let feed = build_feed(bundle, report, drift_trace, generated_at);
    let mut json = serde_json::to_vec_pretty(&feed)?;
    json.push(b'\n');
    std::fs::write(path, json)?;
    Ok(feed)
}

#[cfg(test)]
mod tests {
    use super::super::testutil::shared_outcome;
    use super::*;

    fn report() -> MetricsReport {
        let outcome = shared_outcome();
        evaluate(&outcome.bundle, &outcome.test).unwrap()
    }

    #[test]
    fn histogram_and_confusion_invariants() {
        let outcome = shared_outcome();
        let r = report();
        assert_eq!(r.evaluated, outcome.test.len());
        assert_eq!(r.confidence_histogram.iter().sum::<usize>(), r.evaluated);
        for (i, m) in r.per_label.iter().enumerate() {
            assert_eq!(r.confusion[i].iter().sum::<usize>(), m.support);
        }
        let trace: usize = (0..r.labels.len()).map(|i| r.confusion[i][i]).sum();
        assert!((r.accuracy - trace as f64 / r.evaluated as f64).abs() < 1e-12);
    }

    #[test]
    fn synthetic_holdout_is_learnable() {
        let r = report();
        assert!(r.accuracy >= 0.9, "accuracy = {}", r.accuracy);
        assert!(r.macro_precision >= 0.85, "macro P = {}", r.macro_precision);
        assert!(r.macro_recall >= 0.85, "macro R = {}", r.macro_recall);
    }

    #[test]
    fn cluster_sparsity_shares_sum_to_one() {
        let r = report();
        let total: f64 = r.cluster_sparsity.iter().map(|c| c.share).sum();
        assert!((total - 1.0).abs() < 1e-6);
        assert_eq!(r.cluster_sparsity.len(), r.labels.len());
    }

    #[test]
    fn time_to_resolution_from_synthetic_dates() {
        let stats = report().time_to_resolution.unwrap();
        assert_eq!(stats.count, report().evaluated);
        // synthetic durations are 30 + class*45 minutes, classes 0..4
        assert!(stats.mean_hours > 0.4 && stats.mean_hours < 3.0);
        assert!(stats.median_hours > 0.4 && stats.median_hours < 3.0);
    }

    #[test]
    fn empty_test_corpus_is_rejected() {
        let outcome = shared_outcome();
        assert!(matches!(
            evaluate(&outcome.bundle, &Corpus::default()),
            Err(Error::EmptyInput)
        ));
    }

    #[test]
    fn feed_export_is_deterministic_with_injected_timestamp(
    ) {
        let outcome = shared_outcome();
        let r = report();
        let dir = tempfile::tempdir().unwrap();
        let path_a = dir.path().join("a.json");
        let path_b = dir.path().join("b.json");
        let ts = Some("2024-07-01T00:00:00Z".to_string());
        let feed_a =
            export_metrics(&outcome.bundle, &r, &[0.01, 0.02], ts.clone(), &path_a).unwrap();
        let feed_b = export_metrics(&outcome.bundle, &r, &[0.01, 0.02], ts, &path_b).unwrap();
        assert_eq!(feed_a, feed_b);
        assert_eq!(
            std::fs::read(&path_a).unwrap(),
            std::fs::read(&path_b).unwrap()
        );
        assert_eq!(feed_a.per_label_accuracy.len(), outcome.bundle.label_space.len());
        assert_eq!(feed_a.bundle_version, outcome.bundle.version);
    }
}
