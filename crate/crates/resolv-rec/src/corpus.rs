//! Ticket data model, CSV ingestion, cleaning and deterministic splitting.

use std::collections::BTreeMap;
use std::io::Read;

use chrono::NaiveDateTime;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One historical or incoming incident.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TicketRecord {
    pub incident_id: String,
    pub description: String,
    pub submit_date: Option<NaiveDateTime>,
    pub resolved_date: Option<NaiveDateTime>,
    pub resolution_text: Option<String>,
    pub resolution_id: Option<String>,
}

impl TicketRecord {
    pub fn new(incident_id: impl Into<String>, description: impl Into<String>) -> Self {
        TicketRecord {
            incident_id: incident_id.into(),
            description: description.into(),
            submit_date: None,
            resolved_date: None,
            resolution_text: None,
            resolution_id: None,
        }
    }
}

/// An ordered collection of tickets with unique incident ids.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Corpus {
    pub records: Vec<TicketRecord>,
}

impl Corpus {
    pub fn new(records: Vec<TicketRecord>) -> Self {
        Corpus { records }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Ordered (ascending) set of distinct non-null resolution ids.
    pub fn label_space(&self) -> Vec<String> {
        let mut labels: Vec<String> = self
            .records
            .iter()
            .filter_map(|r| r.resolution_id.clone())
            .collect();
        labels.sort();
        labels.dedup();
        labels
    }

    /// True when every record carries a resolution id.
    pub fn fully_labeled(&self) -> bool {
        self.records.iter().all(|r| r.resolution_id.is_some())
    }
}

/// Column mapping and date pattern for CSV ingestion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CsvFormatConfig {
    pub col_incident_id: String,
    pub col_description: String,
    pub col_submit_date: String,
    pub col_resolved_date: String,
    pub col_resolution_text: String,
    pub col_resolution_id: String,
    /// strftime-style pattern; the default matches `01-07-2024 1:16 AM`.
    pub date_format: String,
}

impl Default for CsvFormatConfig {
    fn default() -> Self {
        CsvFormatConfig {
            col_incident_id: "Incident Number".into(),
            col_description: "Description".into(),
            col_submit_date: "Submit Date".into(),
            col_resolved_date: "Resolved Date".into(),
            col_resolution_text: "Resolution".into(),
            col_resolution_id: "Resolution ID".into(),
            date_format: "%d-%m-%Y %I:%M %p".into(),
        }
    }
}

fn non_empty(cell: Option<&str>) -> Option<String> {
    cell.map(str::trim)
        .filter(|s| !s.is_empty())
        .map(String::from)
}

/// Parses RFC-4180 CSV with a header row into a [`Corpus`].
///
/// Unparseable optional fields (dates, resolution cells) become absent.
/// Missing mandatory columns, duplicate incident ids and header-only input
/// are hard errors.
pub fn load_csv<R: Read>(source: R, format: &CsvFormatConfig) -> Result<Corpus> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(source);

    let headers = reader.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let id_idx = col(&format.col_incident_id)
        .ok_or_else(|| Error::MissingColumn(format.col_incident_id.clone()))?;
    let desc_idx = col(&format.col_description)
        .ok_or_else(|| Error::MissingColumn(format.col_description.clone()))?;
    let submit_idx = col(&format.col_submit_date);
    let resolved_idx = col(&format.col_resolved_date);
    let res_text_idx = col(&format.col_resolution_text);
    let res_id_idx = col(&format.col_resolution_id);

    let parse_date = |cell: Option<&str>| -> Option<NaiveDateTime> {
        let s = cell?.trim();
        if s.is_empty() {
            return None;
        }
        NaiveDateTime::parse_from_str(s, &format.date_format).ok()
    };

    let mut records = Vec::new();
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    for (i, row) in reader.records().enumerate() {
        let row = row?;
        let row_number = i + 2; // 1-based, after the header
        let incident_id = non_empty(row.get(id_idx)).unwrap_or_default();
        if incident_id.is_empty() {
            continue;
        }
        if let Some(first_row) = seen.insert(incident_id.clone(), row_number) {
            return Err(Error::DuplicateIncidentId {
                id: incident_id,
                first_row,
                second_row: row_number,
            });
        }
        records.push(TicketRecord {
            incident_id,
            description: non_empty(row.get(desc_idx)).unwrap_or_default(),
            submit_date: parse_date(submit_idx.and_then(|i| row.get(i))),
            resolved_date: parse_date(resolved_idx.and_then(|i| row.get(i))),
            resolution_text: non_empty(res_text_idx.and_then(|i| row.get(i))),
            resolution_id: non_empty(res_id_idx.and_then(|i| row.get(i))),
        });
    }
    if records.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(Corpus::new(records))
}

/// What [`clean`] is allowed to drop.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct CleanPolicy {
    pub require_resolution: bool,
}

/// Per-reason drop counts from a [`clean`] run.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanReport {
    pub empty_description: usize,
    pub missing_resolution: usize,
    pub kept: usize,
}

/// Drops records with empty descriptions (and, per policy, records lacking
/// resolution text). Survivor order is preserved.
pub fn clean(corpus: &Corpus, policy: &CleanPolicy) -> Result<(Corpus, CleanReport)> {
    let mut report = CleanReport::default();
    let mut kept = Vec::new();
    for record in &corpus.records {
        if record.description.trim().is_empty() {
            report.empty_description += 1;
        } else if policy.require_resolution && record.resolution_text.is_none() {
            report.missing_resolution += 1;
        } else {
            kept.push(record.clone());
        }
    }
    if kept.is_empty() {
        return Err(Error::EmptyAfterClean);
    }
    report.kept = kept.len();
    Ok((Corpus::new(kept), report))
}

/// Outcome of a deterministic train/test split.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitResult {
    pub train: Corpus,
    pub test: Corpus,
    pub seed: u64,
    pub ratio: f64,
    pub stratified: bool,
}

/// Seeded shuffle-and-cut split; |train| = floor(ratio * N) exactly.
///
/// Stratified by resolution_id when every record is labeled and every label
/// has at least two members, otherwise a plain shuffle.
pub fn split(corpus: &Corpus, ratio: f64, seed: u64) -> Result<SplitResult> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::BadSplitRatio(ratio));
    }
    if corpus.len() < 2 {
        return Err(Error::TooSmallToSplit(corpus.len()));
    }
    let n = corpus.len();
    let train_size = (ratio * n as f64).floor() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut by_label: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    let stratifiable = corpus.fully_labeled() && {
        for (i, r) in corpus.records.iter().enumerate() {
            by_label
                .entry(r.resolution_id.as_deref().unwrap_or_default())
                .or_default()
                .push(i);
        }
        by_label.values().all(|members| members.len() >= 2)
    };

    let (train_idx, test_idx) = if stratifiable {
        // Per-label floor allocation, remainder by largest fractional part.
        let mut quota: Vec<(&str, usize, f64)> = by_label
            .iter()
            .map(|(label, members)| {
                let exact = ratio * members.len() as f64;
                (*label, exact.floor() as usize, exact - exact.floor())
            })
            .collect();
        let mut assigned: usize = quota.iter().map(|q| q.1).sum();
        let mut order: Vec<usize> = (0..quota.len()).collect();
        order.sort_by(|&a, &b| {
            quota[b]
                .2
                .partial_cmp(&quota[a].2)
                .unwrap()
                .then(quota[a].0.cmp(quota[b].0))
        });
        for &qi in &order {
            if assigned >= train_size {
                break;
            }
            quota[qi].1 += 1;
            assigned += 1;
        }
        let mut train_idx = Vec::with_capacity(train_size);
        let mut test_idx = Vec::with_capacity(n - train_size);
        for (label, take, _) in &quota {
            let mut members = by_label[label].clone();
            members.shuffle(&mut rng);
            train_idx.extend_from_slice(&members[..*take]);
            test_idx.extend_from_slice(&members[*take..]);
        }
        train_idx.sort_unstable();
        test_idx.sort_unstable();
        (train_idx, test_idx)
    } else {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut rng);
        let (a, b) = idx.split_at(train_size);
        let mut train_idx = a.to_vec();
        let mut test_idx = b.to_vec();
        train_idx.sort_unstable();
        test_idx.sort_unstable();
        (train_idx, test_idx)
    };

    let pick = |idx: &[usize]| Corpus::new(idx.iter().map(|&i| corpus.records[i].clone()).collect());
    Ok(SplitResult {
        train: pick(&train_idx),
        test: pick(&test_idx),
        seed,
        ratio,
        stratified: stratifiable,
    })
}
