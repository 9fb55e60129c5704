//! Ground-truth links and mean precision at k.
//!
//! Links are undirected and carry one of two labels. An evaluation scenario
//! decides which labels count as positive and which are removed from the
//! ranking before precision is measured.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ingest::{write_atomic, IngestError};

/// Ranks reported by default.
pub const DEFAULT_RANKS: [usize; 5] = [1, 2, 5, 10, 50];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkLabel {
    Copy,
    CompositionTransfer,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GroundTruthLink {
    #[serde(rename = "a")]
    pub image_id_a: String,
    #[serde(rename = "b")]
    pub image_id_b: String,
    pub label: LinkLabel,
}

impl GroundTruthLink {
    /// Stores the pair with `a < b`.
    pub fn new(a: impl Into<String>, b: impl Into<String>, label: LinkLabel) -> Self {
        let (a, b) = (a.into(), b.into());
        let (image_id_a, image_id_b) = if a <= b { (a, b) } else { (b, a) };
        Self { image_id_a, image_id_b, label }
    }

    pub fn other(&self, id: &str) -> Option<&str> {
        if self.image_id_a == id {
            Some(&self.image_id_b)
        } else if self.image_id_b == id {
            Some(&self.image_id_a)
        } else {
            None
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("ground truth line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("self-link on {0:?}")]
    SelfLink(String),
    #[error("pair ({0:?}, {1:?}) carries two different labels")]
    ConflictingLabel(String, String),
    #[error("no ranking for ground-truth query {0:?}")]
    MissingQuery(String),
    #[error(transparent)]
    Io(#[from] IngestError),
}

/// Validated, canonical set of ground-truth links.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GroundTruth {
    links: Vec<GroundTruthLink>,
}

impl GroundTruth {
    pub fn from_links(links: impl IntoIterator<Item = GroundTruthLink>) -> Result<Self, EvalError> {
        let mut by_pair: BTreeMap<(String, String), LinkLabel> = BTreeMap::new();
        for l in links {
            let l = GroundTruthLink::new(l.image_id_a, l.image_id_b, l.label);
            if l.image_id_a == l.image_id_b {
                return Err(EvalError::SelfLink(l.image_id_a));
            }
            match by_pair.get(&(l.image_id_a.clone(), l.image_id_b.clone())) {
                Some(&label) if label != l.label => {
                    return Err(EvalError::ConflictingLabel(l.image_id_a, l.image_id_b))
                }
                Some(_) => {}
                None => {
                    by_pair.insert((l.image_id_a, l.image_id_b), l.label);
                }
            }
        }
        let links = by_pair
            .into_iter()
            .map(|((a, b), label)| GroundTruthLink { image_id_a: a, image_id_b: b, label })
            .collect();
        Ok(Self { links })
    }

    pub fn links(&self) -> &[GroundTruthLink] {
        &self.links
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    /// Every image that takes part in at least one link, sorted.
    pub fn query_ids(&self) -> Vec<String> {
        let ids: BTreeSet<&str> = self
            .links
            .iter()
            .flat_map(|l| [l.image_id_a.as_str(), l.image_id_b.as_str()])
            .collect();
        ids.into_iter().map(str::to_string).collect()
    }

    /// Positive and ignored images for `query` under `scenario`.
    pub fn relevance(&self, query: &str, scenario: Scenario) -> (HashSet<String>, HashSet<String>) {
        let mut positives = HashSet::new();
        let mut ignored = HashSet::new();
        for l in &self.links {
            if let Some(other) = l.other(query) {
                match scenario.role(l.label) {
                    Role::Positive => positives.insert(other.to_string()),
                    Role::Ignored => ignored.insert(other.to_string()),
                };
            }
        }
        (positives, ignored)
    }

    pub fn parse(text: &str) -> Result<Self, EvalError> {
        let mut links = Vec::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let link: GroundTruthLink = serde_json::from_str(line)
                .map_err(|e| EvalError::Malformed { line: n + 1, reason: e.to_string() })?;
            links.push(link);
        }
        Self::from_links(links)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, EvalError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| {
            EvalError::Io(IngestError::Io { path: path.display().to_string(), source })
        })?;
        Self::parse(&text)
    }

    pub fn to_jsonl(&self) -> String {
        self.links
            .iter()
            .map(|l| serde_json::to_string(l).expect("link serializes") + "\n")
            .collect()
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), EvalError> {
        Ok(write_atomic(path.as_ref(), self.to_jsonl().as_bytes())?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    AllPositive,
    CopyPositive,
    TransferPositive,
}

enum Role {
    Positive,
    Ignored,
}

impl Scenario {
    pub const ALL: [Scenario; 3] =
        [Scenario::AllPositive, Scenario::CopyPositive, Scenario::TransferPositive];

    fn role(self, label: LinkLabel) -> Role {
        match (self, label) {
            (Scenario::AllPositive, _)
            | (Scenario::CopyPositive, LinkLabel::Copy)
            | (Scenario::TransferPositive, LinkLabel::CompositionTransfer) => Role::Positive,
            _ => Role::Ignored,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::AllPositive => "all_positive",
            Scenario::CopyPositive => "copy_positive",
            Scenario::TransferPositive => "transfer_positive",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// What P@k divides by.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Denominator {
    /// Always `k`.
    #[default]
    FixedK,
    /// `min(k, items left after removing ignored ones)`.
    Available,
}

/// Fraction of the top `k` (after dropping ignored items) that are positive.
pub fn precision_at_k<S: AsRef<str>>(
    ranking: &[S],
    positives: &HashSet<String>,
    ignored: &HashSet<String>,
    k: usize,
    denominator: Denominator,
) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let kept: Vec<&str> = ranking
        .iter()
        .map(AsRef::as_ref)
        .filter(|id| !ignored.contains(*id))
        .take(k)
        .collect();
    let hits = kept.iter().filter(|id| positives.contains(**id)).count();
    let denom = match denominator {
        Denominator::FixedK => k,
        Denominator::Available => kept.len(),
    };
    if denom == 0 {
        0.0
    } else {
        hits as f64 / denom as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryPrecision {
    pub query_id: String,
    pub positives: usize,
    pub precision: BTreeMap<usize, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub scenario: Scenario,
    /// Mean precision per rank over contributing queries.
    pub mp_at: BTreeMap<usize, f64>,
    pub per_query: Vec<QueryPrecision>,
    /// Queries that contributed to the mean.
    pub query_count: usize,
    /// Queries left out because they have no positive under the scenario.
    pub excluded_queries: usize,
    /// Set when no query contributed; the means are then reported as 0.
    pub degenerate: bool,
}

/// Mean precision over every image that appears in the ground truth.
pub fn mean_precision<S: AsRef<str>>(
    rankings: &BTreeMap<String, Vec<S>>,
    ground_truth: &GroundTruth,
    scenario: Scenario,
    ks: &[usize],
) -> Result<EvalReport, EvalError> {
    let queries = ground_truth.query_ids();
    mean_precision_over(rankings, ground_truth, scenario, ks, &queries, Denominator::FixedK)
}

/// Mean precision over an explicit query set.
pub fn mean_precision_over<S: AsRef<str>>(
    rankings: &BTreeMap<String, Vec<S>>,
    ground_truth: &GroundTruth,
    scenario: Scenario,
    ks: &[usize],
    queries: &[String],
    denominator: Denominator,
) -> Result<EvalReport, EvalError> {
    let mut per_query = Vec::new();
    let mut excluded = 0;
    for q in queries {
        let ranking = rankings.get(q).ok_or_else(|| EvalError::MissingQuery(q.clone()))?;
        let (positives, ignored) = ground_truth.relevance(q, scenario);
        if positives.is_empty() {
            excluded += 1;
            continue;
        }
        let precision = ks
            .iter()
            .map(|&k| (k, precision_at_k(ranking, &positives, &ignored, k, denominator)))
            .collect();
        per_query.push(QueryPrecision { query_id: q.clone(), positives: positives.len(), precision });
    }
    let n = per_query.len();
    let mp_at = ks
        .iter()
        .map(|&k| {
            let sum: f64 = per_query.iter().map(|row| row.precision[&k]).sum();
            (k, if n == 0 { 0.0 } else { sum / n as f64 })
        })
        .collect();
    Ok(EvalReport {
        scenario,
        mp_at,
        per_query,
        query_count: n,
        excluded_queries: excluded,
        degenerate: n == 0,
    })
}

/// Flat CSV of labeled reports: one row per (method, scenario), one column per rank.
pub fn reports_to_csv(rows: &[(String, &EvalReport)]) -> String {
    let ranks: BTreeSet<usize> = rows.iter().flat_map(|(_, r)| r.mp_at.keys().copied()).collect();
    let mut out = String::from("method,scenario,queries");
    for k in &ranks {
        out.push_str(&format!(",mP@{k}"));
    }
    out.push('\n');
    for (method, report) in rows {
        out.push_str(&format!("{method},{},{}", report.scenario, report.query_count));
        for k in &ranks {
            match report.mp_at.get(k) {
                Some(v) => out.push_str(&format!(",{v:.6}")),
                None => out.push(','),
            }
        }
        out.push('\n');
    }
    out
}
