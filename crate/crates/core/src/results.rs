//! On-disk schema for ranked query results and the link-graph edge list.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::config::MatchConfig;
use crate::fast_match::ImageMetric;
use crate::ingest::{write_atomic, IngestError};
use crate::pipeline::Edge;
use crate::pose::Pose;
use crate::verify::{RankedHit, SimilarityTransform, ValidatedPair};

pub const RESULTS_FORMAT_VERSION: u32 = 1;
const RESULTS_FORMAT_TAG: &str = "poselink-results";

/// A results file: one section per query.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultsFile {
    pub format: String,
    pub format_version: u32,
    pub metric: ImageMetric,
    pub verified: bool,
    pub config: MatchConfig,
    /// File name of the run manifest written next to this file, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<String>,
    pub queries: Vec<QueryResult>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryResult {
    pub query_id: String,
    pub source: String,
    /// The query's poses, so a report can draw them without the query file.
    pub poses: Vec<Pose>,
    pub hits: Vec<Hit>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hit {
    pub rank: usize,
    pub image_id: String,
    /// Fast-match image distance; `null` in JSON when infinite.
    #[serde(with = "finite_or_null")]
    pub distance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verification: Option<HitVerification>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HitVerification {
    pub score: usize,
    pub transform: SimilarityTransform,
    pub validated_pairs: Vec<ValidatedPair>,
}

impl ResultsFile {
    pub fn new(metric: ImageMetric, verified: bool, config: &MatchConfig) -> Self {
        Self {
            format: RESULTS_FORMAT_TAG.to_string(),
            format_version: RESULTS_FORMAT_VERSION,
            metric,
            verified,
            config: config.clone(),
            provenance: None,
            queries: Vec::new(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("results serialize");
        s.push('\n');
        s
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), IngestError> {
        write_atomic(path.as_ref(), self.to_json().as_bytes())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, IngestError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|source| IngestError::Io { path: path.display().to_string(), source })?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self, IngestError> {
        let malformed = |reason: String| IngestError::MalformedFile { path: origin.to_string(), person: None, reason };
        let file: ResultsFile = serde_json::from_str(text).map_err(|e| malformed(e.to_string()))?;
        if file.format != RESULTS_FORMAT_TAG {
            return Err(malformed(format!("not a results file (format {:?})", file.format)));
        }
        if file.format_version != RESULTS_FORMAT_VERSION {
            return Err(IngestError::VersionMismatch {
                found: file.format_version,
                expected: RESULTS_FORMAT_VERSION,
            });
        }
        Ok(file)
    }
}

impl QueryResult {
    pub fn from_hits(query_id: &str, source: &str, poses: &[Pose], hits: Vec<RankedHit>) -> Self {
        Self {
            query_id: query_id.to_string(),
            source: source.to_string(),
            poses: poses.to_vec(),
            hits: hits
                .into_iter()
                .enumerate()
                .map(|(i, h)| Hit {
                    rank: i + 1,
                    image_id: h.image_id,
                    distance: h.distance,
                    verification: h.verification.map(|v| HitVerification {
                        score: v.score,
                        transform: v.best_transform,
                        validated_pairs: v.validated_pairs,
                    }),
                })
                .collect(),
        }
    }
}

pub const EDGE_HEADER: &str = "query_id\ttarget_id\tscore\tscale\ttx\tty\tflipped";

/// Tab-separated edge list with a header row.
pub fn edges_to_tsv(edges: &[Edge]) -> String {
    let mut out = String::from(EDGE_HEADER);
    out.push('\n');
    for e in edges {
        let t = &e.transform;
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            e.query_id, e.target_id, e.score, t.scale, t.translation.0, t.translation.1, t.flipped
        )
        .expect("writing to a String");
    }
    out
}

mod finite_or_null {
    use super::*;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}
