//! Detector keypoint files, dataset manifests and the persisted pose index.
//!
//! Keypoint files are the detector's JSON output: a top-level `people` array
//! whose entries carry `pose_keypoints_2d`, a flat list of 75 numbers laid out
//! as `(x, y, confidence)` for each of the 25 BODY_25 parts.
//!
//! The index file is line-oriented text. The first line is a JSON header
//! `{"format":"poselink-index","format_version":1,"config_fingerprint":..,"record_count":N}`
//! and each following line is one JSON-encoded [`ImageRecord`].

use std::collections::HashSet;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::MatchConfig;
use crate::fast_match::ImageRecord;
use crate::pose::{Keypoint, Pose, NUM_KEYPOINTS};

pub const INDEX_FORMAT_VERSION: u32 = 1;
const INDEX_FORMAT_TAG: &str = "poselink-index";

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}{}: {reason}", person.map(|p| format!(" (person {p})")).unwrap_or_default())]
    MalformedFile { path: String, person: Option<usize>, reason: String },
    #[error("manifest {path} line {line}: {reason}")]
    MalformedManifest { path: String, line: usize, reason: String },
    #[error("duplicate image id {0:?}")]
    DuplicateImageId(String),
    #[error("index format_version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("index was built with config fingerprint {found}, current config has {expected}")]
    FingerprintMismatch { found: String, expected: String },
    #[error("corrupt index {path} at byte {offset}: {reason}")]
    CorruptIndex { path: String, offset: usize, reason: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IngestError + '_ {
    move |source| IngestError::Io { path: path.display().to_string(), source }
}

/// Parses one detector keypoint file into poses, one per person.
pub fn parse_keypoints_file(path: impl AsRef<Path>) -> Result<Vec<Pose>, IngestError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    parse_keypoints_str(&text, &path.display().to_string())
}

/// Parses detector JSON from memory; `origin` labels errors.
pub fn parse_keypoints_str(text: &str, origin: &str) -> Result<Vec<Pose>, IngestError> {
    let malformed = |person, reason: String| IngestError::MalformedFile {
        path: origin.to_string(),
        person,
        reason,
    };
    let doc: Value =
        serde_json::from_str(text).map_err(|e| malformed(None, format!("invalid JSON: {e}")))?;
    let people = doc
        .get("people")
        .ok_or_else(|| malformed(None, "missing \"people\" array".into()))?
        .as_array()
        .ok_or_else(|| malformed(None, "\"people\" is not an array".into()))?;

    people
        .iter()
        .enumerate()
        .map(|(n, person)| {
            let flat = person
                .get("pose_keypoints_2d")
                .ok_or_else(|| malformed(Some(n), "missing \"pose_keypoints_2d\"".into()))?
                .as_array()
                .ok_or_else(|| malformed(Some(n), "\"pose_keypoints_2d\" is not an array".into()))?;
            if flat.len() != 3 * NUM_KEYPOINTS {
                return Err(malformed(
                    Some(n),
                    format!("expected {} numbers, found {}", 3 * NUM_KEYPOINTS, flat.len()),
                ));
            }
            let mut keypoints = [Keypoint::UNDETECTED; NUM_KEYPOINTS];
            for (k, triple) in flat.chunks_exact(3).enumerate() {
                let num = |v: &Value, what: &str| {
                    v.as_f64().filter(|x| x.is_finite()).ok_or_else(|| {
                        malformed(Some(n), format!("keypoint {k} {what} is not a finite number: {v}"))
                    })
                };
                let (x, y, c) = (num(&triple[0], "x")?, num(&triple[1], "y")?, num(&triple[2], "confidence")?);
                if !(0.0..=1.0).contains(&c) {
                    return Err(malformed(Some(n), format!("keypoint {k} confidence {c} outside [0, 1]")));
                }
                keypoints[k] = Keypoint::new(x, y, c);
            }
            Ok(Pose::new(n, keypoints))
        })
        .collect()
}

/// Serializes poses in the detector's JSON layout.
pub fn keypoints_to_json(poses: &[Pose]) -> String {
    let people: Vec<Value> = poses
        .iter()
        .map(|p| {
            let flat: Vec<f64> =
                p.keypoints.iter().flat_map(|k| [k.x, k.y, k.confidence]).collect();
            serde_json::json!({ "pose_keypoints_2d": flat })
        })
        .collect();
    serde_json::to_string(&serde_json::json!({ "version": 1.3, "people": people }))
        .expect("keypoint JSON serializes")
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub image_id: String,
    pub keypoints_path: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_path: Option<String>,
}

/// A parsed manifest; relative paths resolve against `base_dir`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Manifest {
    pub base_dir: PathBuf,
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn resolve(&self, p: &str) -> PathBuf {
        let path = Path::new(p);
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    pub fn entry(&self, image_id: &str) -> Option<&ManifestEntry> {
        self.entries.iter().find(|e| e.image_id == image_id)
    }
}

/// Reads a JSON-lines manifest.
pub fn read_manifest(path: impl AsRef<Path>) -> Result<Manifest, IngestError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let mut entries = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |reason: String| IngestError::MalformedManifest {
            path: path.display().to_string(),
            line: n + 1,
            reason,
        };
        let entry: ManifestEntry = serde_json::from_str(line).map_err(|e| bad(e.to_string()))?;
        if entry.image_id.is_empty() {
            return Err(bad("empty image_id".into()));
        }
        entries.push(entry);
    }
    Ok(Manifest { base_dir: path.parent().unwrap_or(Path::new("")).to_path_buf(), entries })
}

pub fn write_manifest(path: impl AsRef<Path>, entries: &[ManifestEntry]) -> Result<(), IngestError> {
    let mut out = String::new();
    for e in entries {
        out.push_str(&serde_json::to_string(e).expect("manifest entry serializes"));
        out.push('\n');
    }
    write_atomic(path.as_ref(), out.as_bytes())
}

/// Immutable searchable collection of image records.
#[derive(Clone, Debug, PartialEq)]
pub struct PoseIndex {
    records: Vec<ImageRecord>,
    config_fingerprint: String,
    format_version: u32,
}

impl PoseIndex {
    /// Builds an index from records, rejecting duplicate ids.
    pub fn from_records(records: Vec<ImageRecord>, cfg: &MatchConfig) -> Result<Self, IngestError> {
        let mut seen = HashSet::new();
        for r in &records {
            if !seen.insert(r.image_id.as_str()) {
                return Err(IngestError::DuplicateImageId(r.image_id.clone()));
            }
        }
        Ok(Self {
            records,
            config_fingerprint: cfg.fingerprint(),
            format_version: INDEX_FORMAT_VERSION,
        })
    }

    pub fn records(&self) -> &[ImageRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, image_id: &str) -> Option<&ImageRecord> {
        self.records.iter().find(|r| r.image_id == image_id)
    }

    pub fn config_fingerprint(&self) -> &str {
        &self.config_fingerprint
    }

    pub fn format_version(&self) -> u32 {
        self.format_version
    }

    pub fn pose_count(&self) -> usize {
        self.records.iter().map(|r| r.poses.len()).sum()
    }

    pub fn ineligible_pose_count(&self) -> usize {
        self.records.iter().map(|r| r.poses.len() - r.eligible_count()).sum()
    }

    /// Fails when the index was built under different eligibility settings.
    pub fn check_config(&self, cfg: &MatchConfig) -> Result<(), IngestError> {
        let expected = cfg.fingerprint();
        if self.config_fingerprint != expected {
            return Err(IngestError::FingerprintMismatch {
                found: self.config_fingerprint.clone(),
                expected,
            });
        }
        Ok(())
    }
}

/// Parses every manifest entry (in parallel) and assembles the index in manifest order.
pub fn build_index(manifest: &Manifest, cfg: &MatchConfig) -> Result<PoseIndex, IngestError> {
    let mut seen = HashSet::new();
    for e in &manifest.entries {
        if !seen.insert(e.image_id.as_str()) {
            return Err(IngestError::DuplicateImageId(e.image_id.clone()));
        }
    }
    let records = manifest
        .entries
        .par_iter()
        .map(|e| {
            let poses = parse_keypoints_file(manifest.resolve(&e.keypoints_path))?;
            Ok(ImageRecord::new(e.image_id.clone(), e.keypoints_path.clone(), poses, cfg)
                .with_image_path(e.image_path.clone()))
        })
        .collect::<Result<Vec<_>, IngestError>>()?;
    PoseIndex::from_records(records, cfg)
}

#[derive(Serialize, Deserialize)]
struct IndexHeader {
    format: String,
    format_version: u32,
    config_fingerprint: String,
    record_count: usize,
}

/// Serializes the index to its text form.
pub fn index_to_string(index: &PoseIndex) -> String {
    let header = IndexHeader {
        format: INDEX_FORMAT_TAG.to_string(),
        format_version: index.format_version,
        config_fingerprint: index.config_fingerprint.clone(),
        record_count: index.records.len(),
    };
    let mut out = serde_json::to_string(&header).expect("header serializes");
    out.push('\n');
    for r in &index.records {
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    out
}

/// Writes the index atomically: the target is replaced only once fully written.
pub fn save_index(index: &PoseIndex, path: impl AsRef<Path>) -> Result<(), IngestError> {
    write_atomic(path.as_ref(), index_to_string(index).as_bytes())
}

pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), IngestError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(path))?;
    tmp.write_all(bytes).map_err(io_err(path))?;
    tmp.flush().map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| IngestError::Io { path: path.display().to_string(), source: e.error })?;
    Ok(())
}

/// Loads an index and checks that it was built with `cfg`'s eligibility settings.
pub fn load_index(path: impl AsRef<Path>, cfg: &MatchConfig) -> Result<PoseIndex, IngestError> {
    let index = read_index(path)?;
    index.check_config(cfg)?;
    Ok(index)
}

/// Loads an index without checking its config fingerprint.
pub fn read_index(path: impl AsRef<Path>) -> Result<PoseIndex, IngestError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(io_err(path))?;
    parse_index(&bytes, &path.display().to_string())
}

pub fn parse_index(bytes: &[u8], origin: &str) -> Result<PoseIndex, IngestError> {
    let corrupt = |offset: usize, reason: String| IngestError::CorruptIndex {
        path: origin.to_string(),
        offset,
        reason,
    };
    let text = std::str::from_utf8(bytes)
        .map_err(|e| corrupt(e.valid_up_to(), "invalid UTF-8".into()))?;

    let mut offset = 0usize;
    let mut lines = text.split_inclusive('\n').map(|line| {
        let start = offset;
        offset += line.len();
        (start, line)
    });

    let (_, header_line) = lines.next().ok_or_else(|| corrupt(0, "empty file".into()))?;
    let header: IndexHeader = serde_json::from_str(header_line.trim_end())
        .map_err(|e| corrupt(e.column().saturating_sub(1), format!("bad header: {e}")))?;
    if header.format != INDEX_FORMAT_TAG {
        return Err(corrupt(0, format!("unknown format tag {:?}", header.format)));
    }
    if header.format_version != INDEX_FORMAT_VERSION {
        return Err(IngestError::VersionMismatch {
            found: header.format_version,
            expected: INDEX_FORMAT_VERSION,
        });
    }

    let mut records = Vec::with_capacity(header.record_count);
    let mut seen = HashSet::new();
    for (start, line) in lines {
        if !line.ends_with('\n') {
            return Err(corrupt(start + line.len(), "truncated record (missing newline)".into()));
        }
        let body = line.trim_end_matches('\n');
        let record: ImageRecord = serde_json::from_str(body)
            .map_err(|e| corrupt(start + e.column().saturating_sub(1), format!("bad record: {e}")))?;
        if record.eligible.len() != record.poses.len() {
            return Err(corrupt(start, "eligibility flags do not match pose count".into()));
        }
        if !seen.insert(record.image_id.clone()) {
            return Err(corrupt(start, format!("duplicate image id {:?}", record.image_id)));
        }
        records.push(record);
    }
    if records.len() != header.record_count {
        return Err(corrupt(
            bytes.len(),
            format!("header announces {} records, found {}", header.record_count, records.len()),
        ));
    }
    Ok(PoseIndex {
        records,
        config_fingerprint: header.config_fingerprint,
        format_version: header.format_version,
    })
}
