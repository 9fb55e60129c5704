//! Canonical skeleton used to estimate how large a pose is in pixels.
//!
//! The skeleton is a plain text table, see `data/body25_skeleton.txt`:
//!
//! ```text
//! format_version 1
//! # part_a part_b length
//! 1 8 1.0
//! 1 2 0.36
//! ```
//!
//! Lengths are normalized so the neck to mid-hip bone has length 1.

use std::path::Path;
use std::str::FromStr;

use crate::pose::{part, NUM_KEYPOINTS};

pub const SKELETON_FORMAT_VERSION: u32 = 1;

const BODY25_TABLE: &str = include_str!("../data/body25_skeleton.txt");

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bone {
    pub a: usize,
    pub b: usize,
    pub length: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CanonicalSkeleton {
    bones: Vec<Bone>,
}

#[derive(Debug, thiserror::Error)]
pub enum SkeletonError {
    #[error("skeleton line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("skeleton format_version {found} is not supported (expected {SKELETON_FORMAT_VERSION})")]
    Version { found: u32 },
    #[error("reading skeleton {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CanonicalSkeleton {
    /// The bundled BODY_25 skeleton.
    pub fn body25() -> Self {
        BODY25_TABLE.parse().expect("bundled skeleton table is valid")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SkeletonError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|source| SkeletonError::Io { path: path.display().to_string(), source })?;
        text.parse()
    }

    pub fn new(bones: Vec<Bone>) -> Result<Self, SkeletonError> {
        for (n, bone) in bones.iter().enumerate() {
            check_bone(bone).map_err(|reason| SkeletonError::Parse { line: n + 1, reason })?;
        }
        let torso = bones
            .iter()
            .find(|b| is_torso(b))
            .ok_or_else(|| SkeletonError::Parse { line: 0, reason: "no neck to mid-hip bone".into() })?
            .length;
        let bones = bones.into_iter().map(|b| Bone { length: b.length / torso, ..b }).collect();
        Ok(Self { bones })
    }

    pub fn bones(&self) -> &[Bone] {
        &self.bones
    }

    pub fn length(&self, a: usize, b: usize) -> Option<f64> {
        self.bones
            .iter()
            .find(|bone| (bone.a, bone.b) == (a, b) || (bone.a, bone.b) == (b, a))
            .map(|bone| bone.length)
    }
}

fn is_torso(b: &Bone) -> bool {
    (b.a, b.b) == (part::NECK, part::MID_HIP) || (b.a, b.b) == (part::MID_HIP, part::NECK)
}

fn check_bone(b: &Bone) -> Result<(), String> {
    if b.a >= NUM_KEYPOINTS || b.b >= NUM_KEYPOINTS {
        return Err(format!("part index out of range in bone {}-{}", b.a, b.b));
    }
    if b.a == b.b {
        return Err(format!("bone {}-{} connects a part to itself", b.a, b.b));
    }
    if !(b.length.is_finite() && b.length > 0.0) {
        return Err(format!("bone {}-{} has non-positive length {}", b.a, b.b, b.length));
    }
    Ok(())
}

impl FromStr for CanonicalSkeleton {
    type Err = SkeletonError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut version = None;
        let mut bones = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line_no = n + 1;
            let err = |reason: String| SkeletonError::Parse { line: line_no, reason };
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if version.is_none() {
                match fields.as_slice() {
                    ["format_version", v] => {
                        let v: u32 = v.parse().map_err(|_| err(format!("bad version {v:?}")))?;
                        if v != SKELETON_FORMAT_VERSION {
                            return Err(SkeletonError::Version { found: v });
                        }
                        version = Some(v);
                        continue;
                    }
                    _ => return Err(err("expected `format_version <n>` header".into())),
                }
            }
            let [a, b, len] = fields.as_slice() else {
                return Err(err(format!("expected 3 columns, found {}", fields.len())));
            };
            let bone = Bone {
                a: a.parse().map_err(|_| err(format!("bad part index {a:?}")))?,
                b: b.parse().map_err(|_| err(format!("bad part index {b:?}")))?,
                length: len.parse().map_err(|_| err(format!("bad length {len:?}")))?,
            };
            check_bone(&bone).map_err(err)?;
            bones.push(bone);
        }
        if version.is_none() {
            return Err(SkeletonError::Parse { line: 0, reason: "missing format_version header".into() });
        }
        Self::new(bones)
    }
}
