//! Image-level distances and the exhaustive shortlist scan.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::MatchConfig;
use crate::ingest::PoseIndex;
use crate::pose::{pose_distance_q, Pose};

/// An artwork and the poses detected in it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImageRecord {
    pub image_id: String,
    /// Where the poses came from (keypoint file path or generator tag).
    pub source_path: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_path: Option<String>,
    pub poses: Vec<Pose>,
    /// Per-pose eligibility for fast matching, index-aligned with `poses`.
    pub eligible: Vec<bool>,
}

impl ImageRecord {
    pub fn new(
        image_id: impl Into<String>,
        source_path: impl Into<String>,
        poses: Vec<Pose>,
        cfg: &MatchConfig,
    ) -> Self {
        let eligible = poses.iter().map(|p| p.is_eligible(cfg.detection_threshold)).collect();
        Self {
            image_id: image_id.into(),
            source_path: source_path.into(),
            image_path: None,
            poses,
            eligible,
        }
    }

    pub fn with_image_path(mut self, path: Option<String>) -> Self {
        self.image_path = path;
        self
    }

    pub fn eligible_poses(&self) -> impl Iterator<Item = &Pose> + '_ {
        self.poses.iter().zip(&self.eligible).filter(|(_, &ok)| ok).map(|(p, _)| p)
    }

    pub fn eligible_count(&self) -> usize {
        self.eligible.iter().filter(|&&ok| ok).count()
    }

    pub fn pose(&self, pose_id: usize) -> Option<&Pose> {
        self.poses.iter().find(|p| p.pose_id == pose_id)
    }
}

/// How per-pose distances combine into an image distance.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImageMetric {
    /// Best single pose pair.
    Min,
    /// Clipped sum over query poses.
    #[default]
    T,
}

impl fmt::Display for ImageMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ImageMetric::Min => "min",
            ImageMetric::T => "t",
        })
    }
}

impl FromStr for ImageMetric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "min" => Ok(ImageMetric::Min),
            "t" => Ok(ImageMetric::T),
            other => Err(format!("unknown metric {other:?} (expected min or t)")),
        }
    }
}

/// A tentative pose correspondence forwarded to verification.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub query_pose_id: usize,
    pub db_pose_id: usize,
    pub q_value: f64,
    pub flipped: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShortlistEntry {
    pub image_id: String,
    pub image_distance: f64,
    pub candidates: Vec<Candidate>,
}

/// Pairwise distances between the eligible poses of two images.
struct PairTable {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    candidates: Vec<Candidate>,
}

impl PairTable {
    fn build(q_img: &ImageRecord, d_img: &ImageRecord, cfg: &MatchConfig) -> Self {
        let query: Vec<&Pose> = q_img.eligible_poses().collect();
        let db: Vec<&Pose> = d_img.eligible_poses().collect();
        let mut values = Vec::with_capacity(query.len() * db.len());
        let mut candidates = Vec::new();
        for r in &query {
            for s in &db {
                let d = pose_distance_q(r, s, cfg);
                values.push(d.value);
                if d.value <= cfg.pose_dist_max {
                    candidates.push(Candidate {
                        query_pose_id: r.pose_id,
                        db_pose_id: s.pose_id,
                        q_value: d.value,
                        flipped: d.flipped,
                    });
                }
            }
        }
        Self { rows: query.len(), cols: db.len(), values, candidates }
    }

    fn dist_min(&self) -> f64 {
        if self.rows == 0 || self.cols == 0 {
            return f64::INFINITY;
        }
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    fn dist_t(&self, t: f64) -> f64 {
        if self.rows == 0 {
            return f64::INFINITY;
        }
        if self.cols == 0 {
            return self.rows as f64 * t;
        }
        self.values
            .chunks(self.cols)
            .map(|row| row.iter().copied().fold(t, f64::min))
            .sum()
    }

    fn distance(&self, metric: ImageMetric, cfg: &MatchConfig) -> f64 {
        match metric {
            ImageMetric::Min => self.dist_min(),
            ImageMetric::T => self.dist_t(cfg.t),
        }
    }
}

/// Minimum mirror-invariant distance over all cross pose pairs; `+inf` when
/// either image has no eligible pose.
pub fn image_distance_min(q_img: &ImageRecord, d_img: &ImageRecord, cfg: &MatchConfig) -> f64 {
    PairTable::build(q_img, d_img, cfg).dist_min()
}

/// Sum over query poses of `min(t, best distance to a database pose)`.
///
/// The first argument is the query. A database image without eligible poses
/// costs `t` per query pose; a query without eligible poses yields `+inf`.
pub fn image_distance_t(q_img: &ImageRecord, d_img: &ImageRecord, cfg: &MatchConfig) -> f64 {
    PairTable::build(q_img, d_img, cfg).dist_t(cfg.t)
}

pub fn image_distance(
    q_img: &ImageRecord,
    d_img: &ImageRecord,
    cfg: &MatchConfig,
    metric: ImageMetric,
) -> f64 {
    PairTable::build(q_img, d_img, cfg).distance(metric, cfg)
}

/// Order of the shortlist: ascending distance, then image id.
pub fn shortlist_order(a: &ShortlistEntry, b: &ShortlistEntry) -> Ordering {
    a.image_distance
        .total_cmp(&b.image_distance)
        .then_with(|| a.image_id.cmp(&b.image_id))
}

/// Scores every database image against the query and keeps the best `shortlist_len`.
///
/// Work is spread over the current rayon pool; the result does not depend on
/// the number of workers. A record sharing the query's image id is skipped.
pub fn scan_and_shortlist(
    q_img: &ImageRecord,
    index: &PoseIndex,
    cfg: &MatchConfig,
    metric: ImageMetric,
) -> Vec<ShortlistEntry> {
    scan_records(q_img, index.records(), cfg, metric)
}

pub fn scan_records(
    q_img: &ImageRecord,
    records: &[ImageRecord],
    cfg: &MatchConfig,
    metric: ImageMetric,
) -> Vec<ShortlistEntry> {
    let mut entries: Vec<ShortlistEntry> = records
        .par_iter()
        .filter(|d| d.image_id != q_img.image_id)
        .map(|d| {
            let table = PairTable::build(q_img, d, cfg);
            ShortlistEntry {
                image_id: d.image_id.clone(),
                image_distance: table.distance(metric, cfg),
                candidates: table.candidates,
            }
        })
        .collect();
    entries.sort_by(shortlist_order);
    entries.truncate(cfg.shortlist_len);
    entries
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pose::{part, Keypoint};

    fn cfg() -> MatchConfig {
        MatchConfig::default()
    }

    /// Neck at the origin plus one wrist direction.
    fn arrow(id: usize, angle: f64) -> Pose {
        let mut p = Pose::empty(id);
        p.keypoints[part::NECK] = Keypoint::new(0.0, 0.0, 1.0);
        p.keypoints[part::MID_HIP] = Keypoint::new(0.0, 10.0, 1.0);
        p.keypoints[part::R_WRIST] = Keypoint::new(10.0 * angle.cos(), 10.0 * angle.sin(), 1.0);
        p
    }

    fn shifted(p: &Pose, dx: f64, dy: f64) -> Pose {
        let mut out = p.clone();
        for kp in out.keypoints.iter_mut().filter(|k| k.confidence > 0.0) {
            kp.x += dx;
            kp.y += dy;
        }
        out
    }

    fn image(id: &str, poses: Vec<Pose>) -> ImageRecord {
        ImageRecord::new(id, "test", poses, &cfg())
    }

    #[test]
    fn min_is_translation_invariant() {
        let a = arrow(0, 0.3);
        let q = image("q", vec![a.clone()]);
        let d = image("d", vec![shifted(&a, 50.0, 50.0)]);
        assert_eq!(image_distance_min(&q, &d, &cfg()), 0.0);
    }

    #[test]
    fn empty_images_rank_last() {
        let q = image("q", vec![arrow(0, 0.1)]);
        let empty = image("e", vec![]);
        assert_eq!(image_distance_min(&q, &empty, &cfg()), f64::INFINITY);
        assert_eq!(image_distance_min(&empty, &q, &cfg()), f64::INFINITY);
        assert_eq!(image_distance_t(&empty, &q, &cfg()), f64::INFINITY);
        assert!((image_distance_t(&q, &empty, &cfg()) - 0.05).abs() < 1e-15);
    }

    #[test]
    fn ineligible_poses_are_ignored() {
        let mut headless = arrow(1, 2.0);
        headless.drop_keypoint(part::NECK);
        let q = image("q", vec![arrow(0, 0.2), headless]);
        assert_eq!(q.eligible, vec![true, false]);
        let d = image("d", vec![arrow(0, 0.2)]);
        assert_eq!(image_distance_t(&q, &d, &cfg()), 0.0);
    }

    #[test]
    fn t_single_pose_is_clipped() {
        let q = image("q", vec![arrow(0, 0.0)]);
        let d = image("d", vec![arrow(0, 1.2)]);
        let qd = pose_distance_q(&q.poses[0], &d.poses[0], &cfg()).value;
        let expected = qd.min(0.05);
        assert_eq!(image_distance_t(&q, &d, &cfg()), expected);
    }

    #[test]
    fn t_is_asymmetric() {
        let a = arrow(0, 0.0);
        let mut b = arrow(1, 0.0);
        b.keypoints[part::MID_HIP].y = -10.0;
        let one = image("one", vec![a.clone()]);
        let two = image("two", vec![a, b]);
        // one query pose finds its twin
        assert_eq!(image_distance_t(&one, &two, &cfg()), 0.0);
        // the second query pose has no partner and pays t
        assert!((image_distance_t(&two, &one, &cfg()) - 0.05).abs() < 1e-15);
    }

    #[test]
    fn shortlist_orders_and_breaks_ties() {
        let cfg = cfg();
        let q = image("q", vec![arrow(0, 0.0)]);
        let records = vec![
            image("b", vec![arrow(0, 0.2)]),
            image("a", vec![arrow(0, 0.1)]),
            image("c", vec![arrow(0, 0.3)]),
            image("q", vec![arrow(0, 0.0)]),
        ];
        let ids: Vec<_> = scan_records(&q, &records, &cfg, ImageMetric::Min)
            .into_iter()
            .map(|e| e.image_id)
            .collect();
        assert_eq!(ids, ["a", "b", "c"]);

        let twins = vec![image("z", vec![arrow(0, 0.1)]), image("y", vec![arrow(0, 0.1)])];
        let ids: Vec<_> = scan_records(&q, &twins, &cfg, ImageMetric::Min)
            .into_iter()
            .map(|e| e.image_id)
            .collect();
        assert_eq!(ids, ["y", "z"]);
    }

    #[test]
    fn candidates_respect_cutoff() {
        let cfg = cfg();
        let q = image("q", vec![arrow(0, 0.0), arrow(1, 1.5)]);
        let d = image("d", vec![arrow(0, 0.01), arrow(1, 3.0)]);
        let entries = scan_records(&q, std::slice::from_ref(&d), &cfg, ImageMetric::T);
        let cands = &entries[0].candidates;
        assert!(!cands.is_empty());
        assert!(cands.iter().all(|c| c.q_value <= cfg.pose_dist_max));
        assert!(cands.iter().any(|c| c.query_pose_id == 0 && c.db_pose_id == 0));
    }

    #[test]
    fn shortlist_truncates() {
        let mut cfg = cfg();
        cfg.shortlist_len = 2;
        let q = image("q", vec![arrow(0, 0.0)]);
        let records: Vec<_> =
            (0..5).map(|i| image(&format!("r{i}"), vec![arrow(0, i as f64 * 0.1)])).collect();
        let out = scan_records(&q, &records, &cfg, ImageMetric::T);
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].image_id, "r0");
    }

    #[test]
    fn metric_parses() {
        assert_eq!("min".parse::<ImageMetric>().unwrap(), ImageMetric::Min);
        assert_eq!("t".parse::<ImageMetric>().unwrap(), ImageMetric::T);
        assert!("max".parse::<ImageMetric>().is_err());
    }
}
