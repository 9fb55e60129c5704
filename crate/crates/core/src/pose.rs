//! Keypoint and pose types plus the pairwise pose distances.
//!
//! A pose is a fixed array of [`NUM_KEYPOINTS`] keypoints laid out in the
//! BODY_25 part map. Distances compare root-normalized keypoints by cosine
//! similarity, restricted to the keypoints detected in both poses.

use serde::{Deserialize, Serialize};

use crate::config::MatchConfig;

/// Number of keypoints in the BODY_25 part map.
pub const NUM_KEYPOINTS: usize = 25;

/// Distance assigned to pairs that cannot be compared.
pub const MAX_DIST: f64 = 2.0;

/// BODY_25 part indices.
pub mod part {
    pub const NOSE: usize = 0;
    pub const NECK: usize = 1;
    pub const R_SHOULDER: usize = 2;
    pub const R_ELBOW: usize = 3;
    pub const R_WRIST: usize = 4;
    pub const L_SHOULDER: usize = 5;
    pub const L_ELBOW: usize = 6;
    pub const L_WRIST: usize = 7;
    pub const MID_HIP: usize = 8;
    pub const R_HIP: usize = 9;
    pub const R_KNEE: usize = 10;
    pub const R_ANKLE: usize = 11;
    pub const L_HIP: usize = 12;
    pub const L_KNEE: usize = 13;
    pub const L_ANKLE: usize = 14;
    pub const R_EYE: usize = 15;
    pub const L_EYE: usize = 16;
    pub const R_EAR: usize = 17;
    pub const L_EAR: usize = 18;
    pub const L_BIG_TOE: usize = 19;
    pub const L_SMALL_TOE: usize = 20;
    pub const L_HEEL: usize = 21;
    pub const R_BIG_TOE: usize = 22;
    pub const R_SMALL_TOE: usize = 23;
    pub const R_HEEL: usize = 24;

    /// Root keypoint used for translation normalization.
    pub const ROOT: usize = NECK;

    pub const NAMES: [&str; super::NUM_KEYPOINTS] = [
        "Nose", "Neck", "RShoulder", "RElbow", "RWrist", "LShoulder", "LElbow", "LWrist",
        "MidHip", "RHip", "RKnee", "RAnkle", "LHip", "LKnee", "LAnkle", "REye", "LEye", "REar",
        "LEar", "LBigToe", "LSmallToe", "LHeel", "RBigToe", "RSmallToe", "RHeel",
    ];
}

/// Index of the side-swapped counterpart of every part (self for nose, neck, mid-hip).
pub const MIRROR_INDEX: [usize; NUM_KEYPOINTS] = [
    0, 1, 5, 6, 7, 2, 3, 4, 8, 12, 13, 14, 9, 10, 11, 16, 15, 18, 17, 22, 23, 24, 19, 20, 21,
];

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Keypoint {
    pub x: f64,
    pub y: f64,
    pub confidence: f64,
}

impl Keypoint {
    pub const UNDETECTED: Keypoint = Keypoint { x: 0.0, y: 0.0, confidence: 0.0 };

    pub fn new(x: f64, y: f64, confidence: f64) -> Self {
        Self { x, y, confidence }
    }

    /// Detection is a strict comparison against the threshold.
    #[inline]
    pub fn is_detected(&self, threshold: f64) -> bool {
        self.confidence > threshold
    }
}

/// One detected human figure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    /// Ordinal of the pose within its image.
    pub pose_id: usize,
    pub keypoints: [Keypoint; NUM_KEYPOINTS],
}

impl Pose {
    pub fn new(pose_id: usize, keypoints: [Keypoint; NUM_KEYPOINTS]) -> Self {
        Self { pose_id, keypoints }
    }

    /// A pose with every keypoint undetected.
    pub fn empty(pose_id: usize) -> Self {
        Self { pose_id, keypoints: [Keypoint::UNDETECTED; NUM_KEYPOINTS] }
    }

    /// Builds a fully detected pose (confidence 1) from coordinates.
    pub fn from_points(pose_id: usize, points: &[(f64, f64); NUM_KEYPOINTS]) -> Self {
        let mut keypoints = [Keypoint::UNDETECTED; NUM_KEYPOINTS];
        for (kp, &(x, y)) in keypoints.iter_mut().zip(points) {
            *kp = Keypoint::new(x, y, 1.0);
        }
        Self { pose_id, keypoints }
    }

    #[inline]
    pub fn is_detected(&self, i: usize, threshold: f64) -> bool {
        self.keypoints[i].is_detected(threshold)
    }

    #[inline]
    pub fn point(&self, i: usize) -> (f64, f64) {
        (self.keypoints[i].x, self.keypoints[i].y)
    }

    pub fn detected_count(&self, threshold: f64) -> usize {
        self.keypoints.iter().filter(|k| k.is_detected(threshold)).count()
    }

    /// Marks keypoint `i` undetected, resetting it to the input-format convention.
    pub fn drop_keypoint(&mut self, i: usize) {
        self.keypoints[i] = Keypoint::UNDETECTED;
    }

    /// A pose takes part in fast matching only when its root is detected.
    pub fn is_eligible(&self, threshold: f64) -> bool {
        self.is_detected(part::ROOT, threshold)
    }
}

/// Mirror-invariant distance between two poses.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoseDistance {
    pub value: f64,
    /// Whether the mirrored database pose achieved the minimum.
    pub flipped: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum PoseError {
    #[error("root keypoint (neck) is not detected")]
    RootUndetected,
}

/// Set of keypoint indices detected in both poses, as a bitmask.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct IndexSet(u32);

impl IndexSet {
    pub const FULL: IndexSet = IndexSet((1 << NUM_KEYPOINTS) - 1);

    pub fn empty() -> Self {
        Self(0)
    }

    pub fn from_indices(indices: impl IntoIterator<Item = usize>) -> Self {
        let mut bits = 0u32;
        for i in indices {
            assert!(i < NUM_KEYPOINTS, "keypoint index {i} out of range");
            bits |= 1 << i;
        }
        Self(bits)
    }

    #[inline]
    pub fn contains(&self, i: usize) -> bool {
        i < NUM_KEYPOINTS && self.0 & (1 << i) != 0
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.0.count_ones() as usize
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        (0..NUM_KEYPOINTS).filter(move |&i| self.contains(i))
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.iter().collect()
    }
}

fn detected_mask(pose: &Pose, threshold: f64) -> u32 {
    let mut bits = 0u32;
    for (i, kp) in pose.keypoints.iter().enumerate() {
        if kp.is_detected(threshold) {
            bits |= 1 << i;
        }
    }
    bits
}

/// Indices detected in both `r` and `s`.
pub fn common_indices(r: &Pose, s: &Pose, cfg: &MatchConfig) -> IndexSet {
    IndexSet(detected_mask(r, cfg.detection_threshold) & detected_mask(s, cfg.detection_threshold))
}

/// Flattened `[x0, y0, x1, y1, ...]` coordinates relative to the root, zero outside `idx`.
pub fn root_normalize(
    r: &Pose,
    idx: IndexSet,
    cfg: &MatchConfig,
) -> Result<[f64; 2 * NUM_KEYPOINTS], PoseError> {
    if !r.is_detected(part::ROOT, cfg.detection_threshold) {
        return Err(PoseError::RootUndetected);
    }
    let (rx, ry) = r.point(part::ROOT);
    let mut out = [0.0; 2 * NUM_KEYPOINTS];
    for i in idx.iter() {
        out[2 * i] = r.keypoints[i].x - rx;
        out[2 * i + 1] = r.keypoints[i].y - ry;
    }
    Ok(out)
}

/// Cosine pose distance `1 - <r', s'> / (|r'| |s'|)` over the common keypoints.
///
/// Returns [`MAX_DIST`] when either root is missing, fewer than two keypoints
/// are shared, or a normalized vector vanishes.
pub fn pose_distance_p(r: &Pose, s: &Pose, cfg: &MatchConfig) -> f64 {
    cosine_distance(r, s, cfg, false)
}

/// Pose distance, optionally against `s` mirrored without materializing the mirrored pose.
fn cosine_distance(r: &Pose, s: &Pose, cfg: &MatchConfig, mirror: bool) -> f64 {
    let th = cfg.detection_threshold;
    let r_root = &r.keypoints[part::ROOT];
    let s_root = &s.keypoints[part::ROOT];
    if !r_root.is_detected(th) || !s_root.is_detected(th) {
        return MAX_DIST;
    }
    let sign = if mirror { -1.0 } else { 1.0 };
    let (mut dot, mut nr, mut ns) = (0.0, 0.0, 0.0);
    let mut shared = 0usize;
    for i in 0..NUM_KEYPOINTS {
        let a = &r.keypoints[i];
        let b = &s.keypoints[if mirror { MIRROR_INDEX[i] } else { i }];
        if !a.is_detected(th) || !b.is_detected(th) {
            continue;
        }
        shared += 1;
        let (ax, ay) = (a.x - r_root.x, a.y - r_root.y);
        let (bx, by) = (sign * (b.x - s_root.x), b.y - s_root.y);
        dot += ax * bx + ay * by;
        nr += ax * ax + ay * ay;
        ns += bx * bx + by * by;
    }
    if shared < 2 || nr == 0.0 || ns == 0.0 {
        return MAX_DIST;
    }
    let cos = (dot / (nr.sqrt() * ns.sqrt())).clamp(-1.0, 1.0);
    1.0 - cos
}

/// Mirrors a pose around the vertical axis: detected x-coordinates are negated
/// and left/right parts exchange slots.
pub fn mirror_pose(s: &Pose) -> Pose {
    let mut keypoints = [Keypoint::UNDETECTED; NUM_KEYPOINTS];
    for (i, kp) in s.keypoints.iter().enumerate() {
        // keep undetected (0, 0) slots free of negative zeros
        let x = if kp.x == 0.0 { 0.0 } else { -kp.x };
        keypoints[MIRROR_INDEX[i]] = Keypoint::new(x, kp.y, kp.confidence);
    }
    Pose { pose_id: s.pose_id, keypoints }
}

/// Mirror-invariant distance `min(p(r, s), p(r, mirror(s)))`; ties keep the unflipped branch.
pub fn pose_distance_q(r: &Pose, s: &Pose, cfg: &MatchConfig) -> PoseDistance {
    let direct = cosine_distance(r, s, cfg, false);
    if !cfg.flip_enabled {
        return PoseDistance { value: direct, flipped: false };
    }
    let mirrored = cosine_distance(r, s, cfg, true);
    if mirrored < direct {
        PoseDistance { value: mirrored, flipped: true }
    } else {
        PoseDistance { value: direct, flipped: false }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> MatchConfig {
        MatchConfig::default()
    }

    fn sparse(points: &[(usize, f64, f64)]) -> Pose {
        let mut pose = Pose::empty(0);
        for &(i, x, y) in points {
            pose.keypoints[i] = Keypoint::new(x, y, 0.9);
        }
        pose
    }

    #[test]
    fn mirror_index_is_involution() {
        for i in 0..NUM_KEYPOINTS {
            assert_eq!(MIRROR_INDEX[MIRROR_INDEX[i]], i);
        }
        for i in [part::NOSE, part::NECK, part::MID_HIP] {
            assert_eq!(MIRROR_INDEX[i], i);
        }
        assert_eq!(MIRROR_INDEX[part::L_WRIST], part::R_WRIST);
        assert_eq!(MIRROR_INDEX[part::L_HEEL], part::R_HEEL);
    }

    #[test]
    fn common_indices_examples() {
        let full = Pose::from_points(0, &[(1.0, 2.0); NUM_KEYPOINTS]);
        assert_eq!(common_indices(&full, &full, &cfg()), IndexSet::FULL);

        let r = sparse(&[(0, 1.0, 1.0), (1, 2.0, 2.0), (2, 3.0, 3.0)]);
        let s = sparse(&[(1, 1.0, 1.0), (2, 2.0, 2.0), (3, 3.0, 3.0)]);
        assert_eq!(common_indices(&r, &s, &cfg()).to_vec(), vec![1, 2]);

        let r = sparse(&[(0, 1.0, 1.0)]);
        let s = sparse(&[(1, 1.0, 1.0)]);
        assert!(common_indices(&r, &s, &cfg()).is_empty());
    }

    #[test]
    fn detection_threshold_is_strict() {
        let mut c = cfg();
        c.detection_threshold = 0.5;
        let r = sparse(&[(0, 1.0, 1.0)]);
        assert!(!r.is_detected(0, 0.9));
        assert!(r.is_detected(0, c.detection_threshold));
    }

    #[test]
    fn root_normalize_examples() {
        let w = part::R_WRIST;
        let r = sparse(&[(part::NECK, 10.0, 10.0), (w, 13.0, 14.0)]);
        let idx = IndexSet::from_indices([part::NECK, w]);
        let out = root_normalize(&r, idx, &cfg()).unwrap();
        assert_eq!((out[2], out[3]), (0.0, 0.0));
        assert_eq!((out[2 * w], out[2 * w + 1]), (3.0, 4.0));

        let shifted = sparse(&[(part::NECK, 110.0, 60.0), (w, 113.0, 64.0)]);
        assert_eq!(root_normalize(&shifted, idx, &cfg()).unwrap(), out);

        let only_neck = IndexSet::from_indices([part::NECK]);
        let masked = root_normalize(&r, only_neck, &cfg()).unwrap();
        assert!(masked.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn root_normalize_requires_neck() {
        let r = sparse(&[(part::NOSE, 1.0, 1.0)]);
        assert_eq!(
            root_normalize(&r, IndexSet::FULL, &cfg()),
            Err(PoseError::RootUndetected)
        );
    }

    #[test]
    fn p_on_orthogonal_and_antiparallel() {
        let w = part::R_WRIST;
        let r = sparse(&[(part::NECK, 0.0, 0.0), (w, 1.0, 0.0)]);
        let s = sparse(&[(part::NECK, 0.0, 0.0), (w, 0.0, 1.0)]);
        let anti = sparse(&[(part::NECK, 0.0, 0.0), (w, -1.0, 0.0)]);
        assert_eq!(pose_distance_p(&r, &r, &cfg()), 0.0);
        assert!((pose_distance_p(&r, &s, &cfg()) - 1.0).abs() < 1e-15);
        assert!((pose_distance_p(&r, &anti, &cfg()) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn p_degenerate_cases_return_sentinel() {
        let w = part::R_WRIST;
        let no_neck = sparse(&[(part::NOSE, 0.0, 0.0), (w, 1.0, 0.0)]);
        let ok = sparse(&[(part::NECK, 0.0, 0.0), (w, 1.0, 0.0), (part::NOSE, 0.0, -1.0)]);
        assert_eq!(pose_distance_p(&no_neck, &ok, &cfg()), MAX_DIST);
        // only the neck shared
        let one = sparse(&[(part::NECK, 0.0, 0.0), (part::L_ANKLE, 3.0, 3.0)]);
        assert_eq!(pose_distance_p(&one, &ok, &cfg()), MAX_DIST);
        // zero norm: wrist sits on the neck
        let flat = sparse(&[(part::NECK, 5.0, 5.0), (w, 5.0, 5.0)]);
        assert_eq!(pose_distance_p(&flat, &ok, &cfg()), MAX_DIST);
    }

    #[test]
    fn mirror_examples() {
        let s = sparse(&[(part::NECK, 3.0, 1.0), (part::MID_HIP, 3.0, 9.0)]);
        let m = mirror_pose(&s);
        assert_eq!(m.point(part::NECK), (-3.0, 1.0));
        assert_eq!(m.point(part::MID_HIP), (-3.0, 9.0));

        let s = sparse(&[(part::L_WRIST, 5.0, 7.0)]);
        let m = mirror_pose(&s);
        assert_eq!(m.point(part::R_WRIST), (-5.0, 7.0));
        assert!(!m.is_detected(part::L_WRIST, 0.0));
        assert_eq!(m.keypoints[part::R_WRIST].confidence, 0.9);
        assert_eq!(mirror_pose(&m), s);
    }

    #[test]
    fn q_identity_and_mirror() {
        let r = sparse(&[
            (part::NECK, 0.0, 0.0),
            (part::R_WRIST, -4.0, 3.0),
            (part::L_KNEE, 2.0, 9.0),
            (part::NOSE, 0.5, -2.0),
        ]);
        let same = pose_distance_q(&r, &r, &cfg());
        assert_eq!(same, PoseDistance { value: 0.0, flipped: false });
        let mirrored = pose_distance_q(&r, &mirror_pose(&r), &cfg());
        assert!(mirrored.value.abs() < 1e-15);
        assert!(mirrored.flipped);

        let mut no_flip = cfg();
        no_flip.flip_enabled = false;
        let d = pose_distance_q(&r, &mirror_pose(&r), &no_flip);
        assert!(!d.flipped);
        assert_eq!(d.value, pose_distance_p(&r, &mirror_pose(&r), &no_flip));
    }
}
