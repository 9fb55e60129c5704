//! Spatial verification of tentative pose correspondences.
//!
//! Every pose pair from the shortlist is aligned with a scale, translation and
//! optional horizontal flip mapping database coordinates onto the query image.
//! Hypotheses come from all pairs of shared keypoints, the best one is refit on
//! its inliers, and a pair validates when enough keypoints agree. The image
//! score is the largest number of keypoints a single transform explains over
//! all validated pairs.

use std::cmp::Ordering;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::config::MatchConfig;
use crate::fast_match::{Candidate, ImageRecord, ShortlistEntry};
use crate::pose::{part, Pose, MIRROR_INDEX, NUM_KEYPOINTS};
use crate::skeleton::CanonicalSkeleton;

pub type Point = (f64, f64);

/// `x_q = scale * flip(x_d) + translation`, where `flip` negates x when `flipped`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimilarityTransform {
    pub scale: f64,
    pub translation: Point,
    pub flipped: bool,
}

impl SimilarityTransform {
    pub fn identity() -> Self {
        Self { scale: 1.0, translation: (0.0, 0.0), flipped: false }
    }

    #[inline]
    pub fn apply(&self, (x, y): Point) -> Point {
        let x = if self.flipped { -x } else { x };
        (self.scale * x + self.translation.0, self.scale * y + self.translation.1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum VerifyError {
    #[error("degenerate sample: transform scale is undefined or non-positive")]
    DegenerateSample,
    #[error("at least two correspondences are required")]
    TooFewCorrespondences,
}

/// Angle between the neck to mid-hip vector and the downward image axis.
///
/// Positive when the mid-hip lies to the right of the neck; `None` when either
/// endpoint is missing.
pub fn torso_angle(r: &Pose, cfg: &MatchConfig) -> Option<f64> {
    let th = cfg.detection_threshold;
    if !r.is_detected(part::NECK, th) || !r.is_detected(part::MID_HIP, th) {
        return None;
    }
    let (nx, ny) = r.point(part::NECK);
    let (hx, hy) = r.point(part::MID_HIP);
    let (dx, dy) = (hx - nx, hy - ny);
    if dx == 0.0 && dy == 0.0 {
        return None;
    }
    Some(dx.atan2(dy))
}

/// Absolute angular difference wrapped to `[0, pi]`.
fn angle_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    if d > PI {
        2.0 * PI - d
    } else {
        d
    }
}

/// Rejects pose pairs whose torsos point in clearly different directions.
/// Pairs with an undefined torso always pass.
pub fn torso_prefilter(qr: &Pose, ds: &Pose, flipped: bool, cfg: &MatchConfig) -> bool {
    match (torso_angle(qr, cfg), torso_angle(ds, cfg)) {
        (Some(a), Some(b)) => {
            let b = if flipped { -b } else { b };
            angle_gap(a, b) <= cfg.torso_angle_max
        }
        _ => true,
    }
}

/// Least-squares scale and translation (for a fixed flip) mapping database
/// points onto query points. Correspondences are `(query_point, db_point)`.
pub fn estimate_transform_ls(
    corr: &[(Point, Point)],
    flipped: bool,
) -> Result<SimilarityTransform, VerifyError> {
    if corr.len() < 2 {
        return Err(VerifyError::TooFewCorrespondences);
    }
    let sign = if flipped { -1.0 } else { 1.0 };
    let n = corr.len() as f64;
    let (mut qx, mut qy, mut dx, mut dy) = (0.0, 0.0, 0.0, 0.0);
    for &((x, y), (u, v)) in corr {
        qx += x;
        qy += y;
        dx += sign * u;
        dy += v;
    }
    let (qx, qy, dx, dy) = (qx / n, qy / n, dx / n, dy / n);
    let (mut num, mut den) = (0.0, 0.0);
    for &((x, y), (u, v)) in corr {
        let (cu, cv) = (sign * u - dx, v - dy);
        num += cu * (x - qx) + cv * (y - qy);
        den += cu * cu + cv * cv;
    }
    if den == 0.0 {
        return Err(VerifyError::DegenerateSample);
    }
    let scale = num / den;
    if !(scale.is_finite() && scale > 0.0) {
        return Err(VerifyError::DegenerateSample);
    }
    Ok(SimilarityTransform {
        scale,
        translation: (qx - scale * dx, qy - scale * dy),
        flipped,
    })
}

fn squared_error(t: &SimilarityTransform, corr: &[(Point, Point)]) -> f64 {
    corr.iter()
        .map(|&(q, d)| {
            let (x, y) = t.apply(d);
            (x - q.0).powi(2) + (y - q.1).powi(2)
        })
        .sum()
}

/// Median ratio of observed to canonical bone lengths over fully detected bones.
/// Even counts take the lower median.
pub fn relative_pose_size(r: &Pose, skel: &CanonicalSkeleton, cfg: &MatchConfig) -> Option<f64> {
    let th = cfg.detection_threshold;
    let mut ratios: Vec<f64> = skel
        .bones()
        .iter()
        .filter(|b| r.is_detected(b.a, th) && r.is_detected(b.b, th))
        .map(|b| {
            let (ax, ay) = r.point(b.a);
            let (bx, by) = r.point(b.b);
            (ax - bx).hypot(ay - by) / b.length
        })
        .collect();
    if ratios.is_empty() {
        return None;
    }
    ratios.sort_by(f64::total_cmp);
    let median = ratios[(ratios.len() - 1) / 2];
    (median > 0.0).then_some(median)
}

/// Database keypoint slot paired with query slot `i` under a flip hypothesis.
///
/// A mirrored figure has its left and right parts exchanged, so a flipped
/// transform pairs each query part with the database part of the opposite side.
#[inline]
fn db_slot(i: usize, flipped: bool) -> usize {
    if flipped {
        MIRROR_INDEX[i]
    } else {
        i
    }
}

/// Query-side indices whose counterpart is detected in `ds` under the given flip.
fn shared_slots(qr: &Pose, ds: &Pose, flipped: bool, th: f64) -> Vec<usize> {
    (0..NUM_KEYPOINTS)
        .filter(|&i| qr.is_detected(i, th) && ds.is_detected(db_slot(i, flipped), th))
        .collect()
}

/// Inliers of `t` on the pose pair, as query-side indices and total residual.
pub fn inliers_under(
    t: &SimilarityTransform,
    qr: &Pose,
    ds: &Pose,
    radius: f64,
    cfg: &MatchConfig,
) -> (Vec<usize>, f64) {
    let mut inliers = Vec::new();
    let mut residual = 0.0;
    for i in shared_slots(qr, ds, t.flipped, cfg.detection_threshold) {
        let (x, y) = t.apply(ds.point(db_slot(i, t.flipped)));
        let (qx, qy) = qr.point(i);
        let r = (x - qx).hypot(y - qy);
        if r <= radius {
            inliers.push(i);
            residual += r;
        }
    }
    (inliers, residual)
}

/// Outcome of verifying one pose pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairVerification {
    pub transform: SimilarityTransform,
    /// Query-side keypoint indices consistent with the transform.
    pub inliers: Vec<usize>,
    pub residual: f64,
    /// Inlier radius in query pixels.
    pub radius: f64,
}

impl PairVerification {
    pub fn inlier_count(&self) -> usize {
        self.inliers.len()
    }
}

/// Inlier radius for a query pose: the configured factor times its relative size.
pub fn inlier_radius(qr: &Pose, skel: &CanonicalSkeleton, cfg: &MatchConfig) -> Option<f64> {
    relative_pose_size(qr, skel, cfg).map(|size| cfg.inlier_dist_factor * size)
}

struct Hypothesis {
    transform: SimilarityTransform,
    inliers: Vec<usize>,
    residual: f64,
}

impl Hypothesis {
    /// More inliers first, then smaller residual. Earlier hypotheses win remaining ties.
    fn beats(&self, other: &Hypothesis) -> bool {
        match self.inliers.len().cmp(&other.inliers.len()) {
            Ordering::Greater => true,
            Ordering::Less => false,
            Ordering::Equal => self.residual < other.residual,
        }
    }
}

/// Exhaustive two-point RANSAC on one pose pair.
///
/// Every pair of query keypoints is a hypothesis. For each one, the unflipped
/// and flipped fits are tried and the fit with the smaller error on the two
/// correspondences is kept. The hypothesis with the most inliers is refit on
/// its inliers and recounted. Returns `None` unless the final count reaches
/// [`MatchConfig::min_inliers`].
pub fn ransac_verify_pair(
    qr: &Pose,
    ds: &Pose,
    skel: &CanonicalSkeleton,
    cfg: &MatchConfig,
) -> Option<PairVerification> {
    let th = cfg.detection_threshold;
    let radius = inlier_radius(qr, skel, cfg)?;
    let flips: &[bool] = if cfg.flip_enabled { &[false, true] } else { &[false] };

    let usable: Vec<usize> = (0..NUM_KEYPOINTS)
        .filter(|&i| {
            qr.is_detected(i, th) && flips.iter().any(|&f| ds.is_detected(db_slot(i, f), th))
        })
        .collect();

    let mut best: Option<Hypothesis> = None;
    for (n, &i) in usable.iter().enumerate() {
        for &j in &usable[n + 1..] {
            let mut chosen: Option<(SimilarityTransform, f64)> = None;
            for &flipped in flips {
                let (di, dj) = (db_slot(i, flipped), db_slot(j, flipped));
                if !ds.is_detected(di, th) || !ds.is_detected(dj, th) {
                    continue;
                }
                let corr = [(qr.point(i), ds.point(di)), (qr.point(j), ds.point(dj))];
                let Ok(t) = estimate_transform_ls(&corr, flipped) else {
                    continue;
                };
                let err = squared_error(&t, &corr);
                if chosen.is_none_or(|(_, e)| err < e) {
                    chosen = Some((t, err));
                }
            }
            let Some((transform, _)) = chosen else {
                continue;
            };
            let (inliers, residual) = inliers_under(&transform, qr, ds, radius, cfg);
            let hyp = Hypothesis { transform, inliers, residual };
            if best.as_ref().is_none_or(|b| hyp.beats(b)) {
                best = Some(hyp);
            }
        }
    }

    let best = best?;
    let transform = refit(&best, qr, ds).unwrap_or(best.transform);
    let (inliers, residual) = inliers_under(&transform, qr, ds, radius, cfg);
    (inliers.len() >= cfg.min_inliers())
        .then_some(PairVerification { transform, inliers, residual, radius })
}

fn refit(h: &Hypothesis, qr: &Pose, ds: &Pose) -> Option<SimilarityTransform> {
    let flipped = h.transform.flipped;
    let corr: Vec<(Point, Point)> = h
        .inliers
        .iter()
        .map(|&i| (qr.point(i), ds.point(db_slot(i, flipped))))
        .collect();
    estimate_transform_ls(&corr, flipped).ok()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidatedPair {
    pub query_pose_id: usize,
    pub db_pose_id: usize,
    pub inlier_count: usize,
}

/// A database image confirmed by spatial verification.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifiedLink {
    pub query_image_id: String,
    pub db_image_id: String,
    /// Keypoints consistent with `best_transform` over all validated pairs.
    pub score: usize,
    pub best_transform: SimilarityTransform,
    pub validated_pairs: Vec<ValidatedPair>,
}

/// Verifies every candidate pose pair, then scores the image by the transform
/// that explains the most keypoints across all validated pairs.
pub fn verify_image_pair(
    q_img: &ImageRecord,
    d_img: &ImageRecord,
    candidates: &[Candidate],
    skel: &CanonicalSkeleton,
    cfg: &MatchConfig,
) -> Option<VerifiedLink> {
    struct Validated<'a> {
        query: &'a Pose,
        db: &'a Pose,
        radius: f64,
        result: PairVerification,
    }

    let mut validated = Vec::new();
    for c in candidates {
        let (Some(qr), Some(ds)) = (q_img.pose(c.query_pose_id), d_img.pose(c.db_pose_id)) else {
            continue;
        };
        if !torso_prefilter(qr, ds, c.flipped, cfg) {
            continue;
        }
        if let Some(result) = ransac_verify_pair(qr, ds, skel, cfg) {
            validated.push(Validated { query: qr, db: ds, radius: result.radius, result });
        }
    }
    if validated.is_empty() {
        return None;
    }

    let mut best: Option<(usize, SimilarityTransform)> = None;
    for v in &validated {
        let t = v.result.transform;
        let score: usize = validated
            .iter()
            .map(|other| inliers_under(&t, other.query, other.db, other.radius, cfg).0.len())
            .sum();
        if best.is_none_or(|(s, _)| score > s) {
            best = Some((score, t));
        }
    }
    let (score, best_transform) = best?;
    Some(VerifiedLink {
        query_image_id: q_img.image_id.clone(),
        db_image_id: d_img.image_id.clone(),
        score,
        best_transform,
        validated_pairs: validated
            .iter()
            .map(|v| ValidatedPair {
                query_pose_id: v.query.pose_id,
                db_pose_id: v.db.pose_id,
                inlier_count: v.result.inlier_count(),
            })
            .collect(),
    })
}

/// One row of the final ranking.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankedHit {
    pub image_id: String,
    pub distance: f64,
    pub verification: Option<VerifiedLink>,
}

/// Verified images first by descending score (ties: ascending distance, then
/// image id), followed by the unverified ones in shortlist order.
///
/// `verified[i]` is the verification outcome for `shortlist[i]`.
pub fn rerank(shortlist: &[ShortlistEntry], verified: &[Option<VerifiedLink>]) -> Vec<RankedHit> {
    assert_eq!(shortlist.len(), verified.len(), "one verification slot per shortlist entry");
    let (mut hits, rest): (Vec<RankedHit>, Vec<RankedHit>) = shortlist
        .iter()
        .zip(verified)
        .map(|(entry, link)| RankedHit {
            image_id: entry.image_id.clone(),
            distance: entry.image_distance,
            verification: link.clone(),
        })
        .partition(|h| h.verification.is_some());
    hits.sort_by(|a, b| {
        let score = |h: &RankedHit| h.verification.as_ref().map_or(0, |v| v.score);
        score(b)
            .cmp(&score(a))
            .then_with(|| a.distance.total_cmp(&b.distance))
            .then_with(|| a.image_id.cmp(&b.image_id))
    });
    hits.extend(rest);
    hits
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pose::{mirror_pose, Keypoint};

    fn cfg() -> MatchConfig {
        MatchConfig::default()
    }

    fn pose_with(points: &[(usize, f64, f64)]) -> Pose {
        let mut p = Pose::empty(0);
        for &(i, x, y) in points {
            p.keypoints[i] = Keypoint::new(x, y, 1.0);
        }
        p
    }

    /// A full pose in general position built from the canonical proportions.
    fn figure() -> Pose {
        let pts: [(f64, f64); NUM_KEYPOINTS] = [
            (101.0, 58.0),
            (100.0, 80.0),
            (82.0, 81.0),
            (70.0, 108.0),
            (64.0, 134.0),
            (119.0, 79.0),
            (133.0, 104.0),
            (146.0, 126.0),
            (102.0, 135.0),
            (92.0, 136.0),
            (88.0, 182.0),
            (85.0, 228.0),
            (112.0, 134.0),
            (120.0, 180.0),
            (127.0, 226.0),
            (98.0, 54.0),
            (105.0, 54.5),
            (92.0, 57.0),
            (110.0, 56.0),
            (141.0, 232.0),
            (145.0, 231.0),
            (124.0, 230.0),
            (70.0, 233.0),
            (66.0, 232.0),
            (88.0, 231.0),
        ];
        Pose::from_points(0, &pts)
    }

    fn transformed(p: &Pose, t: &SimilarityTransform) -> Pose {
        // inverse map so that `t` sends the result back onto `p`
        let mut out = p.clone();
        for kp in out.keypoints.iter_mut().filter(|k| k.confidence > 0.0) {
            let x = (kp.x - t.translation.0) / t.scale;
            let y = (kp.y - t.translation.1) / t.scale;
            kp.x = if t.flipped { -x } else { x };
            kp.y = y;
        }
        if t.flipped {
            let mut swapped = out.clone();
            for i in 0..NUM_KEYPOINTS {
                swapped.keypoints[MIRROR_INDEX[i]] = out.keypoints[i];
            }
            swapped
        } else {
            out
        }
    }

    #[test]
    fn torso_angle_examples() {
        let vertical = pose_with(&[(part::NECK, 0.0, 0.0), (part::MID_HIP, 0.0, 10.0)]);
        assert_eq!(torso_angle(&vertical, &cfg()), Some(0.0));
        let horizontal = pose_with(&[(part::NECK, 0.0, 0.0), (part::MID_HIP, 10.0, 0.0)]);
        assert!((torso_angle(&horizontal, &cfg()).unwrap().abs() - PI / 2.0).abs() < 1e-15);
        let no_hip = pose_with(&[(part::NECK, 0.0, 0.0)]);
        assert_eq!(torso_angle(&no_hip, &cfg()), None);
        assert!(torso_prefilter(&no_hip, &horizontal, false, &cfg()));
    }

    fn tilted(angle: f64) -> Pose {
        pose_with(&[(part::NECK, 0.0, 0.0), (part::MID_HIP, 10.0 * angle.sin(), 10.0 * angle.cos())])
    }

    #[test]
    fn torso_prefilter_examples() {
        let c = cfg();
        assert!(torso_prefilter(&tilted(0.1), &tilted(0.3), false, &c));
        assert!(!torso_prefilter(&tilted(0.0), &tilted(0.5), false, &c));
        assert!(torso_prefilter(&tilted(-0.3), &tilted(0.3), true, &c));
        assert!(!torso_prefilter(&tilted(-0.3), &tilted(0.3), false, &c));
        // wrap-around near pi
        assert!(torso_prefilter(&tilted(PI - 0.1), &tilted(-PI + 0.1), false, &c));
    }

    #[test]
    fn ls_examples() {
        let t = estimate_transform_ls(&[((2.0, 3.0), (0.0, 0.0)), ((4.0, 3.0), (1.0, 0.0))], false)
            .unwrap();
        assert!((t.scale - 2.0).abs() < 1e-15);
        assert_eq!(t.translation, (2.0, 3.0));

        let id = estimate_transform_ls(&[((1.0, 2.0), (1.0, 2.0)), ((5.0, -1.0), (5.0, -1.0))], false)
            .unwrap();
        assert!((id.scale - 1.0).abs() < 1e-15);
        assert!(id.translation.0.abs() < 1e-15 && id.translation.1.abs() < 1e-15);

        let f = estimate_transform_ls(&[((0.0, 3.0), (0.0, 0.0)), ((-2.0, 3.0), (1.0, 0.0))], true)
            .unwrap();
        assert!((f.scale - 2.0).abs() < 1e-15);
        assert_eq!(f.translation, (0.0, 3.0));
        assert!(f.flipped);
    }

    #[test]
    fn ls_degenerate_samples() {
        let same_db = [((0.0, 0.0), (1.0, 1.0)), ((5.0, 5.0), (1.0, 1.0))];
        assert_eq!(estimate_transform_ls(&same_db, false), Err(VerifyError::DegenerateSample));
        let same_query = [((2.0, 2.0), (0.0, 0.0)), ((2.0, 2.0), (1.0, 0.0))];
        assert_eq!(estimate_transform_ls(&same_query, false), Err(VerifyError::DegenerateSample));
        // a mirrored pair cannot be absorbed without the flip
        let mirrored = [((0.0, 0.0), (0.0, 0.0)), ((-1.0, 0.0), (1.0, 0.0))];
        assert_eq!(estimate_transform_ls(&mirrored, false), Err(VerifyError::DegenerateSample));
        assert_eq!(
            estimate_transform_ls(&same_db[..1], false),
            Err(VerifyError::TooFewCorrespondences)
        );
    }

    #[test]
    fn relative_size_examples() {
        let skel: CanonicalSkeleton =
            "format_version 1\n1 8 1\n1 2 2\n2 3 2\n".parse().unwrap();
        let r = pose_with(&[
            (part::NECK, 0.0, 0.0),
            (part::MID_HIP, 0.0, 2.0),
            (part::R_SHOULDER, 4.0, 0.0),
            (part::R_ELBOW, 4.0, 6.0),
        ]);
        assert_eq!(relative_pose_size(&r, &skel, &cfg()), Some(2.0));

        let torso_only = pose_with(&[(part::NECK, 0.0, 0.0), (part::MID_HIP, 0.0, 50.0)]);
        assert_eq!(relative_pose_size(&torso_only, &CanonicalSkeleton::body25(), &cfg()), Some(50.0));
        assert_eq!(relative_pose_size(&pose_with(&[(0, 1.0, 1.0)]), &skel, &cfg()), None);

        // even count takes the lower median
        let two = pose_with(&[(part::NECK, 0.0, 0.0), (part::MID_HIP, 0.0, 3.0), (part::R_SHOULDER, 10.0, 0.0)]);
        assert_eq!(relative_pose_size(&two, &skel, &cfg()), Some(3.0));
    }

    #[test]
    fn canonical_pose_has_unit_size() {
        let skel = CanonicalSkeleton::body25();
        // lay every bone out horizontally with its canonical length; the table lists parents first
        let mut x = [f64::NAN; NUM_KEYPOINTS];
        x[part::NECK] = 0.0;
        for b in skel.bones() {
            assert!(!x[b.a].is_nan() && x[b.b].is_nan());
            x[b.b] = x[b.a] + b.length;
        }
        let mut p = Pose::empty(0);
        for (i, &xi) in x.iter().enumerate() {
            p.keypoints[i] = Keypoint::new(xi, 5.0, 1.0);
        }
        let size = relative_pose_size(&p, &skel, &cfg()).unwrap();
        assert!((size - 1.0).abs() < 1e-12);
    }

    #[test]
    fn recovers_planted_scale_and_shift() {
        let skel = CanonicalSkeleton::body25();
        let qr = figure();
        let planted = SimilarityTransform { scale: 2.0, translation: (30.0, -12.0), flipped: false };
        let ds = transformed(&qr, &planted);
        let v = ransac_verify_pair(&qr, &ds, &skel, &cfg()).unwrap();
        assert_eq!(v.inlier_count(), 25);
        assert!(!v.transform.flipped);
        assert!((v.transform.scale - 2.0).abs() < 1e-6);
        assert!((v.transform.translation.0 - 30.0).abs() < 1e-6);
    }

    #[test]
    fn recovers_mirrored_copy() {
        let skel = CanonicalSkeleton::body25();
        let qr = figure();
        let ds = mirror_pose(&qr);
        let v = ransac_verify_pair(&qr, &ds, &skel, &cfg()).unwrap();
        assert!(v.transform.flipped);
        assert_eq!(v.inlier_count(), 25);
        assert!((v.transform.scale - 1.0).abs() < 1e-9);
    }

    #[test]
    fn flip_disabled_rejects_mirrored_copy() {
        let skel = CanonicalSkeleton::body25();
        let mut c = cfg();
        c.flip_enabled = false;
        // both arms raised on one side so the mirror image differs from the original
        let mut qr = figure();
        qr.keypoints[part::R_ELBOW] = Keypoint::new(75.0, 55.0, 1.0);
        qr.keypoints[part::R_WRIST] = Keypoint::new(70.0, 28.0, 1.0);
        qr.keypoints[part::L_ELBOW] = Keypoint::new(118.0, 58.0, 1.0);
        qr.keypoints[part::L_WRIST] = Keypoint::new(108.0, 32.0, 1.0);
        let ds = mirror_pose(&qr);
        assert_eq!(ransac_verify_pair(&qr, &ds, &skel, &cfg()).unwrap().inlier_count(), 25);
        if let Some(v) = ransac_verify_pair(&qr, &ds, &skel, &c) {
            assert!(!v.transform.flipped);
            assert!(v.inlier_count() < 25);
        }
    }

    #[test]
    fn below_quota_is_rejected() {
        let skel = CanonicalSkeleton::body25();
        let qr = figure();
        let mut ds = qr.clone();
        for i in 6..NUM_KEYPOINTS {
            ds.drop_keypoint(i);
        }
        assert_eq!(ds.detected_count(0.0), 6);
        assert!(ransac_verify_pair(&qr, &ds, &skel, &cfg()).is_none());
        let mut ds7 = qr.clone();
        for i in 7..NUM_KEYPOINTS {
            ds7.drop_keypoint(i);
        }
        assert_eq!(ransac_verify_pair(&qr, &ds7, &skel, &cfg()).unwrap().inlier_count(), 7);
    }

    #[test]
    fn query_without_size_is_skipped() {
        let skel = CanonicalSkeleton::body25();
        let lone = pose_with(&[(part::NOSE, 1.0, 1.0), (part::L_ANKLE, 40.0, 90.0)]);
        assert!(ransac_verify_pair(&lone, &figure(), &skel, &cfg()).is_none());
    }

    fn hit(id: &str, d: f64) -> ShortlistEntry {
        ShortlistEntry { image_id: id.into(), image_distance: d, candidates: vec![] }
    }

    fn link(id: &str, score: usize) -> Option<VerifiedLink> {
        Some(VerifiedLink {
            query_image_id: "q".into(),
            db_image_id: id.into(),
            score,
            best_transform: SimilarityTransform::identity(),
            validated_pairs: vec![],
        })
    }

    #[test]
    fn rerank_examples() {
        let order = |hits: Vec<RankedHit>| hits.into_iter().map(|h| h.image_id).collect::<Vec<_>>();
        let shortlist = [hit("C", 0.01), hit("B", 0.02), hit("A", 0.03)];
        assert_eq!(order(rerank(&shortlist, &[None, link("B", 12), link("A", 30)])), ["A", "B", "C"]);
        assert_eq!(order(rerank(&shortlist, &[None, None, None])), ["C", "B", "A"]);
        let tied = [hit("X", 0.04), hit("Y", 0.02)];
        assert_eq!(order(rerank(&tied, &[link("X", 9), link("Y", 9)])), ["Y", "X"]);
    }
}
