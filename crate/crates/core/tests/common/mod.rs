#![allow(dead_code)]

//! Brute-force reference implementations and random inputs shared by the
//! integration tests. The oracles build the full root-relative vectors and
//! the complete pose-pair tables explicitly, with no shortcuts.

use poselink::pose::{Keypoint, Pose, MIRROR_INDEX, NUM_KEYPOINTS};
use poselink::synth::random_figure;
use poselink::{ImageRecord, MatchConfig, SimilarityTransform};
use rand::Rng;

const NECK: usize = 1;

fn detected(kp: &Keypoint, th: f64) -> bool {
    kp.confidence > th
}

/// `1 - cos` between the root-relative vectors restricted to the common keypoints.
pub fn oracle_p(r: &Pose, s: &Pose, th: f64) -> f64 {
    if !detected(&r.keypoints[NECK], th) || !detected(&s.keypoints[NECK], th) {
        return 2.0;
    }
    let common: Vec<usize> = (0..NUM_KEYPOINTS)
        .filter(|&i| detected(&r.keypoints[i], th) && detected(&s.keypoints[i], th))
        .collect();
    if common.len() < 2 {
        return 2.0;
    }
    let vector = |p: &Pose| {
        let mut v = vec![0.0f64; 2 * NUM_KEYPOINTS];
        for &i in &common {
            v[2 * i] = p.keypoints[i].x - p.keypoints[NECK].x;
            v[2 * i + 1] = p.keypoints[i].y - p.keypoints[NECK].y;
        }
        v
    };
    let (u, w) = (vector(r), vector(s));
    let dot: f64 = u.iter().zip(&w).map(|(a, b)| a * b).sum();
    let nu = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nw = w.iter().map(|a| a * a).sum::<f64>().sqrt();
    if nu == 0.0 || nw == 0.0 {
        return 2.0;
    }
    1.0 - (dot / (nu * nw)).clamp(-1.0, 1.0)
}

/// Horizontal mirror with side-labeled slots exchanged.
pub fn oracle_mirror(s: &Pose) -> Pose {
    let mut out = Pose::empty(s.pose_id);
    for i in 0..NUM_KEYPOINTS {
        let kp = s.keypoints[i];
        out.keypoints[MIRROR_INDEX[i]] = Keypoint::new(-kp.x, kp.y, kp.confidence);
    }
    out
}

pub fn oracle_q(r: &Pose, s: &Pose, th: f64) -> f64 {
    oracle_p(r, s, th).min(oracle_p(r, &oracle_mirror(s), th))
}

fn eligible(img: &[Pose], th: f64) -> Vec<&Pose> {
    img.iter().filter(|p| detected(&p.keypoints[NECK], th)).collect()
}

pub fn oracle_dist_min(q: &[Pose], d: &[Pose], th: f64) -> f64 {
    let mut best = f64::INFINITY;
    for r in eligible(q, th) {
        for s in eligible(d, th) {
            best = best.min(oracle_q(r, s, th));
        }
    }
    best
}

pub fn oracle_dist_t(q: &[Pose], d: &[Pose], t: f64, th: f64) -> f64 {
    let qs = eligible(q, th);
    if qs.is_empty() {
        return f64::INFINITY;
    }
    let ds = eligible(d, th);
    qs.iter()
        .map(|r| ds.iter().map(|s| oracle_q(r, s, th)).fold(t, f64::min))
        .sum()
}

/// Uniformly scattered keypoints; each non-neck slot drops with probability `dropout`
/// and the neck drops with probability `neck_dropout`.
pub fn scattered_pose(rng: &mut impl Rng, pose_id: usize, dropout: f64, neck_dropout: f64) -> Pose {
    let mut p = Pose::empty(pose_id);
    for i in 0..NUM_KEYPOINTS {
        let rate = if i == NECK { neck_dropout } else { dropout };
        if rng.random_bool(rate) {
            continue;
        }
        p.keypoints[i] = Keypoint::new(
            rng.random_range(-800.0..800.0),
            rng.random_range(-800.0..800.0),
            rng.random_range(0.05..1.0),
        );
    }
    p
}

/// An anatomically plausible figure with random dropout off the neck.
pub fn figure_pose(rng: &mut impl Rng, pose_id: usize, dropout: f64) -> Pose {
    let torso = rng.random_range(30.0..120.0);
    let neck = (rng.random_range(100.0..900.0), rng.random_range(100.0..600.0));
    let mut p = random_figure(rng, torso, neck);
    p.pose_id = pose_id;
    for i in 0..NUM_KEYPOINTS {
        if i != NECK && rng.random_bool(dropout) {
            p.drop_keypoint(i);
        }
    }
    p
}

/// Either kind of pose, half the time each.
pub fn any_pose(rng: &mut impl Rng, pose_id: usize, dropout: f64) -> Pose {
    if rng.random_bool(0.5) {
        figure_pose(rng, pose_id, dropout)
    } else {
        scattered_pose(rng, pose_id, dropout, 0.1)
    }
}

pub fn random_image(rng: &mut impl Rng, id: &str, cfg: &MatchConfig) -> ImageRecord {
    let n = rng.random_range(0..=4);
    let poses = (0..n).map(|k| any_pose(rng, k, 0.3)).collect();
    ImageRecord::new(id, format!("{id}.json"), poses, cfg)
}

pub fn random_transform(rng: &mut impl Rng, flipped: bool) -> SimilarityTransform {
    let scale = rng.random_range(0.5..=2.0);
    let angle: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let radius = rng.random_range(0.0..=200.0);
    SimilarityTransform { scale, translation: (radius * angle.cos(), radius * angle.sin()), flipped }
}

/// The pose as it appears after `t`: points mapped, and mirrored parts moved
/// into their swapped slots when `t` flips.
pub fn plant(db: &Pose, t: &SimilarityTransform) -> Pose {
    let mut q = Pose::empty(db.pose_id);
    for i in 0..NUM_KEYPOINTS {
        let slot = if t.flipped { MIRROR_INDEX[i] } else { i };
        let kp = db.keypoints[i];
        let (x, y) = t.apply((kp.x, kp.y));
        q.keypoints[slot] = Keypoint::new(x, y, kp.confidence);
    }
    q
}

/// Relative difference, treating equal infinities as equal.
pub fn close(a: f64, b: f64, tol: f64) -> bool {
    if a.is_infinite() || b.is_infinite() {
        return a == b;
    }
    (a - b).abs() <= tol
}
