// Recovering a planted scale, translation and flip between two poses.

use poselink::pose::{Pose, MIRROR_INDEX, NUM_KEYPOINTS};
use poselink::synth::random_figure;
use poselink::verify::ransac_verify_pair;
use poselink::{CanonicalSkeleton, MatchConfig, SimilarityTransform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Maps `db` into the query frame, moving mirrored parts into their swapped slots.
fn plant(db: &Pose, t: &SimilarityTransform) -> Pose {
    let mut q = Pose::empty(0);
    for i in 0..NUM_KEYPOINTS {
        let slot = if t.flipped { MIRROR_INDEX[i] } else { i };
        let (x, y) = t.apply(db.point(i));
        q.keypoints[slot] = db.keypoints[i];
        q.keypoints[slot].x = x;
        q.keypoints[slot].y = y;
    }
    q
}

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = MatchConfig::default();
    let skel = CanonicalSkeleton::body25();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let db = random_figure(&mut rng, 70.0, (400.0, 250.0));

    let truth = SimilarityTransform { scale: 1.7, translation: (-120.0, 35.0), flipped: true };
    let mut query = plant(&db, &truth);
    // a few badly misplaced joints
    for i in [4, 11, 14] {
        query.keypoints[i].x += rng.random_range(60.0..120.0);
        query.keypoints[i].y -= rng.random_range(60.0..120.0);
    }

    let v = ransac_verify_pair(&query, &db, &skel, &cfg).ok_or("pair did not validate")?;
    let t = v.transform;
    println!("planted   s={:.4} t=({:.2}, {:.2}) flipped={}", truth.scale, truth.translation.0, truth.translation.1, truth.flipped);
    println!("recovered s={:.4} t=({:.2}, {:.2}) flipped={}", t.scale, t.translation.0, t.translation.1, t.flipped);
    println!("inliers {} of 25, radius {:.2} px, residual {:.3}", v.inlier_count(), v.radius, v.residual);
    let outliers: Vec<usize> = (0..NUM_KEYPOINTS).filter(|i| !v.inliers.contains(i)).collect();
    println!("rejected keypoints {outliers:?}");
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
