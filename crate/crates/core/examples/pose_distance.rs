// Pose distance between figures: identity, mirroring and dropped keypoints.
//
// Run with `cargo run --example pose_distance`.

use poselink::pose::{mirror_pose, part, pose_distance_p, pose_distance_q};
use poselink::synth::random_figure;
use poselink::MatchConfig;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = MatchConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let a = random_figure(&mut rng, 60.0, (300.0, 200.0));
    let b = random_figure(&mut rng, 60.0, (300.0, 200.0));

    // same figure, drawn mirrored, at half size, somewhere else on the canvas
    let mut m = mirror_pose(&a);
    for kp in m.keypoints.iter_mut() {
        kp.x = 0.5 * kp.x + 900.0;
        kp.y = 0.5 * kp.y - 40.0;
    }

    println!("p(a, a)          = {:.6}", pose_distance_p(&a, &a, &cfg));
    println!("p(a, b)          = {:.6}", pose_distance_p(&a, &b, &cfg));
    let q = pose_distance_q(&a, &m, &cfg);
    println!("p(a, mirror a)   = {:.6}", pose_distance_p(&a, &m, &cfg));
    println!("q(a, mirror a)   = {:.6} (flipped: {})", q.value, q.flipped);

    let mut partial = m.clone();
    partial.drop_keypoint(part::L_WRIST);
    partial.drop_keypoint(part::R_ANKLE);
    println!("q with 2 dropped = {:.6}", pose_distance_q(&a, &partial, &cfg).value);

    let mut headless = a.clone();
    headless.drop_keypoint(part::NECK);
    println!("no neck          = {:.1}", pose_distance_q(&headless, &a, &cfg).value);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
