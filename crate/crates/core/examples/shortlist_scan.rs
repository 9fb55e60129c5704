// Exhaustive scan of a synthetic collection with both image distances.

use poselink::synth::{generate_synthetic_benchmark, SyntheticSpec};
use poselink::{Engine, ImageMetric, CanonicalSkeleton, MatchConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = MatchConfig::default();
    let spec = SyntheticSpec { scenes: 60, copies: 4, transfers: 0, ..Default::default() };
    let bench = generate_synthetic_benchmark(&spec, 3)?;
    let index = bench.index(&cfg);
    let skel = CanonicalSkeleton::body25();
    let engine = Engine::new(&index, &skel, &cfg);

    let plant = &bench.plants[0];
    let query = index.get(&plant.image_id).expect("planted image is indexed");
    println!("query {} ({} figures), planted from {}", plant.image_id, query.poses.len(), plant.source_id);
    for metric in [ImageMetric::Min, ImageMetric::T] {
        let shortlist = engine.shortlist(query, metric);
        println!("dist_{metric}: {} images shortlisted", shortlist.len());
        for (rank, e) in shortlist.iter().take(5).enumerate() {
            let mark = if e.image_id == plant.source_id { "  <- source" } else { "" };
            println!(
                "  {:>2}. {:<12} {:.4}  {} candidate pairs{mark}",
                rank + 1,
                e.image_id,
                e.image_distance,
                e.candidates.len()
            );
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
