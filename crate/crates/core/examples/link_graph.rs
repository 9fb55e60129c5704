// All-pairs linking: every image is queried against the rest and verified
// links form a graph whose components group related works.

use std::collections::BTreeMap;

use poselink::synth::{generate_synthetic_benchmark, SyntheticSpec};
use poselink::{CanonicalSkeleton, Engine, ImageMetric, MatchConfig};

fn find(parent: &mut BTreeMap<String, String>, x: &str) -> String {
    let p = parent.get(x).cloned().unwrap_or_else(|| x.to_string());
    if p == x {
        return p;
    }
    let root = find(parent, &p);
    parent.insert(x.to_string(), root.clone());
    root
}

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = MatchConfig::default();
    let spec = SyntheticSpec { scenes: 40, copies: 6, transfers: 4, transfer_family_size: 4, ..Default::default() };
    let bench = generate_synthetic_benchmark(&spec, 21)?;
    let index = bench.index(&cfg);
    let skel = CanonicalSkeleton::body25();
    let edges = Engine::new(&index, &skel, &cfg).link_all(ImageMetric::T);

    // keep strong links only; one figure of a shared generic pose is not enough
    let strong: Vec<_> = edges.iter().filter(|e| e.score >= 15).collect();
    let mut parent = BTreeMap::new();
    for e in &strong {
        for id in [&e.query_id, &e.target_id] {
            parent.entry(id.clone()).or_insert_with(|| id.clone());
        }
    }
    for e in &strong {
        let (a, b) = (find(&mut parent, &e.query_id), find(&mut parent, &e.target_id));
        if a != b {
            parent.insert(a, b);
        }
    }
    let mut groups: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let ids: Vec<String> = parent.keys().cloned().collect();
    for id in ids {
        let root = find(&mut parent, &id);
        groups.entry(root).or_default().push(id);
    }
    println!("{} verified edges, {} with score >= 15", edges.len(), strong.len());
    let mut sizes: Vec<_> = groups.values().filter(|g| g.len() > 1).collect();
    sizes.sort_by_key(|g| std::cmp::Reverse(g.len()));
    for g in sizes.iter().take(5) {
        println!("  group of {}: {}", g.len(), g.join(" "));
    }
    for p in bench.plants.iter().take(3) {
        let hit = strong.iter().any(|e| {
            (e.query_id == p.image_id && e.target_id == p.source_id) || (e.query_id == p.source_id && e.target_id == p.image_id)
        });
        println!("  plant {} -> {}: linked {hit}", p.image_id, p.source_id);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
