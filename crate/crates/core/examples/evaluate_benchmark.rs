// Match-only against verified retrieval on a generated benchmark.
//
// Set POSELINK_FULL=1 for the default 200-scene benchmark.

use poselink::eval::{reports_to_csv, Denominator, DEFAULT_RANKS};
use poselink::synth::{generate_synthetic_benchmark, SyntheticSpec};
use poselink::{CanonicalSkeleton, Engine, MatchConfig, Scenario};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let full = std::env::var_os("POSELINK_FULL").is_some();
    let spec = if full {
        SyntheticSpec::default()
    } else {
        SyntheticSpec { scenes: 60, copies: 12, transfers: 6, transfer_family_size: 3, ..Default::default() }
    };
    let cfg = MatchConfig::default();
    let bench = generate_synthetic_benchmark(&spec, 1)?;
    let index = bench.index(&cfg);
    let skel = CanonicalSkeleton::body25();
    let engine = Engine::new(&index, &skel, &cfg);

    let mut queries = bench.copy_ids();
    queries.extend(bench.transfer_ids());
    let reports = engine.evaluate(&bench.ground_truth, &queries, &Scenario::ALL, &DEFAULT_RANKS, Denominator::FixedK)?;
    let rows: Vec<_> = reports.iter().map(|r| (r.method.label(), &r.report)).collect();
    print!("{}", reports_to_csv(&rows));
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
