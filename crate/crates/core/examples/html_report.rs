// Query a synthetic collection and render the results as an HTML gallery.
//
// Writes into a temporary directory unless POSELINK_REPORT_DIR names one.

use poselink::ingest::{build_index, read_manifest};
use poselink::report::write_report;
use poselink::results::{QueryResult, ResultsFile};
use poselink::synth::{generate_synthetic_benchmark, SyntheticSpec};
use poselink::{CanonicalSkeleton, Engine, ImageMetric, MatchConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let tmp = tempfile::tempdir()?;
    let out = std::env::var_os("POSELINK_REPORT_DIR").map(Into::into).unwrap_or_else(|| tmp.path().join("report"));
    let cfg = MatchConfig { shortlist_len: 8, ..Default::default() };
    let spec = SyntheticSpec { scenes: 30, copies: 2, transfers: 2, transfer_family_size: 2, ..Default::default() };
    let bench = generate_synthetic_benchmark(&spec, 9)?;
    let manifest_path = bench.write_to_dir(tmp.path())?;
    let index = build_index(&read_manifest(&manifest_path)?, &cfg)?;
    let skel = CanonicalSkeleton::body25();
    let engine = Engine::new(&index, &skel, &cfg);

    let mut results = ResultsFile::new(ImageMetric::T, true, &cfg);
    for id in ["copy_0000", "transfer_0000"] {
        let q = index.get(id).ok_or("missing query")?;
        let hits = engine.query(q, ImageMetric::T, true);
        results.queries.push(QueryResult::from_hits(&q.image_id, &q.source_path, &q.poses, hits));
    }
    let results_path = tmp.path().join("results.json");
    results.write(&results_path)?;
    let page = write_report(&results_path, &manifest_path, &out, &skel)?;
    println!("wrote {} ({} bytes)", page.display(), std::fs::metadata(&page)?.len());
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
