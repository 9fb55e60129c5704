// Keypoint files on disk, a manifest, and a saved index that loads back unchanged.

use poselink::ingest::{build_index, load_index, read_manifest, save_index};
use poselink::synth::{generate_synthetic_benchmark, SyntheticSpec};
use poselink::MatchConfig;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let cfg = MatchConfig::default();
    let spec = SyntheticSpec { scenes: 25, copies: 3, transfers: 2, transfer_family_size: 2, ..Default::default() };
    let bench = generate_synthetic_benchmark(&spec, 5)?;
    let manifest_path = bench.write_to_dir(dir.path())?;

    let manifest = read_manifest(&manifest_path)?;
    let index = build_index(&manifest, &cfg)?;
    let path = dir.path().join("index.jsonl");
    save_index(&index, &path)?;
    let loaded = load_index(&path, &cfg)?;

    println!("{} manifest entries, {} poses", manifest.entries.len(), index.pose_count());
    println!("index file {} bytes, fingerprint {}", std::fs::metadata(&path)?.len(), loaded.config_fingerprint());
    println!("round trip equal: {}", loaded == index);

    let stricter = MatchConfig { detection_threshold: 0.5, ..cfg };
    match load_index(&path, &stricter) {
        Ok(_) => println!("unexpected: stricter threshold accepted"),
        Err(e) => println!("stricter threshold rejected: {e}"),
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
