//! Command-line front end.
//!
//! Data goes to files or standard output and logs go to standard error.
//! Exit status is 0 on success, 1 for bad input and 2 for internal failures.
//! Every command that writes a file also writes a `*.run.json` sidecar with
//! the resolved configuration, inputs and stage timings; the main outputs
//! carry no timings so they stay byte-identical between runs.

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::config::{ConfigError, MatchConfig};
use crate::eval::{reports_to_csv, Denominator, EvalError, GroundTruth, Scenario, DEFAULT_RANKS};
use crate::fast_match::{ImageMetric, ImageRecord};
use crate::ingest::{build_index, load_index, parse_keypoints_file, read_manifest, save_index, write_atomic, IngestError};
use crate::pipeline::{with_workers, Engine, MethodReport};
use crate::results::{edges_to_tsv, QueryResult, ResultsFile};
use crate::skeleton::{CanonicalSkeleton, SkeletonError};
use crate::synth::{generate_synthetic_benchmark, SynthError, SyntheticSpec};

#[derive(Debug, Parser)]
#[command(name = "poselink", version, about = "Find linked artworks through the poses of their figures")]
pub struct Cli {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Worker threads for scanning and verification (default: all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Print the resolved matching configuration as JSON and exit.
    #[arg(long, global = true)]
    pub print_config: bool,
    #[command(subcommand)]
    pub command: Option<Command>,
}

/// Overrides for [`MatchConfig`]; unset flags keep the defaults (or `--config`).
#[derive(Debug, Default, Args)]
pub struct ConfigArgs {
    /// JSON file with a full or partial matching configuration.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Penalty per unmatched query pose in dist_t.
    #[arg(long, global = true)]
    pub t: Option<f64>,
    /// Largest pose distance that still counts as a candidate pair.
    #[arg(long, global = true)]
    pub pose_dist_max: Option<f64>,
    /// Largest torso angle difference (radians) allowed before verification.
    #[arg(long, global = true)]
    pub torso_angle_max: Option<f64>,
    /// Number of images kept after fast matching.
    #[arg(long, global = true, value_name = "L")]
    pub shortlist: Option<usize>,
    /// Fraction of the 25 keypoints that must be inliers.
    #[arg(long, global = true)]
    pub min_inlier_frac: Option<f64>,
    /// Inlier radius as a multiple of the relative query pose size.
    #[arg(long, global = true)]
    pub inlier_dist_factor: Option<f64>,
    /// Keypoints at or below this confidence count as undetected.
    #[arg(long, global = true)]
    pub conf_threshold: Option<f64>,
    /// Disable mirror-invariant matching and flipped transforms.
    #[arg(long, global = true)]
    pub no_flip: bool,
    /// Canonical skeleton table replacing the built-in one.
    #[arg(long, global = true, value_name = "PATH")]
    pub skeleton: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a pose index from a manifest of keypoint files.
    Ingest {
        manifest: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Rank the indexed images against one or more queries.
    Query {
        index: PathBuf,
        /// Keypoint files to query with; the file stem becomes the query id.
        queries: Vec<PathBuf>,
        /// Query with an image that is already in the index.
        #[arg(long = "image-id", value_name = "ID")]
        image_ids: Vec<String>,
        #[arg(long, default_value_t = ImageMetric::T)]
        metric: ImageMetric,
        /// Skip spatial verification and return the fast-match ranking.
        #[arg(long)]
        no_verify: bool,
        /// Results JSON path (standard output when omitted).
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Query every indexed image against the rest and list verified links.
    LinkAll {
        index: PathBuf,
        #[arg(long, default_value_t = ImageMetric::T)]
        metric: ImageMetric,
        /// Edge list path (standard output when omitted).
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Mean precision at k for all four method variants and three scenarios.
    Evaluate {
        index: PathBuf,
        ground_truth: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_RANKS.to_vec())]
        ranks: Vec<usize>,
        #[arg(long, value_enum, default_value_t = DenominatorArg::FixedK)]
        denominator: DenominatorArg,
        /// Directory that receives eval.json and eval.csv.
        #[arg(short, long)]
        out_dir: PathBuf,
    },
    /// Static HTML gallery for a results file.
    Report {
        results: PathBuf,
        manifest: PathBuf,
        #[arg(short, long)]
        out_dir: PathBuf,
    },
    /// Write a synthetic benchmark with planted copies and transfers.
    Synth {
        #[arg(short, long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// JSON generator parameters; missing fields take their defaults.
        #[arg(long, value_name = "PATH")]
        spec: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DenominatorArg {
    FixedK,
    Available,
}

impl From<DenominatorArg> for Denominator {
    fn from(d: DenominatorArg) -> Self {
        match d {
            DenominatorArg::FixedK => Denominator::FixedK,
            DenominatorArg::Available => Denominator::Available,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 1,
            CliError::Internal(_) => 2,
        }
    }
}

macro_rules! input_error {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Input(e.to_string())
            }
        }
    )*};
}
input_error!(IngestError, EvalError, ConfigError, SynthError, SkeletonError);

/// Provenance written next to every output file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub config: MatchConfig,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    /// Wall-clock seconds per stage.
    pub timings: BTreeMap<String, f64>,
}

impl RunManifest {
    fn new(command: &str, config: &MatchConfig, workers: Option<usize>) -> Self {
        Self {
            command: command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config: config.clone(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            seed: None,
            workers,
            timings: BTreeMap::new(),
        }
    }

    fn input(&mut self, p: &Path) {
        self.inputs.push(p.display().to_string());
    }

    fn time<R>(&mut self, stage: &str, f: impl FnOnce() -> R) -> R {
        let start = Instant::now();
        let r = f();
        let secs = start.elapsed().as_secs_f64();
        log::info!("{stage}: {secs:.3}s");
        self.timings.insert(stage.to_string(), secs);
        r
    }

    fn write(&mut self, output: &Path, sidecar: &Path) -> Result<(), CliError> {
        self.outputs.push(output.display().to_string());
        let json = serde_json::to_string_pretty(self).map_err(|e| CliError::Internal(e.to_string()))? + "\n";
        write_atomic(sidecar, json.as_bytes())?;
        Ok(())
    }
}

/// `results.json` becomes `results.run.json`; a directory gets `run.json` inside.
pub fn sidecar_path(output: &Path) -> PathBuf {
    if output.is_dir() {
        return output.join("run.json");
    }
    let stem = output.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    output.with_file_name(format!("{stem}.run.json"))
}

impl ConfigArgs {
    pub fn resolve(&self) -> Result<MatchConfig, CliError> {
        let mut cfg = match &self.config {
            None => MatchConfig::default(),
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
                let mut value: serde_json::Value = serde_json::from_str(&text)
                    .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
                let mut base = serde_json::to_value(MatchConfig::default()).expect("config serializes");
                if let (Some(base), Some(over)) = (base.as_object_mut(), value.as_object_mut()) {
                    base.append(over);
                }
                serde_json::from_value(base).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?
            }
        };
        if let Some(v) = self.t {
            cfg.t = v;
        }
        if let Some(v) = self.pose_dist_max {
            cfg.pose_dist_max = v;
        }
        if let Some(v) = self.torso_angle_max {
            cfg.torso_angle_max = v;
        }
        if let Some(v) = self.shortlist {
            cfg.shortlist_len = v;
        }
        if let Some(v) = self.min_inlier_frac {
            cfg.min_inlier_frac = v;
        }
        if let Some(v) = self.inlier_dist_factor {
            cfg.inlier_dist_factor = v;
        }
        if let Some(v) = self.conf_threshold {
            cfg.detection_threshold = v;
        }
        if self.no_flip {
            cfg.flip_enabled = false;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn skeleton(&self) -> Result<CanonicalSkeleton, CliError> {
        match &self.skeleton {
            Some(p) => Ok(CanonicalSkeleton::load(p)?),
            None => Ok(CanonicalSkeleton::body25()),
        }
    }
}

/// Parses the process arguments, runs the command and maps the outcome to an exit code.
pub fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match std::panic::catch_unwind(|| run(&cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
        Err(_) => ExitCode::from(2),
    }
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = cli.config.resolve()?;
    if cli.print_config {
        return emit(&(serde_json::to_string_pretty(&cfg).expect("config serializes") + "\n"));
    }
    let Some(command) = &cli.command else {
        return Err(CliError::Input("no subcommand given (see --help)".into()));
    };
    let skel = cli.config.skeleton()?;
    with_workers(cli.workers, || run_command(command, &cfg, &skel, cli.workers))
}

fn run_command(command: &Command, cfg: &MatchConfig, skel: &CanonicalSkeleton, workers: Option<usize>) -> Result<(), CliError> {
    match command {
        Command::Ingest { manifest, out } => {
            let mut run = RunManifest::new("ingest", cfg, workers);
            run.input(manifest);
            let m = run.time("read_manifest", || read_manifest(manifest))?;
            let index = run.time("build_index", || build_index(&m, cfg))?;
            run.time("save_index", || save_index(&index, out))?;
            run.write(out, &sidecar_path(out))?;
            emit(&format!(
                "records={}\nposes={}\nineligible_poses={}\nconfig_fingerprint={}\nindex={}\n",
                index.len(),
                index.pose_count(),
                index.ineligible_pose_count(),
                index.config_fingerprint(),
                out.display()
            ))
        }
        Command::Query { index, queries, image_ids, metric, no_verify, out } => {
            if queries.is_empty() && image_ids.is_empty() {
                return Err(CliError::Input("give at least one query file or --image-id".into()));
            }
            let mut run = RunManifest::new("query", cfg, workers);
            run.input(index);
            let idx = run.time("load_index", || load_index(index, cfg))?;
            let mut records = Vec::new();
            for path in queries {
                run.input(path);
                let poses = parse_keypoints_file(path)?;
                let id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                records.push(ImageRecord::new(id, path.display().to_string(), poses, cfg));
            }
            for id in image_ids {
                let rec = idx.get(id).ok_or_else(|| CliError::Input(format!("image id {id:?} is not in the index")))?;
                records.push(rec.clone());
            }
            let engine = Engine::new(&idx, skel, cfg);
            let mut results = ResultsFile::new(*metric, !no_verify, cfg);
            results.queries = run.time("query", || {
                records
                    .iter()
                    .map(|q| {
                        let hits = engine.query(q, *metric, !no_verify);
                        QueryResult::from_hits(&q.image_id, &q.source_path, &q.poses, hits)
                    })
                    .collect()
            });
            match out {
                Some(out) => {
                    let sidecar = sidecar_path(out);
                    results.provenance = sidecar.file_name().map(|n| n.to_string_lossy().into_owned());
                    results.write(out)?;
                    run.write(out, &sidecar)
                }
                None => emit(&results.to_json()),
            }
        }
        Command::LinkAll { index, metric, out } => {
            let mut run = RunManifest::new("link-all", cfg, workers);
            run.input(index);
            let idx = run.time("load_index", || load_index(index, cfg))?;
            let engine = Engine::new(&idx, skel, cfg);
            let edges = run.time("link_all", || engine.link_all(*metric));
            log::info!("{} verified edges over {} images", edges.len(), idx.len());
            let tsv = edges_to_tsv(&edges);
            match out {
                Some(out) => {
                    write_atomic(out, tsv.as_bytes())?;
                    run.write(out, &sidecar_path(out))
                }
                None => emit(&tsv),
            }
        }
        Command::Evaluate { index, ground_truth, ranks, denominator, out_dir } => {
            let mut run = RunManifest::new("evaluate", cfg, workers);
            run.input(index);
            run.input(ground_truth);
            let idx = run.time("load_index", || load_index(index, cfg))?;
            let gt = GroundTruth::read(ground_truth)?;
            if gt.is_empty() {
                log::warn!("ground truth is empty; reports are degenerate");
            }
            let queries = gt.query_ids();
            let engine = Engine::new(&idx, skel, cfg);
            let reports = run.time("evaluate", || {
                engine.evaluate(&gt, &queries, &Scenario::ALL, ranks, (*denominator).into())
            })?;
            write_eval(out_dir, &reports)?;
            run.write(out_dir, &out_dir.join("run.json"))
        }
        Command::Report { results, manifest, out_dir } => {
            let mut run = RunManifest::new("report", cfg, workers);
            run.input(results);
            run.input(manifest);
            let page = run.time("render", || crate::report::write_report(results, manifest, out_dir, skel))?;
            log::info!("wrote {}", page.display());
            run.write(out_dir, &out_dir.join("run.json"))
        }
        Command::Synth { out_dir, seed, spec } => {
            let mut run = RunManifest::new("synth", cfg, workers);
            run.seed = Some(*seed);
            let spec = match spec {
                None => SyntheticSpec::default(),
                Some(p) => {
                    run.input(p);
                    let text =
                        std::fs::read_to_string(p).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?;
                    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?
                }
            };
            let bench = run.time("generate", || generate_synthetic_benchmark(&spec, *seed))?;
            let manifest = run.time("write", || bench.write_to_dir(out_dir))?;
            write_atomic(
                &out_dir.join("spec.json"),
                (serde_json::to_string_pretty(&spec).expect("spec serializes") + "\n").as_bytes(),
            )?;
            run.write(out_dir, &out_dir.join("run.json"))?;
            emit(&format!(
                "images={}\ncopies={}\ntransfers={}\nlinks={}\nmanifest={}\n",
                bench.images.len(),
                bench.copy_ids().len(),
                bench.transfer_ids().len(),
                bench.ground_truth.links().len(),
                manifest.display()
            ))
        }
    }
}

/// Writes data to standard output; a reader that hung up early is not an error.
fn emit(text: &str) -> Result<(), CliError> {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
            Err(CliError::Internal(format!("writing to standard output: {e}")))
        }
        _ => Ok(()),
    }
}

fn write_eval(out_dir: &Path, reports: &[MethodReport]) -> Result<(), CliError> {
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::Input(format!("{}: {e}", out_dir.display())))?;
    let json = serde_json::to_string_pretty(reports).map_err(|e| CliError::Internal(e.to_string()))? + "\n";
    write_atomic(&out_dir.join("eval.json"), json.as_bytes())?;
    let rows: Vec<(String, &crate::eval::EvalReport)> =
        reports.iter().map(|r| (r.method.label(), &r.report)).collect();
    write_atomic(&out_dir.join("eval.csv"), reports_to_csv(&rows).as_bytes())?;
    Ok(())
}
