//! Synthetic benchmark with planted copies and composition transfers.
//!
//! Figures are built by forward kinematics over the canonical bone lengths.
//! Part of every scene draws its figures from a small library of shared
//! "generic" poses, so unrelated images regularly contain near-identical
//! figures. Planted records are observed through the same noise and dropout
//! model as the base scenes:
//!
//! * a copy applies one global scale, translation and optional flip to the
//!   whole source scene;
//! * a composition transfer additionally rescales and moves every figure on
//!   its own, so the mutual layout no longer agrees with any single transform.
//!   Transfers come in families: every member of a family and the source are
//!   pairwise linked.

use std::f64::consts::{FRAC_PI_2, PI};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::config::MatchConfig;
use crate::eval::{GroundTruth, GroundTruthLink, LinkLabel};
use crate::fast_match::ImageRecord;
use crate::ingest::{keypoints_to_json, write_atomic, write_manifest, IngestError, ManifestEntry, PoseIndex};
use crate::pose::{part, Keypoint, Pose, MIRROR_INDEX, NUM_KEYPOINTS};
use crate::verify::SimilarityTransform;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    pub scenes: usize,
    pub min_figures: usize,
    pub max_figures: usize,
    pub copies: usize,
    pub transfers: usize,
    /// Transfers planted per source scene.
    pub transfer_family_size: usize,
    /// Keypoint noise standard deviation as a fraction of the figure's torso length.
    pub noise_sigma: f64,
    /// Probability that a keypoint other than the neck goes undetected.
    pub dropout: f64,
    /// Probability that a detected keypoint off the torso is misplaced.
    pub outlier_rate: f64,
    /// Displacement of a misplaced keypoint, in torso lengths.
    pub outlier_magnitude: f64,
    /// Fraction of planted records that are mirrored.
    pub flip_probability: f64,
    pub scale_range: (f64, f64),
    pub translation_max: f64,
    /// Size of the shared library of generic poses.
    pub prototypes: usize,
    /// Probability that a base figure is drawn from the generic library.
    pub generic_fraction: f64,
    /// Joint angle noise (radians) applied to figures drawn from the library.
    pub pose_jitter: f64,
    /// Extra joint angle noise (radians) for transferred figures.
    pub transfer_pose_jitter: f64,
    /// Per-figure displacement in transfers, in torso lengths.
    pub layout_jitter: f64,
    /// Per-figure relative scale change in transfers.
    pub transfer_scale_jitter: f64,
    pub canvas: (f64, f64),
    pub torso_range: (f64, f64),
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            scenes: 200,
            min_figures: 1,
            max_figures: 4,
            copies: 50,
            transfers: 30,
            transfer_family_size: 5,
            noise_sigma: 0.01,
            dropout: 0.1,
            outlier_rate: 0.1,
            outlier_magnitude: 0.6,
            flip_probability: 0.5,
            scale_range: (0.5, 2.0),
            translation_max: 200.0,
            prototypes: 8,
            generic_fraction: 0.5,
            pose_jitter: 0.25,
            transfer_pose_jitter: 0.05,
            layout_jitter: 1.0,
            transfer_scale_jitter: 0.15,
            canvas: (1000.0, 800.0),
            torso_range: (40.0, 100.0),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("invalid generator parameters: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Io(#[from] IngestError),
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: &str| Err(SynthError::InvalidSpec(m.to_string()));
        if self.scenes == 0 {
            return bad("scenes must be at least 1");
        }
        if self.min_figures == 0 || self.min_figures > self.max_figures {
            return bad("figure counts must satisfy 1 <= min_figures <= max_figures");
        }
        if self.transfer_family_size == 0 {
            return bad("transfer_family_size must be at least 1");
        }
        if self.copies + self.transfer_families() > self.scenes {
            return bad("not enough scenes to give every plant its own source");
        }
        for (name, v) in [
            ("dropout", self.dropout),
            ("outlier_rate", self.outlier_rate),
            ("flip_probability", self.flip_probability),
            ("generic_fraction", self.generic_fraction),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(SynthError::InvalidSpec(format!("{name} must lie in [0, 1]")));
            }
        }
        for (name, v) in [
            ("noise_sigma", self.noise_sigma),
            ("outlier_magnitude", self.outlier_magnitude),
            ("pose_jitter", self.pose_jitter),
            ("transfer_pose_jitter", self.transfer_pose_jitter),
            ("layout_jitter", self.layout_jitter),
            ("transfer_scale_jitter", self.transfer_scale_jitter),
            ("translation_max", self.translation_max),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(SynthError::InvalidSpec(format!("{name} must be finite and non-negative")));
            }
        }
        if self.transfer_scale_jitter >= 1.0 {
            return bad("transfer_scale_jitter must be below 1");
        }
        let (lo, hi) = self.scale_range;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return bad("scale_range must satisfy 0 < lo <= hi");
        }
        let (lo, hi) = self.torso_range;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return bad("torso_range must satisfy 0 < lo <= hi");
        }
        if !(self.canvas.0 > 0.0 && self.canvas.1 > 0.0) {
            return bad("canvas must be positive");
        }
        if self.prototypes == 0 && self.generic_fraction > 0.0 {
            return bad("generic_fraction > 0 needs at least one prototype");
        }
        Ok(())
    }

    fn transfer_families(&self) -> usize {
        self.transfers.div_ceil(self.transfer_family_size)
    }
}

/// A generated image: id plus detector-style poses.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticImage {
    pub image_id: String,
    pub poses: Vec<Pose>,
}

/// Bookkeeping for one planted record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Plant {
    pub image_id: String,
    pub source_id: String,
    pub label: LinkLabel,
    /// Global map from source scene coordinates onto the planted image.
    pub transform: SimilarityTransform,
    /// Transfer family ordinal; `None` for copies.
    pub family: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticBenchmark {
    pub images: Vec<SyntheticImage>,
    pub ground_truth: GroundTruth,
    pub plants: Vec<Plant>,
}

impl SyntheticBenchmark {
    pub fn records(&self, cfg: &MatchConfig) -> Vec<ImageRecord> {
        self.images
            .iter()
            .map(|img| {
                ImageRecord::new(img.image_id.clone(), format!("synthetic:{}", img.image_id), img.poses.clone(), cfg)
            })
            .collect()
    }

    pub fn index(&self, cfg: &MatchConfig) -> PoseIndex {
        PoseIndex::from_records(self.records(cfg), cfg).expect("generated ids are unique")
    }

    pub fn image(&self, id: &str) -> Option<&SyntheticImage> {
        self.images.iter().find(|i| i.image_id == id)
    }

    pub fn copy_ids(&self) -> Vec<String> {
        self.plant_ids(LinkLabel::Copy)
    }

    pub fn transfer_ids(&self) -> Vec<String> {
        self.plant_ids(LinkLabel::CompositionTransfer)
    }

    fn plant_ids(&self, label: LinkLabel) -> Vec<String> {
        self.plants.iter().filter(|p| p.label == label).map(|p| p.image_id.clone()).collect()
    }

    /// Writes `keypoints/<id>.json`, `manifest.jsonl` and `ground_truth.jsonl`
    /// under `dir`; returns the manifest path.
    pub fn write_to_dir(&self, dir: impl AsRef<Path>) -> Result<PathBuf, SynthError> {
        let dir = dir.as_ref();
        let kp_dir = dir.join("keypoints");
        std::fs::create_dir_all(&kp_dir).map_err(|source| IngestError::Io {
            path: kp_dir.display().to_string(),
            source,
        })?;
        let mut entries = Vec::with_capacity(self.images.len());
        for img in &self.images {
            let rel = format!("keypoints/{}.json", img.image_id);
            write_atomic(&dir.join(&rel), keypoints_to_json(&img.poses).as_bytes())?;
            entries.push(ManifestEntry { image_id: img.image_id.clone(), keypoints_path: rel, image_path: None });
        }
        let manifest = dir.join("manifest.jsonl");
        write_manifest(&manifest, &entries)?;
        self.ground_truth
            .write(dir.join("ground_truth.jsonl"))
            .map_err(|e| SynthError::InvalidSpec(e.to_string()))?;
        let plants: String = self
            .plants
            .iter()
            .map(|p| serde_json::to_string(p).expect("plant serializes") + "\n")
            .collect();
        write_atomic(&dir.join("plants.jsonl"), plants.as_bytes())?;
        Ok(manifest)
    }
}

/// Joint angles of one figure; 0 points down the image, +pi/2 to the right.
#[derive(Clone, Copy, Debug)]
struct Articulation {
    torso: f64,
    shoulder_width: f64,
    hip_width: f64,
    r_upper_arm: f64,
    r_forearm: f64,
    l_upper_arm: f64,
    l_forearm: f64,
    r_thigh: f64,
    r_shin: f64,
    l_thigh: f64,
    l_shin: f64,
    head: f64,
    facing: f64,
    r_foot: f64,
    l_foot: f64,
}

fn dir(a: f64) -> (f64, f64) {
    (a.sin(), a.cos())
}

impl Articulation {
    fn random(rng: &mut impl Rng) -> Self {
        let normal = |rng: &mut dyn rand::RngCore, sd: f64| Normal::new(0.0, sd).unwrap().sample(rng);
        let torso = normal(rng, 0.12);
        let r_upper_arm = rng.random_range(-PI..PI);
        let l_upper_arm = rng.random_range(-PI..PI);
        let seated = rng.random_bool(0.2);
        let (r_thigh, l_thigh) = if seated {
            let side = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            (side * FRAC_PI_2 + normal(rng, 0.3), side * FRAC_PI_2 + normal(rng, 0.3))
        } else {
            (-0.1 + normal(rng, 0.35), 0.1 + normal(rng, 0.35))
        };
        Self {
            torso,
            shoulder_width: rng.random_range(0.6..1.0),
            hip_width: rng.random_range(0.6..1.0),
            r_upper_arm,
            r_forearm: r_upper_arm + rng.random_range(-2.0..2.0),
            l_upper_arm,
            l_forearm: l_upper_arm + rng.random_range(-2.0..2.0),
            r_thigh,
            r_shin: if seated { normal(rng, 0.3) } else { r_thigh + rng.random_range(-1.2..1.2) },
            l_thigh,
            l_shin: if seated { normal(rng, 0.3) } else { l_thigh + rng.random_range(-1.2..1.2) },
            head: normal(rng, 0.2),
            facing: rng.random_range(-0.5..0.5),
            r_foot: -FRAC_PI_2 + normal(rng, 0.3),
            l_foot: FRAC_PI_2 + normal(rng, 0.3),
        }
    }

    fn jittered(&self, rng: &mut impl Rng, sd: f64) -> Self {
        if sd == 0.0 {
            return *self;
        }
        let noise = Normal::new(0.0, sd).unwrap();
        let mut j = |v: f64| v + noise.sample(rng);
        Self {
            torso: j(self.torso),
            shoulder_width: self.shoulder_width,
            hip_width: self.hip_width,
            r_upper_arm: j(self.r_upper_arm),
            r_forearm: j(self.r_forearm),
            l_upper_arm: j(self.l_upper_arm),
            l_forearm: j(self.l_forearm),
            r_thigh: j(self.r_thigh),
            r_shin: j(self.r_shin),
            l_thigh: j(self.l_thigh),
            l_shin: j(self.l_shin),
            head: j(self.head),
            facing: j(self.facing),
            r_foot: j(self.r_foot),
            l_foot: j(self.l_foot),
        }
    }

    /// Keypoint positions for a figure with its neck at `neck` and torso length `len`.
    fn layout(&self, neck: (f64, f64), len: f64) -> [(f64, f64); NUM_KEYPOINTS] {
        let at = |from: (f64, f64), frac: f64, angle: f64| {
            let (dx, dy) = dir(angle);
            (from.0 + frac * len * dx, from.1 + frac * len * dy)
        };
        let mut p = [(0.0, 0.0); NUM_KEYPOINTS];
        let t = self.torso;
        p[part::NECK] = neck;
        p[part::MID_HIP] = at(neck, 1.0, t);
        p[part::R_SHOULDER] = at(neck, 0.36 * self.shoulder_width, t - FRAC_PI_2);
        p[part::L_SHOULDER] = at(neck, 0.36 * self.shoulder_width, t + FRAC_PI_2);
        p[part::R_ELBOW] = at(p[part::R_SHOULDER], 0.58, self.r_upper_arm);
        p[part::R_WRIST] = at(p[part::R_ELBOW], 0.50, self.r_forearm);
        p[part::L_ELBOW] = at(p[part::L_SHOULDER], 0.58, self.l_upper_arm);
        p[part::L_WRIST] = at(p[part::L_ELBOW], 0.50, self.l_forearm);
        p[part::R_HIP] = at(p[part::MID_HIP], 0.20 * self.hip_width, t - FRAC_PI_2);
        p[part::L_HIP] = at(p[part::MID_HIP], 0.20 * self.hip_width, t + FRAC_PI_2);
        p[part::R_KNEE] = at(p[part::R_HIP], 0.86, self.r_thigh);
        p[part::R_ANKLE] = at(p[part::R_KNEE], 0.84, self.r_shin);
        p[part::L_KNEE] = at(p[part::L_HIP], 0.86, self.l_thigh);
        p[part::L_ANKLE] = at(p[part::L_KNEE], 0.84, self.l_shin);
        let up = t + PI + self.head;
        p[part::NOSE] = at(neck, 0.40, up);
        p[part::R_EYE] = at(p[part::NOSE], 0.08, up + 1.0 + 0.3 * self.facing);
        p[part::L_EYE] = at(p[part::NOSE], 0.08, up - 1.0 + 0.3 * self.facing);
        p[part::R_EAR] = at(p[part::R_EYE], 0.14, up + 1.6 + self.facing);
        p[part::L_EAR] = at(p[part::L_EYE], 0.14, up - 1.6 + self.facing);
        p[part::R_BIG_TOE] = at(p[part::R_ANKLE], 0.32, self.r_foot);
        p[part::R_SMALL_TOE] = at(p[part::R_BIG_TOE], 0.09, self.r_foot + FRAC_PI_2);
        p[part::R_HEEL] = at(p[part::R_ANKLE], 0.12, self.r_foot + PI);
        p[part::L_BIG_TOE] = at(p[part::L_ANKLE], 0.32, self.l_foot);
        p[part::L_SMALL_TOE] = at(p[part::L_BIG_TOE], 0.09, self.l_foot - FRAC_PI_2);
        p[part::L_HEEL] = at(p[part::L_ANKLE], 0.12, self.l_foot + PI);
        p
    }
}

/// A noise-free figure in scene coordinates.
#[derive(Clone, Debug)]
struct Figure {
    points: [(f64, f64); NUM_KEYPOINTS],
    torso_len: f64,
}

impl Figure {
    fn transformed(&self, t: &SimilarityTransform) -> Figure {
        let mut points = [(0.0, 0.0); NUM_KEYPOINTS];
        for (i, &p) in self.points.iter().enumerate() {
            let slot = if t.flipped { MIRROR_INDEX[i] } else { i };
            points[slot] = t.apply(p);
        }
        Figure { points, torso_len: self.torso_len * t.scale }
    }

    fn neck(&self) -> (f64, f64) {
        self.points[part::NECK]
    }
}

/// Detector model: per-keypoint dropout, isotropic Gaussian noise proportional
/// to the torso length, and occasional misplaced keypoints. The neck is always
/// found; neither torso endpoint is ever misplaced.
fn observe(figures: &[Figure], spec: &SyntheticSpec, rng: &mut ChaCha8Rng) -> Vec<Pose> {
    figures
        .iter()
        .enumerate()
        .map(|(pose_id, f)| {
            let sd = spec.noise_sigma * f.torso_len;
            let noise = Normal::new(0.0, sd).unwrap();
            let mut pose = Pose::empty(pose_id);
            for (i, &(x, y)) in f.points.iter().enumerate() {
                let dropped = i != part::NECK && rng.random_bool(spec.dropout);
                let (nx, ny) = (noise.sample(rng), noise.sample(rng));
                let confidence = rng.random_range(0.3..1.0);
                let misplaced = i != part::NECK && i != part::MID_HIP && rng.random_bool(spec.outlier_rate);
                let (ox, oy) = dir(rng.random_range(-PI..PI));
                if dropped {
                    continue;
                }
                let d = if misplaced { spec.outlier_magnitude * f.torso_len } else { 0.0 };
                pose.keypoints[i] = Keypoint::new(x + nx + d * ox, y + ny + d * oy, confidence);
            }
            pose
        })
        .collect()
}

struct Generator<'a> {
    spec: &'a SyntheticSpec,
    rng: ChaCha8Rng,
    library: Vec<Articulation>,
}

impl Generator<'_> {
    fn figure(&mut self, articulation: &Articulation) -> Figure {
        let (w, h) = self.spec.canvas;
        let (lo, hi) = self.spec.torso_range;
        let len = if lo == hi { lo } else { self.rng.random_range(lo..hi) };
        let neck = (self.rng.random_range(0.1 * w..0.9 * w), self.rng.random_range(0.1 * h..0.6 * h));
        Figure { points: articulation.layout(neck, len), torso_len: len }
    }

    fn scene(&mut self) -> (Vec<Articulation>, Vec<Figure>) {
        let n = self.rng.random_range(self.spec.min_figures..=self.spec.max_figures);
        let mut arts = Vec::with_capacity(n);
        let mut figures = Vec::with_capacity(n);
        for _ in 0..n {
            let art = if !self.library.is_empty() && self.rng.random_bool(self.spec.generic_fraction) {
                let proto = self.library[self.rng.random_range(0..self.library.len())];
                proto.jittered(&mut self.rng, self.spec.pose_jitter)
            } else {
                Articulation::random(&mut self.rng)
            };
            figures.push(self.figure(&art));
            arts.push(art);
        }
        (arts, figures)
    }

    fn random_transform(&mut self, flipped: bool) -> SimilarityTransform {
        let (lo, hi) = self.spec.scale_range;
        let scale = if lo == hi { lo } else { (self.rng.random_range(lo.ln()..hi.ln())).exp() };
        let m = self.spec.translation_max;
        let mut tx = if m > 0.0 { self.rng.random_range(-m..m) } else { 0.0 };
        let ty = if m > 0.0 { self.rng.random_range(-m..m) } else { 0.0 };
        if flipped {
            // keep mirrored scenes on the positive side of the canvas
            tx += scale * self.spec.canvas.0;
        }
        SimilarityTransform { scale, translation: (tx, ty), flipped }
    }

    /// Per-figure rescale about the neck plus a displacement.
    fn rearranged(&mut self, f: &Figure, art: &Articulation) -> Figure {
        let jitter = self.spec.transfer_scale_jitter;
        let factor = if jitter > 0.0 { self.rng.random_range(1.0 - jitter..1.0 + jitter) } else { 1.0 };
        let angle = self.rng.random_range(-PI..PI);
        let shift = self.spec.layout_jitter * f.torso_len * self.rng.random_range(0.5..1.5);
        let re_posed = art.jittered(&mut self.rng, self.spec.transfer_pose_jitter);
        let (nx, ny) = f.neck();
        let neck = (nx + shift * angle.cos(), ny + shift * angle.sin());
        let len = f.torso_len * factor;
        Figure { points: re_posed.layout(neck, len), torso_len: len }
    }
}

/// Draws `count` flags of which `round(count * p)` are set, in random order.
fn exact_flags(rng: &mut ChaCha8Rng, count: usize, p: f64) -> Vec<bool> {
    let set = (count as f64 * p).round() as usize;
    let mut flags: Vec<bool> = (0..count).map(|i| i < set).collect();
    flags.shuffle(rng);
    flags
}

/// Generates a benchmark; identical `(spec, seed)` give identical output.
pub fn generate_synthetic_benchmark(spec: &SyntheticSpec, seed: u64) -> Result<SyntheticBenchmark, SynthError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let library = (0..spec.prototypes).map(|_| Articulation::random(&mut rng)).collect();
    let mut gen = Generator { spec, rng, library };

    let mut images = Vec::new();
    let mut scenes = Vec::with_capacity(spec.scenes);
    for s in 0..spec.scenes {
        let (arts, figures) = gen.scene();
        let poses = observe(&figures, spec, &mut gen.rng);
        images.push(SyntheticImage { image_id: format!("scene_{s:04}"), poses });
        scenes.push((arts, figures));
    }

    // every plant gets its own source so that links do not chain across plants
    let mut order: Vec<usize> = (0..spec.scenes).collect();
    order.shuffle(&mut gen.rng);
    let mut sources = order.into_iter();

    let mut links = Vec::new();
    let mut plants = Vec::new();
    let copy_flips = exact_flags(&mut gen.rng, spec.copies, spec.flip_probability);
    for (c, &flipped) in copy_flips.iter().enumerate() {
        let src = sources.next().expect("validated scene budget");
        let t = gen.random_transform(flipped);
        let figures: Vec<Figure> = scenes[src].1.iter().map(|f| f.transformed(&t)).collect();
        let image_id = format!("copy_{c:04}");
        let source_id = images[src].image_id.clone();
        let poses = observe(&figures, spec, &mut gen.rng);
        images.push(SyntheticImage { image_id: image_id.clone(), poses });
        links.push(GroundTruthLink::new(source_id.clone(), image_id.clone(), LinkLabel::Copy));
        plants.push(Plant { image_id, source_id, label: LinkLabel::Copy, transform: t, family: None });
    }

    let transfer_flips = exact_flags(&mut gen.rng, spec.transfers, spec.flip_probability);
    let mut planted = 0;
    for family in 0..spec.transfer_families() {
        let src = sources.next().expect("validated scene budget");
        let source_id = images[src].image_id.clone();
        let mut members = vec![source_id.clone()];
        let size = spec.transfer_family_size.min(spec.transfers - planted);
        for _ in 0..size {
            let t = gen.random_transform(transfer_flips[planted]);
            let (arts, figures) = scenes[src].clone();
            let moved: Vec<Figure> = figures
                .iter()
                .zip(&arts)
                .map(|(f, a)| gen.rearranged(f, a).transformed(&t))
                .collect();
            let image_id = format!("transfer_{planted:04}");
            let poses = observe(&moved, spec, &mut gen.rng);
            images.push(SyntheticImage { image_id: image_id.clone(), poses });
            plants.push(Plant {
                image_id: image_id.clone(),
                source_id: source_id.clone(),
                label: LinkLabel::CompositionTransfer,
                transform: t,
                family: Some(family),
            });
            members.push(image_id);
            planted += 1;
        }
        for (i, a) in members.iter().enumerate() {
            for b in &members[i + 1..] {
                links.push(GroundTruthLink::new(a.clone(), b.clone(), LinkLabel::CompositionTransfer));
            }
        }
    }

    let ground_truth = GroundTruth::from_links(links).expect("generated links are consistent");
    Ok(SyntheticBenchmark { images, ground_truth, plants })
}

/// A single random figure with every keypoint detected; handy for tests and demos.
pub fn random_figure(rng: &mut impl Rng, torso_len: f64, neck: (f64, f64)) -> Pose {
    let art = Articulation::random(rng);
    Pose::from_points(0, &art.layout(neck, torso_len))
}
