//! Pose-based linking of artworks.
//!
//! Artworks are compared through the 2D poses of the human figures they
//! depict. A fast, mirror-invariant pose distance ranks the whole collection
//! ([`fast_match`]), then the shortlist is re-ordered by robust spatial
//! verification of a scale, translation and horizontal flip ([`verify`]).
//! [`eval`] measures mean precision at k and [`synth`] generates benchmarks
//! with planted copies and composition transfers. [`cli`] wires everything
//! into the `poselink` command.

pub mod cli;
pub mod config;
pub mod eval;
pub mod fast_match;
pub mod ingest;
pub mod pipeline;
pub mod pose;
pub mod report;
pub mod results;
pub mod skeleton;
pub mod synth;
pub mod verify;

pub use config::MatchConfig;
pub use eval::{EvalReport, GroundTruth, GroundTruthLink, LinkLabel, Scenario};
pub use fast_match::{ImageMetric, ImageRecord, ShortlistEntry};
pub use ingest::PoseIndex;
pub use pipeline::Engine;
pub use pose::{Keypoint, Pose, PoseDistance};
pub use skeleton::CanonicalSkeleton;
pub use verify::{SimilarityTransform, VerifiedLink};
